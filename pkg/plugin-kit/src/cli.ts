#!/usr/bin/env node
/** Standalone provider serving WEIGHTED_FUSE, for `--macro-provider`. */
import { serve } from "./protocol.js";
import { ProviderApp } from "./provider.js";
import { weightedFuse } from "./weightedFuse.js";

const app = new ProviderApp();
app.register("WEIGHTED_FUSE", weightedFuse);

serve(app).then((code) => {
  process.exitCode = code;
});

export { LADDER_NAMES, unscore } from "./ladder.js";
export type { CanonicalName } from "./ladder.js";
export { PROTOCOL_VERSION, serve } from "./protocol.js";
export type {
  ChildInfo,
  MacroFunction,
  MacroRequest,
  MacroResponse,
} from "./protocol.js";
export { ProviderApp } from "./provider.js";
export { weightedFuse } from "./weightedFuse.js";

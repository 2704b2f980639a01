/**
 * Provider side of the certus macro wire protocol.
 *
 * Line-delimited JSON over stdin/stdout. The engine opens with
 * {"certus-macro-protocol": 1}; the provider replies
 * {"ok": true, "macros": [...]} and then answers each request line with
 * exactly one response line, in order. A request that cannot be served
 * still gets a response carrying its id and an "error" field; input the
 * provider cannot even attribute to a request ends the loop with a
 * nonzero code.
 */
import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import type { ProviderApp } from "./provider.js";

export const PROTOCOL_VERSION = 1;

export interface ChildInfo {
  id: string;
  kind: string;
  confidence: string | null;
}

export interface MacroRequest {
  id: number | string;
  macro: string;
  node: { id: string; kind: string };
  children: ChildInfo[];
  args: string[];
}

export type MacroResponse =
  | { id: number | string; cases: string }
  | { id: number | string; error: string };

export type MacroFunction = (request: MacroRequest) => string;

function parseLine(line: string): unknown | undefined {
  try {
    return JSON.parse(line);
  } catch {
    return undefined;
  }
}

/**
 * Run the protocol loop until the input closes. Resolves to the process
 * exit code: 0 after a clean conversation, 1 when a line was malformed
 * beyond recovery (bad handshake, non-JSON input, or a request with no
 * id to answer under).
 */
export async function serve(
  app: ProviderApp,
  input: Readable = process.stdin,
  output: Writable = process.stdout,
): Promise<number> {
  const write = (payload: unknown) => {
    output.write(JSON.stringify(payload) + "\n");
  };
  const lines = createInterface({ input, crlfDelay: Infinity });
  let shaken = false;
  for await (const line of lines) {
    if (line.trim() === "") {
      continue;
    }
    const parsed = parseLine(line);
    if (typeof parsed !== "object" || parsed === null) {
      return 1;
    }
    if (!shaken) {
      const version = (parsed as Record<string, unknown>)[
        "certus-macro-protocol"
      ];
      if (version !== PROTOCOL_VERSION) {
        return 1;
      }
      write({ ok: true, macros: app.names() });
      shaken = true;
      continue;
    }
    const request = parsed as Partial<MacroRequest>;
    if (request.id === undefined || request.id === null) {
      return 1;
    }
    write(app.handle(request as MacroRequest));
  }
  return 0;
}

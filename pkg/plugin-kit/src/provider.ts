/** Registry of macro functions keyed by their uppercase wire names. */
import type { MacroFunction, MacroRequest, MacroResponse } from "./protocol.js";

const MACRO_NAME = /^[A-Z][A-Z0-9_]*$/;

export class ProviderApp {
  private readonly macros = new Map<string, MacroFunction>();

  register(name: string, fn: MacroFunction): void {
    if (!MACRO_NAME.test(name)) {
      throw new Error(`macro name must be an uppercase identifier: ${name}`);
    }
    this.macros.set(name, fn);
  }

  names(): string[] {
    return [...this.macros.keys()];
  }

  /** Answer one request; exceptions become protocol error responses. */
  handle(request: MacroRequest): MacroResponse {
    const fn = this.macros.get(request.macro);
    if (fn === undefined) {
      return {
        id: request.id,
        error: `no macro named ${String(request.macro)} registered`,
      };
    }
    try {
      return { id: request.id, cases: fn(request) };
    } catch (exc) {
      const message = exc instanceof Error ? exc.message : String(exc);
      return { id: request.id, error: message };
    }
  }
}

/**
 * Example macro: like the engine's built-in FUSE, but the first child's
 * score is doubled before averaging, so the leading child carries extra
 * credit (or, for a defeater, extra doubt).
 *
 * Emits one case per canonical combination, in ladder enumeration order
 * (first child most significant), which keeps the table total and lets
 * the engine's table-shaped checks apply directly.
 */
import { LADDER_NAMES, unscore } from "./ladder.js";
import type { MacroRequest } from "./protocol.js";

const MAX_CHILDREN = 6;

export function weightedFuse(request: MacroRequest): string {
  const children = request.children;
  if (children.length === 0) {
    throw new Error("WEIGHTED_FUSE requires at least one child");
  }
  if (children.length > MAX_CHILDREN) {
    throw new Error(
      `WEIGHTED_FUSE over ${children.length} children would expand to ` +
        `${7 ** children.length} cases (cap ${MAX_CHILDREN}); write an ` +
        "explicit cases expression instead",
    );
  }
  const weights = children.map((child, i) => {
    const sign = child.kind === "defeater" ? -1 : 1;
    return sign * (i === 0 ? 2 : 1);
  });
  const denominator = children.length + 1;
  const arms: string[] = [];
  const combinations = 7 ** children.length;
  for (let index = 0; index < combinations; index++) {
    const scores = new Array<number>(children.length);
    let rest = index;
    for (let i = children.length - 1; i >= 0; i--) {
      scores[i] = rest % 7;
      rest = Math.floor(rest / 7);
    }
    const condition = children
      .map((child, i) => `${child.id} is ${LADDER_NAMES[scores[i]]}`)
      .join(" and ");
    const total = scores.reduce((sum, s, i) => sum + weights[i] * s, 0);
    const outcome = unscore(Math.floor(total / denominator));
    arms.push(`${condition} -> ${outcome}`);
  }
  return `cases {\n  ${arms.join(";\n  ")}\n}`;
}

/** The seven canonical confidence sets, in ascending score order. */
export const LADDER_NAMES = [
  "zero",
  "very_low",
  "low",
  "med",
  "high",
  "very_high",
  "certain",
] as const;

export type CanonicalName = (typeof LADDER_NAMES)[number];

/** Name the given integer score, clamping into the ladder's range. */
export function unscore(score: number): CanonicalName {
  const clamped = Math.max(0, Math.min(LADDER_NAMES.length - 1, score));
  return LADDER_NAMES[clamped];
}

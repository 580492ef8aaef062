/** Label plumbing: probability thresholding and MOS level binning. */

export class ProbOutOfRange extends Error {}
export class BadRange extends Error {}

/**
 * Binarize class probabilities: 1 where the probability strictly exceeds
 * tau. Strict, so a probability exactly at tau stays 0.
 */
export function pseudoLabel(probs: ArrayLike<number>, tau: number): number[] {
  const out = new Array<number>(probs.length);
  for (let i = 0; i < probs.length; i++) {
    const p = probs[i];
    if (!(p >= 0 && p <= 1)) {
      throw new ProbOutOfRange(`probs[${i}] = ${p} outside [0, 1]`);
    }
    out[i] = p > tau ? 1 : 0;
  }
  return out;
}

/**
 * Equal-width binning of a continuous opinion score into level classes
 * 1..nLevels. The top edge maps into the last bin.
 */
export function discretizeLevels(
  mos: number,
  mosMin: number,
  mosMax: number,
  nLevels: number,
): number {
  if (!(mosMin < mosMax)) {
    throw new BadRange(`mosMin ${mosMin} must be < mosMax ${mosMax}`);
  }
  if (!Number.isFinite(mos)) throw new BadRange(`mos ${mos} not finite`);
  if (nLevels < 2) throw new BadRange(`nLevels must be >= 2, got ${nLevels}`);
  const raw = 1 + Math.floor((nLevels * (mos - mosMin)) / (mosMax - mosMin));
  return Math.min(nLevels, Math.max(1, raw));
}

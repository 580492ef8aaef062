import { describe, expect, it } from 'vitest';

import { BadRange, ProbOutOfRange, discretizeLevels, pseudoLabel } from '../src/labels';
import { Rng } from '../src/prng';

describe('pseudoLabel', () => {
  it('thresholds strictly: exactly tau stays 0', () => {
    expect(pseudoLabel([0.19, 0.2, 0.21], 0.2)).toEqual([0, 0, 1]);
  });

  it('tau = 0 turns every positive probability on', () => {
    expect(pseudoLabel([0.01, 0.5, 1.0], 0)).toEqual([1, 1, 1]);
    expect(pseudoLabel([0, 0.3], 0)).toEqual([0, 1]);
  });

  it('is a fixpoint on binary vectors for tau in (0, 1)', () => {
    const binary = [0, 1, 1, 0, 1];
    expect(pseudoLabel(binary, 0.5)).toEqual(binary);
  });

  it('is idempotent on any input with tau in (0, 1)', () => {
    const rng = new Rng(5);
    for (let trial = 0; trial < 500; trial++) {
      const probs = Array.from({ length: 8 }, () => rng.next());
      const tau = 0.05 + 0.9 * rng.next();
      const once = pseudoLabel(probs, tau);
      expect(pseudoLabel(once, tau)).toEqual(once);
    }
  });

  it('rejects probabilities outside [0, 1]', () => {
    expect(() => pseudoLabel([0.5, 1.2], 0.2)).toThrow(ProbOutOfRange);
    expect(() => pseudoLabel([-0.1], 0.2)).toThrow(ProbOutOfRange);
    expect(() => pseudoLabel([NaN], 0.2)).toThrow(ProbOutOfRange);
  });
});

describe('discretizeLevels', () => {
  it('maps the range ends to the first and last bins', () => {
    expect(discretizeLevels(0, 0, 10, 10)).toBe(1);
    expect(discretizeLevels(10, 0, 10, 10)).toBe(10);
  });

  it('puts the midpoint of a 10-bin range in bin 6', () => {
    expect(discretizeLevels(5, 0, 10, 10)).toBe(6);
  });

  it('is monotone non-decreasing in mos', () => {
    const rng = new Rng(9);
    for (let trial = 0; trial < 200; trial++) {
      const values = Array.from({ length: 50 }, () => rng.uniform(0, 10)).sort((a, b) => a - b);
      const levels = values.map((v) => discretizeLevels(v, 0, 10, 10));
      for (let i = 1; i < levels.length; i++) {
        expect(levels[i]).toBeGreaterThanOrEqual(levels[i - 1]);
      }
    }
  });

  it('covers every level when mos spans the full range', () => {
    const seen = new Set<number>();
    for (let i = 0; i <= 1000; i++) {
      seen.add(discretizeLevels(i / 100, 0, 10, 10));
    }
    expect(seen.size).toBe(10);
  });

  it('rejects bad ranges', () => {
    expect(() => discretizeLevels(1, 5, 5, 10)).toThrow(BadRange);
    expect(() => discretizeLevels(1, 7, 5, 10)).toThrow(BadRange);
    expect(() => discretizeLevels(Infinity, 0, 10, 10)).toThrow(BadRange);
    expect(() => discretizeLevels(1, 0, 10, 1)).toThrow(BadRange);
  });
});

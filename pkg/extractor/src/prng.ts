/**
 * Deterministic PRNG used everywhere randomness appears, so every pipeline
 * stage is reproducible from a recorded seed regardless of platform.
 */

/** splitmix32: small, fast, well-mixed 32-bit generator. */
export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  /** Uniform in [0, 1). */
  next(): number {
    this.state = (this.state + 0x9e3779b9) >>> 0;
    let z = this.state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 0x100000000;
  }

  /** Uniform integer in [0, n). */
  int(n: number): number {
    return Math.floor(this.next() * n);
  }

  /** Uniform in [lo, hi). */
  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.next();
  }

  /** Standard normal via Box-Muller. */
  gauss(): number {
    let u = 0;
    while (u === 0) u = this.next();
    const v = this.next();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  /** k distinct integers drawn from [0, n), in draw order. */
  sampleDistinct(k: number, n: number): number[] {
    if (k > n) throw new Error(`cannot draw ${k} distinct values from ${n}`);
    const pool = Array.from({ length: n }, (_, i) => i);
    const out: number[] = [];
    for (let i = 0; i < k; i++) {
      const j = this.int(pool.length);
      out.push(pool[j]);
      pool.splice(j, 1);
    }
    return out;
  }

  /** Derive an independent stream (for per-image / per-stage seeding). */
  fork(tag: number): Rng {
    return new Rng((Math.imul(this.state ^ tag, 0x85ebca6b) ^ 0x1b873593) >>> 0);
  }
}

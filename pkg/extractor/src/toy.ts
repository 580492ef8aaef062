/**
 * Procedural toy data: oriented gratings as stand-in photographs.
 *
 * Gratings give each texture class an unmistakable spectral signature, so a
 * small classifier can separate them quickly; that makes them the right
 * substrate for the fast training sanity checks and for the export
 * round-trip fixture.
 */

import { DISTORTION_VOCABULARY, DistortionName, applyDistortion } from './degrade';
import { RasterImage, makeImage, clamp01 } from './image';
import { Rng } from './prng';

export interface GratingSpec {
  /** cycles per pixel along x and y */
  fx: number;
  fy: number;
  phase: number;
  /** per-channel amplitude */
  color: [number, number, number];
}

export function renderGrating(width: number, height: number, spec: GratingSpec): RasterImage {
  const img = makeImage(width, height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const s = Math.sin(2 * Math.PI * (spec.fx * x + spec.fy * y) + spec.phase);
      const i = (y * width + x) * 3;
      img.data[i] = clamp01(0.5 + 0.4 * s * spec.color[0]);
      img.data[i + 1] = clamp01(0.5 + 0.4 * s * spec.color[1]);
      img.data[i + 2] = clamp01(0.5 + 0.4 * s * spec.color[2]);
    }
  }
  return img;
}

/** Vertical-vs-horizontal gratings: linearly separable texture classes. */
export function makeSeparableSingles(
  perClass: number,
  size = 24,
  seed = 0,
): { images: RasterImage[]; classIndex: number[] } {
  const rng = new Rng(seed);
  const images: RasterImage[] = [];
  const classIndex: number[] = [];
  for (let c = 0; c < 2; c++) {
    for (let i = 0; i < perClass; i++) {
      const freq = rng.uniform(0.15, 0.3);
      images.push(
        renderGrating(size, size, {
          fx: c === 0 ? freq : 0,
          fy: c === 0 ? 0 : freq,
          phase: rng.uniform(0, 2 * Math.PI),
          color: [1, 1, 1],
        }),
      );
      classIndex.push(c);
    }
  }
  return { images, classIndex };
}

/**
 * Two visually opposite degradations (noise, blur), applied singly or
 * together, as a separable multi-label toy.
 */
export function makeSeparableMixtures(
  perCombo: number,
  size = 24,
  seed = 0,
): { images: RasterImage[]; typeMultiHot: number[][] } {
  const rng = new Rng(seed);
  const opA: DistortionName = 'white_noise';
  const opB: DistortionName = 'gauss_blur';
  const a = DISTORTION_VOCABULARY.indexOf(opA);
  const b = DISTORTION_VOCABULARY.indexOf(opB);
  const images: RasterImage[] = [];
  const typeMultiHot: number[][] = [];
  const combos: DistortionName[][] = [[opA], [opB], [opA, opB]];
  for (const combo of combos) {
    for (let i = 0; i < perCombo; i++) {
      let img = renderGrating(size, size, {
        fx: rng.uniform(0.1, 0.2),
        fy: rng.uniform(0.1, 0.2),
        phase: rng.uniform(0, 2 * Math.PI),
        color: [1, 1, 1],
      });
      for (const op of combo) {
        img = applyDistortion(img, op, 0.9, rng);
      }
      const label = new Array(DISTORTION_VOCABULARY.length).fill(0);
      for (const op of combo) label[op === opA ? a : b] = 1;
      images.push(img);
      typeMultiHot.push(label);
    }
  }
  return { images, typeMultiHot };
}

/**
 * One degradation at well-separated strengths: a level-classification toy.
 * 'darken' shifts the global luminance, so pooled conv features separate the
 * bins without needing texture statistics.
 */
export function makeSeparableLevels(
  perLevel: number,
  nLevels: number,
  size = 24,
  seed = 0,
): { images: RasterImage[]; typeMultiHot: number[][]; levelIndex: number[] } {
  const rng = new Rng(seed);
  const darkenIdx = DISTORTION_VOCABULARY.indexOf('darken');
  const images: RasterImage[] = [];
  const typeMultiHot: number[][] = [];
  const levelIndex: number[] = [];
  for (let level = 1; level <= nLevels; level++) {
    for (let i = 0; i < perLevel; i++) {
      let img = renderGrating(size, size, {
        fx: rng.uniform(0.1, 0.2),
        fy: 0,
        phase: rng.uniform(0, 2 * Math.PI),
        color: [1, 1, 1],
      });
      const strength = (level - 1) / (nLevels - 1);
      img = applyDistortion(img, 'darken', strength, rng);
      const label = new Array(DISTORTION_VOCABULARY.length).fill(0);
      label[darkenIdx] = 1;
      images.push(img);
      typeMultiHot.push(label);
      levelIndex.push(level);
    }
  }
  return { images, typeMultiHot, levelIndex };
}

export interface ToyExportSample {
  recordId: string;
  groupId: string;
  role: 'pristine' | 'distorted';
  image: RasterImage;
  mos?: number;
  distortionType?: DistortionName;
  distortionLevel?: number;
}

/**
 * A small synthetic-mode dataset: ``nGroups`` pristine gratings, each with
 * one distorted variant per (type, level) cell and a planted opinion score
 * that falls with level.
 */
export function makeToyExportDataset(
  nGroups = 4,
  types: DistortionName[] = ['white_noise', 'gauss_blur', 'pixelate'],
  nLevels = 1,
  size = 32,
  seed = 11,
): ToyExportSample[] {
  const rng = new Rng(seed);
  const samples: ToyExportSample[] = [];
  for (let g = 0; g < nGroups; g++) {
    const gid = `toy${g}`;
    const angle = (Math.PI * g) / nGroups;
    const freq = rng.uniform(0.12, 0.25);
    const pristine = renderGrating(size, size, {
      fx: freq * Math.cos(angle),
      fy: freq * Math.sin(angle),
      phase: rng.uniform(0, 2 * Math.PI),
      color: [1, 0.8, 0.6],
    });
    samples.push({ recordId: `${gid}_ref`, groupId: gid, role: 'pristine', image: pristine });
    for (const [t, type] of types.entries()) {
      for (let level = 1; level <= nLevels; level++) {
        const strength = nLevels === 1 ? 0.6 : (level - 1) / (nLevels - 1);
        samples.push({
          recordId: `${gid}_${type}_l${level}`,
          groupId: gid,
          role: 'distorted',
          image: applyDistortion(pristine, type, strength, rng.fork(g * 101 + t * 17 + level)),
          mos: 8.5 - 1.5 * level - 0.4 * t + rng.uniform(-0.2, 0.2),
          distortionType: type,
          distortionLevel: level,
        });
      }
    }
  }
  return samples;
}

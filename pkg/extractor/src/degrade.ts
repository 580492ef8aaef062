/**
 * Synthetic image degradation with multi-hot labels.
 *
 * A fixed vocabulary of pixel-space operations; mixed-degradation synthesis
 * runs two sequential stages, each applying 1 to 3 distinct operations drawn
 * at random, and labels the result with the union of everything applied.
 * Fully deterministic given the seed.
 */

import { RasterImage, cloneImage, clamp01, makeImage } from './image';
import { Rng } from './prng';

export type DistortionName =
  | 'gauss_blur'
  | 'white_noise'
  | 'brighten'
  | 'darken'
  | 'contrast_shift'
  | 'jpeg_blockiness'
  | 'pixelate'
  | 'color_quantize';

/** Vocabulary order fixes the meaning of every multi-hot label position. */
export const DISTORTION_VOCABULARY: readonly DistortionName[] = [
  'gauss_blur',
  'white_noise',
  'brighten',
  'darken',
  'contrast_shift',
  'jpeg_blockiness',
  'pixelate',
  'color_quantize',
];

export interface DistortionLabel {
  /** Multi-hot over DISTORTION_VOCABULARY. */
  types: number[];
  /** Degradation level class, 1-based; undefined until assigned. */
  level?: number;
}

/** strength in [0, 1]: 0 barely visible, 1 severe. */
export type DegradeOp = (img: RasterImage, strength: number, rng: Rng) => RasterImage;

function boxBlurPass(img: RasterImage, radius: number): RasterImage {
  // two orthogonal box passes approximate a Gaussian well enough here
  const { width, height } = img;
  const tmp = makeImage(width, height);
  const out = makeImage(width, height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        let n = 0;
        for (let dx = -radius; dx <= radius; dx++) {
          const sx = Math.min(width - 1, Math.max(0, x + dx));
          acc += img.data[(y * width + sx) * 3 + c];
          n++;
        }
        tmp.data[(y * width + x) * 3 + c] = acc / n;
      }
    }
  }
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        let n = 0;
        for (let dy = -radius; dy <= radius; dy++) {
          const sy = Math.min(height - 1, Math.max(0, y + dy));
          acc += tmp.data[(sy * width + x) * 3 + c];
          n++;
        }
        out.data[(y * width + x) * 3 + c] = acc / n;
      }
    }
  }
  return out;
}

const gaussBlur: DegradeOp = (img, strength) => {
  const radius = 1 + Math.round(strength * 3);
  return boxBlurPass(img, radius);
};

const whiteNoise: DegradeOp = (img, strength, rng) => {
  const sigma = 0.02 + 0.18 * strength;
  const out = cloneImage(img);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = clamp01(out.data[i] + sigma * rng.gauss());
  }
  return out;
};

const brighten: DegradeOp = (img, strength) => {
  const gamma = 1 / (1 + 1.5 * strength);
  return mapPixels(img, (v) => Math.pow(v, gamma));
};

const darken: DegradeOp = (img, strength) => {
  const gamma = 1 + 1.5 * strength;
  return mapPixels(img, (v) => Math.pow(v, gamma));
};

const contrastShift: DegradeOp = (img, strength) => {
  const k = 1 - 0.8 * strength; // compress toward mid-gray
  return mapPixels(img, (v) => 0.5 + (v - 0.5) * k);
};

const jpegBlockiness: DegradeOp = (img, strength) => {
  // per-8x8-block channel means blended in: a cheap stand-in for coarse
  // compression artifacts (visible block boundaries, detail loss)
  const block = 8;
  const mix = 0.35 + 0.6 * strength;
  const out = cloneImage(img);
  for (let by = 0; by < img.height; by += block) {
    for (let bx = 0; bx < img.width; bx += block) {
      const h = Math.min(block, img.height - by);
      const w = Math.min(block, img.width - bx);
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let y = 0; y < h; y++) {
          for (let x = 0; x < w; x++) {
            acc += img.data[((by + y) * img.width + bx + x) * 3 + c];
          }
        }
        const mean = acc / (h * w);
        for (let y = 0; y < h; y++) {
          for (let x = 0; x < w; x++) {
            const i = ((by + y) * img.width + bx + x) * 3 + c;
            out.data[i] = clamp01(img.data[i] * (1 - mix) + mean * mix);
          }
        }
      }
    }
  }
  return out;
};

const pixelate: DegradeOp = (img, strength) => {
  const cell = 2 + Math.round(strength * 6);
  const out = cloneImage(img);
  for (let by = 0; by < img.height; by += cell) {
    for (let bx = 0; bx < img.width; bx += cell) {
      const h = Math.min(cell, img.height - by);
      const w = Math.min(cell, img.width - bx);
      for (let c = 0; c < 3; c++) {
        const v = img.data[(by * img.width + bx) * 3 + c];
        for (let y = 0; y < h; y++) {
          for (let x = 0; x < w; x++) {
            out.data[((by + y) * img.width + bx + x) * 3 + c] = v;
          }
        }
      }
    }
  }
  return out;
};

const colorQuantize: DegradeOp = (img, strength) => {
  const levels = Math.max(2, Math.round(20 - 17 * strength));
  return mapPixels(img, (v) => Math.round(v * (levels - 1)) / (levels - 1));
};

function mapPixels(img: RasterImage, fn: (v: number) => number): RasterImage {
  const out = cloneImage(img);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = clamp01(fn(out.data[i]));
  }
  return out;
}

const OPS: Record<DistortionName, DegradeOp> = {
  gauss_blur: gaussBlur,
  white_noise: whiteNoise,
  brighten,
  darken,
  contrast_shift: contrastShift,
  jpeg_blockiness: jpegBlockiness,
  pixelate,
  color_quantize: colorQuantize,
};

export function applyDistortion(
  img: RasterImage,
  name: DistortionName,
  strength: number,
  rng: Rng,
): RasterImage {
  if (!(name in OPS)) throw new Error(`unknown distortion ${name}`);
  return OPS[name](img, strength, rng);
}

export interface MixedResult {
  image: RasterImage;
  label: DistortionLabel;
  /** Which operations each stage applied, in application order. */
  stages: DistortionName[][];
}

/**
 * Two-stage mixed degradation: each stage draws 1-3 distinct operations from
 * the vocabulary and applies them in draw order with random strengths. The
 * label is the multi-hot union over both stages. Deterministic given seed.
 */
export function synthesizeMixed(img: RasterImage, seed: number): MixedResult {
  const rng = new Rng(seed);
  let current = img;
  const types = new Array(DISTORTION_VOCABULARY.length).fill(0);
  const stages: DistortionName[][] = [];
  for (let stage = 0; stage < 2; stage++) {
    const count = 1 + rng.int(3);
    const picks = rng.sampleDistinct(count, DISTORTION_VOCABULARY.length);
    const applied: DistortionName[] = [];
    for (const idx of picks) {
      const name = DISTORTION_VOCABULARY[idx];
      current = applyDistortion(current, name, rng.uniform(0.2, 1.0), rng);
      types[idx] = 1;
      applied.push(name);
    }
    stages.push(applied);
  }
  return { image: current, label: { types }, stages };
}

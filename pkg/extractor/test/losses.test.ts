import * as tf from '@tensorflow/tfjs';
import { describe, expect, it } from 'vitest';

import { defaultConfig } from '../src/config';
import {
  LEVEL_LOSS_WEIGHT,
  combinedLoss,
  levelLoss,
  multiLabelLoss,
  singleDistortionLoss,
} from '../src/losses';
import { buildDcModel } from '../src/models';
import { Rng } from '../src/prng';

function randomLogits(rng: Rng, rows: number, cols: number): tf.Tensor2D {
  const data = Array.from({ length: rows * cols }, () => rng.uniform(-4, 4));
  return tf.tensor2d(data, [rows, cols]);
}

function randomMultiHot(rng: Rng, rows: number, cols: number): tf.Tensor2D {
  const data: number[] = [];
  for (let r = 0; r < rows; r++) {
    const row = Array.from({ length: cols }, () => (rng.next() < 0.4 ? 1 : 0));
    if (!row.includes(1)) row[rng.int(cols)] = 1;
    data.push(...row);
  }
  return tf.tensor2d(data, [rows, cols]);
}

function randomOneHot(rng: Rng, rows: number, cols: number): tf.Tensor2D {
  const idx = Array.from({ length: rows }, () => rng.int(cols));
  return tf.oneHot(tf.tensor1d(idx, 'int32'), cols) as tf.Tensor2D;
}

describe('combined loss identity', () => {
  it('equals multi-label plus twice level loss at random parameters (1e-6)', () => {
    const rng = new Rng(42);
    for (let trial = 0; trial < 50; trial++) {
      const n = 2 + rng.int(6);
      const nTypes = 2 + rng.int(6);
      const nLevels = 2 + rng.int(8);
      const typeLabels = randomMultiHot(rng, n, nTypes);
      const typeLogits = randomLogits(rng, n, nTypes);
      const levelLabels = randomOneHot(rng, n, nLevels);
      const levelLogits = randomLogits(rng, n, nLevels);

      const combined = combinedLoss(typeLabels, typeLogits, levelLabels, levelLogits).dataSync()[0];
      const md = multiLabelLoss(typeLabels, typeLogits).dataSync()[0];
      const lvl = levelLoss(levelLabels, levelLogits).dataSync()[0];
      expect(Math.abs(combined - (md + LEVEL_LOSS_WEIGHT * lvl))).toBeLessThan(1e-6);
    }
  });

  it('weights level loss by exactly 2', () => {
    expect(LEVEL_LOSS_WEIGHT).toBe(2);
  });
});

describe('baseline values of fresh (uniform-logit) models', () => {
  it('softmax cross-entropy at zero logits is ln C', () => {
    const rng = new Rng(1);
    for (const c of [2, 5, 10]) {
      const labels = randomOneHot(rng, 16, c);
      const loss = singleDistortionLoss(labels, tf.zeros([16, c])).dataSync()[0];
      expect(Math.abs(loss - Math.log(c))).toBeLessThan(1e-5);
    }
  });

  it('multi-label BCE at zero logits is C * ln 2', () => {
    const rng = new Rng(2);
    for (const c of [2, 6, 8]) {
      const labels = randomMultiHot(rng, 16, c);
      const loss = multiLabelLoss(labels, tf.zeros([16, c])).dataSync()[0];
      expect(Math.abs(loss - c * Math.log(2))).toBeLessThan(1e-5);
    }
  });
});

describe('multi-label target validation', () => {
  it('rejects an all-zero target row on distorted samples', () => {
    const labels = tf.tensor2d([[1, 0], [0, 0]]);
    const logits = tf.zeros([2, 2]) as tf.Tensor2D;
    expect(() => multiLabelLoss(labels, logits)).toThrow(/all-zero/);
  });

  it('rejects shape mismatches', () => {
    const labels = tf.tensor2d([[1, 0, 0]]);
    const logits = tf.zeros([1, 2]) as tf.Tensor2D;
    expect(() => multiLabelLoss(labels, logits)).toThrow(/disagree/);
  });
});

describe('detached level head', () => {
  it('zero-weighted level loss leaves the level head without gradient', () => {
    const rng = new Rng(3);
    const dc = buildDcModel(defaultConfig({ distortionDim: 8, nLevels: 4, seed: 5 }));
    const input = tf.tensor4d(
      Array.from({ length: 2 * 12 * 12 * 3 }, () => rng.next()),
      [2, 12, 12, 3],
    );
    const typeTargets = tf.tensor2d([[1, 0, 0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0, 0, 0]]);
    const levelTargets = tf.oneHot(tf.tensor1d([0, 2], 'int32'), 4) as tf.Tensor2D;
    const { grads } = tf.variableGrads(() => {
      const [typeLogits, levelLogits] = dc.model.apply(input) as tf.Tensor2D[];
      return multiLabelLoss(typeTargets, typeLogits).add(
        levelLoss(levelTargets, levelLogits).mul(0),
      ) as tf.Scalar;
    });
    const levelKernelName = dc.model.getLayer('dc_level_head').trainableWeights[0].name;
    const typeKernelName = dc.model.getLayer('dc_type_head').trainableWeights[0].name;
    const levelGrad = tf.max(tf.abs(grads[levelKernelName])).dataSync()[0];
    const typeGrad = tf.max(tf.abs(grads[typeKernelName])).dataSync()[0];
    expect(levelGrad).toBeLessThan(1e-12);
    expect(typeGrad).toBeGreaterThan(1e-12);
  });
});

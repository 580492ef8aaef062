/**
 * Training objectives for the distortion-classification model.
 *
 * All losses take raw logits and use numerically stable formulations:
 *
 * - singleDistortionLoss: softmax cross-entropy against one-hot classes,
 *   mean over samples (a fresh model scores about ln C).
 * - multiLabelLoss: per-class sigmoid binary cross-entropy against multi-hot
 *   targets, summed over classes and averaged over samples (a fresh model
 *   scores about C * ln 2).
 * - levelLoss: softmax cross-entropy over degradation-level classes.
 * - combinedLoss: multiLabelLoss + LEVEL_LOSS_WEIGHT * levelLoss; the weight
 *   is a fixed constant of the method, not a knob.
 */

import * as tf from '@tensorflow/tfjs';

export const LEVEL_LOSS_WEIGHT = 2;

function checkShapes(labels: tf.Tensor2D, logits: tf.Tensor2D, what: string): void {
  if (labels.shape[0] !== logits.shape[0] || labels.shape[1] !== logits.shape[1]) {
    throw new Error(
      `${what}: labels ${labels.shape} and logits ${logits.shape} disagree`,
    );
  }
}

/** Softmax cross-entropy, mean over samples. Targets are one-hot rows. */
export function singleDistortionLoss(
  oneHot: tf.Tensor2D,
  logits: tf.Tensor2D,
): tf.Scalar {
  checkShapes(oneHot, logits, 'singleDistortionLoss');
  return tf.tidy(() => {
    const logProbs = tf.sub(logits, tf.logSumExp(logits, 1, true));
    const perSample = tf.neg(tf.sum(tf.mul(oneHot, logProbs), 1));
    return tf.mean(perSample);
  });
}

/**
 * Multi-hot sigmoid BCE: sum over classes, mean over samples. Distorted
 * samples must activate at least one class.
 */
export function multiLabelLoss(
  multiHot: tf.Tensor2D,
  logits: tf.Tensor2D,
  requireActive = true,
): tf.Scalar {
  checkShapes(multiHot, logits, 'multiLabelLoss');
  if (requireActive) {
    const rowSums = multiHot.sum(1).arraySync() as number[];
    const dead = rowSums.findIndex((s) => s === 0);
    if (dead >= 0) {
      throw new Error(`multiLabelLoss: sample ${dead} has an all-zero target`);
    }
  }
  return tf.tidy(() => {
    // stable per-element BCE from logits: max(z,0) - z*y + log(1 + exp(-|z|))
    const z = logits;
    const y = multiHot;
    const perElement = tf.add(
      tf.sub(tf.relu(z), tf.mul(z, y)),
      tf.log1p(tf.exp(tf.neg(tf.abs(z)))),
    );
    return tf.mean(tf.sum(perElement, 1));
  });
}

/** Softmax cross-entropy over level classes (one-hot rows), mean over samples. */
export function levelLoss(oneHot: tf.Tensor2D, logits: tf.Tensor2D): tf.Scalar {
  checkShapes(oneHot, logits, 'levelLoss');
  return singleDistortionLoss(oneHot, logits);
}

/** The fine-tuning objective: type loss plus twice the level loss. */
export function combinedLoss(
  typeMultiHot: tf.Tensor2D,
  typeLogits: tf.Tensor2D,
  levelOneHot: tf.Tensor2D,
  levelLogits: tf.Tensor2D,
): tf.Scalar {
  return tf.tidy(() => {
    const md = multiLabelLoss(typeMultiHot, typeLogits);
    const lvl = levelLoss(levelOneHot, levelLogits);
    return tf.add(md, tf.mul(LEVEL_LOSS_WEIGHT, lvl));
  });
}

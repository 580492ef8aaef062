/**
 * Training loops for the distortion-classification model.
 *
 * Three stages: single-distortion classification (softmax over types),
 * mixed-distortion pretraining (multi-label BCE), and combined fine-tuning
 * (multi-label BCE plus twice the level cross-entropy). SGD with momentum,
 * optional learning-rate halving or cosine decay, L2 weight decay on
 * kernels. Shuffling is seeded, so runs are reproducible.
 */

import * as tf from '@tensorflow/tfjs';

import { TrainSchedule } from './config';
import { RasterImage } from './image';
import {
  combinedLoss,
  multiLabelLoss,
  singleDistortionLoss,
} from './losses';
import { DcModel, batchToTensor } from './models';
import { Rng } from './prng';

export class EmptyDataset extends Error {}
export class LabelOutOfVocabulary extends Error {}

export interface SingleDataset {
  images: RasterImage[];
  /** Index into the distortion vocabulary, one class per sample. */
  classIndex: number[];
}

export interface MixedDataset {
  images: RasterImage[];
  typeMultiHot: number[][];
}

export interface CombinedDataset {
  images: RasterImage[];
  typeMultiHot: number[][];
  /** 1-based degradation level per sample. */
  levelIndex: number[];
}

function learningRateAt(schedule: TrainSchedule, epoch: number): number {
  let lr = schedule.learningRate;
  if (schedule.cosine) {
    return 0.5 * lr * (1 + Math.cos((Math.PI * epoch) / schedule.epochs));
  }
  if (schedule.halveEvery && schedule.halveEvery > 0) {
    lr *= 0.5 ** Math.floor(epoch / schedule.halveEvery);
  }
  return lr;
}

function kernelPenalty(dc: DcModel, weightDecay: number): tf.Scalar {
  if (weightDecay <= 0) return tf.scalar(0);
  const kernels = dc.model.trainableWeights.filter((w) => w.shape.length > 1);
  return tf.tidy(() => {
    let acc = tf.scalar(0);
    for (const w of kernels) {
      acc = tf.add(acc, tf.sum(tf.square(w.read())));
    }
    return tf.mul(0.5 * weightDecay, acc) as tf.Scalar;
  });
}

function oneHotRows(indices: number[], depth: number): tf.Tensor2D {
  return tf.oneHot(tf.tensor1d(indices, 'int32'), depth) as tf.Tensor2D;
}

type BatchLoss = (batch: tf.Tensor4D, rows: number[]) => tf.Scalar;

function runEpochs(
  dc: DcModel,
  images: RasterImage[],
  schedule: TrainSchedule,
  seed: number,
  batchLoss: BatchLoss,
): number[] {
  // one optimizer for the whole run: momentum / Adam state must persist
  // across epochs, only the learning rate is rescheduled
  const initialLr = learningRateAt(schedule, 0);
  const optimizer =
    schedule.optimizer === 'adam'
      ? tf.train.adam(initialLr)
      : tf.train.momentum(initialLr, schedule.momentum);
  const history: number[] = [];
  for (let epoch = 0; epoch < schedule.epochs; epoch++) {
    (optimizer as unknown as { learningRate: number }).learningRate =
      learningRateAt(schedule, epoch);
    const order = shuffled(images.length, new Rng((seed ^ 0xe90c) + epoch));
    let epochLoss = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += schedule.batchSize) {
      const rows = order.slice(start, start + schedule.batchSize);
      const batch = batchToTensor(rows.map((i) => images[i]));
      const cost = optimizer.minimize(
        () =>
          tf.tidy(() =>
            tf.add(batchLoss(batch, rows), kernelPenalty(dc, schedule.weightDecay)),
          ) as tf.Scalar,
        true,
      );
      epochLoss += cost!.dataSync()[0];
      batches++;
      cost!.dispose();
      batch.dispose();
    }
    history.push(epochLoss / batches);
  }
  optimizer.dispose();
  return history;
}

function shuffled(n: number, rng: Rng): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = rng.int(i + 1);
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

/** Single-distortion stage: softmax cross-entropy on the type head. */
export function trainDcSingle(
  dc: DcModel,
  dataset: SingleDataset,
  schedule: TrainSchedule,
  seed = 0,
): number[] {
  if (dataset.images.length === 0) throw new EmptyDataset('no training samples');
  for (const c of dataset.classIndex) {
    if (!Number.isInteger(c) || c < 0 || c >= dc.nTypes) {
      throw new LabelOutOfVocabulary(`class ${c} outside [0, ${dc.nTypes})`);
    }
  }
  return runEpochs(dc, dataset.images, schedule, seed, (batch, rows) =>
    tf.tidy(() => {
      const [typeLogits] = dc.model.apply(batch, { training: true }) as tf.Tensor2D[];
      const labels = oneHotRows(rows.map((i) => dataset.classIndex[i]), dc.nTypes);
      return singleDistortionLoss(labels, typeLogits);
    }),
  );
}

/** Mixed-distortion pretraining: per-class BCE on the type head. */
export function trainDcMixed(
  dc: DcModel,
  dataset: MixedDataset,
  schedule: TrainSchedule,
  seed = 0,
): number[] {
  if (dataset.images.length === 0) throw new EmptyDataset('no training samples');
  dataset.typeMultiHot.forEach((row, i) => {
    if (row.length !== dc.nTypes) {
      throw new LabelOutOfVocabulary(`sample ${i}: label width ${row.length} != ${dc.nTypes}`);
    }
    if (!row.some((v) => v === 1)) {
      throw new Error(`sample ${i}: distorted sample with all-zero type target`);
    }
  });
  return runEpochs(dc, dataset.images, schedule, seed, (batch, rows) =>
    tf.tidy(() => {
      const [typeLogits] = dc.model.apply(batch, { training: true }) as tf.Tensor2D[];
      const labels = tf.tensor2d(rows.map((i) => dataset.typeMultiHot[i]));
      return multiLabelLoss(labels, typeLogits, false);
    }),
  );
}

/** Fine-tuning: multi-label type loss plus twice the level loss. */
export function fineTuneCombined(
  dc: DcModel,
  dataset: CombinedDataset,
  schedule: TrainSchedule,
  seed = 0,
): number[] {
  if (dataset.images.length === 0) throw new EmptyDataset('no training samples');
  for (const level of dataset.levelIndex) {
    if (!Number.isInteger(level) || level < 1 || level > dc.nLevels) {
      throw new LabelOutOfVocabulary(`level ${level} outside [1, ${dc.nLevels}]`);
    }
  }
  return runEpochs(dc, dataset.images, schedule, seed, (batch, rows) =>
    tf.tidy(() => {
      const [typeLogits, levelLogits] = dc.model.apply(batch, {
        training: true,
      }) as tf.Tensor2D[];
      const typeLabels = tf.tensor2d(rows.map((i) => dataset.typeMultiHot[i]));
      const levelLabels = oneHotRows(rows.map((i) => dataset.levelIndex[i] - 1), dc.nLevels);
      return combinedLoss(typeLabels, typeLogits, levelLabels, levelLogits);
    }),
  );
}

// --- evaluation helpers -----------------------------------------------------

export function typeAccuracy(dc: DcModel, dataset: SingleDataset): number {
  return tf.tidy(() => {
    const batch = batchToTensor(dataset.images);
    const [typeLogits] = dc.model.predict(batch) as tf.Tensor2D[];
    const preds = typeLogits.argMax(1).arraySync() as number[];
    const hits = preds.filter((p, i) => p === dataset.classIndex[i]).length;
    return hits / preds.length;
  });
}

/** Mean per-class accuracy of thresholded sigmoid outputs vs multi-hot targets. */
export function perClassAccuracy(dc: DcModel, dataset: MixedDataset, threshold = 0.5): number {
  return tf.tidy(() => {
    const batch = batchToTensor(dataset.images);
    const [typeLogits] = dc.model.predict(batch) as tf.Tensor2D[];
    const probs = tf.sigmoid(typeLogits).arraySync() as number[][];
    let correct = 0;
    let total = 0;
    probs.forEach((row, i) => {
      row.forEach((p, c) => {
        correct += (p > threshold ? 1 : 0) === dataset.typeMultiHot[i][c] ? 1 : 0;
        total++;
      });
    });
    return correct / total;
  });
}

export function levelAccuracy(dc: DcModel, dataset: CombinedDataset): number {
  return tf.tidy(() => {
    const batch = batchToTensor(dataset.images);
    const [, levelLogits] = dc.model.predict(batch) as tf.Tensor2D[];
    const preds = levelLogits.argMax(1).arraySync() as number[];
    const hits = preds.filter((p, i) => p + 1 === dataset.levelIndex[i]).length;
    return hits / preds.length;
  });
}

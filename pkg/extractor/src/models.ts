/**
 * The two feature extractors.
 *
 * SC module: a small residual classification network; extraction taps the
 * pooled activations under the classification layer, on the full image.
 *
 * DC module: a convolutional distortion classifier with a shared feature
 * layer feeding two heads (distortion types, degradation level); extraction
 * taps the feature layer, i.e. the model without its final linear layers.
 *
 * No pretrained weights are downloadable in this toolkit's environment, so
 * backbones initialize from a seeded deterministic scheme; the deviation is
 * recorded in every exported manifest. Swapping in a pretrained backbone
 * only changes `buildScModule`.
 */

import * as tf from '@tensorflow/tfjs';
import * as fs from 'fs';

import { ExtractorConfig } from './config';
import { RasterImage } from './image';
import { Rng } from './prng';

export function imageToTensor(img: RasterImage): tf.Tensor4D {
  return tf.tensor4d(img.data, [1, img.height, img.width, 3]);
}

export function batchToTensor(imgs: RasterImage[]): tf.Tensor4D {
  const { width, height } = imgs[0];
  for (const img of imgs) {
    if (img.width !== width || img.height !== height) {
      throw new Error('batch images must share one size');
    }
  }
  const data = new Float32Array(imgs.length * height * width * 3);
  imgs.forEach((img, i) => data.set(img.data, i * height * width * 3));
  return tf.tensor4d(data, [imgs.length, height, width, 3]);
}

/**
 * Deterministic He-style weight assignment from the toolkit PRNG. Layers
 * whose names end in the given suffixes (the classification heads) start at
 * zero so a fresh model emits zero logits: its softmax loss is exactly ln C
 * and its per-class BCE exactly C ln 2.
 */
export function seedWeights(model: tf.LayersModel, rng: Rng, zeroHeads: string[] = []): void {
  for (const layer of model.layers) {
    const zero = zeroHeads.some((suffix) => layer.name.endsWith(suffix));
    const seeded = layer.getWeights().map((w) => {
      const shape = w.shape;
      if (zero || shape.length === 1) {
        return tf.zeros(shape); // heads and biases
      }
      const n = shape.reduce((a, b) => a * (b ?? 1), 1);
      const fanIn = shape.slice(0, -1).reduce((a, b) => a * (b ?? 1), 1);
      const std = Math.sqrt(2 / fanIn);
      const values = new Float32Array(n);
      for (let i = 0; i < n; i++) values[i] = std * rng.gauss();
      return tf.tensor(values, shape as number[]);
    });
    layer.setWeights(seeded);
    seeded.forEach((t) => t.dispose());
  }
}

export interface ScModule {
  /** Full classifier (trunk + classification layer). */
  classifier: tf.LayersModel;
  /** Everything under the classification layer; its output is the feature. */
  trunk: tf.LayersModel;
  featureDim: number;
}

export function buildScModule(config: ExtractorConfig, nClasses = 10): ScModule {
  const dim = config.semanticDim;
  const input = tf.input({ shape: [null, null, 3] });
  let x = tf.layers
    .conv2d({ filters: dim / 2, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu' })
    .apply(input) as tf.SymbolicTensor;
  x = residualBlock(x, dim / 2, 'sc_block1');
  x = tf.layers
    .conv2d({ filters: dim, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu' })
    .apply(x) as tf.SymbolicTensor;
  x = residualBlock(x, dim, 'sc_block2');
  const features = tf.layers.globalAveragePooling2d({ name: 'sc_features' }).apply(x) as tf.SymbolicTensor;
  const logits = tf.layers.dense({ units: nClasses, name: 'sc_classifier' }).apply(features) as tf.SymbolicTensor;
  const classifier = tf.model({ inputs: input, outputs: logits });
  const trunk = tf.model({ inputs: input, outputs: features });
  seedWeights(classifier, new Rng(config.seed ^ 0x5c5c5c5c), ['sc_classifier']);
  return { classifier, trunk, featureDim: dim };
}

function residualBlock(x: tf.SymbolicTensor, filters: number, name: string): tf.SymbolicTensor {
  let y = tf.layers
    .conv2d({ filters, kernelSize: 3, padding: 'same', activation: 'relu', name: `${name}_conv1` })
    .apply(x) as tf.SymbolicTensor;
  y = tf.layers
    .conv2d({ filters, kernelSize: 3, padding: 'same', name: `${name}_conv2` })
    .apply(y) as tf.SymbolicTensor;
  const sum = tf.layers.add({ name: `${name}_add` }).apply([x, y]) as tf.SymbolicTensor;
  return tf.layers.reLU({ name: `${name}_relu` }).apply(sum) as tf.SymbolicTensor;
}

/** Penultimate-layer features of the full image (no crop). */
export function extractSemantic(sc: ScModule, img: RasterImage): Float32Array {
  return tf.tidy(() => {
    const out = sc.trunk.predict(imageToTensor(img)) as tf.Tensor2D;
    return out.dataSync() as Float32Array;
  });
}

export interface DcModel {
  /** inputs -> [typeLogits, levelLogits, features] */
  model: tf.LayersModel;
  nTypes: number;
  nLevels: number;
  featureDim: number;
}

export function buildDcModel(config: ExtractorConfig): DcModel {
  const dim = config.distortionDim;
  const input = tf.input({ shape: [null, null, 3] });
  let x = tf.layers
    .conv2d({ filters: dim / 2, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu' })
    .apply(input) as tf.SymbolicTensor;
  x = tf.layers
    .conv2d({ filters: dim, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu' })
    .apply(x) as tf.SymbolicTensor;
  const pooled = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor;
  const features = tf.layers
    .dense({ units: dim, activation: 'relu', name: 'dc_features' })
    .apply(pooled) as tf.SymbolicTensor;
  const typeLogits = tf.layers
    .dense({ units: config.nTypes, name: 'dc_type_head' })
    .apply(features) as tf.SymbolicTensor;
  const levelLogits = tf.layers
    .dense({ units: config.nLevels, name: 'dc_level_head' })
    .apply(features) as tf.SymbolicTensor;
  const model = tf.model({ inputs: input, outputs: [typeLogits, levelLogits, features] });
  seedWeights(model, new Rng(config.seed ^ 0xdcdcdcdc), ['dc_type_head', 'dc_level_head']);
  return { model, nTypes: config.nTypes, nLevels: config.nLevels, featureDim: dim };
}

export interface DcForward {
  typeLogits: tf.Tensor2D;
  levelLogits: tf.Tensor2D;
  features: tf.Tensor2D;
}

export function dcForward(dc: DcModel, batch: tf.Tensor4D): DcForward {
  const [typeLogits, levelLogits, features] = dc.model.apply(batch) as tf.Tensor2D[];
  return { typeLogits, levelLogits, features };
}

/** Distortion features: the trained model without its final linear layers. */
export function extractDistortion(dc: DcModel, img: RasterImage): Float32Array {
  return tf.tidy(() => {
    const [, , features] = dc.model.predict(imageToTensor(img)) as tf.Tensor2D[];
    return features.dataSync() as Float32Array;
  });
}

/** Type probabilities (sigmoid over the multi-label head). */
export function predictTypeProbs(dc: DcModel, img: RasterImage): Float32Array {
  return tf.tidy(() => {
    const [typeLogits] = dc.model.predict(imageToTensor(img)) as tf.Tensor2D[];
    return tf.sigmoid(typeLogits).dataSync() as Float32Array;
  });
}

/** Single-file checkpoint: topology + weight specs + base64 weights. */
export async function saveModel(model: tf.LayersModel, path: string): Promise<void> {
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const payload = {
        modelTopology: artifacts.modelTopology,
        weightSpecs: artifacts.weightSpecs,
        weightData: Buffer.from(artifacts.weightData as ArrayBuffer).toString('base64'),
      };
      fs.writeFileSync(path, JSON.stringify(payload));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    }),
  );
}

export async function loadModel(path: string): Promise<tf.LayersModel> {
  const payload = JSON.parse(fs.readFileSync(path, 'utf-8'));
  const weightData = new Uint8Array(Buffer.from(payload.weightData, 'base64')).buffer;
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: payload.modelTopology,
      weightSpecs: payload.weightSpecs,
      weightData,
    }),
  );
}

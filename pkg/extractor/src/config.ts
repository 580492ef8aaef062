/** Toolkit configuration with the production defaults. */

import { DISTORTION_VOCABULARY } from './degrade';

export interface TrainSchedule {
  epochs: number;
  batchSize: number;
  learningRate: number;
  /** 'sgd' (momentum) is the production default; 'adam' suits tiny runs. */
  optimizer?: 'sgd' | 'adam';
  /** Halve the learning rate after this many epochs, repeatedly. */
  halveEvery?: number;
  /** Cosine-decay the learning rate to zero across all epochs. */
  cosine?: boolean;
  momentum: number;
  weightDecay: number;
}

export interface ExtractorConfig {
  scBackbone: string;
  dcBackbone: string;
  /** [height, width] of the random crop fed to the DC module. */
  cropSize: [number, number];
  /** Pseudo-label probability threshold. */
  tau: number;
  nLevels: number;
  nTypes: number;
  semanticDim: number;
  distortionDim: number;
  /** Seeds both weight initialization and data shuffling. */
  seed: number;
  singleStage: TrainSchedule;
  mixedStage: TrainSchedule;
  fineTuneStage: TrainSchedule;
}

export function defaultConfig(overrides: Partial<ExtractorConfig> = {}): ExtractorConfig {
  const config: ExtractorConfig = {
    scBackbone: 'micro-resnet-seeded',
    dcBackbone: 'micro-cnn-seeded',
    cropSize: [288, 384],
    tau: 0.2,
    nLevels: 10,
    nTypes: DISTORTION_VOCABULARY.length,
    semanticDim: 32,
    distortionDim: 32,
    seed: 7,
    singleStage: {
      epochs: 30,
      batchSize: 16,
      learningRate: 5e-3,
      halveEvery: 8,
      momentum: 0.9,
      weightDecay: 1e-4,
    },
    mixedStage: {
      epochs: 50,
      batchSize: 32,
      learningRate: 0.05,
      cosine: true,
      momentum: 0.9,
      weightDecay: 1e-4,
    },
    fineTuneStage: {
      epochs: 30,
      batchSize: 16,
      learningRate: 5e-3,
      halveEvery: 8,
      momentum: 0.9,
      weightDecay: 1e-4,
    },
    ...overrides,
  };
  if (!(config.tau > 0 && config.tau < 1)) {
    throw new Error(`tau must be in (0, 1), got ${config.tau}`);
  }
  if (config.nLevels < 2) {
    throw new Error(`nLevels must be >= 2, got ${config.nLevels}`);
  }
  return config;
}

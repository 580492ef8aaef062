export { Rng } from './prng';
export {
  DecodeError,
  RasterImage,
  decodePpm,
  encodePpm,
  randomCrop,
  readImage,
  writeImage,
} from './image';
export {
  DISTORTION_VOCABULARY,
  DistortionLabel,
  DistortionName,
  applyDistortion,
  synthesizeMixed,
} from './degrade';
export { BadRange, ProbOutOfRange, discretizeLevels, pseudoLabel } from './labels';
export {
  LEVEL_LOSS_WEIGHT,
  combinedLoss,
  levelLoss,
  multiLabelLoss,
  singleDistortionLoss,
} from './losses';
export { ExtractorConfig, TrainSchedule, defaultConfig } from './config';
export {
  DcModel,
  ScModule,
  buildDcModel,
  buildScModule,
  extractDistortion,
  extractSemantic,
  loadModel,
  predictTypeProbs,
  saveModel,
} from './models';
export {
  CombinedDataset,
  EmptyDataset,
  LabelOutOfVocabulary,
  MixedDataset,
  SingleDataset,
  fineTuneCombined,
  levelAccuracy,
  perClassAccuracy,
  trainDcMixed,
  trainDcSingle,
  typeAccuracy,
} from './train';
export {
  DimensionMismatch,
  ExportRecord,
  FormatError,
  ImageSample,
  StoreMeta,
  exportFeatures,
  writeStore,
} from './export';

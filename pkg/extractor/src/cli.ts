/**
 * Command-line interface for the extraction toolkit.
 *
 * Commands: synthesize, extract, train-dc-single, train-dc-mixed,
 * finetune-combined, export. Datasets are described by a JSON index file
 * (see README); configuration is a JSON file mirroring ExtractorConfig, with
 * any subset of fields overriding the defaults.
 */

import * as fs from 'fs';
import * as path from 'path';

import { ExtractorConfig, defaultConfig } from './config';
import { DISTORTION_VOCABULARY, synthesizeMixed } from './degrade';
import { RasterImage, randomCrop, readImage, writeImage } from './image';
import { discretizeLevels, pseudoLabel } from './labels';
import { Rng } from './prng';
import {
  DcModel,
  buildDcModel,
  buildScModule,
  extractDistortion,
  extractSemantic,
  loadModel,
  predictTypeProbs,
  saveModel,
} from './models';
import { fineTuneCombined, trainDcMixed, trainDcSingle } from './train';
import { exportFeatures } from './export';

interface SampleSpec {
  image: string;
  record_id: string;
  group_id: string;
  role: 'pristine' | 'distorted';
  mos?: number;
  distortion_type?: string;
  distortion_level?: number;
  class_index?: number;
  type_multi_hot?: number[];
}

interface DatasetSpec {
  samples: SampleSpec[];
}

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near '${argv[i]}'`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

function loadConfig(flags: Map<string, string>): ExtractorConfig {
  const file = flags.get('config');
  if (!file) return defaultConfig();
  return defaultConfig(JSON.parse(fs.readFileSync(file, 'utf-8')));
}

function loadDataset(file: string, baseDir?: string): { spec: DatasetSpec; images: RasterImage[] } {
  const spec = JSON.parse(fs.readFileSync(file, 'utf-8')) as DatasetSpec;
  const root = baseDir ?? path.dirname(path.resolve(file));
  const images = spec.samples.map((s) =>
    readImage(path.isAbsolute(s.image) ? s.image : path.join(root, s.image)),
  );
  return { spec, images };
}

function classIndexOf(sample: SampleSpec): number {
  if (sample.class_index !== undefined) return sample.class_index;
  const idx = DISTORTION_VOCABULARY.indexOf(sample.distortion_type as never);
  if (idx < 0) {
    throw new Error(
      `sample ${sample.record_id}: no class_index and unknown distortion_type ` +
        `'${sample.distortion_type}'`,
    );
  }
  return idx;
}

async function loadDcModel(file: string): Promise<DcModel> {
  const model = await loadModel(file);
  const outShapes = model.outputs.map((o) => o.shape[o.shape.length - 1] as number);
  return { model, nTypes: outShapes[0], nLevels: outShapes[1], featureDim: outShapes[2] };
}

function mosRange(samples: SampleSpec[]): [number, number] {
  const values = samples.filter((s) => s.mos !== undefined).map((s) => s.mos as number);
  if (values.length < 2) throw new Error('need at least two mos values to bin levels');
  return [Math.min(...values), Math.max(...values)];
}

async function cmdSynthesize(flags: Map<string, string>): Promise<number> {
  const img = readImage(need(flags, 'image'));
  const seed = Number(need(flags, 'seed'));
  const { image, label, stages } = synthesizeMixed(img, seed);
  writeImage(need(flags, 'out'), image);
  const labelOut = flags.get('label');
  const doc = { types: label.types, vocabulary: DISTORTION_VOCABULARY, stages, seed };
  if (labelOut) fs.writeFileSync(labelOut, JSON.stringify(doc, null, 2) + '\n');
  console.log(`applied ${stages.flat().join(', ')} -> ${flags.get('out')}`);
  return 0;
}

async function cmdExtract(flags: Map<string, string>): Promise<number> {
  const config = loadConfig(flags);
  const img = readImage(need(flags, 'image'));
  const sc = buildScModule(config);
  if (flags.get('sc-model')) {
    sc.trunk = await loadModel(flags.get('sc-model') as string);
  }
  const dc = flags.get('dc-model')
    ? await loadDcModel(flags.get('dc-model') as string)
    : buildDcModel(config);
  // semantic sees the full image; the distortion extractor gets a seeded
  // random crop when a crop seed is supplied
  const semantic = Array.from(extractSemantic(sc, img));
  const cropSeed = flags.get('crop-seed');
  const dcInput =
    cropSeed === undefined
      ? img
      : randomCrop(img, config.cropSize[0], config.cropSize[1], new Rng(Number(cropSeed)));
  const distortion = Array.from(extractDistortion(dc, dcInput));
  const doc = { query_id: path.basename(need(flags, 'image')), semantic, distortion };
  fs.writeFileSync(need(flags, 'out'), JSON.stringify(doc) + '\n');
  console.log(
    `extracted semantic[${semantic.length}] distortion[${distortion.length}] -> ${flags.get('out')}`,
  );
  return 0;
}

async function cmdTrainSingle(flags: Map<string, string>): Promise<number> {
  const config = loadConfig(flags);
  const { spec, images } = loadDataset(need(flags, 'data'));
  const dc = buildDcModel(config);
  const history = trainDcSingle(
    dc,
    { images, classIndex: spec.samples.map(classIndexOf) },
    config.singleStage,
    config.seed,
  );
  await saveModel(dc.model, need(flags, 'out'));
  console.log(
    `trained ${history.length} epochs; loss ${history[0].toFixed(4)} -> ` +
      `${history[history.length - 1].toFixed(4)}`,
  );
  return 0;
}

async function cmdTrainMixed(flags: Map<string, string>): Promise<number> {
  const config = loadConfig(flags);
  const { spec, images } = loadDataset(need(flags, 'data'));
  const typeMultiHot = spec.samples.map((s) => {
    if (!s.type_multi_hot) throw new Error(`sample ${s.record_id}: type_multi_hot required`);
    return s.type_multi_hot;
  });
  const dc = buildDcModel(config);
  const history = trainDcMixed(dc, { images, typeMultiHot }, config.mixedStage, config.seed);
  await saveModel(dc.model, need(flags, 'out'));
  console.log(
    `trained ${history.length} epochs; loss ${history[0].toFixed(4)} -> ` +
      `${history[history.length - 1].toFixed(4)}`,
  );
  return 0;
}

async function cmdFineTune(flags: Map<string, string>): Promise<number> {
  const config = loadConfig(flags);
  const { spec, images } = loadDataset(need(flags, 'data'));
  const dc = await loadDcModel(need(flags, 'model'));
  // types: given labels where present, otherwise pseudo-labels from the
  // model's own probabilities; levels: opinion scores binned over the
  // dataset's range
  const [lo, hi] = mosRange(spec.samples);
  const typeMultiHot: number[][] = [];
  const levelIndex: number[] = [];
  spec.samples.forEach((sample, i) => {
    if (sample.type_multi_hot) {
      typeMultiHot.push(sample.type_multi_hot);
    } else {
      const probs = predictTypeProbs(dc, images[i]);
      const pseudo = pseudoLabel(probs, config.tau);
      if (!pseudo.includes(1)) pseudo[probs.indexOf(Math.max(...probs))] = 1;
      typeMultiHot.push(pseudo);
    }
    if (sample.mos === undefined) {
      throw new Error(`sample ${sample.record_id}: mos required for level labels`);
    }
    levelIndex.push(discretizeLevels(sample.mos, lo, hi, config.nLevels));
  });
  const history = fineTuneCombined(
    dc,
    { images, typeMultiHot, levelIndex },
    config.fineTuneStage,
    config.seed,
  );
  await saveModel(dc.model, need(flags, 'out'));
  console.log(
    `fine-tuned ${history.length} epochs; loss ${history[0].toFixed(4)} -> ` +
      `${history[history.length - 1].toFixed(4)}`,
  );
  return 0;
}

async function cmdExport(flags: Map<string, string>): Promise<number> {
  const config = loadConfig(flags);
  const { spec, images } = loadDataset(need(flags, 'data'));
  const sc = buildScModule(config);
  if (flags.get('sc-model')) {
    sc.trunk = await loadModel(flags.get('sc-model') as string);
  }
  const dc = flags.get('dc-model')
    ? await loadDcModel(flags.get('dc-model') as string)
    : buildDcModel(config);
  const samples = spec.samples.map((s, i) => ({
    recordId: s.record_id,
    groupId: s.group_id,
    role: s.role,
    image: images[i],
    mos: s.mos,
    distortionType: s.distortion_type,
    distortionLevel: s.distortion_level,
  }));
  const outDir = need(flags, 'out');
  exportFeatures(samples, sc, dc, config, outDir, {
    datasetName: flags.get('dataset-name') ?? 'exported',
    mode: (flags.get('mode') ?? 'synthetic') as 'synthetic' | 'authentic',
    cropSeed: Number(flags.get('crop-seed') ?? config.seed),
  });
  console.log(`exported ${samples.length} records -> ${outDir}`);
  return 0;
}

const COMMANDS: Record<string, (flags: Map<string, string>) => Promise<number>> = {
  synthesize: cmdSynthesize,
  extract: cmdExtract,
  'train-dc-single': cmdTrainSingle,
  'train-dc-mixed': cmdTrainMixed,
  'finetune-combined': cmdFineTune,
  export: cmdExport,
};

const USAGE = `usage: extractor <command> [--flag value ...]

commands:
  synthesize         --image F --seed N --out F [--label F]
  extract            --image F --out F [--config F] [--sc-model F] [--dc-model F]
  train-dc-single    --data F --out F [--config F]
  train-dc-mixed     --data F --out F [--config F]
  finetune-combined  --data F --model F --out F [--config F]
  export             --data F --out DIR [--config F] [--sc-model F] [--dc-model F]
                     [--dataset-name S] [--mode synthetic|authentic] [--crop-seed N]
`;

export async function runCli(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (!command || command === '--help' || command === '-h') {
    process.stdout.write(USAGE);
    return command ? 0 : 64;
  }
  const handler = COMMANDS[command];
  if (!handler) {
    process.stderr.write(`unknown command '${command}'\n${USAGE}`);
    return 64;
  }
  try {
    return await handler(parseFlags(rest));
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
}

if (require.main === module) {
  runCli(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}

/**
 * Store export: writes the quality engine's on-disk format.
 *
 * Layout contract (must match the engine's loader exactly): a directory with
 * ``manifest.json`` plus ``vectors.bin`` = 8-byte magic ``RFIQAFS1``, a
 * little-endian uint32 format version, then per record its semantic vector
 * followed by its distortion vector as packed little-endian float32. The
 * manifest carries per-record metadata and the byte offset of every vector.
 */

import * as fs from 'fs';
import * as path from 'path';

import { ExtractorConfig } from './config';
import { RasterImage, randomCrop } from './image';
import { DcModel, ScModule, extractDistortion, extractSemantic } from './models';
import { Rng } from './prng';

export const MAGIC = 'RFIQAFS1';
export const FORMAT_VERSION = 1;

export class FormatError extends Error {}
export class DimensionMismatch extends Error {}

export interface ExportRecord {
  recordId: string;
  groupId: string;
  role: 'pristine' | 'distorted';
  semantic: Float32Array;
  /** Empty allowed for pristine records. */
  distortion: Float32Array;
  mos?: number;
  distortionType?: string;
  distortionLevel?: number;
}

export interface StoreMeta {
  datasetName: string;
  mode: 'synthetic' | 'authentic';
  scorePolarity: 'higher_better' | 'lower_better';
  /** Free-form provenance block; the engine ignores unknown manifest keys. */
  extractor?: Record<string, unknown>;
}

export function writeStore(records: ExportRecord[], meta: StoreMeta, outDir: string): void {
  if (records.length === 0) throw new FormatError('no records to export');
  const semanticDim = records[0].semantic.length;
  const distortionDims = new Set(
    records.filter((r) => r.distortion.length > 0).map((r) => r.distortion.length),
  );
  if (distortionDims.size > 1) {
    throw new DimensionMismatch(`inconsistent distortion dims: ${[...distortionDims]}`);
  }
  const distortionDim = distortionDims.size ? [...distortionDims][0] : 1;

  const chunks: Buffer[] = [Buffer.from(MAGIC, 'ascii')];
  const version = Buffer.alloc(4);
  version.writeUInt32LE(FORMAT_VERSION);
  chunks.push(version);
  let offset = MAGIC.length + 4;

  const entries = [];
  for (const rec of records) {
    if (rec.semantic.length !== semanticDim) {
      throw new DimensionMismatch(
        `record ${rec.recordId}: semantic dim ${rec.semantic.length} != ${semanticDim}`,
      );
    }
    if (rec.role === 'distorted') {
      if (rec.distortion.length !== distortionDim) {
        throw new DimensionMismatch(
          `record ${rec.recordId}: distortion dim ${rec.distortion.length} != ${distortionDim}`,
        );
      }
      if (rec.mos === undefined || !Number.isFinite(rec.mos)) {
        throw new FormatError(`distorted record ${rec.recordId} has no finite mos`);
      }
    }
    const sem = float32le(rec.semantic);
    const dis = float32le(rec.distortion);
    const entry = {
      record_id: rec.recordId,
      group_id: rec.groupId,
      role: rec.role,
      mos: rec.role === 'distorted' ? rec.mos : null,
      distortion_type: rec.distortionType ?? null,
      distortion_level: rec.distortionLevel ?? null,
      semantic_offset: offset,
      semantic_dim: rec.semantic.length,
      distortion_offset: offset + sem.length,
      distortion_dim: rec.distortion.length,
    };
    chunks.push(sem, dis);
    offset += sem.length + dis.length;
    entries.push(entry);
  }

  const manifest = {
    format_version: FORMAT_VERSION,
    dataset_name: meta.datasetName,
    mode: meta.mode,
    score_polarity: meta.scorePolarity,
    semantic_dim: semanticDim,
    distortion_dim: distortionDim,
    reduction_factor: 1,
    records: entries,
    ...(meta.extractor ? { extractor: meta.extractor } : {}),
  };

  fs.mkdirSync(outDir, { recursive: true });
  fs.writeFileSync(path.join(outDir, 'vectors.bin'), Buffer.concat(chunks));
  fs.writeFileSync(
    path.join(outDir, 'manifest.json'),
    JSON.stringify(manifest, null, 2) + '\n',
  );
}

function float32le(values: Float32Array): Buffer {
  const buf = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) buf.writeFloatLE(values[i], i * 4);
  return buf;
}

export interface ImageSample {
  recordId: string;
  groupId: string;
  role: 'pristine' | 'distorted';
  image: RasterImage;
  mos?: number;
  distortionType?: string;
  distortionLevel?: number;
}

function recordTag(recordId: string): number {
  let h = 5381;
  for (let i = 0; i < recordId.length; i++) {
    h = (Math.imul(h, 33) ^ recordId.charCodeAt(i)) >>> 0;
  }
  return h;
}

/**
 * Run both extractors over a dataset and write the store.
 *
 * Semantic features come from the full image; distortion features from a
 * random crop whose seed derives from (cropSeed, record id), so the same
 * invocation always produces the same bytes. Pristine records get no
 * distortion vector.
 */
export function exportFeatures(
  samples: ImageSample[],
  sc: ScModule,
  dc: DcModel,
  config: ExtractorConfig,
  outDir: string,
  meta: { datasetName: string; mode: 'synthetic' | 'authentic'; cropSeed: number },
): void {
  const [cropH, cropW] = config.cropSize;
  const records: ExportRecord[] = samples.map((sample) => {
    const semantic = extractSemantic(sc, sample.image);
    let distortion: Float32Array = new Float32Array(0);
    if (sample.role === 'distorted') {
      const rng = new Rng(meta.cropSeed).fork(recordTag(sample.recordId));
      distortion = extractDistortion(dc, randomCrop(sample.image, cropH, cropW, rng));
    }
    return {
      recordId: sample.recordId,
      groupId: sample.groupId,
      role: sample.role,
      semantic,
      distortion,
      mos: sample.mos,
      distortionType: sample.distortionType,
      distortionLevel: sample.distortionLevel,
    };
  });
  writeStore(records, {
    datasetName: meta.datasetName,
    mode: meta.mode,
    scorePolarity: 'higher_better',
    extractor: {
      sc_backbone: config.scBackbone,
      dc_backbone: config.dcBackbone,
      crop_size: config.cropSize,
      crop_seed: meta.cropSeed,
      pretrained: false,
      note: 'backbones seeded deterministically; no pretrained weights available in this build environment',
    },
  }, outDir);
}

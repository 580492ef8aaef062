import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { describe, expect, it } from 'vitest';

import { defaultConfig } from '../src/config';
import { decodePpm, encodePpm, writeImage, readImage } from '../src/image';
import {
  buildDcModel,
  buildScModule,
  extractDistortion,
  extractSemantic,
  loadModel,
  saveModel,
} from '../src/models';
import { Rng } from '../src/prng';
import { renderGrating } from '../src/toy';

const config = defaultConfig({ semanticDim: 16, distortionDim: 16, seed: 3 });

function cosine(u: Float32Array, v: Float32Array): number {
  let dot = 0;
  let nu = 0;
  let nv = 0;
  for (let i = 0; i < u.length; i++) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / Math.sqrt(nu * nv);
}

describe('semantic extraction', () => {
  const sc = buildScModule(config);
  const img = renderGrating(48, 36, { fx: 0.2, fy: 0.02, phase: 1, color: [1, 1, 0.8] });

  it('same image twice gives identical vectors', () => {
    const a = extractSemantic(sc, img);
    const b = extractSemantic(sc, img);
    expect(a.length).toBe(config.semanticDim);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it('an exact copy under a different filename gives identical vectors', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'sc-'));
    writeImage(path.join(dir, 'one.ppm'), img);
    fs.copyFileSync(path.join(dir, 'one.ppm'), path.join(dir, 'two.ppm'));
    const a = extractSemantic(sc, readImage(path.join(dir, 'one.ppm')));
    const b = extractSemantic(sc, readImage(path.join(dir, 'two.ppm')));
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it('near-duplicate images land above 0.8 cosine similarity', () => {
    const rng = new Rng(5);
    const twin = decodePpm(encodePpm(img));
    for (let i = 0; i < twin.data.length; i++) {
      twin.data[i] = Math.min(1, Math.max(0, twin.data[i] + 0.01 * rng.gauss()));
    }
    const sim = cosine(extractSemantic(sc, img), extractSemantic(sc, twin));
    expect(sim).toBeGreaterThan(0.8);
  });

  it('handles full images of varying size (no crop)', () => {
    const small = renderGrating(20, 28, { fx: 0.3, fy: 0, phase: 0, color: [1, 1, 1] });
    const large = renderGrating(70, 50, { fx: 0.3, fy: 0, phase: 0, color: [1, 1, 1] });
    expect(extractSemantic(sc, small).length).toBe(config.semanticDim);
    expect(extractSemantic(sc, large).length).toBe(config.semanticDim);
  });

  it('is seeded: same config seed rebuilds identical weights', () => {
    const again = buildScModule(config);
    const a = extractSemantic(sc, img);
    const b = extractSemantic(again, img);
    expect(Array.from(a)).toEqual(Array.from(b));
  });
});

describe('distortion extraction', () => {
  it('feature dimension matches config; deterministic', () => {
    const dc = buildDcModel(config);
    const img = renderGrating(32, 32, { fx: 0.1, fy: 0.1, phase: 0, color: [1, 1, 1] });
    const a = extractDistortion(dc, img);
    const b = extractDistortion(dc, img);
    expect(a.length).toBe(config.distortionDim);
    expect(Array.from(a)).toEqual(Array.from(b));
  });
});

describe('checkpoints', () => {
  it('save/load round-trips weights exactly', async () => {
    const dc = buildDcModel(config);
    const img = renderGrating(24, 24, { fx: 0.2, fy: 0, phase: 0, color: [1, 1, 1] });
    const before = extractDistortion(dc, img);
    const file = path.join(fs.mkdtempSync(path.join(os.tmpdir(), 'ckpt-')), 'dc.json');
    await saveModel(dc.model, file);
    const loaded = await loadModel(file);
    const after = extractDistortion({ ...dc, model: loaded }, img);
    expect(Array.from(after)).toEqual(Array.from(before));
  });
});

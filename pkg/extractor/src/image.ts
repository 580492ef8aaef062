/**
 * In-memory raster images and PPM (P6) file I/O.
 *
 * Pixels live as float RGB in [0, 1], row-major, channel-interleaved. PPM is
 * the toolkit's on-disk image format: self-describing, dependency-free, and
 * lossless at 8 bits, which is all the desk-scale pipeline needs.
 */

import * as fs from 'fs';

import { Rng } from './prng';

export class DecodeError extends Error {}

export interface RasterImage {
  width: number;
  height: number;
  /** RGB interleaved, length = width * height * 3, values in [0, 1]. */
  data: Float32Array;
}

export function makeImage(width: number, height: number): RasterImage {
  return { width, height, data: new Float32Array(width * height * 3) };
}

export function cloneImage(img: RasterImage): RasterImage {
  return { width: img.width, height: img.height, data: img.data.slice() };
}

export function clamp01(x: number): number {
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

export function encodePpm(img: RasterImage): Buffer {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, 'ascii');
  const body = Buffer.alloc(img.width * img.height * 3);
  for (let i = 0; i < img.data.length; i++) {
    body[i] = Math.round(clamp01(img.data[i]) * 255);
  }
  return Buffer.concat([header, body]);
}

export function decodePpm(buf: Buffer): RasterImage {
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> pixel data
  if (buf.length < 2 || buf.toString('ascii', 0, 2) !== 'P6') {
    throw new DecodeError('not a P6 PPM file');
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < buf.length && isSpace(buf[pos])) pos++;
    if (pos < buf.length && buf[pos] === 0x23) {
      // comment line
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !isSpace(buf[pos])) pos++;
    if (start === pos) throw new DecodeError('truncated PPM header');
    const value = Number(buf.toString('ascii', start, pos));
    if (!Number.isInteger(value) || value <= 0) {
      throw new DecodeError(`bad PPM header field at byte ${start}`);
    }
    fields.push(value);
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new DecodeError(`unsupported maxval ${maxval}`);
  const need = width * height * 3;
  if (buf.length - pos < need) {
    throw new DecodeError(`pixel data truncated: need ${need}, have ${buf.length - pos}`);
  }
  const img = makeImage(width, height);
  for (let i = 0; i < need; i++) {
    img.data[i] = buf[pos + i] / 255;
  }
  return img;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function readImage(path: string): RasterImage {
  return decodePpm(fs.readFileSync(path));
}

export function writeImage(path: string, img: RasterImage): void {
  fs.writeFileSync(path, encodePpm(img));
}

/**
 * Seeded random crop. Images smaller than the crop are edge-padded first so
 * the output size is always exactly cropH x cropW.
 */
export function randomCrop(
  img: RasterImage,
  cropH: number,
  cropW: number,
  rng: Rng,
): RasterImage {
  const src = padToAtLeast(img, cropH, cropW);
  const y0 = rng.int(src.height - cropH + 1);
  const x0 = rng.int(src.width - cropW + 1);
  const out = makeImage(cropW, cropH);
  for (let y = 0; y < cropH; y++) {
    const srcOff = ((y0 + y) * src.width + x0) * 3;
    out.data.set(src.data.subarray(srcOff, srcOff + cropW * 3), y * cropW * 3);
  }
  return out;
}

function padToAtLeast(img: RasterImage, minH: number, minW: number): RasterImage {
  if (img.height >= minH && img.width >= minW) return img;
  const h = Math.max(img.height, minH);
  const w = Math.max(img.width, minW);
  const out = makeImage(w, h);
  for (let y = 0; y < h; y++) {
    const sy = Math.min(y, img.height - 1);
    for (let x = 0; x < w; x++) {
      const sx = Math.min(x, img.width - 1);
      const d = (y * w + x) * 3;
      const s = (sy * img.width + sx) * 3;
      out.data[d] = img.data[s];
      out.data[d + 1] = img.data[s + 1];
      out.data[d + 2] = img.data[s + 2];
    }
  }
  return out;
}

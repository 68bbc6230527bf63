/**
 * Parser for the server's binary PGM tiles (P5, 8 or 16 bit).
 *
 * Browsers do not decode PGM natively, so the bytes are parsed here and
 * painted through ImageData.  16-bit samples are big-endian per the format.
 */

export interface Pgm {
  width: number;
  height: number;
  maxval: number;
  data: Uint16Array;
}

export function parsePgm(buf: ArrayBuffer): Pgm {
  const bytes = new Uint8Array(buf);
  let pos = 0;
  const token = (): string => {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++;
    if (bytes[pos] === 35 /* # */) {
      while (pos < bytes.length && bytes[pos] !== 10) pos++;
      return token();
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    return String.fromCharCode(...bytes.subarray(start, pos));
  };
  const magic = token();
  if (magic !== "P5") throw new Error(`not a binary PGM (magic ${magic})`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  pos++; // single whitespace after maxval
  const n = width * height;
  const data = new Uint16Array(n);
  if (maxval > 255) {
    if (bytes.length - pos < 2 * n) throw new Error("truncated PGM body");
    for (let i = 0; i < n; i++) {
      data[i] = (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
    }
  } else {
    if (bytes.length - pos < n) throw new Error("truncated PGM body");
    for (let i = 0; i < n; i++) data[i] = bytes[pos + i];
  }
  return { width, height, maxval, data };
}

function isSpace(b: number): boolean {
  return b === 32 || b === 9 || b === 10 || b === 13;
}

/** simple blue-to-yellow ramp; returns RGBA bytes */
export function toRgba(p: Pgm, alpha = 255): Uint8ClampedArray {
  const out = new Uint8ClampedArray(p.width * p.height * 4);
  for (let i = 0; i < p.data.length; i++) {
    const t = p.data[i] / p.maxval;
    out[4 * i] = Math.round(255 * Math.min(1, 1.5 * t));
    out[4 * i + 1] = Math.round(255 * t);
    out[4 * i + 2] = Math.round(255 * Math.max(0, 1 - 1.2 * t));
    out[4 * i + 3] = alpha;
  }
  return out;
}

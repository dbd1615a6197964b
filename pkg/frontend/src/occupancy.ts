// Occupancy vectors arrive bit-packed and base64-encoded. Decoding is done
// by hand so the module behaves identically in the browser and in tests.

const B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
const B64_INDEX = new Map<string, number>([...B64].map((ch, i) => [ch, i]));

export function decodeBase64(text: string): Uint8Array {
  const clean = text.replace(/=+$/, "");
  const out = new Uint8Array(Math.floor((clean.length * 6) / 8));
  let buffer = 0;
  let bits = 0;
  let pos = 0;
  for (const ch of clean) {
    const value = B64_INDEX.get(ch);
    if (value === undefined) continue;
    buffer = (buffer << 6) | value;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out[pos++] = (buffer >> bits) & 0xff;
    }
  }
  return out.subarray(0, pos);
}

export function decodeOccupancy(bitsB64: string, cellCount: number): Uint8Array {
  const bytes = decodeBase64(bitsB64);
  const out = new Uint8Array(cellCount);
  for (let i = 0; i < cellCount; i++) {
    out[i] = (bytes[i >> 3] >> (7 - (i & 7))) & 1;
  }
  return out;
}

/** Row-major cell index to integer grid coordinates, matching the server. */
export function cellCoords(index: number, dims: number[]): [number, number] {
  return [Math.floor(index / dims[1]), index % dims[1]];
}

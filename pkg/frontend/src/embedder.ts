// Deterministic text embedder: signed feature hashing over character
// trigrams, L2-normalized. No model weights, no network — the point is a
// stable, unit-norm vector space that the retrieval side can index.

export const DIM = 48;
export const IDENTITY = `fnv-trigram-v1-d${DIM}`;

/** 32-bit FNV-1a hash. */
export function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/**
 * Embed one text as a unit-norm vector.
 *
 * Each character trigram (with start/end sentinels) hashes to a bucket
 * and a sign; an all-zero accumulation (empty text) falls back to the
 * first basis vector so every output has norm exactly 1.
 */
export function embed(text: string, dim: number = DIM): number[] {
  const acc = new Array<number>(dim).fill(0);
  const padded = `${text.toLowerCase()}`;
  for (let i = 0; i + 3 <= padded.length; i++) {
    const h = fnv1a(padded.slice(i, i + 3));
    const bucket = (h >>> 1) % dim;
    acc[bucket] += h & 1 ? 1 : -1;
  }
  const norm = Math.hypot(...acc);
  if (norm === 0) {
    acc[0] = 1;
    return acc;
  }
  return acc.map((x) => x / norm);
}

export function embedBatch(texts: string[], dim: number = DIM): number[][] {
  return texts.map((t) => embed(t, dim));
}

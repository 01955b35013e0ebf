/** Vertex label semantics shared with the backend: 0 vessel, 1 aneurysm,
 * 2 ostium ring. Colors match the backend's point-cloud export. */

export const LABEL_VESSEL = 0;
export const LABEL_ANEURYSM = 1;
export const LABEL_OSTIUM = 2;

export const LABEL_NAMES: Record<number, string> = {
  [LABEL_VESSEL]: "vessel",
  [LABEL_ANEURYSM]: "aneurysm",
  [LABEL_OSTIUM]: "ostium",
};

/** RGB in 0..255, identical to the backend's label colors. */
export const LABEL_COLORS: Record<number, [number, number, number]> = {
  [LABEL_VESSEL]: [0, 0, 255],
  [LABEL_ANEURYSM]: [255, 0, 0],
  [LABEL_OSTIUM]: [0, 255, 0],
};

/** Per-vertex RGB float array (0..1) for a three.js color attribute. */
export function buildVertexColors(labels: ArrayLike<number>): Float32Array {
  const out = new Float32Array(labels.length * 3);
  for (let i = 0; i < labels.length; i++) {
    const c = LABEL_COLORS[labels[i]];
    if (c === undefined) {
      throw new Error(`unknown label ${labels[i]} at vertex ${i}`);
    }
    out[3 * i] = c[0] / 255;
    out[3 * i + 1] = c[1] / 255;
    out[3 * i + 2] = c[2] / 255;
  }
  return out;
}

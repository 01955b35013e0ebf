/** Conversion of backend JSON mesh payloads into three.js buffer
 * geometry. Positions and indices are copied verbatim (thin-client
 * invariant: geometry is never recomputed on the client). */

import * as THREE from "three";
import type { MeshPayload } from "./api.js";
import { buildVertexColors } from "./labels.js";

export function payloadToGeometry(
  payload: MeshPayload,
  labels?: ArrayLike<number>,
): THREE.BufferGeometry {
  if (payload.positions.length !== 3 * payload.n_vertices) {
    throw new Error("positions length does not match n_vertices");
  }
  if (payload.faces.length !== 3 * payload.n_faces) {
    throw new Error("faces length does not match n_faces");
  }
  const geom = new THREE.BufferGeometry();
  geom.setAttribute(
    "position",
    new THREE.Float32BufferAttribute(payload.positions, 3),
  );
  geom.setIndex(payload.faces);
  if (labels !== undefined) {
    if (labels.length !== payload.n_vertices) {
      throw new Error("labels length does not match n_vertices");
    }
    geom.setAttribute(
      "color",
      new THREE.BufferAttribute(buildVertexColors(labels), 3),
    );
  }
  geom.computeVertexNormals();
  return geom;
}

/** Closed polyline geometry from a list of xyz points (the backend's
 * surface-projected ring preview). */
export function ringToGeometry(
  points: [number, number, number][],
): THREE.BufferGeometry {
  const closed = points.concat([points[0]]);
  const flat = new Float32Array(closed.length * 3);
  closed.forEach((p, i) => flat.set(p, 3 * i));
  const geom = new THREE.BufferGeometry();
  geom.setAttribute("position", new THREE.BufferAttribute(flat, 3));
  return geom;
}

/** Vertex picking: a camera ray hits a triangle, then the nearest of the
 * triangle's three corners is selected. Robust on dense meshes where a
 * pure per-vertex pick would need screen-space billboards. */

import * as THREE from "three";

export interface FaceHit {
  /** Corner vertex indices of the hit triangle. */
  face: { a: number; b: number; c: number };
  /** World-space intersection point. */
  point: { x: number; y: number; z: number };
}

/** Nearest corner of the hit triangle to the intersection point.
 * `positions` is the flat xyz vertex buffer in the same space as the
 * intersection point. */
export function nearestVertexOfHit(
  hit: FaceHit,
  positions: ArrayLike<number>,
): number {
  const corners = [hit.face.a, hit.face.b, hit.face.c];
  let best = corners[0];
  let bestD = Infinity;
  for (const v of corners) {
    const dx = positions[3 * v] - hit.point.x;
    const dy = positions[3 * v + 1] - hit.point.y;
    const dz = positions[3 * v + 2] - hit.point.z;
    const d = dx * dx + dy * dy + dz * dz;
    if (d < bestD) {
      bestD = d;
      best = v;
    }
  }
  return best;
}

/** Cast a ray through normalized device coordinates and return the picked
 * vertex id, or null if the ray misses the mesh. */
export function pickVertex(
  ndc: { x: number; y: number },
  camera: THREE.Camera,
  mesh: THREE.Mesh,
): number | null {
  const raycaster = new THREE.Raycaster();
  raycaster.setFromCamera(new THREE.Vector2(ndc.x, ndc.y), camera);
  const hits = raycaster.intersectObject(mesh, false);
  if (hits.length === 0 || hits[0].face === undefined || hits[0].face === null) {
    return null;
  }
  const geom = mesh.geometry as THREE.BufferGeometry;
  const positions = geom.getAttribute("position").array;
  // intersection point is in world space; bring it into mesh-local space
  // to compare against the position attribute
  const local = mesh.worldToLocal(hits[0].point.clone());
  return nearestVertexOfHit(
    { face: hits[0].face, point: local },
    positions,
  );
}

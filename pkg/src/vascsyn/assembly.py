"""Sample assembly: attach the aneurysm to the vessel, open the branch
ends, label vertices, extract the ostium ring, and emit the final
normalized labeled sample."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .aneurysm import AneurysmMesh
from .errors import CutMissed, RingInvalid, UnionDisconnected, VascsynError
from .mesh import MeshQuery, TriMesh, boolean_union, clean_mesh, \
    fill_small_holes, ray_cast_batch, smooth, validate_closed
from .ostium import OstiumPoint
from .vessel import HealthyVessel

LABEL_VESSEL = 0
LABEL_ANEURYSM = 1
LABEL_OSTIUM = 2

CUT_BALL_FACTOR = 2.0        # x branch radius around each terminal endpoint
LABEL_TOL_REL = 0.02         # x sac bounding diameter
MIN_RING_SIZE = 8
ISLAND_MAX_VERTS = 10        # label components smaller than this get absorbed
RING_MAX_GAP_DEG = 90.0      # largest angular gap tolerated in the ring


@dataclass(frozen=True)
class LabeledMesh:
    mesh: TriMesh
    labels: np.ndarray           # (n_vertices,) ints in {0, 1, 2}

    def __post_init__(self):
        if len(self.labels) != self.mesh.n_vertices:
            raise VascsynError("label count does not match vertex count")


@dataclass(frozen=True)
class OstiumRing:
    vertex_indices: np.ndarray   # ordered cycle
    centroid: np.ndarray
    normal: np.ndarray           # unit, oriented toward the aneurysm

    def to_dict(self) -> dict:
        return {
            "vertex_indices": [int(i) for i in self.vertex_indices],
            "centroid": [float(x) for x in self.centroid],
            "normal": [float(x) for x in self.normal],
        }


@dataclass(frozen=True)
class LabeledSample:
    full: LabeledMesh
    sub_vessel: LabeledMesh
    sub_aneurysm: LabeledMesh
    sub_vessel_map: np.ndarray      # submesh vertex -> full mesh vertex
    sub_aneurysm_map: np.ndarray
    ring: OstiumRing
    centerlines: list               # dicts: samples (normalized), radius
    morpho: dict
    meta: dict = field(default_factory=dict)


def place_sac(sac: AneurysmMesh, o: OstiumPoint) -> TriMesh:
    """Sac translated into world frame, centroid at the ostium point."""
    return sac.mesh.translated(np.asarray(o.position))


def attach_aneurysm(v: HealthyVessel, sac: AneurysmMesh,
                    o: OstiumPoint) -> TriMesh:
    """Boolean union of the vessel and the placed sac, smoothed; raises
    UnionDisconnected when the two surfaces never intersect."""
    placed = place_sac(sac, o)
    merged = boolean_union(v.mesh, placed)
    merged = fill_small_holes(clean_mesh(merged))
    merged = smooth(merged, "laplacian", 2)
    rep = validate_closed(merged)
    if rep.components != 1:
        raise UnionDisconnected(
            f"union produced {rep.components} components")
    if not rep.watertight:
        raise UnionDisconnected("union surface is not watertight")
    return merged


# -- branch-end openings ---------------------------------------------------

def _cut_one_end(vertices: np.ndarray, faces: np.ndarray,
                 end: np.ndarray, n_out: np.ndarray, ball: float):
    """Clip the mesh with the plane through `end` (normal n_out, positive
    side removed), restricted to faces whose centroid lies in the ball."""
    sd = (vertices - end) @ n_out
    cent = vertices[faces].mean(axis=1)
    local = np.linalg.norm(cent - end, axis=1) <= ball

    fsd = sd[faces]
    drop = local & (fsd > 0).all(axis=1)
    cross = local & (fsd > 0).any(axis=1) & ~drop
    if not (drop.any() or cross.any()):
        raise CutMissed("cut plane intersects no local geometry")

    keep_faces = list(faces[~(drop | cross)])
    new_vertices = list(vertices)
    edge_cache: dict[tuple[int, int], int] = {}

    def edge_point(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in edge_cache:
            t = sd[a] / (sd[a] - sd[b])
            p = vertices[a] + t * (vertices[b] - vertices[a])
            edge_cache[key] = len(new_vertices)
            new_vertices.append(p)
        return edge_cache[key]

    for f in faces[cross]:
        inside = [i for i in f if sd[i] <= 0]
        outside = [i for i in f if sd[i] > 0]
        if len(inside) == 1:
            a = inside[0]
            # preserve winding: rotate so a is first
            idx = list(f).index(a)
            b, c = f[(idx + 1) % 3], f[(idx + 2) % 3]
            keep_faces.append([a, edge_point(a, b), edge_point(a, c)])
        elif len(inside) == 2:
            c = outside[0]
            idx = list(f).index(c)
            a, b = f[(idx + 1) % 3], f[(idx + 2) % 3]
            pa = edge_point(c, a)
            pb = edge_point(b, c)
            keep_faces.append([a, b, pb])
            keep_faces.append([a, pb, pa])
    return np.asarray(new_vertices), np.asarray(keep_faces, dtype=np.int64)


def _drop_unreferenced(vertices: np.ndarray, faces: np.ndarray):
    used = np.unique(faces)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[faces]


def cut_openings(m: TriMesh, v: HealthyVessel) -> TriMesh:
    """One planar opening per centerline branch at its terminal endpoint.

    Each cut is confined to the ball of radius 2r around the endpoint; the
    rest of the surface is untouched."""
    vertices = m.vertices.copy()
    faces = m.faces.copy()
    for br in v.branches:
        end = br.samples[-1]
        n_out = br.tangents()[-1]
        ball = CUT_BALL_FACTOR * br.radius
        vertices, faces = _cut_one_end(vertices, faces, end, n_out, ball)
    vertices, faces = _drop_unreferenced(vertices, faces)
    return TriMesh(vertices, faces).with_normals()


# -- labeling --------------------------------------------------------------

def _adjacency_sets(mesh: TriMesh) -> list[set]:
    adj: list[set] = [set() for _ in range(mesh.n_vertices)]
    for a, b in mesh.edges_unique():
        adj[a].add(int(b))
        adj[b].add(int(a))
    return adj


def _absorb_small_islands(labels: np.ndarray, adj: list[set],
                          max_size: int) -> np.ndarray:
    """Connected same-label components below `max_size` adopt the majority
    label of their boundary neighbors."""
    labels = labels.copy()
    seen = np.zeros(len(labels), dtype=bool)
    for start in range(len(labels)):
        if seen[start]:
            continue
        lab = labels[start]
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w] and labels[w] == lab:
                    seen[w] = True
                    comp.append(w)
                    stack.append(w)
        if len(comp) < max_size:
            border = [labels[w] for u in comp for w in adj[u]
                      if labels[w] != lab]
            if border:
                vals, counts = np.unique(border, return_counts=True)
                labels[np.asarray(comp)] = vals[np.argmax(counts)]
    return labels


def _label_components(labels: np.ndarray, adj: list[set], val) -> list[list[int]]:
    idx = np.flatnonzero(labels == val)
    seen = np.zeros(len(labels), dtype=bool)
    comps = []
    for start in idx:
        if seen[start]:
            continue
        comp = [int(start)]
        seen[start] = True
        stack = [int(start)]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w] and labels[w] == val:
                    seen[w] = True
                    comp.append(w)
                    stack.append(w)
        comps.append(comp)
    return comps


def _keep_largest_component(labels: np.ndarray, adj: list[set],
                            val) -> np.ndarray:
    comps = _label_components(labels, adj, val)
    if len(comps) <= 1:
        return labels
    labels = labels.copy()
    comps.sort(key=len, reverse=True)
    for comp in comps[1:]:
        border = [labels[w] for u in comp for w in adj[u]
                  if labels[w] != val]
        if border:
            vals, counts = np.unique(border, return_counts=True)
            labels[np.asarray(comp)] = vals[np.argmax(counts)]
    return labels


def label_vertices(m: TriMesh, sac_placed: TriMesh,
                   tol_rel: float = LABEL_TOL_REL) -> LabeledMesh:
    """Vessel (0) / aneurysm (1) / ostium (2) labels.

    A vertex is on the aneurysm when the ray from the sac centroid through
    it first hits the sac reference surface at the vertex's own distance
    (within tol_rel x sac diameter); unreachable rays fall back to a
    nearest-distance test. Aneurysm vertices edge-adjacent to vessel
    vertices become the ostium, and tiny misclassified islands are
    absorbed."""
    lo, hi = sac_placed.bbox()
    tol = tol_rel * float(np.linalg.norm(hi - lo))
    center = sac_placed.centroid()

    labels = np.zeros(m.n_vertices, dtype=np.int64)

    # cheap cull: a lower bound on the distance to the sac surface
    q = MeshQuery(sac_placed)
    d_cent, _ = cKDTree(q.centroids).query(m.vertices, workers=-1)
    near = np.flatnonzero(d_cent - q.max_radius <= tol)

    if len(near):
        rel = m.vertices[near] - center
        dist = np.linalg.norm(rel, axis=1)
        dirs = rel / np.maximum(dist, 1e-300)[:, None]
        t, _ = ray_cast_batch(sac_placed, np.broadcast_to(
            center, (len(near), 3)).copy(), dirs)
        hit = np.isfinite(t)
        on_sac = hit & (np.abs(t - dist) <= tol)
        missed = ~hit
        if missed.any():
            d_exact = q.distance(m.vertices[near[missed]])
            on_sac[missed] = d_exact <= tol
        labels[near[on_sac]] = LABEL_ANEURYSM

    adj = _adjacency_sets(m)
    labels = _absorb_small_islands(labels, adj, ISLAND_MAX_VERTS)
    # the vessel and the sac are each one connected region; any detached
    # same-label pocket is a misclassification and joins its surroundings
    for val in (LABEL_VESSEL, LABEL_ANEURYSM):
        labels = _keep_largest_component(labels, adj, val)

    for i in np.flatnonzero(labels == LABEL_ANEURYSM):
        if any(labels[w] == LABEL_VESSEL for w in adj[i]):
            labels[i] = LABEL_OSTIUM
    return LabeledMesh(m, labels)


# -- ostium ring -----------------------------------------------------------

def _plane_fit(points: np.ndarray):
    """(centroid, unit normal) of the total-least-squares plane."""
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    return c, vt[-1]


def extract_ostium_ring(lm: LabeledMesh,
                        min_ring_size: int = MIN_RING_SIZE) -> OstiumRing:
    """Validate the label-2 set as one coherent ring and order it.

    The ordering is angular around the total-least-squares plane normal;
    the normal is oriented toward the aneurysm side."""
    idx = np.flatnonzero(lm.labels == LABEL_OSTIUM)
    if len(idx) < min_ring_size:
        raise RingInvalid("zero", f"{len(idx)} ostium vertices "
                          f"(minimum {min_ring_size})")

    idx_set = set(int(i) for i in idx)
    sub_adj = {i: set() for i in idx_set}
    for a, b in lm.mesh.edges_unique():
        a, b = int(a), int(b)
        if a in idx_set and b in idx_set:
            sub_adj[a].add(b)
            sub_adj[b].add(a)

    # single connected component
    start = int(idx[0])
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in sub_adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(idx_set):
        raise RingInvalid("multiple", "ostium vertices form more than one "
                          "connected component")

    pts = lm.mesh.vertices[idx]
    c, n = _plane_fit(pts)

    # orient toward the aneurysm: label-1 vertices sit on that side
    an = lm.mesh.vertices[lm.labels == LABEL_ANEURYSM]
    if len(an):
        side = an.mean(axis=0) - c
        if np.dot(n, side) < 0:
            n = -n

    # angular order around the plane normal; a large gap means the ring
    # covers only an arc instead of closing
    up = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, up)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    rel = pts - c
    ang = np.arctan2(rel @ t2, rel @ t1)
    order = np.argsort(ang)
    gaps = np.diff(np.concatenate([ang[order], [ang[order[0]] + 2 * np.pi]]))
    if np.rad2deg(gaps.max()) > RING_MAX_GAP_DEG:
        raise RingInvalid("non-cycle", "ostium vertices do not close a ring "
                          f"(max angular gap {np.rad2deg(gaps.max()):.0f} deg)")

    return OstiumRing(idx[order], c, n)


# -- finalization ----------------------------------------------------------

def _k_ring(adj: list[set], seeds: np.ndarray, k: int) -> np.ndarray:
    region = set(int(i) for i in seeds)
    frontier = set(region)
    for _ in range(k):
        nxt = set()
        for u in frontier:
            nxt |= adj[u]
        nxt -= region
        region |= nxt
        frontier = nxt
    return np.fromiter(sorted(region), dtype=np.int64)


def normalize_isotropic(vertices: np.ndarray):
    """(normalized vertices, center, scale): centered on the vertex
    centroid, scaled so the largest coordinate magnitude is 1."""
    center = vertices.mean(axis=0)
    rel = vertices - center
    scale = float(np.abs(rel).max())
    if scale == 0:
        raise VascsynError("degenerate geometry, zero extent")
    return rel / scale, center, scale


def _submesh(lm: LabeledMesh, wanted: set):
    """Faces whose vertex labels are all in `wanted`, reindexed."""
    flab = lm.labels[lm.mesh.faces]
    mask = np.isin(flab, list(wanted)).all(axis=1)
    verts, faces = _drop_unreferenced(lm.mesh.vertices, lm.mesh.faces[mask])
    used = np.unique(lm.mesh.faces[mask])
    sub = TriMesh(verts, faces).with_normals()
    return LabeledMesh(sub, lm.labels[used]), used


def aneurysm_submesh(lm: LabeledMesh, ring: OstiumRing):
    """Open sac submesh (labels {1, 2}) with the ring re-indexed into it.

    Raises RingInvalid when the sac is not bounded by a single loop, which
    happens when the sac swallowed one of the branch openings."""
    sub, amap = _submesh(lm, {LABEL_ANEURYSM, LABEL_OSTIUM})
    if validate_closed(sub.mesh).boundary_loops != 1:
        raise RingInvalid("multiple", "the aneurysm submesh is not bounded "
                          "by a single loop (a branch opening lies inside "
                          "the sac)")
    inv = np.full(lm.mesh.n_vertices, -1, dtype=np.int64)
    inv[amap] = np.arange(len(amap))
    ring_in_sub = inv[ring.vertex_indices]
    if (ring_in_sub < 0).any():
        raise RingInvalid("non-cycle", "ring vertices missing from the "
                          "aneurysm submesh")
    return sub, amap, OstiumRing(ring_in_sub, ring.centroid, ring.normal)


def finalize_sample(lm: LabeledMesh, ring: OstiumRing, v: HealthyVessel,
                    sac: AneurysmMesh, meta: dict | None = None,
                    taubin_iters: int = 10) -> LabeledSample:
    """Neck smoothing, isotropic normalization, submesh extraction, and
    morphometrics."""
    from .morpho import compute_morphometrics

    adj = _adjacency_sets(lm.mesh)
    region = _k_ring(adj, ring.vertex_indices, 2)
    smoothed = smooth(lm.mesh, "taubin", taubin_iters, region=region)

    verts, center, scale = normalize_isotropic(smoothed.vertices)
    full = LabeledMesh(TriMesh(verts, smoothed.faces).with_normals(),
                       lm.labels)

    ring_pts = full.mesh.vertices[ring.vertex_indices]
    ring_c, ring_n = _plane_fit(ring_pts)
    an_pts = full.mesh.vertices[full.labels == LABEL_ANEURYSM]
    if len(an_pts) and np.dot(ring_n, an_pts.mean(axis=0) - ring_c) < 0:
        ring_n = -ring_n
    ring = OstiumRing(ring.vertex_indices, ring_c, ring_n)

    sub_vessel, vmap = _submesh(full, {LABEL_VESSEL, LABEL_OSTIUM})
    sub_aneurysm, amap, sub_ring = aneurysm_submesh(full, ring)
    morpho = compute_morphometrics(sub_aneurysm.mesh, sub_ring)

    centerlines = []
    for br in v.branches:
        centerlines.append({
            "samples": ((br.samples - center) / scale).tolist(),
            "radius": br.radius / scale,
        })

    meta = dict(meta or {})
    meta.update({"normalization": {"center": [float(x) for x in center],
                                   "scale": scale},
                 "has_bleb": sac.has_bleb,
                 "aneurysm_params": sac.realized})
    return LabeledSample(full=full, sub_vessel=sub_vessel,
                         sub_aneurysm=sub_aneurysm,
                         sub_vessel_map=vmap, sub_aneurysm_map=amap,
                         ring=ring, centerlines=centerlines,
                         morpho=morpho, meta=meta)

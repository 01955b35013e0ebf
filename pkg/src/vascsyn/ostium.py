"""Automatic ostium placement: bifurcation-based and curvature-based
strategies over the healthy vessel surface."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateNeighborhood, NoCandidate
from .mesh import TriMesh
from .vessel import HealthyVessel

SEARCH_RADIUS_FACTOR = 2.0   # x local vessel radius
END_MARGIN_FRACTION = 0.1    # centerline samples excluded at each end
END_GUARD_RADII = 2.5        # extra endpoint clearance, x branch radius
CONE_DEG = 45.0
CONE_WIDE_DEG = 60.0
OUTWARD_PROB = 0.9


@dataclass(frozen=True)
class OstiumPoint:
    vertex_index: int
    position: np.ndarray
    normal: np.ndarray
    strategy: str            # bifurcation | curvature_out | curvature_in

    def to_dict(self) -> dict:
        return {
            "vertex_index": int(self.vertex_index),
            "position": [float(x) for x in self.position],
            "normal": [float(x) for x in self.normal],
            "strategy": self.strategy,
        }


def _one_ring_mean_curvature(m: TriMesh, idx: int, adj_sets) -> float:
    """Circumscribed-circle curvature averaged over the 1-ring; positive
    where the surface bulges along the outward normal."""
    ni = m.vertex_normals[idx]
    vi = m.vertices[idx]
    total = 0.0
    nbrs = adj_sets[idx]
    if not nbrs:
        return 0.0
    for j in nbrs:
        d = vi - m.vertices[j]
        total += 2.0 * float(np.dot(ni, d)) / max(float(np.dot(d, d)), 1e-300)
    return total / len(nbrs)


def estimate_curvature(m: TriMesh, radius: float | None = None) -> np.ndarray:
    """Per-vertex signed mean curvature from a local quadric (paraboloid)
    fit in the vertex tangent frame over a Euclidean ball of `radius`.

    Falls back to a 1-ring discrete estimate where the neighborhood is
    degenerate. Positive = convex along the outward normal.
    """
    if m.vertex_normals is None:
        m = m.with_normals()
    if radius is None:
        e = m.edges_unique()
        radius = 2.5 * float(np.linalg.norm(
            m.vertices[e[:, 0]] - m.vertices[e[:, 1]], axis=1).mean())

    tree = cKDTree(m.vertices)
    neighborhoods = tree.query_ball_point(m.vertices, radius, workers=-1)

    adj_sets = None
    out = np.zeros(m.n_vertices)
    for i in range(m.n_vertices):
        nbrs = np.asarray(neighborhoods[i], dtype=np.int64)
        try:
            out[i] = _quadric_curvature(m, i, nbrs)
        except DegenerateNeighborhood:
            if adj_sets is None:
                adj_sets = [set() for _ in range(m.n_vertices)]
                for a, b in m.edges_unique():
                    adj_sets[a].add(int(b))
                    adj_sets[b].add(int(a))
            out[i] = _one_ring_mean_curvature(m, i, adj_sets)
    return out


def _quadric_curvature(m: TriMesh, i: int, nbrs: np.ndarray) -> float:
    if len(nbrs) < 6:
        raise DegenerateNeighborhood(f"{len(nbrs)} neighbors at vertex {i}")
    n = m.vertex_normals[i]
    # tangent frame
    up = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, up)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)

    local = m.vertices[nbrs] - m.vertices[i]
    u = local @ t1
    v = local @ t2
    w = local @ n
    design = np.stack([u * u, u * v, v * v, u, v], axis=1)
    try:
        coef, *_ = np.linalg.lstsq(design, w, rcond=None)
    except np.linalg.LinAlgError as exc:
        raise DegenerateNeighborhood(str(exc)) from exc
    if not np.isfinite(coef).all():
        raise DegenerateNeighborhood("non-finite quadric fit")
    # height is measured along the outward normal: convex caps curve away
    # from it, so the convex-positive curvature is -(h_uu + h_vv)
    return float(-(coef[0] + coef[2]))


def _cone_candidates(mesh: TriMesh, apex: np.ndarray, axis: np.ndarray,
                     radius: float, half_angle_deg: float) -> np.ndarray:
    rel = mesh.vertices - apex
    dist = np.linalg.norm(rel, axis=1)
    with np.errstate(invalid="ignore"):
        cosang = np.divide(rel @ axis, dist, out=np.zeros(len(rel)), where=dist > 0)
    mask = (dist > 0) & (dist <= radius) \
        & (cosang >= np.cos(np.deg2rad(half_angle_deg)))
    return np.flatnonzero(mask)


def select_ostium_bifurcation(v: HealthyVessel, rng: np.random.Generator,
                              curvature: np.ndarray | None = None) -> OstiumPoint:
    """Flattest vertex in the impingement cone at the junction.

    Flow direction = negated mean tangent of the first five parent-centerline
    samples (the parent is parametrized away from the junction)."""
    parent = v.branches[0]
    flow = -parent.tangents()[:5].mean(axis=0)
    flow /= np.linalg.norm(flow)
    junction = v.junction
    radius = SEARCH_RADIUS_FACTOR * parent.radius

    if curvature is None:
        curvature = estimate_curvature(v.mesh)

    cand = _cone_candidates(v.mesh, junction, flow, radius, CONE_DEG)
    if len(cand) == 0:
        cand = _cone_candidates(v.mesh, junction, flow, radius, CONE_WIDE_DEG)
    if len(cand) == 0:
        raise NoCandidate("no surface vertex in the bifurcation cone")

    best = cand[np.argmin(curvature[cand])]
    normal = v.mesh.vertices[best] - junction
    normal /= np.linalg.norm(normal)
    return OstiumPoint(int(best), v.mesh.vertices[best].copy(), normal, "bifurcation")


def _centerline_score_argmax(v: HealthyVessel) -> tuple[int, int]:
    """(branch_index, sample_index) maximizing |curvature| * radius outside
    the end safety margins. Ties resolve to the lowest indices.

    Samples close to a terminal endpoint (within END_GUARD_RADII vessel
    radii) are additionally excluded: an aneurysm seeded there tends to
    swallow the branch opening. When that empties a branch the plain
    margin applies."""
    best = (-1.0, 0, 0)
    for bi, br in enumerate(v.branches):
        score = br.curvature() * br.radius
        n = len(score)
        margin = max(int(round(END_MARGIN_FRACTION * n)), 1)
        allowed = np.zeros(n, dtype=bool)
        allowed[margin:n - margin] = True
        dist_end = np.linalg.norm(br.samples - br.samples[-1], axis=1)
        guarded = allowed & (dist_end > END_GUARD_RADII * br.radius)
        if guarded.any():
            allowed = guarded
        for si in np.flatnonzero(allowed):
            if score[si] > best[0] + 1e-15:
                best = (float(score[si]), bi, int(si))
    return best[1], best[2]


def select_ostium_curvature(v: HealthyVessel, rng: np.random.Generator,
                            curvature: np.ndarray | None = None) -> OstiumPoint:
    """Surface vertex near the highest-scoring centerline point; outward
    (max curvature) with probability 0.9, inward (min) otherwise."""
    bi, si = _centerline_score_argmax(v)
    br = v.branches[bi]
    center = br.samples[si]
    radius = SEARCH_RADIUS_FACTOR * br.radius

    if curvature is None:
        curvature = estimate_curvature(v.mesh)

    dist = np.linalg.norm(v.mesh.vertices - center, axis=1)
    cand = np.flatnonzero(dist <= radius)
    if len(cand) == 0:
        cand = np.flatnonzero(dist <= 1.5 * radius)
    if len(cand) == 0:
        raise NoCandidate("no surface vertex near the centerline score peak")

    outward = rng.random() < OUTWARD_PROB
    if outward:
        best = cand[np.argmax(curvature[cand])]
        strategy = "curvature_out"
    else:
        best = cand[np.argmin(curvature[cand])]
        strategy = "curvature_in"
    normal = v.mesh.vertices[best] - center
    normal /= np.linalg.norm(normal)
    return OstiumPoint(int(best), v.mesh.vertices[best].copy(), normal, strategy)


def select_ostium(v: HealthyVessel, rng: np.random.Generator,
                  strategy: str | None = None,
                  curvature: np.ndarray | None = None) -> OstiumPoint:
    """Dispatch: bifurcation placement with probability 0.5, curvature
    placement otherwise. `strategy` forces one of
    {bifurcation, curvature, curvature_out, curvature_in}."""
    if strategy is None:
        strategy = "bifurcation" if rng.random() < 0.5 else "curvature"
    if strategy == "bifurcation":
        return select_ostium_bifurcation(v, rng, curvature)
    if strategy in ("curvature", "curvature_out", "curvature_in"):
        if strategy == "curvature_out":
            rng = _forced_rng(rng, outward=True)
        elif strategy == "curvature_in":
            rng = _forced_rng(rng, outward=False)
        return select_ostium_curvature(v, rng, curvature)
    raise ValueError(f"unknown ostium strategy {strategy!r}")


class _forced_rng:
    """Wrapper forcing the outward/inward draw while passing everything
    else through."""

    def __init__(self, rng: np.random.Generator, outward: bool):
        self._rng = rng
        self._outward = outward
        self._first = True

    def random(self, *a, **kw):
        if self._first:
            self._first = False
            return 0.0 if self._outward else 1.0 - 1e-12
        return self._rng.random(*a, **kw)

    def __getattr__(self, name):
        return getattr(self._rng, name)

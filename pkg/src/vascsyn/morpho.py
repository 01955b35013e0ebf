"""Morphometric descriptors of an aneurysm sac with an open ostium.

All quantities are computed from the open sac surface and the ordered
ostium ring: areas, volumes (with a centroid-fan hole closing and a
convex-hull fallback), extents by ray casting, neck sizes, and the
dimensionless shape indices derived from them.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DivZero, HullDegenerate
from .mesh import TriMesh, closest_point_on_triangles, ray_cast_batch, \
    validate_closed

FIELD_NAMES = ("A_A", "V_A", "A_O1", "A_O2", "D_max", "H_max", "W_max",
               "H_ortho", "W_ortho", "N_max", "N_avg", "AR1", "AR2",
               "A_CH", "V_CH", "EI", "NSI", "UI")

_SPHERE_CONST = (18.0 * np.pi) ** (1.0 / 3.0)
_RAY_REACH_FACTOR = 4.0      # x D_max; longer hits are treated as misses


def _fan_cap(sac: TriMesh, ring) -> tuple[np.ndarray, np.ndarray]:
    """(vertices, faces) of the centroid fan over the ordered ring."""
    idx = np.asarray(ring.vertex_indices, dtype=np.int64)
    c = sac.vertices[idx].mean(axis=0)
    verts = np.vstack([sac.vertices, c[None, :]])
    ci = len(sac.vertices)
    nxt = np.roll(idx, -1)
    faces = np.stack([np.full(len(idx), ci), idx, nxt], axis=1)
    return verts, faces


def _boundary_loop(sac: TriMesh) -> np.ndarray | None:
    """Ordered vertex cycle of the sac's single boundary loop, or None when
    the boundary is absent, split, or non-simple."""
    be = sac.boundary_edges()
    if len(be) == 0:
        return None
    nbr: dict[int, list[int]] = {}
    for a, b in be:
        nbr.setdefault(int(a), []).append(int(b))
        nbr.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in nbr.values()):
        return None
    start = int(be[0, 0])
    loop = [start]
    prev, cur = None, start
    while True:
        a, b = nbr[cur]
        nxt = b if a == prev else a
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
        if len(loop) > len(nbr):
            return None
    if len(loop) != len(nbr):
        return None
    loop = np.asarray(loop, dtype=np.int64)
    # orient the loop opposite to the faces' directed boundary edges, so a
    # fan cap built along the loop restores orientation balance
    directed = {(int(a), int(b)) for a, b in
                np.concatenate([sac.faces[:, [0, 1]], sac.faces[:, [1, 2]],
                                sac.faces[:, [2, 0]]])}
    if (int(loop[0]), int(loop[1])) in directed:
        loop = loop[::-1].copy()
    return loop


def compute_areas_volumes(sac: TriMesh, ring) -> dict:
    """A_A, V_A, A_O1, A_O2, A_CH, V_CH and the volume-fallback flag.

    V_A closes the ostium with a centroid fan; when the capped surface is
    not watertight the convex-hull volume stands in (flagged)."""
    idx = np.asarray(ring.vertex_indices, dtype=np.int64)
    pts = sac.vertices[idx]
    c = pts.mean(axis=0)

    a_a = float(sac.area())

    # fan over the ring, counted directly (A_O1)
    nxt = np.roll(np.arange(len(idx)), -1)
    cross = np.cross(pts - c, pts[nxt] - c)
    a_o1 = 0.5 * float(np.linalg.norm(cross, axis=1).sum())

    # projection onto the ring plane (A_O2)
    n = np.asarray(ring.normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    proj = pts - np.outer((pts - c) @ n, n)
    a_o2 = 0.5 * abs(float((np.cross(proj - c, proj[nxt] - c) @ n).sum()))

    try:
        hull = ConvexHull(sac.vertices)
    except QhullError as exc:
        raise HullDegenerate(str(exc)) from exc
    a_ch = float(hull.area)
    v_ch = float(hull.volume)

    # hole closing over the mesh's own boundary cycle (the labeled ring can
    # be a band wider than the actual opening)
    v_a = v_ch
    fallback = True
    loop = _boundary_loop(sac)
    if loop is not None:
        lc = sac.vertices[loop].mean(axis=0)
        verts = np.vstack([sac.vertices, lc[None, :]])
        ci = sac.n_vertices
        cap_faces = np.stack([np.full(len(loop), ci), loop,
                              np.roll(loop, -1)], axis=1)
        capped = TriMesh(verts, np.vstack([sac.faces, cap_faces]))
        rep = validate_closed(capped)
        if rep.watertight and rep.components == 1:
            v_a = abs(float(capped.oriented_outward().signed_volume()))
            fallback = False

    return {"A_A": a_a, "V_A": v_a, "A_O1": a_o1, "A_O2": a_o2,
            "A_CH": a_ch, "V_CH": v_ch, "v_a_is_fallback": fallback}


def max_pairwise_distance(points: np.ndarray) -> float:
    """Exact diameter, pruned to the convex hull when possible."""
    cand = points
    if len(points) > 16:
        try:
            cand = points[ConvexHull(points).vertices]
        except QhullError:
            pass
    d2 = ((cand[:, None, :] - cand[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def _axis_widths(sac: TriMesh, axis_origin: np.ndarray,
                 axis_dir: np.ndarray, reach: float) -> float:
    """Max chord length from each vertex through its foot point on the
    axis to the opposite side of the surface."""
    d = axis_dir / np.linalg.norm(axis_dir)
    rel = sac.vertices - axis_origin
    feet = axis_origin + np.outer(rel @ d, d)
    to_axis = feet - sac.vertices
    dist = np.linalg.norm(to_axis, axis=1)
    ok = dist > 1e-9 * reach
    if not ok.any():
        return 0.0
    dirs = to_axis[ok] / dist[ok][:, None]
    t, _ = ray_cast_batch(sac, sac.vertices[ok] + 1e-6 * reach * dirs, dirs)
    t = t + 1e-6 * reach
    hit = np.isfinite(t) & (t <= _RAY_REACH_FACTOR * reach)
    if not hit.any():
        return 0.0
    return float(t[hit].max())


def compute_extents(sac: TriMesh, ring) -> dict:
    """D_max, H_max, W_max, H_ortho, W_ortho."""
    idx = np.asarray(ring.vertex_indices, dtype=np.int64)
    c = sac.vertices[idx].mean(axis=0)

    d_max = max_pairwise_distance(sac.vertices)

    h_vec = sac.vertices - c
    h_dist = np.linalg.norm(h_vec, axis=1)
    tip = int(np.argmax(h_dist))
    h_max = float(h_dist[tip])

    w_max = _axis_widths(sac, c, sac.vertices[tip] - c, d_max)

    verts, cap_faces = _fan_cap(sac, ring)
    tris = verts[cap_faces]
    h_ortho = 0.0
    for s in range(0, sac.n_vertices, 4096):
        chunk = sac.vertices[s:s + 4096]
        cp, _ = closest_point_on_triangles(
            np.repeat(chunk, len(tris), axis=0),
            np.tile(tris, (len(chunk), 1, 1)))
        d = np.linalg.norm(np.repeat(chunk, len(tris), axis=0) - cp, axis=1)
        d = d.reshape(len(chunk), len(tris)).min(axis=1)
        h_ortho = max(h_ortho, float(d.max()))

    n = np.asarray(ring.normal, dtype=np.float64)
    w_ortho = _axis_widths(sac, c, n, d_max)

    return {"D_max": d_max, "H_max": h_max, "W_max": w_max,
            "H_ortho": h_ortho, "W_ortho": w_ortho}


def compute_neck(sac: TriMesh, ring) -> dict:
    """N_max (ring diameter) and N_avg (twice the mean ring radius)."""
    pts = sac.vertices[np.asarray(ring.vertex_indices, dtype=np.int64)]
    c = pts.mean(axis=0)
    n_max = max_pairwise_distance(pts)
    n_avg = 2.0 * float(np.linalg.norm(pts - c, axis=1).mean())
    return {"N_max": n_max, "N_avg": n_avg}


def compute_indices(p: dict) -> dict:
    """AR1, AR2, EI, NSI, UI from the base measurements."""
    for key in ("N_max", "N_avg", "A_CH", "A_A", "V_CH"):
        if p[key] == 0:
            raise DivZero(f"{key} is zero")
    ar1 = p["H_ortho"] / p["N_max"]
    ar2 = p["H_ortho"] / p["N_avg"]
    ei = 1.0 - _SPHERE_CONST * p["V_CH"] ** (2.0 / 3.0) / p["A_CH"]
    nsi = 1.0 - _SPHERE_CONST * p["V_A"] ** (2.0 / 3.0) / p["A_A"]
    ui = 0.0 if p["v_a_is_fallback"] else 1.0 - p["V_A"] / p["V_CH"]
    return {"AR1": ar1, "AR2": ar2, "EI": ei, "NSI": nsi, "UI": ui}


def compute_morphometrics(sac: TriMesh, ring) -> dict:
    """All descriptors as a flat dict keyed by FIELD_NAMES plus
    v_a_is_fallback."""
    out = compute_areas_volumes(sac, ring)
    out.update(compute_extents(sac, ring))
    out.update(compute_neck(sac, ring))
    out.update(compute_indices(out))
    return {k: out[k] for k in FIELD_NAMES} | {
        "v_a_is_fallback": out["v_a_is_fallback"]}

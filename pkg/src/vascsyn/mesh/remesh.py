"""Incremental isotropic remeshing (split / collapse / flip / relax),
after Botsch & Kobbelt's standard scheme."""
from __future__ import annotations

import numpy as np

from ..errors import RemeshFailed
from .core import TriMesh, clean_mesh, validate_closed
from .spatial import MeshQuery


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


def _split_long_edges(v: np.ndarray, f: np.ndarray, max_len: float,
                      boundary: set) -> tuple[np.ndarray, np.ndarray]:
    """Split every non-boundary edge longer than max_len at its midpoint."""
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    lengths = np.linalg.norm(v[uniq[:, 0]] - v[uniq[:, 1]], axis=1)
    is_bnd = np.array([(int(a), int(b)) in boundary for a, b in uniq]) \
        if boundary else np.zeros(len(uniq), dtype=bool)
    flag = (lengths > max_len) & ~is_bnd
    if not flag.any():
        return v, f

    mid_of = -np.ones(len(uniq), dtype=np.int64)
    mids = 0.5 * (v[uniq[flag, 0]] + v[uniq[flag, 1]])
    mid_of[flag] = len(v) + np.arange(len(mids))
    v = np.concatenate([v, mids])

    fm = mid_of[inv.reshape(3, -1)].T  # (m, 3): midpoint of edges 01, 12, 20
    new_faces = []
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    m01, m12, m20 = fm[:, 0], fm[:, 1], fm[:, 2]
    nsplit = (fm >= 0).sum(axis=1)

    keep = nsplit == 0
    new_faces.append(f[keep])

    # one split edge: 1 -> 2 triangles; rotate so split edge is (a, b)
    one = np.flatnonzero(nsplit == 1)
    if len(one):
        which = fm[one].argmax(axis=1)
        for w, (i0, i1, i2) in [(0, (0, 1, 2)), (1, (1, 2, 0)), (2, (2, 0, 1))]:
            sel = one[which == w]
            if not len(sel):
                continue
            aa, bb, cc = f[sel, i0], f[sel, i1], f[sel, i2]
            mm = fm[sel, w]
            new_faces.append(np.stack([aa, mm, cc], axis=1))
            new_faces.append(np.stack([mm, bb, cc], axis=1))

    # two split edges: 1 -> 3 triangles; rotate so unsplit edge is (a, b)
    two = np.flatnonzero(nsplit == 2)
    if len(two):
        which = fm[two].argmin(axis=1)  # index of the unsplit edge
        for w, (i0, i1, i2) in [(0, (0, 1, 2)), (1, (1, 2, 0)), (2, (2, 0, 1))]:
            sel = two[which == w]
            if not len(sel):
                continue
            aa, bb, cc = f[sel, i0], f[sel, i1], f[sel, i2]
            mb = fm[sel, (w + 1) % 3]  # midpoint of (b, c)
            mc = fm[sel, (w + 2) % 3]  # midpoint of (c, a)
            new_faces.append(np.stack([aa, bb, mb], axis=1))
            new_faces.append(np.stack([aa, mb, mc], axis=1))
            new_faces.append(np.stack([mc, mb, cc], axis=1))

    # three split edges: 1 -> 4 triangles
    three = np.flatnonzero(nsplit == 3)
    if len(three):
        aa, bb, cc = a[three], b[three], c[three]
        ab, bc, ca = m01[three], m12[three], m20[three]
        new_faces.append(np.stack([aa, ab, ca], axis=1))
        new_faces.append(np.stack([bb, bc, ab], axis=1))
        new_faces.append(np.stack([cc, ca, bc], axis=1))
        new_faces.append(np.stack([ab, bc, ca], axis=1))

    return v, np.concatenate([x for x in new_faces if len(x)])


def _neighbor_sets(f: np.ndarray, n: int) -> list:
    nbr = [set() for _ in range(n)]
    for tri in f:
        a, b, c = int(tri[0]), int(tri[1]), int(tri[2])
        nbr[a].update((b, c))
        nbr[b].update((a, c))
        nbr[c].update((a, b))
    return nbr


def _collapse_short_edges(v: np.ndarray, f: np.ndarray, min_len: float,
                          max_len: float, bnd_verts: set) -> tuple[np.ndarray, np.ndarray]:
    """Greedily collapse non-boundary edges shorter than min_len into their
    midpoints, skipping collapses that would create overlong edges or break
    the link condition."""
    e = np.unique(np.sort(np.concatenate(
        [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1), axis=0)
    lengths = np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1)
    order = np.argsort(lengths)
    nbr = _neighbor_sets(f, len(v))

    parent = np.arange(len(v))
    pos = v.copy()
    touched = np.zeros(len(v), dtype=bool)

    for i in order:
        if lengths[i] >= min_len:
            break
        a, b = int(e[i, 0]), int(e[i, 1])
        if touched[a] or touched[b]:
            continue
        if a in bnd_verts or b in bnd_verts:
            continue
        shared = nbr[a] & nbr[b]
        if len(shared) != 2:  # link condition for manifold collapse
            continue
        mid = 0.5 * (pos[a] + pos[b])
        ring = (nbr[a] | nbr[b]) - {a, b}
        if len(ring) and np.linalg.norm(pos[list(ring)] - mid, axis=1).max() > max_len:
            continue
        parent[b] = a
        pos[a] = mid
        touched[a] = touched[b] = True
        for x in ring:
            touched[x] = True

    f2 = parent[f]
    ok = (f2[:, 0] != f2[:, 1]) & (f2[:, 1] != f2[:, 2]) & (f2[:, 2] != f2[:, 0])
    return pos, f2[ok]


def _flip_edges(v: np.ndarray, f: np.ndarray, bnd_verts: set) -> np.ndarray:
    """Flip interior edges when it reduces total valence deviation from 6
    (4 on the boundary)."""
    n = len(v)
    valence = np.zeros(n, dtype=np.int64)
    edge_faces: dict = {}
    for fi, tri in enumerate(f):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            edge_faces.setdefault(_edge_key(a, b), []).append(fi)
    for (a, b) in edge_faces:
        valence[a] += 1
        valence[b] += 1

    target = np.full(n, 6)
    for x in bnd_verts:
        target[x] = 4

    existing = set(edge_faces.keys())
    f = f.copy()
    dirty = np.zeros(len(f), dtype=bool)

    for (a, b), fl in edge_faces.items():
        if len(fl) != 2:
            continue
        f0, f1 = fl
        if dirty[f0] or dirty[f1]:
            continue
        t0, t1 = f[f0], f[f1]
        c = int([x for x in t0 if x != a and x != b][0])
        d = int([x for x in t1 if x != a and x != b][0])
        if c == d or _edge_key(c, d) in existing:
            continue
        dev_before = (abs(valence[a] - target[a]) + abs(valence[b] - target[b])
                      + abs(valence[c] - target[c]) + abs(valence[d] - target[d]))
        dev_after = (abs(valence[a] - 1 - target[a]) + abs(valence[b] - 1 - target[b])
                     + abs(valence[c] + 1 - target[c]) + abs(valence[d] + 1 - target[d]))
        if dev_after >= dev_before:
            continue
        # geometric guard: skip flips across sharp creases
        n0 = np.cross(v[t0[1]] - v[t0[0]], v[t0[2]] - v[t0[0]])
        n1 = np.cross(v[t1[1]] - v[t1[0]], v[t1[2]] - v[t1[0]])
        nn = np.linalg.norm(n0) * np.linalg.norm(n1)
        if nn <= 0 or np.dot(n0, n1) / nn < 0.2:
            continue
        # orient the two new triangles consistently with t0's winding
        i = list(t0).index(a)
        if int(t0[(i + 1) % 3]) == b:
            f[f0] = (a, d, c)
            f[f1] = (b, c, d)
        else:
            f[f0] = (a, c, d)
            f[f1] = (b, d, c)
        existing.discard(_edge_key(a, b))
        existing.add(_edge_key(c, d))
        valence[a] -= 1
        valence[b] -= 1
        valence[c] += 1
        valence[d] += 1
        dirty[f0] = dirty[f1] = True
    return f


def _tangential_relax(v: np.ndarray, f: np.ndarray, bnd_verts: set,
                      query: MeshQuery, step: float = 0.7) -> np.ndarray:
    """Move vertices toward their neighbor centroid within the tangent plane,
    then project back onto the reference surface."""
    n = len(v)
    acc = np.zeros_like(v)
    cnt = np.zeros(n)
    e = np.unique(np.sort(np.concatenate(
        [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1), axis=0)
    np.add.at(acc, e[:, 0], v[e[:, 1]])
    np.add.at(acc, e[:, 1], v[e[:, 0]])
    np.add.at(cnt, e[:, 0], 1)
    np.add.at(cnt, e[:, 1], 1)
    cent = np.divide(acc, cnt[:, None], out=v.copy(), where=cnt[:, None] > 0)

    normals = TriMesh(v, f).compute_vertex_normals()
    delta = cent - v
    delta -= np.einsum("ij,ij->i", delta, normals)[:, None] * normals
    out = v + step * delta
    if bnd_verts:
        idx = np.fromiter(bnd_verts, dtype=np.int64)
        out[idx] = v[idx]
    _, cp, _, _ = query.closest(out, exact=False)
    if bnd_verts:
        cp[idx] = v[idx]
    return cp


def isotropic_remesh(m: TriMesh, target_edge: float, iters: int = 3) -> TriMesh:
    """Re-triangulate toward uniform edge length `target_edge`.

    Closed inputs stay closed; boundary loops of open inputs are preserved
    (boundary edges are frozen). Raises RemeshFailed on a non-manifold result.
    """
    if target_edge <= 0:
        raise ValueError("target_edge must be > 0")
    ref = MeshQuery(m)
    bnd_edges = {(int(a), int(b)) for a, b in m.boundary_edges()}
    bnd_verts = {x for e in bnd_edges for x in e}

    v = m.vertices.copy()
    f = m.faces.copy()
    hi = 4.0 / 3.0 * target_edge
    lo = 4.0 / 5.0 * target_edge
    for _ in range(max(iters, 1)):
        v, f = _split_long_edges(v, f, hi, bnd_edges)
        v, f = _collapse_short_edges(v, f, lo, hi, bnd_verts)
        f = _flip_edges(v, f, bnd_verts)
        v = _tangential_relax(v, f, bnd_verts, ref)

    out = clean_mesh(TriMesh(v, f), merge_eps=1e-9 * m.bbox_diag())
    rep = validate_closed(out)
    if rep.nonmanifold_edges > 0:
        raise RemeshFailed(f"{rep.nonmanifold_edges} non-manifold edges after remeshing")
    if not bnd_edges and not rep.watertight:
        raise RemeshFailed("closed input became open")
    return out

"""Triangle mesh storage, validation, cleanup and smoothing.

Meshes are immutable value objects: every operation returns a new TriMesh.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..errors import AllFacesDegenerate, MeshError

_DEG_AREA_REL = 1e-12  # face area threshold, relative to bbox diag squared


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh with optional per-vertex unit normals."""

    vertices: np.ndarray           # (n, 3) float64
    faces: np.ndarray              # (m, 3) int64
    vertex_normals: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if not np.isfinite(v).all():
            raise MeshError("non-finite vertex coordinates")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if self.vertex_normals is not None:
            n = np.ascontiguousarray(np.asarray(self.vertex_normals, dtype=np.float64))
            if n.shape != v.shape:
                raise MeshError("vertex_normals shape mismatch")
            n.setflags(write=False)
            object.__setattr__(self, "vertex_normals", n)

    # -- basic quantities -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diag(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    def face_normals(self, normalized: bool = True) -> np.ndarray:
        t = self.triangles()
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        if normalized:
            ln = np.linalg.norm(n, axis=1, keepdims=True)
            n = np.divide(n, ln, out=np.zeros_like(n), where=ln > 0)
        return n

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(normalized=False), axis=1)

    def area(self) -> float:
        return float(self.face_areas().sum())

    def signed_volume(self) -> float:
        t = self.triangles()
        return float(np.einsum("ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6.0)

    def centroid(self) -> np.ndarray:
        """Area-weighted surface centroid."""
        t = self.triangles()
        w = self.face_areas()
        c = t.mean(axis=1)
        tot = w.sum()
        if tot <= 0:
            return self.vertices.mean(axis=0)
        return (c * w[:, None]).sum(axis=0) / tot

    def edges_unique(self) -> np.ndarray:
        """(e, 2) sorted unique undirected edges."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def edge_face_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the number of incident faces of each."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e = np.sort(e, axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq, counts

    def boundary_edges(self) -> np.ndarray:
        uniq, counts = self.edge_face_counts()
        return uniq[counts == 1]

    def boundary_vertices(self) -> np.ndarray:
        be = self.boundary_edges()
        return np.unique(be)

    def vertex_adjacency(self) -> csr_matrix:
        e = self.edges_unique()
        n = self.n_vertices
        data = np.ones(2 * len(e), dtype=np.float64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    def connected_components(self) -> tuple[int, np.ndarray]:
        """Face-connectivity components via shared vertices; labels per vertex."""
        n, labels = connected_components(self.vertex_adjacency(), directed=False)
        return n, labels

    def compute_vertex_normals(self) -> np.ndarray:
        """Area-weighted average of incident face normals (unnormalized face
        normals already carry the area weight)."""
        fn = self.face_normals(normalized=False)
        vn = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(vn, self.faces[:, k], fn)
        ln = np.linalg.norm(vn, axis=1, keepdims=True)
        return np.divide(vn, ln, out=np.zeros_like(vn), where=ln > 0)

    def with_normals(self) -> "TriMesh":
        return replace(self, vertex_normals=self.compute_vertex_normals())

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                       self.faces, self.vertex_normals)

    def scaled(self, s: float) -> "TriMesh":
        return TriMesh(self.vertices * float(s), self.faces, self.vertex_normals)

    def oriented_outward(self) -> "TriMesh":
        """Flip all faces if the signed volume is negative (closed meshes)."""
        if self.signed_volume() < 0:
            return TriMesh(self.vertices, self.faces[:, ::-1], self.vertex_normals)
        return self


@dataclass(frozen=True)
class ValidationReport:
    watertight: bool
    components: int
    euler: int
    boundary_loops: int
    nonmanifold_edges: int = 0


def validate_closed(m: TriMesh) -> ValidationReport:
    """Watertightness / topology report.

    watertight <=> every undirected edge is shared by exactly two faces with
    opposite orientation.
    """
    directed = np.concatenate([m.faces[:, [0, 1]], m.faces[:, [1, 2]], m.faces[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    uniq, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    # orientation balance: +1 where directed edge is ascending, -1 descending
    sign = np.where(directed[:, 0] < directed[:, 1], 1, -1)
    balance = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(balance, inv, sign)
    watertight = bool(len(uniq)) and bool((counts == 2).all() and (balance == 0).all())

    boundary = uniq[counts == 1]
    n_loops = 0
    if len(boundary):
        bverts = np.unique(boundary)
        remap = {v: i for i, v in enumerate(bverts)}
        rows = np.array([remap[v] for v in boundary[:, 0]])
        cols = np.array([remap[v] for v in boundary[:, 1]])
        adj = coo_matrix((np.ones(len(boundary)), (rows, cols)),
                         shape=(len(bverts), len(bverts)))
        n_loops, _ = connected_components(adj, directed=False)

    n_comp, _ = m.connected_components()
    euler = m.n_vertices - len(uniq) + m.n_faces
    return ValidationReport(
        watertight=watertight,
        components=int(n_comp),
        euler=int(euler),
        boundary_loops=int(n_loops),
        nonmanifold_edges=int((counts > 2).sum()),
    )


def _merge_close_vertices(vertices: np.ndarray, eps: float) -> np.ndarray:
    """Map each vertex to the lowest-index representative of its eps-cluster."""
    n = len(vertices)
    parent = np.arange(n)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    tree = cKDTree(vertices)
    for i, j in tree.query_pairs(eps):
        ri, rj = find(i), find(j)
        if ri != rj:
            # keep the smaller index as representative for determinism
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
    return np.array([find(i) for i in range(n)])


def clean_mesh(m: TriMesh, merge_eps: float | None = None) -> TriMesh:
    """Merge close vertices, drop degenerate/duplicate faces and unreferenced
    vertices, recompute normals.

    merge_eps defaults to 1e-5 x bounding-box diagonal.
    """
    if m.n_faces == 0 or m.n_vertices == 0:
        raise AllFacesDegenerate("input mesh is empty")

    v = np.asarray(m.vertices)
    f = np.asarray(m.faces)

    # drop non-finite vertices and faces touching them (TriMesh construction
    # rejects non-finite input, but raw arrays can be routed through here)
    finite = np.isfinite(v).all(axis=1)
    if not finite.all():
        keep_idx = np.flatnonzero(finite)
        remap = -np.ones(len(v), dtype=np.int64)
        remap[keep_idx] = np.arange(len(keep_idx))
        f = remap[f]
        f = f[(f >= 0).all(axis=1)]
        v = v[keep_idx]

    diag = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0))) if len(v) else 0.0
    if merge_eps is None:
        merge_eps = 1e-5 * diag
    if merge_eps > 0 and len(v) > 1:
        rep = _merge_close_vertices(v, merge_eps)
        f = rep[f]

    # faces with repeated indices
    ok = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 2] != f[:, 0])
    f = f[ok]

    # duplicate faces (same vertex triple, any orientation): keep first
    if len(f):
        key = np.sort(f, axis=1)
        _, first = np.unique(key, axis=0, return_index=True)
        f = f[np.sort(first)]

    # zero-area faces
    if len(f):
        t = v[f]
        areas = 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)
        f = f[areas > _DEG_AREA_REL * max(diag, 1.0) ** 2]

    if len(f) == 0:
        raise AllFacesDegenerate("cleanup removed every face")

    # unreferenced vertices
    used = np.unique(f)
    remap = -np.ones(len(v), dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = TriMesh(v[used], remap[f])
    return out.with_normals()


def fill_small_holes(m: TriMesh, max_loop: int = 8) -> TriMesh:
    """Close boundary loops of at most `max_loop` vertices with triangle
    fans.

    Vertex merging and degenerate-face removal can open pin-holes in an
    otherwise closed surface; this repairs them. The fan winding reverses
    the directed boundary edges, so a watertight-up-to-the-hole mesh stays
    consistently oriented. Larger holes are left untouched.
    """
    directed = np.concatenate([m.faces[:, [0, 1]], m.faces[:, [1, 2]],
                               m.faces[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    _, inv, counts = np.unique(und, axis=0, return_inverse=True,
                               return_counts=True)
    bdir = directed[counts[inv] == 1]
    if len(bdir) == 0:
        return m

    succ = {int(a): int(b) for a, b in bdir}
    if len(succ) != len(bdir):
        return m  # nonmanifold boundary; leave it to validation

    new_faces = []
    seen = set()
    for start in succ:
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = succ[start]
        while cur != start and cur in succ and cur not in seen:
            loop.append(cur)
            seen.add(cur)
            cur = succ[cur]
        if cur != start or len(loop) < 3 or len(loop) > max_loop:
            continue
        for i in range(1, len(loop) - 1):
            new_faces.append((loop[0], loop[i + 1], loop[i]))

    if not new_faces:
        return m
    faces = np.concatenate([m.faces, np.asarray(new_faces, dtype=np.int64)])
    return TriMesh(m.vertices, faces).with_normals()


def smooth(m: TriMesh, mode: str = "taubin", iters: int = 10,
           region: np.ndarray | None = None,
           lam: float = 0.5, mu: float = -0.53) -> TriMesh:
    """Laplacian or Taubin smoothing with uniform weights.

    Only vertices in `region` move (all vertices when region is None);
    connectivity is unchanged.
    """
    if iters < 0:
        raise ValueError("iters must be >= 0")
    if mode not in ("laplacian", "taubin"):
        raise ValueError(f"unknown smoothing mode {mode!r}")
    if iters == 0 or m.n_faces == 0:
        return m

    adj = m.vertex_adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv_deg = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)

    mask = None
    if region is not None:
        mask = np.zeros(m.n_vertices, dtype=bool)
        mask[np.asarray(region, dtype=np.int64)] = True

    v = m.vertices.copy()

    def step(factor: float):
        nonlocal v
        delta = adj.dot(v) * inv_deg[:, None] - v
        if mask is None:
            v = v + factor * delta
        else:
            v[mask] += factor * delta[mask]

    for _ in range(iters):
        step(lam)
        if mode == "taubin":
            step(mu)

    return TriMesh(v, m.faces).with_normals()


# -- icosphere ------------------------------------------------------------

_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=np.float64)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def icosphere(subdiv: int = 0, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron with all vertices at `radius` from the origin.

    V = 10 * 4**subdiv + 2, F = 20 * 4**subdiv.
    """
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")
    if radius <= 0:
        raise ValueError("radius must be > 0")
    v = _ICO_VERTS / np.linalg.norm(_ICO_VERTS[0])
    f = _ICO_FACES
    for _ in range(subdiv):
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e_sorted = np.sort(e, axis=1)
        uniq, inv = np.unique(e_sorted, axis=0, return_inverse=True)
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        mid_idx = len(v) + inv.reshape(3, -1)  # rows: edge 01, 12, 20 per face
        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        ab, bc, ca = mid_idx[0], mid_idx[1], mid_idx[2]
        f = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
        v = np.concatenate([v, mid])
    return TriMesh(v * radius, f).with_normals()

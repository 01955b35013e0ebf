"""Boolean union by signed-field resampling.

The union surface is re-extracted from a voxel sampling of
min(sdf_a, sdf_b) and isotropically remeshed, which is robust against the
self-intersections that noise displacement can create in either input.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from skimage.measure import marching_cubes

from ..errors import EmptySurface, OpenInput
from .core import TriMesh, clean_mesh, fill_small_holes
from .remesh import isotropic_remesh
from .spatial import MeshQuery

MAX_GRID_POINTS = 4_000_000


def extract_level_set(values: np.ndarray, origin: np.ndarray, spacing: float) -> TriMesh:
    """Zero level set of a scalar lattice as an outward-oriented TriMesh.

    `values` is negative inside.
    """
    if values.min() >= 0 or values.max() <= 0:
        raise EmptySurface("no sign change in the sampled field")
    verts, faces, _, _ = marching_cubes(values, level=0.0,
                                        spacing=(spacing, spacing, spacing))
    return TriMesh(verts + np.asarray(origin), faces.astype(np.int64)).oriented_outward()


def approx_signed_grid(mesh: TriMesh, points: np.ndarray,
                       query: MeshQuery | None = None,
                       band: float | None = None) -> np.ndarray:
    """Signed distance samples: exact (pseudonormal) inside a narrow band
    around the surface, centroid-distance approximation elsewhere.

    The approximation keeps the correct sign away from the surface, which is
    all marching cubes needs outside the band.
    """
    query = query or MeshQuery(mesh)
    tree = cKDTree(query.centroids)
    d_approx, ci = tree.query(points, workers=-1)
    fn = mesh.face_normals()
    sign = np.sign(np.einsum("ij,ij->i", points - query.centroids[ci], fn[ci]))
    sign[sign == 0] = 1.0
    approx = sign * d_approx

    if band is None:
        band = 4.0 * query.max_radius
    near = np.flatnonzero(d_approx < band + query.max_radius)
    out = approx
    if len(near):
        out = approx.copy()
        # chunked to bound the memory of the batched triangle tests
        for s in range(0, len(near), 100_000):
            sel = near[s:s + 100_000]
            out[sel] = query.signed_distance(points[sel], exact=False)
    return out


def banded_signed_grid(mesh: TriMesh, query: MeshQuery, axes: list,
                       voxel: float, band: float,
                       coarse_step: int = 4) -> np.ndarray:
    """Signed distance lattice: a coarse centroid-distance approximation is
    interpolated to the full lattice, then replaced by exact (pseudonormal)
    values inside a band around the surface.

    Far from the surface only the sign matters, and the interpolation error
    is bounded by the coarse spacing, so the band threshold absorbs it.
    """
    from scipy.ndimage import map_coordinates

    shape = tuple(len(ax) for ax in axes)
    coarse_axes = []
    for ax in axes:
        nc = (len(ax) - 1) // coarse_step + 2
        coarse_axes.append(ax[0] + voxel * coarse_step * np.arange(nc))
    cg = np.meshgrid(*coarse_axes, indexing="ij")
    cpts = np.stack([g.ravel() for g in cg], axis=1)

    tree = cKDTree(query.centroids)
    d, ci = tree.query(cpts, workers=-1)
    fn = mesh.face_normals()
    sign = np.sign(np.einsum("ij,ij->i", cpts - query.centroids[ci], fn[ci]))
    sign[sign == 0] = 1.0
    coarse = (sign * d).reshape([len(ax) for ax in coarse_axes])

    fi = np.meshgrid(*[np.arange(n) / coarse_step for n in shape], indexing="ij")
    phi = map_coordinates(coarse, np.stack([f.ravel() for f in fi]),
                          order=1).reshape(shape)

    slop = query.max_radius + 1.5 * coarse_step * voxel
    near = np.flatnonzero(np.abs(phi.ravel()) < band + slop)
    if len(near):
        fg = np.meshgrid(*axes, indexing="ij")
        flat = [g.ravel() for g in fg]
        out = phi.ravel()
        for s in range(0, len(near), 100_000):
            sel = near[s:s + 100_000]
            pts = np.stack([f[sel] for f in flat], axis=1)
            out[sel] = query.signed_distance(pts, exact=False)
        phi = out.reshape(shape)
    return phi


def mean_edge_length(mesh: TriMesh) -> float:
    e = mesh.edges_unique()
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]],
                                axis=1).mean())


def _drop_tiny_shells(m: TriMesh, rel_area: float = 0.01) -> TriMesh:
    """Remove connected components whose area is below `rel_area` of the
    largest one; these are sampling artifacts of the approximate field,
    not genuine geometry."""
    n, labels = m.connected_components()
    if n <= 1:
        return m
    fa = m.face_areas()
    flab = labels[m.faces[:, 0]]
    areas = np.zeros(n)
    np.add.at(areas, flab, fa)
    keep = areas >= rel_area * areas.max()
    if keep.all():
        return m
    fmask = keep[flab]
    faces = m.faces[fmask]
    used = np.unique(faces)
    remap = np.full(m.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(m.vertices[used], remap[faces])


def boolean_union(a: TriMesh, b: TriMesh, voxel: float | None = None,
                  remesh: bool = True) -> TriMesh:
    """Watertight union of two closed meshes (winding/inside semantics:
    a point is inside the union iff it is inside a or inside b)."""
    for name, m in (("a", a), ("b", b)):
        if len(m.boundary_edges()):
            raise OpenInput(f"operand {name} has boundary edges")

    edge_a, edge_b = mean_edge_length(a), mean_edge_length(b)
    smaller_edge = edge_a if a.area() <= b.area() else edge_b
    if voxel is None:
        voxel = smaller_edge / 2.0

    lo = np.minimum(a.bbox()[0], b.bbox()[0]) - 3 * voxel
    hi = np.maximum(a.bbox()[1], b.bbox()[1]) + 3 * voxel
    # cap the lattice so a small-featured operand inside a large bbox cannot
    # blow up memory; coarsen the voxel instead
    extent = hi - lo
    n_est = np.prod(extent / voxel)
    if n_est > MAX_GRID_POINTS:
        voxel *= float((n_est / MAX_GRID_POINTS) ** (1.0 / 3.0))
        lo = np.minimum(a.bbox()[0], b.bbox()[0]) - 3 * voxel
        hi = np.maximum(a.bbox()[1], b.bbox()[1]) + 3 * voxel
    shape = np.maximum(np.ceil((hi - lo) / voxel).astype(int) + 1, 2)

    axes = [lo[k] + voxel * np.arange(shape[k]) for k in range(3)]

    qa, qb = MeshQuery(a), MeshQuery(b)
    band = 3.0 * voxel
    phi = np.minimum(banded_signed_grid(a, qa, axes, voxel, band),
                     banded_signed_grid(b, qb, axes, voxel, band))
    # the lattice margin keeps real geometry off the walls, so any negative
    # wall value is an approximation artifact that would cut the surface open
    for axis in range(3):
        for side in (0, -1):
            sl = [slice(None)] * 3
            sl[axis] = side
            phi[tuple(sl)] = np.maximum(phi[tuple(sl)], voxel)
    surf = extract_level_set(phi, lo, voxel)
    surf = clean_mesh(surf)
    # vertex merging during cleanup can collapse a sliver into a pin-hole
    surf = fill_small_holes(surf)
    surf = _drop_tiny_shells(surf)
    if remesh:
        target = (edge_a + edge_b) / 2.0
        surf = isotropic_remesh(surf, target_edge=target, iters=3)
    return surf.oriented_outward().with_normals()

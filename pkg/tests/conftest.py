"""Shared fixtures: synthetic vessels, analytic fixtures, and one full
reduced-resolution pipeline sample reused across test modules."""
from __future__ import annotations

import numpy as np
import pytest

from vascsyn.assembly import _cut_one_end, _drop_unreferenced
from vascsyn.mesh import TriMesh, icosphere
from vascsyn.pipeline import PipelineConfig, generate_sample
from vascsyn.rng import sample_seed
from vascsyn.vessel import (CenterlineSpline, HealthyVessel, VesselConfig,
                            extract_vessel_mesh)

# Reduced lattice resolution so shared fixtures build in seconds; the
# geometry pipeline is resolution-independent in everything the tests
# assert (topology, labels, determinism, index invariances).
FAST_GRID_RES = 100


def straight_centerline(direction, length, radius, n=60,
                        origin=(0.0, 0.0, 0.0)) -> CenterlineSpline:
    """Noise-free straight branch usable anywhere a spline branch is."""
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    t = np.linspace(0.0, length, n)
    samples = np.asarray(origin) + t[:, None] * direction
    ctrl = samples[:: max(n // 5, 1)]
    return CenterlineSpline(ctrl, 3, samples, radius)


def synthetic_vessel(radius=1.0, length=8.0, grid_res=FAST_GRID_RES,
                     domain=12.0) -> HealthyVessel:
    """Analytic Y-vessel: straight parent down -z, two straight children."""
    cfg = VesselConfig(grid_res=grid_res, sdf_domain=(-domain, domain))
    s3 = np.sqrt(3.0) / 2.0
    branches = (
        straight_centerline((0, 0, -1), length, radius),
        straight_centerline((s3, 0, 0.5), length / 2, radius * 0.8),
        straight_centerline((-s3, 0, 0.5), length / 2, radius * 0.8),
    )
    mesh = extract_vessel_mesh(branches, cfg).with_normals()
    return HealthyVessel(mesh=mesh, branches=branches,
                         meta={"d0": 2 * radius, "synthetic": True})


def straight_tube_vessel(radius=1.0, length=10.0, grid_res=FAST_GRID_RES,
                         domain=8.0) -> HealthyVessel:
    """Single straight capsule along z, for analytic intersection tests."""
    cfg = VesselConfig(grid_res=grid_res, sdf_domain=(-domain, domain))
    br = straight_centerline((0, 0, 1), length, radius,
                             origin=(0, 0, -length / 2))
    mesh = extract_vessel_mesh((br,), cfg).with_normals()
    return HealthyVessel(mesh=mesh, branches=(br,),
                         meta={"d0": 2 * radius, "synthetic": True})


def clip_below_plane(m: TriMesh, origin, normal) -> TriMesh:
    """Exact planar clip (positive side of `normal` removed), applied to
    the whole mesh. Crossing triangles are split on the plane, so the new
    boundary lies exactly in the plane."""
    origin = np.asarray(origin, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    ball = 10.0 * m.bbox_diag()
    v, f = _cut_one_end(m.vertices.copy(), m.faces.copy(), origin, normal,
                        ball)
    v, f = _drop_unreferenced(v, f)
    return TriMesh(v, f).with_normals()


def unit_hemisphere(subdiv=4) -> TriMesh:
    """Open upper unit hemisphere with its boundary exactly on z = 0."""
    return clip_below_plane(icosphere(subdiv), (0.0, 0.0, 0.0),
                            (0.0, 0.0, -1.0))


class RingStub:
    """Minimal stand-in for OstiumRing in direct morphometrics calls."""

    def __init__(self, vertex_indices, centroid, normal):
        self.vertex_indices = np.asarray(vertex_indices, dtype=np.int64)
        self.centroid = np.asarray(centroid, dtype=np.float64)
        self.normal = np.asarray(normal, dtype=np.float64)


def boundary_ring(m: TriMesh, normal) -> RingStub:
    """Ring over the mesh's boundary loop, ordered by angle around
    `normal`."""
    idx = m.boundary_vertices()
    pts = m.vertices[idx]
    c = pts.mean(axis=0)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    up = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
    t1 = np.cross(n, up)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    rel = pts - c
    ang = np.arctan2(rel @ t2, rel @ t1)
    return RingStub(idx[np.argsort(ang)], c, n)


def fast_pipeline_config(**kw) -> PipelineConfig:
    kw.setdefault("vessel", VesselConfig(grid_res=FAST_GRID_RES))
    return PipelineConfig(**kw)


@pytest.fixture(scope="session")
def small_vessel():
    return synthetic_vessel()


@pytest.fixture(scope="session")
def tube_vessel():
    return straight_tube_vessel()


@pytest.fixture(scope="session")
def hemisphere():
    return unit_hemisphere()


@pytest.fixture(scope="session")
def full_sample():
    """One complete pipeline sample at reduced lattice resolution."""
    config = fast_pipeline_config()
    return generate_sample(sample_seed(123, 0), config)


SPHERE_TUBE = {"tube_radius": 1.0, "sac_radius": 0.9,
               "ostium": np.array([1.0, 0.0, 0.0]),
               "axis": np.array([1.0, 0.0, 0.0])}


def sphere_tube_curve_distance(points, tube_radius=1.0, sac_radius=0.9,
                               center_x=1.0, n=2000):
    """Distance from each point to the analytic cylinder/sphere
    intersection curve of the sphere-on-tube fixture."""
    r2 = sac_radius ** 2
    phi = np.linspace(-np.pi, np.pi, n)
    cos_min = 1.0 - r2 / (2.0 * tube_radius * center_x)
    phi = phi[np.cos(phi) >= cos_min]
    x = tube_radius * np.cos(phi)
    y = tube_radius * np.sin(phi)
    z2 = r2 - ((x - center_x) ** 2 + y ** 2)
    z = np.sqrt(np.maximum(z2, 0.0))
    curve = np.concatenate([np.stack([x, y, z], axis=1),
                            np.stack([x, y, -z], axis=1)])
    d = np.linalg.norm(points[:, None, :] - curve[None], axis=2)
    return d.min(axis=1)


@pytest.fixture(scope="session")
def labeled_sphere_tube(tube_vessel):
    """Sphere sac attached to the straight tube, assembled and labeled.

    Returns (labeled_mesh, ring, placed_sac_mesh)."""
    from vascsyn.aneurysm import AneurysmMesh
    from vascsyn.assembly import (attach_aneurysm, extract_ostium_ring,
                                  label_vertices, place_sac)
    from vascsyn.ostium import OstiumPoint

    sac = AneurysmMesh(mesh=icosphere(3, SPHERE_TUBE["sac_radius"]),
                       has_bleb=False, realized={})
    o = OstiumPoint(0, SPHERE_TUBE["ostium"], SPHERE_TUBE["axis"], "manual")
    merged = attach_aneurysm(tube_vessel, sac, o)
    lm = label_vertices(merged, place_sac(sac, o))
    ring = extract_ostium_ring(lm)
    return lm, ring, place_sac(sac, o)

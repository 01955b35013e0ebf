"""Morphometrics: analytic hemisphere oracles, invariances, and brute-force
equivalence of the diameter search."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vascsyn.errors import DivZero
from vascsyn.mesh import TriMesh
from vascsyn.morpho import (FIELD_NAMES, compute_indices,
                            compute_morphometrics, max_pairwise_distance)

from conftest import RingStub, boundary_ring, unit_hemisphere

_INDICES = ("AR1", "AR2", "EI", "NSI", "UI")


@pytest.fixture(scope="module")
def hemi_morpho(hemisphere):
    ring = boundary_ring(hemisphere, (0.0, 0.0, 1.0))
    return compute_morphometrics(hemisphere, ring)


def test_hemisphere_areas_volumes(hemi_morpho):
    m = hemi_morpho
    assert not m["v_a_is_fallback"]
    assert m["A_A"] == pytest.approx(2 * np.pi, rel=0.02)
    assert m["V_A"] == pytest.approx(2 * np.pi / 3, rel=0.02)
    assert m["A_O1"] == pytest.approx(np.pi, rel=0.02)
    assert m["A_O2"] == pytest.approx(np.pi, rel=0.02)
    # the hull closes the flat base: V_CH = V_A, A_CH = 3 pi
    assert m["V_CH"] == pytest.approx(2 * np.pi / 3, rel=0.02)
    assert m["A_CH"] == pytest.approx(3 * np.pi, rel=0.02)


def test_hemisphere_extents(hemi_morpho):
    m = hemi_morpho
    assert m["D_max"] == pytest.approx(2.0, rel=0.02)
    assert m["H_max"] == pytest.approx(1.0, rel=0.02)
    assert m["H_ortho"] == pytest.approx(1.0, rel=0.02)
    assert m["N_max"] == pytest.approx(2.0, rel=0.02)
    assert m["N_avg"] == pytest.approx(2.0, rel=0.02)
    # widest chord through the dome axis is the full equator diameter
    assert m["W_max"] == pytest.approx(2.0, rel=0.05)
    assert m["W_ortho"] == pytest.approx(2.0, rel=0.05)


def test_hemisphere_indices(hemi_morpho):
    m = hemi_morpho
    assert 0.48 <= m["AR1"] <= 0.52
    assert 0.48 <= m["AR2"] <= 0.52
    assert 0.31 <= m["EI"] <= 0.35
    assert -0.02 <= m["NSI"] <= 0.02
    assert abs(m["UI"]) < 0.02


def _rigid(mesh, ring, rot, t):
    v = mesh.vertices @ rot.T + t
    m2 = TriMesh(v, mesh.faces)
    r2 = RingStub(ring.vertex_indices, ring.centroid @ rot.T + t,
                  ring.normal @ rot.T)
    return m2, r2


def test_indices_rigid_invariant(hemisphere):
    ring = boundary_ring(hemisphere, (0.0, 0.0, 1.0))
    base = compute_morphometrics(hemisphere, ring)
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    m2, r2 = _rigid(hemisphere, ring, q, np.array([5.0, -2.0, 1.0]))
    moved = compute_morphometrics(m2, r2)
    for k in _INDICES:
        assert moved[k] == pytest.approx(base[k], rel=1e-6, abs=1e-9), k
    # ray-cast widths admit grazing-hit jitter slightly above 1e-6
    for k in FIELD_NAMES:
        assert moved[k] == pytest.approx(base[k], rel=1e-4, abs=1e-9), k


def test_indices_scale_invariant(hemisphere):
    ring = boundary_ring(hemisphere, (0.0, 0.0, 1.0))
    base = compute_morphometrics(hemisphere, ring)
    s = 2.37
    scaled = TriMesh(hemisphere.vertices * s, hemisphere.faces)
    r2 = RingStub(ring.vertex_indices, ring.centroid * s, ring.normal)
    m2 = compute_morphometrics(scaled, r2)
    for k in _INDICES:
        assert m2[k] == pytest.approx(base[k], rel=1e-6), k
    # dimensional quantities scale by the right powers
    assert m2["D_max"] == pytest.approx(base["D_max"] * s, rel=1e-6)
    assert m2["A_A"] == pytest.approx(base["A_A"] * s ** 2, rel=1e-6)
    assert m2["V_A"] == pytest.approx(base["V_A"] * s ** 3, rel=1e-6)


def test_stretched_ring_projection_area(hemisphere):
    # stretch x by 2: the boundary becomes an ellipse with area 2 pi
    v = hemisphere.vertices * [2.0, 1.0, 1.0]
    m = TriMesh(v, hemisphere.faces)
    ring = boundary_ring(m, (0.0, 0.0, 1.0))
    out = compute_morphometrics(m, ring)
    assert out["A_O2"] == pytest.approx(2 * np.pi, rel=0.02)
    assert out["N_max"] == pytest.approx(4.0, rel=0.02)


def _brute_diameter(points):
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=50, deadline=None)
def test_dmax_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(rng.integers(5, 400), 3)) * rng.uniform(0.1, 5)
    assert max_pairwise_distance(pts) == pytest.approx(
        _brute_diameter(pts), rel=1e-12)


def test_indices_guard_division():
    p = {"N_max": 0.0, "N_avg": 1.0, "A_CH": 1.0, "A_A": 1.0, "V_CH": 1.0,
         "H_ortho": 1.0, "V_A": 1.0, "v_a_is_fallback": False}
    with pytest.raises(DivZero):
        compute_indices(p)


def test_fallback_forces_ui_zero(hemisphere):
    # breaking the boundary into two loops forces the hull fallback
    ring = boundary_ring(hemisphere, (0.0, 0.0, 1.0))
    faces = hemisphere.faces
    # also remove an interior face to split the boundary into two loops
    interior = np.flatnonzero(
        hemisphere.vertices[faces].mean(axis=1)[:, 2] > 0.5)[0]
    broken = TriMesh(hemisphere.vertices, np.delete(faces, interior, axis=0))
    out = compute_morphometrics(broken, ring)
    assert out["v_a_is_fallback"]
    assert out["UI"] == 0.0
    assert out["V_A"] == pytest.approx(out["V_CH"])

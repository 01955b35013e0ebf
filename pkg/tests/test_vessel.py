"""Vessel generation: branching law, centerlines, distance field, and the
full randomized pipeline at reduced lattice resolution."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vascsyn.errors import DomainError
from vascsyn.mesh import validate_closed
from vascsyn.rng import STAGE_VESSEL, stage_rng
from vascsyn.vessel import (VesselConfig, bifurcation_angles,
                            branch_directions, evaluate_sdf,
                            generate_centerline, generate_healthy_vessel,
                            murray_split, noise_amplitude_divisors,
                            sample_bifurcation)

from conftest import FAST_GRID_RES, straight_centerline


@given(st.floats(2.0, 4.0), st.floats(0.01, 0.99))
@settings(max_examples=200)
def test_murray_split_conserves_cubes(d0, a):
    d1, d2 = murray_split(d0, a)
    assert d1 > 0 and d2 > 0
    assert abs(d1 ** 3 + d2 ** 3 - d0 ** 3) < 1e-9


def test_murray_symmetric_split():
    d1, d2 = murray_split(3.0, 0.5)
    assert abs(d1 - d2) < 1e-12
    # d1 = d0 / 2^(1/3), frozen from the closed form
    assert d1 == pytest.approx(2.381101577952299, abs=1e-12)
    th1, th2 = bifurcation_angles(3.0, d1, d2)
    assert abs(th1 - th2) < 1e-12
    assert th1 == pytest.approx(0.6539279425002235, abs=1e-12)


def test_bifurcation_angles_asymmetric():
    # frozen oracle values for d0 = 3, a = 0.3
    d1, d2 = murray_split(3.0, 0.3)
    assert d1 == pytest.approx(2.0082988502465087, abs=1e-12)
    assert d2 == pytest.approx(2.663712005227802, abs=1e-12)
    th1, th2 = bifurcation_angles(3.0, d1, d2)
    assert th1 == pytest.approx(0.8680257583392945, abs=1e-12)
    assert th2 == pytest.approx(0.44864847604571645, abs=1e-12)
    # the smaller branch deviates more
    assert th1 > th2


@given(st.floats(2.0, 4.0), st.floats(1e-6, 1.0 - 1e-6))
@settings(max_examples=300)
def test_bifurcation_angles_never_throw(d0, a):
    d1, d2 = murray_split(d0, a)
    th1, th2 = bifurcation_angles(d0, d1, d2)
    assert 0.0 <= th1 <= np.pi and 0.0 <= th2 <= np.pi


def test_murray_split_domain():
    with pytest.raises(DomainError):
        murray_split(-1.0, 0.5)
    for a in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(DomainError):
            murray_split(3.0, a)


def test_branch_directions_geometry():
    th1, th2 = 0.6, 0.4
    d0_dir, d1_dir, d2_dir = branch_directions(th1, th2)
    assert np.allclose(d0_dir, [0, 0, -1])
    for d in (d1_dir, d2_dir):
        assert np.linalg.norm(d) == pytest.approx(1.0)
    # children are separated from the parent axis by their branch angles
    assert np.arccos(np.dot(d1_dir, [0, 0, 1])) == pytest.approx(th1)
    assert np.arccos(np.dot(d2_dir, [0, 0, 1])) == pytest.approx(th2)
    # rotation preserves angles
    _, r1, r2 = branch_directions(th1, th2, 0.1, -0.15, 2.0)
    assert np.dot(r1, r2) == pytest.approx(np.dot(d1_dir, d2_dir))


def test_generate_centerline_deterministic():
    kw = dict(direction=(0, 0, -1), n_control=7, jitter=1.0, length=10.0,
              radius=1.5)
    a = generate_centerline(rng=np.random.default_rng(5), **kw)
    b = generate_centerline(rng=np.random.default_rng(5), **kw)
    assert np.array_equal(a.samples, b.samples)
    assert a.radius == 1.5
    assert np.allclose(a.samples[0], 0.0)
    # arc length close to the prescribed branch length
    arc = np.linalg.norm(np.diff(a.samples, axis=0), axis=1).sum()
    assert arc == pytest.approx(10.0, rel=0.2)
    # overall direction follows the prescribed one
    end = a.samples[-1] / np.linalg.norm(a.samples[-1])
    assert np.dot(end, [0, 0, -1]) > 0.8


def test_evaluate_sdf_capsule_oracle():
    br = straight_centerline((0, 0, 1), 4.0, 0.5, origin=(0, 0, -2))
    pts = np.array([
        [0.0, 0.0, 0.0],      # on the axis: -radius
        [1.5, 0.0, 0.0],      # radially outside: 1.5 - 0.5
        [0.0, 0.0, 3.0],      # beyond the end cap: 1.0 - 0.5
        [0.3, 0.0, 0.0],      # inside
    ])
    sd = evaluate_sdf(pts, (br,))
    assert sd[0] == pytest.approx(-0.5, abs=1e-9)
    assert sd[1] == pytest.approx(1.0, abs=1e-9)
    assert sd[2] == pytest.approx(0.5, abs=1e-9)
    assert sd[3] == pytest.approx(-0.2, abs=1e-9)


def test_noise_amplitude_divisors():
    assert noise_amplitude_divisors(3) == [4.0, 8.0, 16.0]
    assert noise_amplitude_divisors(0) == []


def test_vessel_config_validation():
    with pytest.raises(DomainError):
        VesselConfig(grid_res=1)
    with pytest.raises(DomainError):
        VesselConfig.from_dict({"no_such_key": 1})
    cfg = VesselConfig.from_dict(VesselConfig().to_dict())
    assert cfg == VesselConfig()


def test_sample_bifurcation_consistency():
    g = sample_bifurcation(3.0, 0.4, 0.05, -0.05, 1.0)
    assert abs(g.d1 ** 3 + g.d2 ** 3 - g.d0 ** 3) < 1e-9
    assert np.allclose(g.rotation @ g.rotation.T, np.eye(3), atol=1e-12)


def test_generate_healthy_vessel_valid_and_deterministic():
    cfg = VesselConfig(grid_res=FAST_GRID_RES)
    v1 = generate_healthy_vessel(cfg, stage_rng(42, STAGE_VESSEL))
    v2 = generate_healthy_vessel(cfg, stage_rng(42, STAGE_VESSEL))
    assert np.array_equal(v1.mesh.vertices, v2.mesh.vertices)
    assert np.array_equal(v1.mesh.faces, v2.mesh.faces)

    rep = validate_closed(v1.mesh)
    assert rep.watertight and rep.components == 1 and rep.euler == 2
    assert len(v1.branches) == 3
    meta = v1.meta
    assert 2.0 <= meta["d0"] <= 4.0
    assert 0.1 <= meta["a"] <= 0.9
    assert abs(meta["d1"] ** 3 + meta["d2"] ** 3 - meta["d0"] ** 3) < 1e-9
    # children carry half the parent length
    parent_arc = np.linalg.norm(
        np.diff(v1.branches[0].samples, axis=0), axis=1).sum()
    child_arc = np.linalg.norm(
        np.diff(v1.branches[1].samples, axis=0), axis=1).sum()
    assert child_arc == pytest.approx(parent_arc / 2.0, rel=0.3)

    v3 = generate_healthy_vessel(cfg, stage_rng(43, STAGE_VESSEL))
    assert v3.mesh.n_vertices != v1.mesh.n_vertices or \
        not np.array_equal(v3.mesh.vertices, v1.mesh.vertices)

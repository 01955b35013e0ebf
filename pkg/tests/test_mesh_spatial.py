"""Spatial queries: closest points, signed distance, ray casting."""
import numpy as np
import pytest

from vascsyn.mesh import (MeshQuery, TriMesh, closest_point_on_triangles,
                          hausdorff_sampled, icosphere, ray_cast_batch,
                          ray_first_hit, sample_surface)


def _brute_closest(p, tri, n_grid=60):
    """Dense barycentric sampling oracle for the closest point."""
    best = None
    for u in np.linspace(0, 1, n_grid):
        for v in np.linspace(0, 1 - u, max(int((1 - u) * n_grid), 1)):
            q = (1 - u - v) * tri[0] + u * tri[1] + v * tri[2]
            d = np.linalg.norm(p - q)
            if best is None or d < best[0]:
                best = (d, q)
    return best


def test_closest_point_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(30):
        tri = rng.normal(size=(3, 3))
        p = rng.normal(size=3) * 2
        cp, bary = closest_point_on_triangles(p[None], tri[None])
        d_oracle, _ = _brute_closest(p, tri)
        d = np.linalg.norm(p - cp[0])
        assert d <= d_oracle + 1e-3
        # barycentric reconstruction matches the returned point
        rec = bary[0] @ tri
        assert np.allclose(rec, cp[0], atol=1e-9)
        assert bary[0].sum() == pytest.approx(1.0)
        assert (bary[0] >= -1e-12).all()


def test_signed_distance_sphere():
    r = 1.0
    m = icosphere(4, r)
    q = MeshQuery(m)
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(300, 3))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    radii = rng.uniform(0.3, 1.8, 300)
    pts = pts * radii[:, None]
    sd = q.signed_distance(pts)
    # inscribed-facet error of a subdiv-4 icosphere is about 2e-3
    assert np.abs(sd - (radii - r)).max() < 5e-3
    assert (np.sign(sd[np.abs(radii - r) > 0.05])
            == np.sign(radii[np.abs(radii - r) > 0.05] - r)).all()


def test_unsigned_distance_positive():
    m = icosphere(3)
    q = MeshQuery(m)
    d = q.distance(np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]))
    assert d[0] == pytest.approx(1.0, abs=5e-3)
    assert d[1] == pytest.approx(1.0, abs=5e-3)


def test_ray_cast_sphere():
    m = icosphere(4)
    rng = np.random.default_rng(2)
    dirs = rng.normal(size=(100, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.zeros((100, 3))
    t, fi = ray_cast_batch(m, origins, dirs)
    assert np.isfinite(t).all()
    assert (fi >= 0).all()
    assert np.abs(t - 1.0).max() < 5e-3
    # rays pointing away from the mesh miss
    t_miss, fi_miss = ray_cast_batch(m, np.full((4, 3), 5.0),
                                     np.tile([1.0, 0, 0], (4, 1)))
    assert np.isinf(t_miss).all()
    assert (fi_miss == -1).all()


def test_ray_first_hit():
    m = icosphere(3)
    hit = ray_first_hit(m, np.zeros(3), np.array([0.0, 0.0, 1.0]))
    assert hit is not None
    t, face = hit
    assert t == pytest.approx(1.0, abs=5e-3)
    assert ray_first_hit(m, np.array([3.0, 0, 0]),
                         np.array([1.0, 0, 0])) is None


def test_sample_surface_on_mesh():
    m = icosphere(3, 2.0)
    pts = sample_surface(m, 500, np.random.default_rng(3))
    assert pts.shape == (500, 3)
    d = MeshQuery(m).distance(pts)
    assert d.max() < 1e-9


def test_hausdorff_identical_zero():
    m = icosphere(3)
    assert hausdorff_sampled(m, m) < 1e-9
    shifted = m.translated([0.5, 0, 0])
    assert hausdorff_sampled(m, shifted) > 0.1

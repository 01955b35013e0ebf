"""Aneurysm sac generation: parameter handling, stretch oracle, bleb
placement, watertightness, determinism."""
import numpy as np
import pytest

from vascsyn.aneurysm import (AneurysmParams, generate_aneurysm, place_bleb,
                              stretch_along)
from vascsyn.errors import VascsynError
from vascsyn.mesh import icosphere, validate_closed
from vascsyn.rng import STAGE_ANEURYSM, stage_rng

NORMAL = np.array([0.0, 0.0, 1.0])


def test_params_roundtrip_and_validation():
    p = AneurysmParams()
    assert AneurysmParams.from_dict(p.to_dict()) == p
    with pytest.raises(VascsynError):
        AneurysmParams.from_dict({"bogus": 1})
    with pytest.raises(VascsynError):
        AneurysmParams(bleb_prob=1.5)


def test_stretch_along_oracle():
    # a unit sphere stretched by f along n spans 2(1+f) along n and is
    # untouched orthogonally
    m = icosphere(3)
    out = stretch_along(m, NORMAL, 0.5)
    z = out.vertices[:, 2]
    assert z.max() - z.min() == pytest.approx(3.0, rel=1e-6)
    x = out.vertices[:, 0]
    assert x.max() - x.min() == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(VascsynError):
        stretch_along(m, NORMAL, -0.1)


def test_place_bleb_on_dome():
    sac = icosphere(3)
    c, n = place_bleb(sac, NORMAL, np.random.default_rng(0))
    # anchor lies on the sac surface near the ray exit along the normal
    assert np.linalg.norm(c) == pytest.approx(1.0, abs=0.02)
    assert np.dot(c, NORMAL) > 0.8
    assert np.linalg.norm(n) == pytest.approx(1.0)


def test_generate_deterministic():
    params = AneurysmParams(noise_iters=1, bleb_prob=0.0)
    a = generate_aneurysm(1.0, NORMAL, params, stage_rng(7, STAGE_ANEURYSM))
    b = generate_aneurysm(1.0, NORMAL, params, stage_rng(7, STAGE_ANEURYSM))
    assert np.array_equal(a.mesh.vertices, b.mesh.vertices)
    assert a.realized == b.realized


def test_generate_respects_scale_range():
    params = AneurysmParams(noise_iters=0, bleb_prob=0.0)
    for seed in range(5):
        r_vessel = 1.3
        out = generate_aneurysm(r_vessel, NORMAL, params,
                                stage_rng(seed, STAGE_ANEURYSM))
        assert not out.has_bleb
        scale = out.realized["radius_scale"]
        assert 0.8 <= scale <= 2.0
        assert 0.0 <= out.realized["stretch"] <= 0.7
        assert out.realized["sac_radius"] == pytest.approx(r_vessel * scale)
        rep = validate_closed(out.mesh)
        assert rep.watertight and rep.components == 1
        # centered at its centroid
        assert np.linalg.norm(out.mesh.centroid()) < 1e-6
        # extent consistent with the realized radius and stretch
        lo, hi = out.mesh.bbox()
        max_ext = (hi - lo).max()
        r = out.realized["sac_radius"]
        assert 1.6 * r <= max_ext <= 2.2 * r * (1 + out.realized["stretch"])


def test_generate_with_bleb():
    params = AneurysmParams(noise_iters=0, bleb_prob=1.0)
    out = generate_aneurysm(1.0, NORMAL, params,
                            stage_rng(3, STAGE_ANEURYSM))
    rep = validate_closed(out.mesh)
    assert rep.watertight and rep.components == 1
    if out.has_bleb:
        b = out.realized["bleb"]
        assert 0.2 <= b["radius_scale"] <= 0.4
        assert len(b["centroid"]) == 3


def test_generate_validates_radius():
    with pytest.raises(VascsynError):
        generate_aneurysm(0.0, NORMAL, AneurysmParams(),
                          np.random.default_rng(0))

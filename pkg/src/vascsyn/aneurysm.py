"""Procedural aneurysm sac: scaled icosphere, directional stretch,
multi-scale noise, optional bleb merged by boolean union."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import MergeFailed, RayMiss, VascsynError
from .mesh import TriMesh, boolean_union, clean_mesh, fill_small_holes, \
    icosphere, mean_edge_length, ray_first_hit, smooth, validate_closed
from .vessel import apply_multiscale_noise

BLEB_REGION_FACTOR = 0.35   # x sac radius around the ray hit
BLEB_SUBDIV = 3


@dataclass
class AneurysmParams:
    radius_scale_range: tuple = (0.8, 2.0)
    stretch_range: tuple = (0.0, 0.7)
    bleb_prob: float = 0.3
    bleb_radius_scale_range: tuple = (0.2, 0.4)
    noise_iters: int = 3

    def __post_init__(self):
        if not 0.0 <= self.bleb_prob <= 1.0:
            raise VascsynError("bleb_prob must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AneurysmParams":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise VascsynError(f"unknown aneurysm param key(s): {sorted(bad)}")
        return cls(**d)


@dataclass(frozen=True)
class AneurysmMesh:
    mesh: TriMesh               # local frame, centroid at the origin
    has_bleb: bool
    realized: dict = field(default_factory=dict)


def stretch_along(m: TriMesh, direction: np.ndarray, factor: float) -> TriMesh:
    """Directional scale 1+factor along `direction`:
    v' = v + factor * (v . n) * n."""
    n = np.asarray(direction, dtype=np.float64)
    n = n / np.linalg.norm(n)
    if factor < 0:
        raise VascsynError("stretch factor must be >= 0")
    proj = m.vertices @ n
    v = m.vertices + factor * proj[:, None] * n
    return TriMesh(v, m.faces).with_normals()


def place_bleb(sac: TriMesh, ostium_normal: np.ndarray,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Bleb anchor on the dome: cast a ray from the sac centroid along the
    ostium normal, pick a random vertex near the hit.

    Returns (bleb_centroid, bleb_normal)."""
    centroid = sac.centroid()
    n = np.asarray(ostium_normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    hit = ray_first_hit(sac, centroid, n)
    if hit is None:
        raise RayMiss("sac centroid ray missed the sac surface")
    t, _ = hit
    hit_point = centroid + t * n

    lo, hi = sac.bbox()
    sac_radius = 0.5 * float(np.linalg.norm(hi - lo)) / np.sqrt(3.0)
    region = BLEB_REGION_FACTOR * sac_radius
    cand = np.flatnonzero(np.linalg.norm(sac.vertices - hit_point, axis=1) <= region)
    if len(cand) == 0:
        cand = np.array([int(np.argmin(np.linalg.norm(sac.vertices - hit_point, axis=1)))])
    pick = int(cand[rng.integers(0, len(cand))])
    bleb_centroid = sac.vertices[pick].copy()
    bleb_normal = bleb_centroid - centroid
    bleb_normal /= np.linalg.norm(bleb_normal)
    return bleb_centroid, bleb_normal


def _build_sac(radius: float, direction: np.ndarray, stretch: float,
               noise_iters: int, rng: np.random.Generator,
               subdiv: int = 4) -> TriMesh:
    m = icosphere(subdiv, radius)
    if stretch > 0:
        m = stretch_along(m, direction, stretch)
    m = apply_multiscale_noise(m, radius, noise_iters, rng)
    return m


def generate_aneurysm(r_vessel: float, ostium_normal: np.ndarray,
                      params: AneurysmParams,
                      rng: np.random.Generator) -> AneurysmMesh:
    """Sac conditioned on the local vessel radius and the ostium growth
    direction, with an optional bleb. Output is watertight, centered at its
    centroid."""
    if r_vessel <= 0:
        raise VascsynError("r_vessel must be > 0")
    n = np.asarray(ostium_normal, dtype=np.float64)
    n = n / np.linalg.norm(n)

    scale = rng.uniform(*params.radius_scale_range)
    stretch = rng.uniform(*params.stretch_range)
    sac_radius = r_vessel * scale
    sac = _build_sac(sac_radius, n, stretch, params.noise_iters, rng)

    realized = {"radius_scale": float(scale), "stretch": float(stretch),
                "sac_radius": float(sac_radius), "bleb": None}

    want_bleb = rng.random() < params.bleb_prob
    has_bleb = False
    if want_bleb:
        for attempt in range(2):
            try:
                bleb_centroid, bleb_normal = place_bleb(sac, n, rng)
                bleb_scale = rng.uniform(*params.bleb_radius_scale_range)
                bleb_stretch = rng.uniform(*params.stretch_range)
                bleb = _build_sac(sac_radius * bleb_scale, bleb_normal,
                                  bleb_stretch, params.noise_iters, rng,
                                  subdiv=BLEB_SUBDIV)
                bleb = clean_mesh(bleb.translated(bleb_centroid))
                # resolution follows the sac tessellation; the bleb is much
                # smaller but still spans several sac edge lengths
                merged = boolean_union(sac, bleb,
                                       voxel=mean_edge_length(sac) / 2.0)
                merged = fill_small_holes(clean_mesh(merged))
                merged = smooth(merged, "laplacian", 2)
                rep = validate_closed(merged)
                if not rep.watertight or rep.components != 1:
                    raise MergeFailed("bleb union is not a single watertight component")
                sac = merged
                has_bleb = True
                realized["bleb"] = {"radius_scale": float(bleb_scale),
                                    "stretch": float(bleb_stretch),
                                    "centroid": [float(x) for x in bleb_centroid]}
                break
            except (MergeFailed, RayMiss):
                if attempt == 1:
                    break  # emit a bleb-free sac

    sac = sac.translated(-sac.centroid()).with_normals()
    return AneurysmMesh(mesh=sac, has_bleb=has_bleb, realized=realized)

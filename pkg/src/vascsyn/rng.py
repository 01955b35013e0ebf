"""Deterministic RNG stream derivation.

Every pipeline stage owns an independent substream derived from
(master_seed, sample_id, stage_tag), so adding draws to one stage never
perturbs another and per-sample generation is order-independent.
"""
from __future__ import annotations

import hashlib

import numpy as np

STAGE_VESSEL = "vessel"
STAGE_OSTIUM = "ostium"
STAGE_ANEURYSM = "aneurysm"
STAGE_ASSEMBLY = "assembly"


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary (int | str) parts via SHA-256."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "little")


def stage_rng(seed: int, stage: str, attempt: int = 0) -> np.random.Generator:
    """Generator for one pipeline stage of one sample (attempt bumps the
    stream on retries)."""
    return np.random.default_rng(derive_seed(seed, stage, attempt))


def sample_seed(master_seed: int, sample_id: int) -> int:
    return derive_seed(master_seed, sample_id)

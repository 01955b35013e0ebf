"""Seeded 3D simplex gradient noise, vectorized over query points.

Classic Gustavson-style simplex noise with a permutation table drawn from a
seeded generator; values are in roughly [-1, 1] and deterministic per seed.
"""
from __future__ import annotations

import numpy as np

_F3 = 1.0 / 3.0
_G3 = 1.0 / 6.0

_GRAD3 = np.array([
    [1, 1, 0], [-1, 1, 0], [1, -1, 0], [-1, -1, 0],
    [1, 0, 1], [-1, 0, 1], [1, 0, -1], [-1, 0, -1],
    [0, 1, 1], [0, -1, 1], [0, 1, -1], [0, -1, -1],
], dtype=np.float64)


class SimplexNoise3D:
    def __init__(self, seed: int):
        rng = np.random.default_rng(seed)
        p = rng.permutation(256)
        self.perm = np.concatenate([p, p]).astype(np.int64)

    def _gi(self, i, j, k):
        perm = self.perm
        return perm[i + perm[j + perm[k]]] % 12

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]

        s = (x + y + z) * _F3
        i = np.floor(x + s).astype(np.int64)
        j = np.floor(y + s).astype(np.int64)
        k = np.floor(z + s).astype(np.int64)
        t = (i + j + k) * _G3
        x0 = x - (i - t)
        y0 = y - (j - t)
        z0 = z - (k - t)

        # ranking of the fractional coordinates picks the simplex traversal
        xy = x0 >= y0
        yz = y0 >= z0
        xz = x0 >= z0
        i1 = (xy & xz).astype(np.int64)
        j1 = (~xy & yz).astype(np.int64)
        k1 = (~yz & ~xz).astype(np.int64)
        i2 = (xy | xz).astype(np.int64)
        j2 = (~xy | yz).astype(np.int64)
        k2 = ((~yz) | (~xz)).astype(np.int64)

        x1 = x0 - i1 + _G3
        y1 = y0 - j1 + _G3
        z1 = z0 - k1 + _G3
        x2 = x0 - i2 + 2 * _G3
        y2 = y0 - j2 + 2 * _G3
        z2 = z0 - k2 + 2 * _G3
        x3 = x0 - 1 + 3 * _G3
        y3 = y0 - 1 + 3 * _G3
        z3 = z0 - 1 + 3 * _G3

        ii = i & 255
        jj = j & 255
        kk = k & 255
        out = np.zeros(len(pts))
        for (gx, gy, gz, oi, oj, ok) in (
            (x0, y0, z0, 0, 0, 0),
            (x1, y1, z1, i1, j1, k1),
            (x2, y2, z2, i2, j2, k2),
            (x3, y3, z3, 1, 1, 1),
        ):
            tt = 0.6 - gx * gx - gy * gy - gz * gz
            mask = tt > 0
            gi = self._gi(ii + oi, jj + oj, kk + ok)
            g = _GRAD3[gi]
            contrib = (tt ** 4) * (g[:, 0] * gx + g[:, 1] * gy + g[:, 2] * gz)
            out += np.where(mask, contrib, 0.0)
        return 32.0 * out

"""Ordinary kriging over node coordinates.

Weights come from the (k+1)x(k+1) Lagrange system, so they sum to 1 and the
interpolator is exact at sample locations. Negative weights (screening) are
flagged per target, never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import SingularSystemError

Coord = tuple[float, float]

# weights below this are treated as genuine screening, not rounding noise
_NEGATIVE_EPS = -1e-10


@dataclass(frozen=True)
class Variogram:
    nugget: float = 0.0
    sill: float = 1.0
    range: float = 1.0
    model: str = "exponential"

    def __post_init__(self):
        if self.model != "exponential":
            raise ValueError(f"unknown variogram model {self.model!r}")
        if not (0 <= self.nugget <= self.sill):
            raise ValueError("variogram requires 0 <= nugget <= sill")
        if self.sill <= 0 or self.range <= 0:
            raise ValueError("variogram requires sill > 0 and range > 0")

    def gamma(self, h):
        """Semivariance at separation ``h``; γ(0) = 0 exactly.

        ``range`` is the effective range: γ reaches ~95% of the sill there.
        """
        h = np.asarray(h, dtype=float)
        g = self.nugget + (self.sill - self.nugget) * (1.0 - np.exp(-3.0 * h / self.range))
        return np.where(h == 0.0, 0.0, g)


@dataclass(frozen=True)
class KrigeEstimate:
    value: float
    weights: tuple[float, ...]   # one per sample, summing to 1
    flagged: bool                # True when screening produced negative weights


def kriging_weights(sample_coords: list[Coord], target_coords: list[Coord],
                    v: Variogram) -> tuple[np.ndarray, np.ndarray]:
    """Solve the ordinary-kriging system once for many targets.

    Returns ``(W, flags)`` where ``W[t]`` holds the sample weights for target
    ``t`` and ``flags[t]`` marks targets with negative weights.
    """
    k = len(sample_coords)
    if k < 2:
        raise SingularSystemError(f"kriging needs at least 2 samples, got {k}")
    if len(set(sample_coords)) < k:
        dupes = sorted({c for c in sample_coords if sample_coords.count(c) > 1})
        raise SingularSystemError(f"duplicate sample coordinates: {dupes}")

    pts = np.asarray(sample_coords, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])

    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = v.gamma(dist)
    A[:k, k] = 1.0
    A[k, :k] = 1.0

    try:
        lu = lu_factor(A)
    except Exception as exc:
        raise SingularSystemError(f"kriging system is singular: {exc}") from exc

    tgt = np.asarray(target_coords, dtype=float).reshape(-1, 2)
    d_t = np.hypot(tgt[:, None, 0] - pts[None, :, 0],
                   tgt[:, None, 1] - pts[None, :, 1])
    B = np.ones((k + 1, len(tgt)))
    B[:k, :] = v.gamma(d_t).T

    sol = lu_solve(lu, B)
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("kriging system is singular (non-finite solution)")
    W = sol[:k, :].T
    flags = np.any(W < _NEGATIVE_EPS, axis=1)
    return W, flags


def krige(samples: list[tuple[Coord, float]], targets: list[Coord],
          v: Variogram) -> list[KrigeEstimate]:
    """Ordinary-kriging estimates at each target from (coordinate, value) samples."""
    coords = [c for c, _ in samples]
    values = np.array([x for _, x in samples], dtype=float)
    W, flags = kriging_weights(coords, targets, v)
    estimates = W @ values
    return [KrigeEstimate(float(estimates[t]), tuple(map(float, W[t])), bool(flags[t]))
            for t in range(len(targets))]


def default_variogram(values: np.ndarray, coords: list[Coord]) -> Variogram:
    """Defaults: nugget 0, sill = sample variance, range = bbox diagonal / 3."""
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    diagonal = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    sill = float(np.var(values))
    return Variogram(nugget=0.0,
                     sill=sill if sill > 0 else 1.0,
                     range=diagonal / 3.0 if diagonal > 0 else 1.0)

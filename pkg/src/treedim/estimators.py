"""
Finite-time estimators of the limiting objects of a grown tree.

All estimators are read-only functions of a :class:`~treedim.growth.TreeRealization`.
Entropies are in nats with ``0 log 0 = 0``. Level measures are normalized over
the born vertices of the requested generation; the share of the tree those
vertices carry is reported as ``coverage``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .growth import TreeRealization, _as_seed
from .malthus import _as_weights, solve_malthusian

__all__ = [
    "ThetaEstimate",
    "LevelMeasure",
    "EntropyEstimate",
    "EmptyLevelError",
    "theta_hat",
    "delta_hat",
    "level_measure",
    "entropy_estimate",
    "shannon_entropy",
    "t_weight_level_sum",
    "first_generation_t_sum",
    "default_lambda",
    "root_theta_trajectory",
    "theta_hat_many",
]


class EmptyLevelError(ValueError):
    """The requested generation has no born vertex yet; grow a larger tree."""


@dataclass(frozen=True)
class ThetaEstimate:
    vertex: int
    value: float
    t: float


@dataclass(frozen=True)
class LevelMeasure:
    """Normalized subtree-size weights over the vertices of one generation."""

    level: int
    vertices: np.ndarray
    weights: np.ndarray
    normalization: int
    coverage: float

    def as_dict(self) -> dict:
        return dict(zip(self.vertices.tolist(), self.weights.tolist()))

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class EntropyEstimate:
    H_n: float
    h_hat: float
    n: int
    t: float
    size: int
    coverage: float

    def __iter__(self):
        # unpacks as (H_n, h_hat)
        return iter((self.H_n, self.h_hat))


def default_lambda(G: TreeRealization) -> float:
    """Malthusian parameter of the tree's own weight function."""
    return solve_malthusian(G.weights)


def _require_continuous(G: TreeRealization, what: str):
    if not G.continuous:
        raise TypeError(f"{what} needs real birth times; got a {G.generator} realization")


def _require_vertex(G: TreeRealization, x: int) -> int:
    x = int(x)
    if not 0 <= x < G.size:
        raise KeyError(f"vertex {x} is not in the tree")
    return x


def theta_hat(G: TreeRealization, lam: float | None = None, x: int = 0) -> ThetaEstimate:
    """``exp(-lam (t - sigma_x)) |G_x|`` at the tree's clock ``t``."""
    _require_continuous(G, "theta_hat")
    x = _require_vertex(G, x)
    lam = default_lambda(G) if lam is None else float(lam)
    t = G.clock
    value = math.exp(-lam * (t - float(G.birth_time[x]))) * int(G.subtree_sizes[x])
    return ThetaEstimate(vertex=x, value=value, t=t)


def theta_hat_many(G: TreeRealization, lam: float, xs) -> np.ndarray:
    _require_continuous(G, "theta_hat")
    xs = np.asarray(xs, dtype=np.int64)
    return np.exp(-lam * (G.clock - G.birth_time[xs])) * G.subtree_sizes[xs]


def delta_hat(G: TreeRealization, x: int) -> float:
    """Fraction ``|G_x| / |G|`` of the tree descending from ``x``."""
    x = _require_vertex(G, x)
    return int(G.subtree_sizes[x]) / G.size


def level_measure(G: TreeRealization, n: int) -> LevelMeasure:
    """Weights ``|G_x| / sum_{|y|=n} |G_y|`` over the depth-``n`` vertices."""
    n = int(n)
    if n < 0:
        raise ValueError("level must be >= 0")
    ids = G.level(n)
    if ids.size == 0:
        raise EmptyLevelError(f"no vertex at depth {n} (tree size {G.size})")
    sizes = G.subtree_sizes[ids]
    total = int(sizes.sum())
    return LevelMeasure(
        level=n,
        vertices=ids,
        weights=sizes / total,
        normalization=total,
        coverage=total / G.size,
    )


def shannon_entropy(p) -> float:
    """Entropy in nats of a probability vector, ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def entropy_estimate(G: TreeRealization, n: int) -> EntropyEstimate:
    """Entropy ``H_n`` of the level measure and the per-level rate ``H_n / n``.

    ``h_hat`` is NaN for ``n == 0``.
    """
    mu = level_measure(G, n)
    H = shannon_entropy(mu.weights)
    # clip rounding noise on point masses
    H = max(H, 0.0)
    return EntropyEstimate(
        H_n=H,
        h_hat=H / n if n > 0 else math.nan,
        n=int(n),
        t=G.clock,
        size=G.size,
        coverage=mu.coverage,
    )


def t_weight_level_sum(G: TreeRealization, lam: float | None = None, n: int = 1) -> float:
    """``sum of exp(-lam sigma_x)`` over born vertices at depth ``n``.

    Its expectation is one at the Malthusian parameter once generation ``n``
    is completely born.
    """
    _require_continuous(G, "t_weight_level_sum")
    lam = default_lambda(G) if lam is None else float(lam)
    ids = G.level(n)
    return float(np.sum(np.exp(-lam * G.birth_time[ids])))


def first_generation_t_sum(w, lam: float, size: int, seed=0) -> np.ndarray:
    """Samples of ``sum_i exp(-lam sigma_i)`` for a complete first generation.

    ``sigma_i`` is the cumulative sum of independent ``Exp(w[j])``, ``j < i``.
    """
    w = _as_weights(w)
    rng = _as_seed(seed).generator()
    scales = 1.0 / np.asarray(w.w)
    waits = rng.exponential(scales, size=(int(size), w.K))
    sigma = np.cumsum(waits, axis=1)
    return np.exp(-float(lam) * sigma).sum(axis=1)


def root_theta_trajectory(G: TreeRealization, lam: float | None, times) -> np.ndarray:
    """``theta_hat`` of the root at earlier times ``t <= G.clock``.

    ``tree(t)`` is the set of vertices born by ``t``, so one realization
    yields the whole trajectory.
    """
    _require_continuous(G, "root_theta_trajectory")
    lam = default_lambda(G) if lam is None else float(lam)
    times = np.asarray(times, dtype=np.float64)
    if np.any(times > G.clock + 1e-12):
        raise ValueError("checkpoint beyond the tree's clock")
    born = np.searchsorted(np.sort(G.birth_time), times, side="right")
    return np.exp(-lam * times) * born

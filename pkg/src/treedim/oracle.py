"""
Brute-force oracles for validating the simulators.

:func:`enumerate_discrete_distribution` computes the exact law of the
discrete-time tree on at most 9 vertices by pushing probability through every
attachment step. Shapes are keyed by the preorder sequence of child counts.
Arithmetic is exact (``fractions.Fraction``) when all weights are rational
(ints or Fractions) and ``math.fsum``-compensated floats otherwise; it shares
no code with the simulators.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import stats

from .growth import TreeRealization, _as_seed, tree_from_parents
from .malthus import _as_weights, solve_malthusian

__all__ = [
    "MAX_ORACLE_VERTICES",
    "ShapeDistribution",
    "ChiSquareResult",
    "enumerate_discrete_distribution",
    "compare_to_simulator",
    "compare_counts",
    "decode_shape",
    "uniform_attachment_impostor",
    "entropy_monte_carlo",
]

MAX_ORACLE_VERTICES = 9

# shape code -> probability
ShapeDistribution = dict


def decode_shape(code) -> list[list[int]]:
    """Children lists (preorder vertex numbering) of a preorder child-count code."""
    code = list(code)
    children: list[list[int]] = [[] for _ in code]
    pos = 0

    def build(v):
        nonlocal pos
        for _ in range(code[v]):
            pos += 1
            if pos >= len(code):
                raise ValueError(f"invalid shape code {tuple(code)}")
            c = pos
            children[v].append(c)
            build(c)

    build(0)
    if pos != len(code) - 1:
        raise ValueError(f"invalid shape code {tuple(code)}")
    return children


def _encode(children) -> tuple[int, ...]:
    out = []
    stack = [0]
    while stack:
        v = stack.pop()
        out.append(len(children[v]))
        stack.extend(reversed(children[v]))
    return tuple(out)


def _exact_weights(w):
    raw = w.w if hasattr(w, "w") else tuple(w)
    if all(isinstance(v, (int, Fraction)) for v in raw):
        return [Fraction(v) for v in raw], True
    return [float(v) for v in raw], False


def enumerate_discrete_distribution(w, n_vertices: int) -> ShapeDistribution:
    """Exact distribution of the discrete-time tree with ``n_vertices`` vertices.

    Weights given as ints or Fractions yield exact Fraction probabilities.
    """
    raw = w if not hasattr(w, "w") else w.w
    _as_weights([float(v) for v in raw])  # validation only
    if not 1 <= n_vertices <= MAX_ORACLE_VERTICES:
        raise ValueError(f"n_vertices must be in 1..{MAX_ORACLE_VERTICES}")
    wts, exact = _exact_weights(raw)
    K = len(wts)
    one = Fraction(1) if exact else 1.0
    layer = {(0,): one}
    for _ in range(n_vertices - 1):
        parts = defaultdict(list)
        for code, p in layer.items():
            children = decode_shape(code)
            open_ = [v for v in range(len(code)) if len(children[v]) < K]
            rates = [wts[len(children[v])] for v in open_]
            W = sum(rates) if exact else math.fsum(rates)
            for v, r in zip(open_, rates):
                grown = [list(c) for c in children] + [[]]
                grown[v].append(len(code))
                parts[_encode(grown)].append(p * r / W)
        layer = {k: (sum(v) if exact else math.fsum(v)) for k, v in parts.items()}
    return dict(sorted(layer.items()))


class ChiSquareResult(tuple):
    """``(chi2, p_value)`` with the merged cell count and a note attached."""

    def __new__(cls, chi2, p_value, cells, note=""):
        self = super().__new__(cls, (float(chi2), float(p_value)))
        self.cells = cells
        self.note = note
        return self

    @property
    def chi2(self):
        return self[0]

    @property
    def p_value(self):
        return self[1]


def compare_counts(dist: ShapeDistribution, counts: dict, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square of observed shape counts against an exact law.

    Cells with expected count below ``min_expected`` are pooled into one cell
    (the pool is folded into the smallest remaining cell if still too small).
    Shapes outside the support of ``dist`` make the test fail outright.
    """
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no samples")
    unknown = [k for k in counts if k not in dist]
    if unknown:
        return ChiSquareResult(math.inf, 0.0, len(dist), f"shape {unknown[0]} impossible under oracle")
    keys = list(dist)
    prob = np.array([float(dist[k]) for k in keys])
    obs = np.array([counts.get(k, 0) for k in keys], dtype=np.float64)
    exp_ = prob * total
    big = exp_ >= min_expected
    cells_obs = list(obs[big])
    cells_exp = list(exp_[big])
    if (~big).any():
        po, pe = obs[~big].sum(), exp_[~big].sum()
        if pe >= min_expected or not cells_exp:
            cells_obs.append(po)
            cells_exp.append(pe)
        else:
            j = int(np.argmin(cells_exp))
            cells_obs[j] += po
            cells_exp[j] += pe
    if len(cells_exp) < 2:
        return ChiSquareResult(0.0, 1.0, 1, "exact match (single cell)")
    o = np.array(cells_obs)
    e = np.array(cells_exp)
    e *= o.sum() / e.sum()
    chi2, p = stats.chisquare(o, e)
    return ChiSquareResult(chi2, p, len(e))


def compare_to_simulator(dist: ShapeDistribution, samples: Iterable) -> ChiSquareResult:
    """Chi-square test of simulated trees (or their shape codes) against ``dist``."""
    n = len(next(iter(dist)))
    counts = Counter()
    for s in samples:
        code = s.shape() if isinstance(s, TreeRealization) else tuple(s)
        if len(code) != n:
            raise ValueError(f"sample has {len(code)} vertices, oracle has {n}")
        counts[code] += 1
    return compare_counts(dist, counts)


def uniform_attachment_impostor(w, n_vertices: int, seed=0) -> TreeRealization:
    """Deliberately wrong simulator: attaches to a uniform non-saturated vertex.

    Negative control for the chi-square tests.
    """
    w = _as_weights(w)
    rng = _as_seed(seed).generator()
    K = w.K
    parent, cidx, deg = [-1], [0], [0]
    for _ in range(n_vertices - 1):
        open_ = [v for v in range(len(deg)) if deg[v] < K]
        x = open_[int(rng.integers(len(open_)))]
        deg[x] += 1
        parent.append(x)
        cidx.append(deg[x])
        deg.append(0)
    return tree_from_parents(
        w, parent, cidx, np.arange(len(parent), dtype=float),
        clock=float(len(parent) - 1), continuous=False, generator="impostor",
    )


def entropy_monte_carlo(w, n_samples: int, seed=0, chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo mean and standard error of ``sum_i lam sigma_i exp(-lam sigma_i)``.

    ``sigma_i`` are first-generation birth times (cumulative sums of
    ``Exp(w[j])``) and ``lam`` the Malthusian parameter.
    """
    w = _as_weights(w)
    lam = solve_malthusian(w)
    rng = _as_seed(seed).generator()
    scales = 1.0 / np.asarray(w.w)
    s1 = s2 = 0.0
    left = int(n_samples)
    while left > 0:
        m = min(chunk, left)
        sigma = np.cumsum(rng.exponential(scales, size=(m, w.K)), axis=1)
        x = lam * sigma
        v = (x * np.exp(-x)).sum(axis=1)
        s1 += math.fsum(v)
        s2 += math.fsum(v * v)
        left -= m
    n = int(n_samples)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)

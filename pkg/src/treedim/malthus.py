r"""
Exact analytics for the degree-weighted random tree.

The first-generation birth times of a vertex are partial sums of independent
exponentials with rates ``w[0], w[1], ...``, so their Laplace functional is the
product-sum

.. math::

    \hat\rho(\lambda) = \sum_{j=1}^{K} \prod_{i=0}^{j-1} \frac{w_i}{\lambda + w_i}.

The Malthusian parameter is the unique positive root of ``rho_hat == 1``; the
limiting entropy of the leaf measure is ``-lambda* * rho_hat'(lambda*)`` (nats)
and the dimension of the leaf measure in the metric ``a**depth`` is
``h / -log(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "WeightFunction",
    "MalthusReport",
    "rho_hat",
    "rho_hat_prime",
    "solve_malthusian",
    "entropy_closed_form",
    "hausdorff_dimension",
    "malthus_report",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class WeightFunction:
    """Birth rates of the tree model.

    ``w[j]`` is the rate at which a vertex that currently has ``j`` children
    produces child ``j + 1``. A vertex with ``K = len(w)`` children stops
    reproducing.
    """

    w: tuple[float, ...]

    def __init__(self, w: Sequence[float]):
        w = tuple(float(v) for v in w)
        if len(w) < 2:
            raise ValueError("need K >= 2 weights")
        if not all(v > 0 and math.isfinite(v) for v in w):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "w", w)

    @property
    def K(self) -> int:
        return len(self.w)

    def scaled(self, c: float) -> "WeightFunction":
        return WeightFunction([c * v for v in self.w])

    def __len__(self):
        return len(self.w)

    def __iter__(self):
        return iter(self.w)

    def __getitem__(self, j):
        return self.w[j]


def _as_weights(w) -> WeightFunction:
    return w if isinstance(w, WeightFunction) else WeightFunction(w)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    return lam


def rho_hat(w, lam: float) -> float:
    """Expected discounted number of children, ``E sum_j exp(-lam * sigma_j)``."""
    w = _as_weights(w)
    lam = _check_lambda(lam)
    prod = 1.0
    total = 0.0
    for wi in w.w:
        prod *= wi / (lam + wi)
        total += prod
    return total


def rho_hat_prime(w, lam: float) -> float:
    """Derivative of :func:`rho_hat` in ``lam``; strictly negative."""
    w = _as_weights(w)
    lam = _check_lambda(lam)
    prod = 1.0
    inv_sum = 0.0
    total = 0.0
    for wi in w.w:
        prod *= wi / (lam + wi)
        inv_sum += 1.0 / (lam + wi)
        total += prod * inv_sum
    return -total


def _solve(w: WeightFunction, tol: float) -> tuple[float, int]:
    wmax = max(w.w)
    lo = 1e-12 * wmax
    hi = wmax
    while rho_hat(w, hi) >= 1.0:
        hi *= 2.0
    # rho_hat(lo) > 1 always: rho_hat(0+) = K >= 2
    it = 0
    while True:
        mid = 0.5 * (lo + hi)
        it += 1
        r = rho_hat(w, mid) - 1.0
        if abs(r) <= tol and hi - lo <= 2.0 * tol * mid:
            return mid, it
        if mid <= lo or mid >= hi:
            return mid, it
        if r > 0:
            lo = mid
        else:
            hi = mid


def solve_malthusian(w, tol: float = DEFAULT_TOL) -> float:
    """Root of ``rho_hat(w, lam) == 1`` by bracketed bisection.

    The bracket starts at ``[1e-12 * max(w), max(w)]`` and the upper end is
    doubled until ``rho_hat`` drops below one. Bisection stops once the
    residual ``|rho_hat - 1|`` is at most ``tol`` and the bracket is
    narrower than ``tol`` relative to the midpoint (or can no longer be
    split in double precision).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _solve(_as_weights(w), tol)[0]


def entropy_closed_form(w, tol: float = DEFAULT_TOL) -> float:
    """Limiting entropy ``h`` (nats) of the leaf measure.

    Computed as ``-lam * rho_hat_prime(lam)`` at the Malthusian parameter,
    which equals ``E sum_i lam*sigma_i*exp(-lam*sigma_i)`` over the
    first-generation birth times.
    """
    w = _as_weights(w)
    lam = solve_malthusian(w, tol)
    return -lam * rho_hat_prime(w, lam)


def _check_contraction(a: float) -> float:
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValueError(f"contraction factor a must lie in (0, 1), got {a!r}")
    return a


def hausdorff_dimension(w, a: float, tol: float = DEFAULT_TOL) -> float:
    """Hausdorff (= packing) dimension of the leaf measure for metric ``a**n``."""
    a = _check_contraction(a)
    return entropy_closed_form(w, tol) / -math.log(a)


@dataclass(frozen=True)
class MalthusReport:
    lambda_star: float
    h: float
    dimension: float
    a: float
    rho_at_root: float
    iterations: int
    tol: float

    def as_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "h": self.h,
            "dimension": self.dimension,
            "a": self.a,
            "residual": self.rho_at_root,
            "iterations": self.iterations,
        }


def malthus_report(w, a: float = math.exp(-1.0), tol: float = DEFAULT_TOL) -> MalthusReport:
    """Run the full analytic pipeline for one weight function."""
    w = _as_weights(w)
    a = _check_contraction(a)
    if not tol > 0:
        raise ValueError("tol must be positive")
    lam, it = _solve(w, tol)
    h = -lam * rho_hat_prime(w, lam)
    return MalthusReport(
        lambda_star=lam,
        h=h,
        dimension=h / -math.log(a),
        a=a,
        rho_at_root=rho_hat(w, lam) - 1.0,
        iterations=it,
        tol=tol,
    )

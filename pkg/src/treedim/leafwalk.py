"""
Size-biased random paths from the root towards the leaves.

A path starts at the root and repeatedly steps to a child chosen with
probability proportional to that child's weight. Two weightings are offered:

``rule="level"`` (default)
    the child's weight is the total subtree size of its depth-``n``
    descendants. The endpoint ``y_n`` then has exactly the law of
    :func:`~treedim.estimators.level_measure`, the step fractions telescope to
    the level weight of ``y_n``, and ``-log`` of that weight has conditional
    mean ``H_n``.
``rule="subtree"``
    the child's weight is its own subtree size, so the step fraction is
    ``|G_xi| / (|G_x| - 1)``. Paths can reach a childless vertex before depth
    ``n``, which raises :class:`InsufficientGrowthError`.

Both weightings converge to the same limit fractions as the tree grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import EmptyLevelError, theta_hat_many
from .growth import TreeRealization, _as_seed

__all__ = [
    "LeafPath",
    "LeafPathBatch",
    "InsufficientGrowthError",
    "sample_leaf_path",
    "sample_leaf_paths",
    "path_measure",
    "ergodic_entropy_estimate",
    "local_dimension_estimate",
    "theta_chain_samples",
    "size_biased_choice",
]

RULES = ("level", "subtree")


class InsufficientGrowthError(EmptyLevelError):
    """A path hit a vertex without children before the target depth."""


@dataclass(frozen=True)
class LeafPath:
    vertices: np.ndarray
    q: np.ndarray
    rule: str = "level"

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def endpoint(self) -> int:
        return int(self.vertices[-1])

    @property
    def log_weight(self) -> float:
        return float(np.sum(np.log(self.q)))

    @property
    def weight(self) -> float:
        return float(np.exp(self.log_weight))


@dataclass(frozen=True)
class LeafPathBatch:
    """``n_paths`` paths on one tree; row ``k`` of ``vertices`` is path ``k``."""

    vertices: np.ndarray  # (n_paths, n + 1)
    q: np.ndarray  # (n_paths, n)
    rule: str = "level"

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def __len__(self):
        return self.vertices.shape[0]

    def __getitem__(self, k) -> LeafPath:
        return LeafPath(self.vertices[k], self.q[k], self.rule)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.q).sum(axis=1)

    def neg_log_weight_over_n(self) -> np.ndarray:
        return -self.log_weights / self.n


def _vertex_weights(G: TreeRealization, n: int, rule: str) -> np.ndarray:
    sizes = G.subtree_sizes
    if rule == "subtree":
        return sizes.astype(np.float64)
    if rule != "level":
        raise ValueError(f"rule must be one of {RULES}")
    ids = G.level(n)
    if ids.size == 0:
        raise EmptyLevelError(f"no vertex at depth {n} (tree size {G.size})")
    mass = np.zeros(G.size, dtype=np.float64)
    mass[ids] = sizes[ids]
    for d in range(n - 1, -1, -1):
        up = G.level(d)
        kids = G.children[up]
        mass[up] = np.where(kids >= 0, mass[kids], 0.0).sum(axis=1)
    return mass


def sample_leaf_paths(
    G: TreeRealization, n: int, n_paths: int, seed=0, rule: str = "level"
) -> LeafPathBatch:
    """Sample ``n_paths`` independent size-biased paths of depth ``n`` on ``G``."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    weight = _vertex_weights(G, n, rule)
    rng = _as_seed(seed).generator()
    P = int(n_paths)
    verts = np.zeros((P, n + 1), dtype=np.int64)
    q = np.ones((P, n), dtype=np.float64)
    cur = verts[:, 0]
    rows = np.arange(P)
    for k in range(n):
        kids = G.children[cur]
        wts = np.where(kids >= 0, weight[kids], 0.0)
        totals = wts.sum(axis=1)
        if np.any(totals <= 0):
            bad = int(cur[np.argmax(totals <= 0)])
            raise InsufficientGrowthError(
                f"path reached childless vertex {G.label(bad)} at depth {k} < {n}; "
                "grow a larger tree"
            )
        cum = np.cumsum(wts, axis=1)
        u = rng.random(P) * totals
        choice = (cum <= u[:, None]).sum(axis=1)
        # guard against u landing exactly on the total after rounding
        choice = np.minimum(choice, (wts > 0).cumsum(axis=1).argmax(axis=1))
        cur = kids[rows, choice]
        verts[:, k + 1] = cur
        q[:, k] = wts[rows, choice] / totals
    return LeafPathBatch(verts, q, rule)


def sample_leaf_path(G: TreeRealization, n: int, seed=0, rule: str = "level") -> LeafPath:
    """One size-biased path ``y_0 = root, ..., y_n``."""
    return sample_leaf_paths(G, n, 1, seed, rule)[0]


def path_measure(G: TreeRealization, n: int, rule: str = "level") -> tuple[np.ndarray, np.ndarray]:
    """Exact law of the path endpoint ``y_n``: ``(vertex ids, probabilities)``.

    For ``rule="subtree"`` probability mass that would hit a childless vertex
    is lost, so the result may sum to less than one.
    """
    weight = _vertex_weights(G, n, rule)
    prob = np.zeros(G.size, dtype=np.float64)
    prob[0] = 1.0
    for d in range(n):
        up = G.level(d)
        kids = G.children[up]
        wts = np.where(kids >= 0, weight[kids], 0.0)
        totals = wts.sum(axis=1)
        ok = totals > 0
        share = np.zeros_like(wts)
        share[ok] = wts[ok] / totals[ok, None]
        has = kids >= 0
        prob[kids[has]] = (prob[up][:, None] * share)[has]
    ids = G.level(n)
    return ids, prob[ids]


def ergodic_entropy_estimate(
    G: TreeRealization, n: int, n_paths: int, seed=0, rule: str = "level"
) -> float:
    """Mean over sampled paths of ``-(1/n) sum_k log q_k``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    batch = sample_leaf_paths(G, n, n_paths, seed, rule)
    return float(batch.neg_log_weight_over_n().mean())


def local_dimension_estimate(G: TreeRealization, path: LeafPath, a: float) -> float:
    """``log(weight of y_n) / (n log a)``: the ball of radius ``a**n`` around a
    leaf through ``y_n`` is the cylinder of ``y_n``."""
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    if path.n < 1:
        raise ValueError("path must have depth >= 1")
    if int(path.vertices[-1]) >= G.size:
        raise KeyError("path does not belong to this tree")
    lw = path.log_weight
    if not np.isfinite(lw):
        raise ValueError("path endpoint has zero weight")
    return lw / (path.n * np.log(a))


def theta_chain_samples(G: TreeRealization, lam: float, path: LeafPath) -> np.ndarray:
    """``theta_hat`` at every vertex along ``path`` (``X_0, ..., X_n``)."""
    return theta_hat_many(G, float(lam), path.vertices)


def size_biased_choice(values, extra_weights=None, seed=0, size=None):
    """Index ``j`` drawn with probability ``p_j z_j / sum_k p_k z_k``.

    ``values`` are the ``z_j``; ``extra_weights`` the ``p_j`` (uniform when
    omitted, giving the ordinary size-biased pick). Indices are 0-based.
    Pass ``size`` for an array of independent draws.
    """
    z = np.asarray(values, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    p = np.full(z.size, 1.0 / z.size) if extra_weights is None else np.asarray(extra_weights, dtype=np.float64)
    if p.shape != z.shape:
        raise ValueError("values and extra_weights differ in length")
    if np.any(z < 0) or np.any(p < 0) or not np.all(np.isfinite(z * p)):
        raise ValueError("values and extra weights must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("extra_weights must sum to 1")
    pz = p * z
    total = pz.sum()
    if not total > 0:
        raise ValueError("all products p_j * z_j are zero")
    cum = np.cumsum(pz)
    rng = _as_seed(seed).generator()
    u = rng.random(size) * total
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, np.flatnonzero(pz > 0)[-1])
    return int(idx) if size is None else idx

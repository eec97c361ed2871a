"""
Exact-law generators for the degree-weighted random tree.

Vertices live in flat arrays (an arena) indexed by integer id; the root is
id 0 and every vertex has a larger id than its parent. Labels such as
``(1, 2, 1)`` are reconstructed on demand from ``parent``/``child_index``.

Three generators are provided:

* :func:`grow_continuous` - Gillespie simulation of the continuous-time chain.
  Rates depend on the degree only, so vertices are kept in per-degree buckets
  and an event costs O(K): pick the degree class ``d`` with probability
  ``|bucket_d| * w[d] / W``, then a uniform member of that class.
* :func:`grow_discrete` - the embedded jump chain (one vertex per step).
* :func:`grow_recursive_construction` - independent exponential waiting
  times per vertex, expanded generation by generation up to a horizon.

Random streams are numpy ``PCG64`` generators keyed by
``SeedSequence(base_seed, spawn_key=(replica_index,))``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .malthus import WeightFunction, _as_weights

__all__ = [
    "SeedSpec",
    "TreeRealization",
    "grow_continuous",
    "grow_discrete",
    "grow_recursive_construction",
    "complete_tree",
    "tree_from_parents",
    "total_weight",
    "subtree_sizes",
    "check_invariants",
    "write_tree_csv",
    "read_tree_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("id", "parent_id", "child_index", "birth_time", "degree")

# Random draws are produced in chunks of increasing size; the schedule is
# fixed so a run stopped at N vertices is a prefix of the run stopped at N+1.
_FIRST_CHUNK = 256
_MAX_CHUNK = 1 << 16

_RUNNING, _REACHED_SIZE, _REACHED_TIME, _SATURATED, _FULL = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class SeedSpec:
    """Seed of one replica; ``replica_index`` selects an independent stream."""

    base_seed: int
    replica_index: int = 0

    def __post_init__(self):
        if self.replica_index < 0:
            raise ValueError("replica_index must be >= 0")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            self.base_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(self.replica_index,)
        )
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "SeedSpec":
        """Derived stream for a sub-task (e.g. paths sampled on one tree)."""
        mixed = np.random.SeedSequence(
            self.base_seed & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(self.replica_index, index + 1),
        ).generate_state(2, np.uint64)
        return SeedSpec(int(mixed[0]), int(mixed[1] >> np.uint64(1)))


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


@dataclass(frozen=True, eq=False)
class TreeRealization:
    """A grown tree. Arrays are read-only once the realization is returned.

    ``birth_time`` holds real times for continuous-time realizations and the
    attachment rank for the discrete chain (``continuous`` is then False).
    ``children[x, i]`` is the id of child ``i + 1`` of ``x`` or -1.
    """

    weights: WeightFunction
    parent: np.ndarray
    child_index: np.ndarray
    birth_time: np.ndarray
    degree: np.ndarray
    depth: np.ndarray
    children: np.ndarray
    clock: float
    continuous: bool
    saturated: bool = False
    generator: str = "continuous"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("parent", "child_index", "birth_time", "degree", "depth", "children"):
            getattr(self, name).setflags(write=False)

    @property
    def K(self) -> int:
        return self.weights.K

    @property
    def size(self) -> int:
        return len(self.parent)

    def __len__(self):
        return self.size

    @property
    def root(self) -> int:
        return 0

    @cached_property
    def subtree_sizes(self) -> np.ndarray:
        sizes = _subtree_sizes(self.parent)
        sizes.setflags(write=False)
        return sizes

    @cached_property
    def total_weight(self) -> float:
        return total_weight(self)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def degree_buckets(self) -> list[np.ndarray]:
        """Vertex ids grouped by degree ``0..K-1`` (saturated vertices omitted)."""
        return [np.flatnonzero(self.degree == d) for d in range(self.K)]

    def level(self, n: int) -> np.ndarray:
        return self._levels.get(int(n), np.empty(0, dtype=np.int64))

    @cached_property
    def _levels(self) -> dict:
        order = np.argsort(self.depth, kind="stable")
        bounds = np.searchsorted(self.depth[order], np.arange(self.max_depth + 2))
        return {d: order[bounds[d] : bounds[d + 1]] for d in range(self.max_depth + 1)}

    def label(self, x: int) -> tuple[int, ...]:
        """Ulam-Harris label of vertex ``x``; the root is ``()``."""
        out = []
        while x > 0:
            out.append(int(self.child_index[x]))
            x = int(self.parent[x])
        return tuple(reversed(out))

    def find(self, label) -> int:
        """Vertex id carrying ``label``; KeyError if it is not in the tree."""
        x = 0
        for i in label:
            if not 1 <= i <= self.K or self.children[x, i - 1] < 0:
                raise KeyError(f"vertex {tuple(label)} not in tree")
            x = int(self.children[x, i - 1])
        return x

    def shape(self) -> tuple[int, ...]:
        """Preorder sequence of child counts (canonical ordered-tree code)."""
        out = []
        stack = [0]
        while stack:
            x = stack.pop()
            out.append(int(self.degree[x]))
            kids = self.children[x, : self.degree[x]]
            stack.extend(int(c) for c in kids[::-1])
        return tuple(out)


@numba.njit(cache=True, nogil=True)
def _subtree_sizes(parent):
    n = parent.shape[0]
    sizes = np.ones(n, dtype=np.int64)
    for v in range(n - 1, 0, -1):
        sizes[parent[v]] += sizes[v]
    return sizes


@numba.njit(cache=True, nogil=True)
def _advance(
    w, parent, child_index, birth, degree, depth, children,
    buckets, bucket_pos, counts, state, clock_arr,
    exps, u_class, u_member, n_max, t_max, timed,
):
    # state[0] = size; clock_arr[0] = current time
    K = w.shape[0]
    cap = parent.shape[0]
    size = state[0]
    clock = clock_arr[0]
    n_draws = u_class.shape[0]
    i = 0
    status = _RUNNING
    while True:
        if size >= n_max:
            status = _REACHED_SIZE
            break
        if size >= cap:
            status = _FULL
            break
        if i >= n_draws:
            break
        W = 0.0
        for d in range(K):
            W += counts[d] * w[d]
        if W <= 0.0:
            status = _SATURATED
            break
        if timed:
            t_next = clock + exps[i] / W
            if t_next > t_max:
                clock = t_max
                i += 1
                status = _REACHED_TIME
                break
            clock = t_next
        else:
            clock = float(size)
        target = u_class[i] * W
        acc = 0.0
        cls = -1
        for d in range(K):
            if counts[d] > 0:
                cls = d
                acc += counts[d] * w[d]
                if target < acc:
                    break
        m = int(u_member[i] * counts[cls])
        if m >= counts[cls]:
            m = counts[cls] - 1
        x = buckets[cls, m]
        last = buckets[cls, counts[cls] - 1]
        buckets[cls, m] = last
        bucket_pos[last] = m
        counts[cls] -= 1
        nd = cls + 1
        if nd < K:
            buckets[nd, counts[nd]] = x
            bucket_pos[x] = counts[nd]
            counts[nd] += 1
        else:
            bucket_pos[x] = -1
        degree[x] = nd
        v = size
        parent[v] = x
        child_index[v] = nd
        children[x, cls] = v
        birth[v] = clock
        depth[v] = depth[x] + 1
        degree[v] = 0
        buckets[0, counts[0]] = v
        bucket_pos[v] = counts[0]
        counts[0] += 1
        size += 1
        i += 1
    state[0] = size
    clock_arr[0] = clock
    return i, status


def _grow_jump_chain(w: WeightFunction, n_max, t_max, seed, timed):
    rng = _as_seed(seed).generator()
    K = w.K
    warr = np.asarray(w.w, dtype=np.float64)
    cap = int(min(n_max, 1 << 12)) if n_max < np.iinfo(np.int64).max else 1 << 12
    cap = max(cap, 1)

    def alloc(cap):
        return dict(
            parent=np.full(cap, -1, dtype=np.int64),
            child_index=np.zeros(cap, dtype=np.int32),
            birth=np.zeros(cap, dtype=np.float64),
            degree=np.zeros(cap, dtype=np.int32),
            depth=np.zeros(cap, dtype=np.int32),
            children=np.full((cap, K), -1, dtype=np.int64),
            buckets=np.zeros((K, cap), dtype=np.int64),
            bucket_pos=np.zeros(cap, dtype=np.int64),
        )

    a = alloc(cap)
    counts = np.zeros(K, dtype=np.int64)
    counts[0] = 1
    state = np.array([1], dtype=np.int64)
    clock = np.zeros(1, dtype=np.float64)

    chunk = _FIRST_CHUNK
    pending = None
    status = _RUNNING
    while True:
        if pending is None:
            exps = rng.standard_exponential(chunk) if timed else np.empty(0)
            u_class = rng.random(chunk)
            u_member = rng.random(chunk)
            pending = (exps, u_class, u_member)
            chunk = min(2 * chunk, _MAX_CHUNK)
        exps, u_class, u_member = pending
        used, status = _advance(
            warr, a["parent"], a["child_index"], a["birth"], a["degree"], a["depth"],
            a["children"], a["buckets"], a["bucket_pos"], counts, state, clock,
            exps, u_class, u_member, n_max, t_max, timed,
        )
        if used >= len(u_class):
            pending = None
        else:
            pending = (exps[used:] if timed else exps, u_class[used:], u_member[used:])
        if status == _FULL:
            new_cap = 2 * cap if n_max >= np.iinfo(np.int64).max else min(2 * cap, n_max)
            b = alloc(new_cap)
            for key, arr in a.items():
                if key == "buckets":
                    b[key][:, :cap] = arr
                else:
                    b[key][:cap] = arr
            a, cap = b, new_cap
            continue
        if status in (_REACHED_SIZE, _REACHED_TIME, _SATURATED):
            break

    n = int(state[0])
    t = float(clock[0]) if timed else float(n - 1)
    return TreeRealization(
        weights=w,
        parent=a["parent"][:n].copy(),
        child_index=a["child_index"][:n].copy(),
        birth_time=a["birth"][:n].copy(),
        degree=a["degree"][:n].copy(),
        depth=a["depth"][:n].copy(),
        children=a["children"][:n].copy(),
        clock=t,
        continuous=bool(timed),
        saturated=status == _SATURATED,
        generator="continuous" if timed else "discrete",
    )


_NO_LIMIT = np.iinfo(np.int64).max


def grow_continuous(w, *, max_time: float | None = None, max_size: int | None = None, seed=0) -> TreeRealization:
    """Sample ``tree(t)`` of the continuous-time chain.

    Growth stops at ``max_time`` (the clock is then exactly ``max_time``) or
    once the tree has ``max_size`` vertices (the clock is then the birth time
    of the last vertex), whichever comes first.
    """
    w = _as_weights(w)
    if max_time is None and max_size is None:
        raise ValueError("give max_time and/or max_size")
    if max_time is not None and not max_time > 0:
        raise ValueError("max_time must be positive")
    if max_size is not None and max_size < 1:
        raise ValueError("max_size must be >= 1")
    n_max = _NO_LIMIT if max_size is None else int(max_size)
    t_max = np.inf if max_time is None else float(max_time)
    return _grow_jump_chain(w, n_max, t_max, seed, True)


def grow_discrete(w, n_vertices: int, seed=0) -> TreeRealization:
    """Embedded jump chain after ``n_vertices - 1`` attachments.

    ``birth_time`` holds the attachment rank, not a time.
    """
    w = _as_weights(w)
    if n_vertices < 1:
        raise ValueError("n_vertices must be >= 1")
    return _grow_jump_chain(w, int(n_vertices), np.inf, seed, False)


def grow_recursive_construction(w, horizon: float, seed=0) -> TreeRealization:
    """All vertices born by ``horizon`` under independent per-vertex clocks.

    Child ``i`` of ``x`` is born ``Exp(w[i-1])`` after child ``i-1`` (after
    ``x`` itself for ``i = 1``). Sibling birth times increase, so a vertex
    stops producing children at the first one born after the horizon.
    Ids are assigned breadth-first, siblings in birth order.
    """
    w = _as_weights(w)
    T = float(horizon)
    if not T > 0:
        raise ValueError("horizon must be positive")
    rng = _as_seed(seed).generator()
    K = w.K
    scales = 1.0 / np.asarray(w.w)

    parents = [np.array([-1], dtype=np.int64)]
    cidx = [np.array([0], dtype=np.int32)]
    births = [np.array([0.0])]
    frontier = np.array([0], dtype=np.int64)
    frontier_birth = np.array([0.0])
    n_total = 1
    while frontier.size:
        t = frontier_birth.copy()
        alive = np.ones(frontier.size, dtype=bool)
        kid_par, kid_idx, kid_birth = [], [], []
        for i in range(K):
            t = t + rng.exponential(scales[i], size=frontier.size)
            alive &= t <= T
            if not alive.any():
                break
            kid_par.append(frontier[alive])
            kid_idx.append(np.full(int(alive.sum()), i + 1, dtype=np.int32))
            kid_birth.append(t[alive])
        if not kid_par:
            break
        p = np.concatenate(kid_par)
        ci = np.concatenate(kid_idx)
        b = np.concatenate(kid_birth)
        order = np.lexsort((ci, p))
        p, ci, b = p[order], ci[order], b[order]
        parents.append(p)
        cidx.append(ci)
        births.append(b)
        frontier = np.arange(n_total, n_total + p.size, dtype=np.int64)
        frontier_birth = b
        n_total += p.size

    tree = tree_from_parents(
        w,
        np.concatenate(parents),
        np.concatenate(cidx),
        np.concatenate(births),
        clock=T,
        continuous=True,
        generator="recursive",
    )
    return tree


def tree_from_parents(w, parent, child_index, birth_time, *, clock, continuous, generator="custom") -> TreeRealization:
    """Assemble a realization from parent pointers (``parent[v] < v``)."""
    w = _as_weights(w)
    parent = np.asarray(parent, dtype=np.int64)
    child_index = np.asarray(child_index, dtype=np.int32)
    n = parent.size
    if n == 0 or parent[0] != -1:
        raise ValueError("vertex 0 must be the root (parent -1)")
    if n > 1 and np.any(parent[1:] >= np.arange(1, n)):
        raise ValueError("parents must precede their children")
    K = w.K
    if np.any(child_index[1:] < 1) or np.any(child_index[1:] > K):
        raise ValueError("child index out of range")
    children = np.full((n, K), -1, dtype=np.int64)
    if n > 1:
        slots = parent[1:] * K + (child_index[1:] - 1)
        if np.unique(slots).size != n - 1:
            raise ValueError("two vertices share a (parent, child_index) slot")
        children[parent[1:], child_index[1:] - 1] = np.arange(1, n)
    degree = np.zeros(n, dtype=np.int32)
    if n > 1:
        degree += np.bincount(parent[1:], minlength=n).astype(np.int32)
    depth = np.zeros(n, dtype=np.int32)
    for v in range(1, n):
        depth[v] = depth[parent[v]] + 1
    return TreeRealization(
        weights=w,
        parent=parent,
        child_index=child_index,
        birth_time=np.asarray(birth_time, dtype=np.float64),
        degree=degree,
        depth=depth,
        children=children,
        clock=float(clock),
        continuous=continuous,
        generator=generator,
    )


def complete_tree(w, n_levels: int) -> TreeRealization:
    """Complete ``K``-ary tree with ``n_levels`` levels below the root.

    Every level measure is uniform; used for self-tests of the estimators.
    Birth times are the depth (not a sample of the model).
    """
    w = _as_weights(w)
    K = w.K
    parent = [-1]
    cidx = [0]
    frontier = [0]
    for _ in range(n_levels):
        nxt = []
        for x in frontier:
            for i in range(1, K + 1):
                parent.append(x)
                cidx.append(i)
                nxt.append(len(parent) - 1)
        frontier = nxt
    depth_birth = np.zeros(len(parent))
    for v in range(1, len(parent)):
        depth_birth[v] = depth_birth[parent[v]] + 1
    return tree_from_parents(
        w, parent, cidx, depth_birth, clock=float(n_levels), continuous=False, generator="complete"
    )


def total_weight(G: TreeRealization) -> float:
    """``W(G) = sum of w[deg(x)]`` over vertices with degree below ``K``."""
    counts = np.bincount(G.degree, minlength=G.K + 1)[: G.K]
    W = 0.0
    for d in range(G.K):
        W += int(counts[d]) * G.weights.w[d]
    return W


def subtree_sizes(G: TreeRealization) -> np.ndarray:
    """``|G_x|`` for every vertex id, from one reverse pass over the arena."""
    return G.subtree_sizes


def check_invariants(G: TreeRealization) -> None:
    """Raise AssertionError if any structural invariant of ``G`` fails."""
    n, K = G.size, G.K
    assert G.parent[0] == -1 and G.depth[0] == 0
    assert G.birth_time[0] == 0.0
    if n > 1:
        v = np.arange(1, n)
        p = G.parent[1:]
        assert np.all(p >= 0) and np.all(p < v), "parent must precede child"
        assert np.all(G.depth[1:] == G.depth[p] + 1)
        assert np.all((G.child_index[1:] >= 1) & (G.child_index[1:] <= K))
        # children recorded where the parent pointers say
        assert np.all(G.children[p, G.child_index[1:] - 1] == v)
        # birth times strictly increase down the tree and along siblings
        assert np.all(G.birth_time[1:] > G.birth_time[p])
        older = G.child_index[1:] > 1
        if older.any():
            prev = G.children[p[older], G.child_index[1:][older] - 2]
            assert np.all(prev >= 0)
            assert np.all(G.birth_time[1:][older] > G.birth_time[prev])
    deg = np.bincount(G.parent[1:], minlength=n) if n > 1 else np.zeros(1, dtype=np.int64)
    assert np.array_equal(deg, G.degree), "degree must equal number of children"
    assert G.degree.max() <= K
    # children contiguous 1..deg
    filled = G.children >= 0
    assert np.array_equal(filled.sum(axis=1), G.degree)
    assert np.all(filled == (np.arange(K)[None, :] < G.degree[:, None]))
    assert np.all(G.birth_time <= G.clock + 1e-12 * max(1.0, abs(G.clock)))
    buckets = G.degree_buckets()
    assert sum(len(b) for b in buckets) == int(np.sum(G.degree < K))
    bucket_sum = sum(len(b) * G.weights.w[d] for d, b in enumerate(buckets))
    assert bucket_sum == total_weight(G)
    direct = float(np.sum(np.asarray(G.weights.w)[G.degree[G.degree < K]]))
    assert abs(direct - total_weight(G)) <= 1e-9 * max(1.0, direct)
    assert G.subtree_sizes[0] == n


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_tree_csv(G: TreeRealization, fh=None) -> str | None:
    """Write the tree dump; returns the text when ``fh`` is None."""
    own = fh is None
    if own:
        fh = io.StringIO()
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for v in range(G.size):
        writer.writerow(
            [
                v,
                "" if v == 0 else int(G.parent[v]),
                "" if v == 0 else int(G.child_index[v]),
                _fmt(float(G.birth_time[v])),
                int(G.degree[v]),
            ]
        )
    if own:
        return fh.getvalue()
    return None


def read_tree_csv(fh, w, *, clock=None, continuous=True) -> TreeRealization:
    """Parse a tree dump written by :func:`write_tree_csv`."""
    rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != CSV_HEADER:
        raise ValueError("not a tree dump")
    ids = [int(r["id"]) for r in rows]
    if ids != list(range(len(rows))):
        raise ValueError("ids must be 0..n-1 in order")
    parent = [-1 if r["parent_id"] == "" else int(r["parent_id"]) for r in rows]
    cidx = [0 if r["child_index"] == "" else int(r["child_index"]) for r in rows]
    birth = [float(r["birth_time"]) for r in rows]
    G = tree_from_parents(
        w, parent, cidx, birth,
        clock=max(birth) if clock is None else clock,
        continuous=continuous, generator="csv",
    )
    if [int(r["degree"]) for r in rows] != G.degree.tolist():
        raise ValueError("degree column inconsistent with parent pointers")
    return G

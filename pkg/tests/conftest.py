import math

import numpy as np
import pytest

from treedim import growth, leafwalk, estimators
from treedim.growth import SeedSpec

GOLDEN_LAMBDA = (math.sqrt(5.0) - 1.0) / 2.0
# h = lam * [(1+lam)^-2 + 2 (1+lam)^-3] at lam = (sqrt5 - 1)/2
GOLDEN_H = GOLDEN_LAMBDA * ((1 + GOLDEN_LAMBDA) ** -2 + 2 * (1 + GOLDEN_LAMBDA) ** -3)

BENCH_SEED = 20261017
BENCH_N = 10**6
BENCH_REPLICAS = 30
BENCH_PATHS = 1000
BENCH_LEVELS = (4, 7, 10)

_acceptance_key = pytest.StashKey[list]()


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def chain_tree(w=(1, 1), length=2):
    parent = list(range(-1, length))
    return growth.tree_from_parents(
        w, parent, [0] + [1] * length, np.arange(length + 1, dtype=float),
        clock=float(length), continuous=True,
    )


def cherry_tree(w=(1, 1)):
    return growth.tree_from_parents(
        w, [-1, 0, 0], [0, 1, 2], [0.0, 1.0, 2.0], clock=2.0, continuous=True
    )


@pytest.fixture(scope="session")
def benchmark_stats():
    """Per-replica statistics of the K=2, w=(1,1), N=10^6 benchmark.

    Trees are discarded after use; only the derived numbers are kept.
    """
    lam = GOLDEN_LAMBDA
    out = []
    for r in range(BENCH_REPLICAS):
        seed = SeedSpec(BENCH_SEED, r)
        G = growth.grow_continuous((1, 1), max_size=BENCH_N, seed=seed)
        ent = {n: estimators.entropy_estimate(G, n) for n in BENCH_LEVELS}
        b10 = leafwalk.sample_leaf_paths(G, 10, BENCH_PATHS, seed.child(0))
        b15 = leafwalk.sample_leaf_paths(G, 15, 2, seed.child(1))
        out.append(
            dict(
                entropy=ent,
                path_log_weights=b10.log_weights,
                ergodic=float(b10.neg_log_weight_over_n().mean()),
                chain=estimators.theta_hat_many(G, lam, b15.vertices),
            )
        )
    return out


@pytest.fixture
def acceptance_report(request):
    lines = request.config.stash.setdefault(_acceptance_key, [])

    def report(cid, ok, detail):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

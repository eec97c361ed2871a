"""
Growing trees three ways
========================

The Gillespie simulator, the embedded jump chain and the per-vertex
exponential construction describe the same random tree. Compare sizes at a
fixed horizon and show that e^{-lambda t} |tree(t)| settles down.
"""

import math

import numpy as np

from treedim import SeedSpec, grow_continuous, grow_recursive_construction, solve_malthusian

w = (1, 1)
lam = solve_malthusian(w)
R = 2000

a = np.array([grow_continuous(w, max_time=6.0, seed=SeedSpec(1, r)).size for r in range(R)])
b = np.array([grow_recursive_construction(w, 6.0, SeedSpec(2, r)).size for r in range(R)])
print(f"|tree(6)| over {R} replicas")
print(f"  gillespie   mean {a.mean():8.2f}  median {np.median(a):6.0f}")
print(f"  recursive   mean {b.mean():8.2f}  median {np.median(b):6.0f}")

# %%
# Normalized size along one realization.
G = grow_continuous(w, max_time=18.0, seed=SeedSpec(3, 0))
print(f"\none tree grown to t=18: {G.size} vertices, depth {G.max_depth}")
print(f"{'t':>5}{'|tree(t)|':>12}{'e^-lt |tree(t)|':>18}")
for t in (4, 8, 10, 12, 14, 16, 18):
    n = int(np.count_nonzero(G.birth_time <= t))
    print(f"{t:>5}{n:>12}{math.exp(-lam * t) * n:>18.4f}")

"""
Level entropy converges to h
============================

Grow a few large trees and watch H_n / n approach the closed-form entropy.
"""

import numpy as np

from treedim import SeedSpec, entropy_closed_form, grow_continuous
from treedim.estimators import entropy_estimate

w = (1, 1)
h = entropy_closed_form(w)
levels = (2, 4, 6, 8, 10)
R = 8

table = np.empty((R, len(levels)))
for r in range(R):
    G = grow_continuous(w, max_size=300_000, seed=SeedSpec(7, r))
    table[r] = [entropy_estimate(G, n).h_hat for n in levels]

print(f"closed form h = {h:.6f}\n")
print(f"{'n':>4}{'mean h_hat':>12}{'sd':>10}{'mean - h':>12}")
for j, n in enumerate(levels):
    col = table[:, j]
    print(f"{n:>4}{col.mean():>12.5f}{col.std(ddof=1):>10.5f}{col.mean() - h:>12.5f}")

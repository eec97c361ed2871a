"""
Random leaves and local dimension
=================================

Sample random paths from the root with the level-mass rule. The average of
-log(weight)/n along the path matches the level entropy of the same tree, and
dividing by -log a gives the local dimension at a typical leaf.
"""

import math

from treedim import SeedSpec, grow_continuous, malthus_report
from treedim.estimators import entropy_estimate, theta_hat_many
from treedim.leafwalk import sample_leaf_paths

w = (1, 1)
rep = malthus_report(w, a=0.5)
n = 10

# %%
# The estimates agree within each tree; the spread between trees is the
# randomness of the realization itself.
print(f"closed form h = {rep.h:.5f}, dimension(a=1/2) = {rep.dimension:.5f}\n")
print(f"{'tree':>5}{'ergodic':>10}{'se':>9}{'H_n/n':>9}{'dim(1/2)':>10}")
for r in range(5):
    seed = SeedSpec(11, r)
    G = grow_continuous(w, max_size=500_000, seed=seed)
    batch = sample_leaf_paths(G, n, 5000, seed=seed.child(0))
    v = batch.neg_log_weight_over_n()
    se = v.std(ddof=1) / math.sqrt(len(v))
    print(f"{r:>5}{v.mean():>10.5f}{se:>9.5f}{entropy_estimate(G, n).h_hat:>9.5f}{v.mean() / math.log(2):>10.5f}")

# %%
# Normalized subtree sizes along the sampled paths of the last tree.
X = theta_hat_many(G, rep.lambda_star, batch.vertices)
print(f"\n{'depth':>6}{'mean Theta':>12}{'sd':>10}")
for k in range(0, n + 1, 2):
    print(f"{k:>6}{X[:, k].mean():>12.4f}{X[:, k].std(ddof=1):>10.4f}")

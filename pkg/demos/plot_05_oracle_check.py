"""
Exact enumeration as an oracle
==============================

For trees with a handful of vertices the law of the shape can be computed
exactly. The simulator passes a chi-square test against it, while a uniform
attachment impostor fails.
"""

from treedim import SeedSpec, grow_discrete
from treedim.oracle import compare_to_simulator, enumerate_discrete_distribution, uniform_attachment_impostor

w, n, R = (1, 2), 5, 50_000
dist = enumerate_discrete_distribution(w, n)
print(f"{len(dist)} shapes with {n} vertices; most likely:")
for code, p in sorted(dist.items(), key=lambda kv: -kv[1])[:5]:
    print(f"  {code}  {p} = {float(p):.4f}")

sim = compare_to_simulator(dist, (grow_discrete(w, n, SeedSpec(1, r)).shape() for r in range(R)))
imp = compare_to_simulator(dist, (uniform_attachment_impostor(w, n, SeedSpec(2, r)).shape() for r in range(R)))
print(f"\nsimulator: chi2={sim.chi2:.2f} p={sim.p_value:.3f}")
print(f"impostor : chi2={imp.chi2:.2f} p={imp.p_value:.2e}")

"""
Malthusian parameter, entropy and dimension
===========================================

Solve rho_hat(lambda) = 1 for a few weight functions and print the growth
rate, the limiting level entropy and the leaf-set dimension for a = 1/2.
"""

import math

from treedim import malthus_report, rho_hat

cases = {
    "binary, equal weights": (1, 1),
    "binary, root-favouring": (1, 2),
    "ternary, equal weights": (1, 1, 1),
    "ternary, decreasing": (3, 2, 1),
}

print(f"{'case':<26}{'lambda*':>12}{'h':>12}{'dim(1/2)':>12}{'log K':>10}")
for name, w in cases.items():
    rep = malthus_report(w, a=0.5)
    print(f"{name:<26}{rep.lambda_star:>12.8f}{rep.h:>12.8f}{rep.dimension:>12.8f}{math.log(len(w)):>10.4f}")

# %%
# rho_hat is strictly decreasing, so the root is unique.
print()
for lam in (0.2, 0.5, 0.618034, 1.0, 2.0):
    print(f"rho_hat((1,1), {lam:<8}) = {rho_hat((1, 1), lam):.6f}")

# %%
# Scaling every weight by c scales lambda* by c and leaves h unchanged.
for c in (0.1, 1.0, 10.0):
    rep = malthus_report((c, 2 * c))
    print(f"c={c:<5} lambda*/c={rep.lambda_star / c:.10f} h={rep.h:.10f}")

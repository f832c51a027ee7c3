"""
Closed-form solutions
=====================

The separable solution extinguishes at a prescribed time T; the
Barenblatt solution is self-similar and keeps its mass.  Both serve as
oracles for the solver.
"""

import numpy as np

from wfde import Params, barenblatt, residual_order, separable

fast = Params(3, 1.0, 0.0, 0.25, p=2.0)
sep = separable(fast, T=1.0)
print(f"separable amplitude c = {sep.c:.7f}")
order, res = residual_order(sep, 0.5, 0.6, 0.05)
print(f"PDE residual order {order:.2f}; residuals {res}")

good = Params(3, 1.0, 0.0, 0.6)
bar = barenblatt(good, D=2.0)
r = np.array([0.0, 0.5, 1.0, 2.0])
for t in (0.5, 1.0, 2.0):
    # the amplitude scales like t^(-10) for these exponents
    print(f"t = {t}: u = " + " ".join(f"{v:.3e}" for v in bar.evaluate(t, r)))
print(f"mass = {bar.mass():.5f}")

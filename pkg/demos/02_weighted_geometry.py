"""
Weighted balls and the sandwich constants
=========================================

Measures mu_alpha(B) = int_B |x|^alpha dx of balls that may or may not
contain the origin, and the two-sided constants that compare them with
simple power laws.
"""

import numpy as np

from wfde import Ball, Params, classify_scenario, measure_sandwich_constants, mu, rho

P = Params(3, 1.0, 0.0, 0.6)

for ball in (Ball(0.0, 1.0), Ball(0.3, 1.0), Ball(20.0, 1.0)):
    print(f"{ball}: scenario {classify_scenario(ball).name}, "
          f"mu_gamma = {mu(P.gamma, ball, P.N):.5f}, rho = {rho(P, ball):.5f}")

# the constants do not drift with the radius
sand = measure_sandwich_constants(P, radii=tuple(np.geomspace(0.1, 10, 5)))
for R, consts in sand["per_radius"].items():
    print(f"R = {R:7.3f}  " + "  ".join(f"{k}={v:.4f}" for k, v in consts.items()))

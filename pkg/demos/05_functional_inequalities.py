"""
Functional inequalities on weighted balls
=========================================

The Talenti profile attains the sharp Sobolev constant, and the Poincare
quotient does not change when the ball is rescaled about the origin.
The last lines measure the BMO norm of a logarithm.
"""

import math

import numpy as np

from wfde import Ball, Params, RadialField, bmo_gamma, ckn_ratio, poincare_on_ball
from wfde import sharp_sobolev_constant
from wfde.inequalities import bump, measure_ckn_constant, talenti

flat = Params(3, 0.0, 0.0, 0.5)
print(f"Talenti ratio {ckn_ratio(talenti(flat), flat):.8f} "
      f"vs sharp constant {sharp_sobolev_constant(3):.8f}")

P = Params(3, 1.0, 0.0, 0.6)
print(f"weighted whole-space constant from probes: {measure_ckn_constant(P):.5f}")

f = bump(2, 1.0)
for R in (0.1, 1.0, 10.0):
    rep = poincare_on_ball(f.scaled(1.0 / R), P, Ball(0.0, R))
    print(f"Poincare quotient on B_{R}: {rep.measured_constant:.10f}")

edges = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, 200)))
c = 0.5 * (edges[1:] + edges[:-1])
print("BMO norm of log|x|:",
      round(bmo_gamma(RadialField(values=np.log(c), edges=edges), P, Ball(0, 1), 3).bmo_norm, 4))
print("e =", round(math.e, 4))

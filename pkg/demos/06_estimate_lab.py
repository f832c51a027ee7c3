"""
Estimates on numerical solutions
================================

A bump datum evolves under the minimal Dirichlet problem (limit of
positive boundary floors).  We compute its minimal life time t*, then
check positivity and Harnack quotients on it before turning to the
smoothing estimate.
"""

import numpy as np

from wfde import MDP, Ball, Params, ProblemSpec, RadialField, build_grid, run
from wfde.estimates import (check_lower_bound, check_smoothing, harnack_triptych,
                            kappa_star, minimal_life_time, smoothing_discrimination)
from wfde.exact import separable

P = Params(3, 1.0, 0.0, 0.6)
g = build_grid(P, 0.0, 1.0, 192)
u0 = np.where(g.centers < 0.25, (1 - (g.centers / 0.25) ** 2) ** 2, 0.0)

ball = Ball(0.0, 0.125)
ks = kappa_star(P, Ball(0.0, 0.25))
t_star = minimal_life_time(RadialField(values=u0, edges=g.edges), P, Ball(0.0, 0.25), ks)
print(f"kappa_* = {ks:.3e}, t* = {t_star:.3e}")

tr = run(ProblemSpec(P, g, MDP(0.25), u0, t_star, t_star / 1000,
                     output_times=tuple(np.linspace(0, t_star, 41)[1:])))

lb = check_lower_bound(tr, ball, t_star)
print(f"positivity: inf over B_2R at 10 times > 0: {min(lb.context['infima']) > 0}")
for rep in harnack_triptych(tr, ball, 0.1, ks):
    print(f"{rep.name:<18} quotient {rep.measured_constant:.4f}")
sm = check_smoothing(tr, Ball(0.0, 0.25), 2.0, t_star)
print(f"smoothing constant {sm.measured_constant:.3e}")

# the critical integrability exponent separates failure from success
fast = Params(3, 1.0, 0.0, 0.25, p=2.0)
sol = separable(fast, 1.0)
for f in (0.8, 1.5):
    rep = smoothing_discrimination(sol, 0.5, f * fast.p_c, 0.5)
    print(f"p = {f} p_c: growth rate {rep.context['growth_rate']:.3f} "
          f"vs threshold {rep.context['threshold']:.3f} -> {'pass' if rep.passed else 'fail'}")

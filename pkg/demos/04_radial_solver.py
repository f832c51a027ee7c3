"""
Implicit radial solver
======================

Backward Euler in time with Newton on a three-point stencil.  Here the
exact boundary trace of the separable solution drives an annulus run and
the error halves twice per grid refinement.
"""

import numpy as np

from wfde import ExactTrace, Params, ProblemSpec, build_grid, detect_extinction, run, separable

P = Params(3, 1.0, 0.0, 0.25, p=2.0)
sol = separable(P, T=1.0)

errs = []
for n in (32, 64, 128):
    g = build_grid(P, 0.25, 1.0, n)
    h = 0.75 / n
    spec = ProblemSpec(P, g, ExactTrace(sol), sol.evaluate(0.0, g.centers), 1.2,
                       4 * h * h, adaptive=False, output_times=(0.5,),
                       stop_at_extinction=True)
    tr = run(spec)
    errs.append(np.max(np.abs(tr.at(0.5).values - sol.evaluate(0.5, g.centers))))
    print(f"n = {n:4d}: error at t = 0.5 is {errs[-1]:.3e}, "
          f"extinction at {detect_extinction(tr, spec=spec):.5f}")

print("observed orders:", np.round(np.log2(np.array(errs[:-1]) / errs[1:]), 3))

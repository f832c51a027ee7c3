"""
Exponents and admissible ranges
===============================

Every estimate is governed by a handful of numbers derived from
(N, gamma, beta, m, p).  This script prints them for a few parameter sets
and shows what happens when a set is out of range.
"""

from wfde import Params, RangeViolation, exponents, theta

# the good fast-diffusion range: m above m_c
good = Params(3, 1.0, 0.0, 0.6)
print(exponents(good))

# below m_c the integrability exponent p has to exceed p_c
fast = Params(3, 1.0, 0.0, 0.25, p=2.0)
e = exponents(fast)
print(f"m_c = {e.m_c:.4f}, p_c = {e.p_c:.4f}, theta_2 = {theta(fast, 2.0):.4f}")

try:
    Params(3, 1.0, 0.0, 0.25, p=1.2)
except RangeViolation as exc:
    print("rejected:", exc)

"""Simulation and estimate checking for u_t = |x|^gamma div(|x|^-beta grad u^m)."""

__version__ = "0.1.0"

from .params import (DomainError, ExponentSet, IterationExponents, Params,
                     RangeViolation, exponents, iteration_exponents, theta,
                     validate_params)
from .geometry import (Ball, Cylinder, CylinderKind, Scenario, classify_scenario,
                       h_sigma, make_cylinder, measure_sandwich_constants, mu,
                       rho, rho_inverse, standard_quasi_distance,
                       weighted_integral)
from .exact import (BarenblattSolution, RegimeError, SeparableSolution,
                    barenblatt, pde_residual, residual_order, separable)
from .solver import (MDP, DeltaMDP, ExactTrace, ProblemSpec, Snapshot,
                     Trajectory, WeightedGrid, ZeroFlux, build_grid,
                     detect_extinction, run, step_implicit)
from .reports import CheckReport, ConstantLedger
from .inequalities import (RadialField, bmo_gamma, ckn_on_ball, ckn_ratio,
                           herrero_pierre_constant, kappa10_test_function,
                           poincare_on_ball, reverse_holder,
                           sharp_sobolev_constant)
from .estimates import (HpQuantities, check_bmo_window, check_caccioppoli,
                        check_energy_lower, check_energy_upper,
                        check_extinction_bounds, check_herrero_pierre,
                        check_lower_bound, check_lp_stability, check_smoothing,
                        compute_Hp, harnack_quotient, harnack_triptych,
                        holder_exponent, kappa_star, measure_ledger,
                        minimal_life_time, smoothing_discrimination)
from .config import RunConfig

__all__ = [name for name in dir() if not name.startswith("_")]

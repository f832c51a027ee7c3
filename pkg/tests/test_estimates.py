import json
import math

import numpy as np
import pytest

from wfde import Params, ProblemSpec, ZeroFlux, build_grid, run
from wfde.estimates import (UNCONSTRAINED, RegularityError, ZeroDatum, ZeroInfimum,
                            check_bmo_window, check_caccioppoli, check_comparison,
                            check_energy_lower, check_energy_mid, check_energy_upper,
                            check_extinction_bounds, check_herrero_pierre,
                            check_l1_contraction, check_lower_bound, check_lp_stability,
                            check_lq_decay, check_smoothing, check_time_monotonicity,
                            compute_Hp, exact_trajectory, extinction_upper_bound,
                            harnack_quotient, harnack_triptych, harnack_window,
                            holder_exponent, kappa_p0, kappa_star, linear_holder_exponent,
                            lp_stability_constant, measure_ledger, minimal_life_time,
                            smooth_cutoff, smoothing_discrimination)
from wfde.exact import barenblatt, separable
from wfde.geometry import Ball, make_cylinder
from wfde.inequalities import RadialField, herrero_pierre_constant, measure_ckn_constant
from wfde.reports import ConstantLedger, reports_to_csv, reports_to_json
from wfde.solver import DomainError, Trajectory

from conftest import bump


def _field(fn, n=400, r_max=2.0):
    edges = np.linspace(0, r_max, n + 1)
    c = 0.5 * (edges[1:] + edges[:-1])
    return RadialField(values=fn(c), edges=edges)


def _constant_traj(params, value=2.0, n=160, times=(0.0, 0.5, 1.0)):
    g = build_grid(params, 0.0, 1.0, n)
    ts = np.asarray(times)
    return Trajectory(g, ts, np.full((len(ts), n), value))


class TestHp:
    def test_constant_datum_has_unit_Hp(self, good_params):
        q = compute_Hp(_field(lambda r: np.full_like(r, 3.0)), good_params,
                       Ball(0.0, 1.0), 2.0)
        assert q.H_p == pytest.approx(1.0, rel=1e-10)
        assert q.H_p_tilde == pytest.approx(2.0, rel=1e-10)

    def test_H1_is_geometric(self, good_params):
        ball = Ball(0.5, 0.25)
        a = compute_Hp(_field(lambda r: 1 + r), good_params, ball, 1.0).H_p
        b = compute_Hp(_field(lambda r: np.exp(-r)), good_params, ball, 1.0).H_p
        assert a == pytest.approx(b, rel=1e-10)

    def test_zero_datum(self, good_params):
        with pytest.raises(ZeroDatum):
            compute_Hp(_field(np.zeros_like), good_params, Ball(0, 1.0), 2.0)


class TestLifeTime:
    def test_homogeneity_in_amplitude(self, good_params):
        ball = Ball(0.0, 0.5)
        ks = kappa_star(good_params, ball)
        f = lambda r: np.exp(-r)
        t1 = minimal_life_time(_field(f), good_params, ball, ks)
        t2 = minimal_life_time(_field(lambda r: 8 * f(r)), good_params, ball, ks)
        assert t2 / t1 == pytest.approx(8 ** (1 - good_params.m), rel=1e-12)

    def test_kappa_star_from_herrero_pierre(self, good_params):
        ball = Ball(0.0, 1.0)
        k = herrero_pierre_constant(good_params, ball)
        assert kappa_star(good_params, ball) == pytest.approx(2 ** 0.6 / (5 * k))

    def test_zero_datum_gives_zero(self, good_params):
        assert minimal_life_time(_field(np.zeros_like), good_params, Ball(0, 1), 1.0) == 0.0


class TestSmoothing:
    def test_zero_solution(self, good_params):
        tr = _constant_traj(good_params, 0.0)
        rep = check_smoothing(tr, Ball(0, 0.25), 2.0, 0.5)
        assert rep.lhs == 0 and rep.measured_constant == 0 and rep.passed

    def test_installed_constant(self, mdp_run):
        rep = check_smoothing(mdp_run, Ball(0, 0.25), 2.0, 2e-4)
        assert rep.passed and rep.measured_constant > 0
        half = check_smoothing(mdp_run, Ball(0, 0.25), 2.0, 2e-4,
                               0.5 * rep.measured_constant, 0.5 * rep.measured_constant)
        assert not half.passed

    def test_ball_must_be_resolved(self, good_params):
        tr = _constant_traj(good_params, 1.0, n=32)
        with pytest.raises(DomainError):
            check_smoothing(tr, Ball(0, 0.25), 2.0, 0.5)

    def test_ball_must_fit(self, mdp_run):
        with pytest.raises(DomainError):
            check_smoothing(mdp_run, Ball(0, 0.75), 2.0, 2e-4)

    def test_discrimination_around_pc(self, very_fast_params):
        sol = separable(very_fast_params, 1.0)
        pc = very_fast_params.p_c
        assert not smoothing_discrimination(sol, 0.5, 0.8 * pc, 0.5).passed
        assert smoothing_discrimination(sol, 0.5, 1.5 * pc, 0.5).passed


class TestL1Lp:
    def test_herrero_pierre_same_time(self, mdp_run):
        k = herrero_pierre_constant(mdp_run.params, Ball(0, 0.25))
        rep = check_herrero_pierre(mdp_run, Ball(0, 0.25), 2e-4, 2e-4, k)
        assert rep.passed and rep.measured_constant == 0.0

    def test_herrero_pierre_both_directions(self, mdp_run):
        ball = Ball(0, 0.25)
        k = herrero_pierre_constant(mdp_run.params, ball)
        assert check_herrero_pierre(mdp_run, ball, 4e-4, 1e-4, k).passed
        assert check_herrero_pierre(mdp_run, ball, 1e-4, 4e-4, k).passed

    def test_lp_stability(self, mdp_run):
        K, cp = lp_stability_constant(mdp_run.params, 0.5, 0.25, 2.0)
        assert K > 0 and cp > 0
        assert check_lp_stability(mdp_run, 0.25, 0.5, 2.0, 4e-4, 1e-4).passed

    def test_lp_needs_p_above_one(self, good_params):
        with pytest.raises(RegularityError):
            lp_stability_constant(good_params, 1.0, 0.5, 1.0)


class TestEnergy:
    def test_constant_solution(self, good_params):
        tr = _constant_traj(good_params, 2.0, times=np.linspace(0, 1, 11))
        up = check_energy_upper(tr, 0.5, 0.25, 0.0, 0.3, 1.0, 2.0)
        assert up.passed and math.isfinite(up.measured_constant)
        lo = check_energy_lower(tr, 0.5, 0.25, 0.0, 0.3, 1.0, 0.5)
        assert lo.passed
        mid = check_energy_mid(tr, 0.5, 0.25, 0.0, 0.3, 1.0, 0.2)
        assert mid.passed

    def test_mid_range(self, good_params):
        tr = _constant_traj(good_params)
        with pytest.raises(RegularityError):
            check_energy_mid(tr, 0.5, 0.25, 0.0, 0.3, 1.0, 0.5)

    def test_positivity_required(self, good_params):
        tr = _constant_traj(good_params, 0.0)
        with pytest.raises(RegularityError):
            check_energy_lower(tr, 0.5, 0.25, 0.0, 0.3, 1.0, 0.5)

    def test_on_mdp_run(self, mdp_run):
        rep = check_energy_upper(mdp_run, 0.5, 0.25, 0.0, 1e-4, 4e-4, 2.0)
        assert rep.passed and rep.measured_constant > 0

    def test_caccioppoli(self, zero_flux_run):
        rep = check_caccioppoli(zero_flux_run, 0.5, 0.01, 0.05)
        assert rep.passed and 0 < rep.measured_constant <= 1 + 1e-3

    def test_caccioppoli_needs_positive(self, mdp_run):
        with pytest.raises(RegularityError):
            check_caccioppoli(mdp_run, 0.5, 1e-4, 4e-4)

    def test_cutoff_shape(self):
        psi, dpsi = smooth_cutoff(0.5, 1.0)
        assert psi(0.2) == 1.0 and psi(1.2) == 0.0
        r = np.linspace(0.5, 1.0, 201)
        num = np.gradient(psi(r), r)
        assert np.allclose(num[2:-2], dpsi(r)[2:-2], atol=1e-3)


class TestLowerBound:
    def test_mdp_run(self, mdp_run):
        ball = Ball(0, 0.125)
        ks = kappa_star(mdp_run.params, ball)
        u0 = RadialField(values=mdp_run.values[0], edges=mdp_run.grid.edges)
        ts = minimal_life_time(u0, mdp_run.params, ball, ks)
        rep = check_lower_bound(mdp_run, ball, ts)
        assert rep.passed and rep.measured_constant > 0
        assert min(rep.context["infima"]) > 0

    def test_vacuous_for_zero_datum(self, good_params):
        rep = check_lower_bound(_constant_traj(good_params, 0.0), Ball(0, 0.25), 0.0)
        assert rep.passed and rep.context["vacuous"]

    def test_domain(self, mdp_run):
        with pytest.raises(DomainError):
            check_lower_bound(mdp_run, Ball(0, 0.5), 1e-4)


class TestExtinction:
    def test_rate_has_factor_m(self, very_fast_params):
        k = kappa_p0(very_fast_params, 2.0, 1.0)
        assert k == pytest.approx(4 * 0.25 * 1 * 0.75 / 1.25 ** 2)

    def test_bracket_on_dirichlet_bump(self, very_fast_params):
        g = build_grid(very_fast_params, 0.0, 1.0, 96)
        from wfde.solver import MDP
        u0 = bump(g.centers, 0.25)
        tr = run(ProblemSpec(very_fast_params, g, MDP(0.25), u0, 0.3, 1e-5,
                             dt_max=1e-3, stop_at_extinction=True))
        S = measure_ckn_constant(very_fast_params)
        ball = Ball(0.0, 0.25)
        rep = check_extinction_bounds(tr, ball, 2.0, S, kappa_star(very_fast_params, ball))
        assert rep.passed, rep.context
        assert 0.12 < rep.context["T"] < 0.14

    def test_upper_bound_scaling(self, very_fast_params):
        g = build_grid(very_fast_params, 0.0, 1.0, 64)
        u0 = bump(g.centers, 0.5)
        a = extinction_upper_bound(very_fast_params, u0, g, 2.0, 0.6)
        b = extinction_upper_bound(very_fast_params, 4 * u0, g, 2.0, 0.6)
        assert b / a == pytest.approx(4 ** 0.75, rel=1e-12)

    def test_lq_decay_same_time(self, mdp_run):
        S = measure_ckn_constant(mdp_run.params)
        with pytest.raises(DomainError):
            check_lq_decay(mdp_run, 1.0, S, 0.0, 1e-4)


class TestMonotonicity:
    def test_dirichlet_run(self, mdp_run):
        assert check_time_monotonicity(mdp_run).passed

    def test_growing_fails(self, good_params):
        g = build_grid(good_params, 0.0, 1.0, 8)
        ts = np.array([0.0, 1.0, 2.0])
        tr = Trajectory(g, ts, np.outer([0.0, 1.0, 10.0], np.ones(8)))
        assert not check_time_monotonicity(tr).passed

    def test_comparison_and_contraction(self, good_params):
        g = build_grid(good_params, 0.0, 1.0, 64)
        a = run(ProblemSpec(good_params, g, ZeroFlux(), 1 + 0 * g.centers, 0.01, 1e-3,
                            adaptive=False))
        b = run(ProblemSpec(good_params, g, ZeroFlux(), 2 + np.cos(3 * g.centers), 0.01,
                            1e-3, adaptive=False))
        assert check_comparison(a, b).passed
        assert not check_comparison(b, a).passed
        assert check_l1_contraction(a, b).passed


class TestHarnack:
    def test_constant_is_one(self, good_params):
        tr = _constant_traj(good_params, 3.0)
        for th in (-0.25, 0.0, 0.25):
            rep = harnack_quotient(tr, Ball(0, 0.125), 0.5, th)
            assert rep.measured_constant == pytest.approx(1.0, abs=1e-12)

    def test_triptych_on_mdp(self, mdp_run):
        ks = kappa_star(mdp_run.params, Ball(0, 0.25))
        reps = harnack_triptych(mdp_run, Ball(0, 0.125), 0.1, ks)
        assert [r.name for r in reps] == ["harnack_backward", "harnack_elliptic",
                                          "harnack_forward"]
        assert all(r.passed and 1 <= r.measured_constant < 1e6 for r in reps)
        a, b = harnack_window(mdp_run, 0.125, 0.1, ks)
        assert b == pytest.approx(10 * a)

    def test_outside_window(self, mdp_run):
        with pytest.raises(DomainError):
            harnack_quotient(mdp_run, Ball(0, 0.125), 1e-4, 0.0, (2e-4, 3e-4))

    def test_zero_infimum(self, good_params):
        with pytest.raises(ZeroInfimum):
            harnack_quotient(_constant_traj(good_params, 0.0), Ball(0, 0.1), 0.5, 0.0)


class TestHolder:
    def test_constant_unconstrained(self, good_params):
        tr = _constant_traj(good_params)
        cyl = make_cylinder(good_params, "full", 0.5, Ball(0.0, 0.1))
        assert holder_exponent(tr, cyl) == UNCONSTRAINED

    def test_barenblatt_at_origin(self, good_params):
        sol = barenblatt(good_params, D=2.0)
        cyl = make_cylinder(good_params, "full", 1.0, Ball(0.0, 0.01))
        assert holder_exponent(sol, cyl) == pytest.approx(1.0, abs=0.05)

    def test_smooth_away_from_origin(self, good_params):
        sol = barenblatt(good_params, D=2.0)
        cyl = make_cylinder(good_params, "full", 1.0, Ball(0.5, 0.01))
        assert holder_exponent(sol, cyl) > 0.9

    def test_linear_formula(self):
        a = linear_holder_exponent(2.0, 4.0, 1.0, 1.0)
        assert a == pytest.approx(math.log(4 / 3) / math.log(4))
        with pytest.raises(DomainError):
            linear_holder_exponent(1.5, 4.0, 1.0, 1.0)


class TestBMOWindow:
    def test_mdp_slice(self, mdp_run):
        from wfde.inequalities import measure_john_nirenberg
        k6 = measure_john_nirenberg(mdp_run.params)
        rep = check_bmo_window(mdp_run, Ball(0, 0.125), 2e-4, k6, math.e)
        assert rep.passed
        assert rep.context["bmo"] > 0

    def test_constant_slice(self, good_params):
        rep = check_bmo_window(_constant_traj(good_params), Ball(0, 0.5), 0.5, 1.5, math.e)
        assert rep.passed and rep.context["bmo"] == pytest.approx(0, abs=1e-12)


class TestReportsAndLedger:
    def test_report_serialisation(self, mdp_run):
        reps = [check_time_monotonicity(mdp_run),
                check_smoothing(mdp_run, Ball(0, 0.25), 2.0, 2e-4)]
        doc = json.loads(reports_to_json(reps))
        assert [d["name"] for d in doc] == ["time_monotonicity", "smoothing"]
        rows = reports_to_csv(reps).strip().splitlines()
        assert rows[0] == "name,lhs,rhs,constant,pass,context_hash" and len(rows) == 3

    def test_ledger_contents(self, good_params):
        led = measure_ledger(good_params)
        names = led.names()
        assert len(names) >= 14
        for n in ("kappa13", "kappa6", "kappa7", "kappa10_prime", "kappa_star", "A"):
            assert n in names
        assert led["kappa13"] == led["S_bar"]
        again = ConstantLedger.from_json(led.to_json())
        assert again.names() == names and again["kappa6"] == led["kappa6"]

    def test_ledger_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ConstantLedger().record("x", -1.0, "test")

"""Acceptance criteria, each with its tolerance and wall-clock limit."""

import math
import time

import numpy as np
import pytest

from wfde import (MDP, ExactTrace, Params, ProblemSpec, ZeroFlux, build_grid,
                  detect_extinction, run)
from wfde.estimates import (check_bmo_window, check_comparison, check_extinction_bounds,
                            check_lower_bound, compute_Hp, harnack_quotient,
                            harnack_triptych, holder_exponent, kappa_star,
                            minimal_life_time, smoothing_discrimination)
from wfde.exact import barenblatt, residual_order, separable
from wfde.geometry import Ball, Scenario, make_cylinder, measure_sandwich_constants
from wfde.inequalities import (RadialField, bump as bump_probe, ckn_ratio, cosine,
                               gaussian, measure_ckn_constant, measure_john_nirenberg,
                               poincare_on_ball, sharp_sobolev_constant, talenti)

from conftest import bump

VERY_FAST = Params(3, 1.0, 0.0, 0.25, p=2.0)
GOOD = Params(3, 1.0, 0.0, 0.6)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _field(grid, values):
    return RadialField(values=np.asarray(values), edges=grid.edges)


@pytest.fixture(scope="module")
def trace_runs():
    """Separable solution on the annulus [1/4, 1] with exact boundary traces."""
    sol = separable(VERY_FAST, 1.0)
    out = {}
    t0 = time.perf_counter()
    for n in (64, 128, 256):
        g = build_grid(VERY_FAST, 0.25, 1.0, n)
        h = 0.75 / n
        spec = ProblemSpec(VERY_FAST, g, ExactTrace(sol), sol.evaluate(0.0, g.centers),
                           1.2, 4 * h * h, adaptive=False, output_times=(0.5,),
                           stop_at_extinction=True)
        out[n] = (spec, run(spec))
    return sol, out, time.perf_counter() - t0


def test_criterion_01_separable_residual(acceptance):
    with Clock() as c:
        order, res = residual_order(separable(VERY_FAST, 1.0), 0.5, 0.6, 0.05)
    assert acceptance(1, order >= 2.0, f"separable residual order {order:.3f} >= 2",
                      c.elapsed, 1.0)


def test_criterion_02_trace_convergence(trace_runs, acceptance):
    sol, runs, elapsed = trace_runs
    with Clock() as c:
        errs = []
        for n, (_, tr) in runs.items():
            u = tr.at(0.5).values
            errs.append(np.max(np.abs(u - sol.evaluate(0.5, tr.grid.centers))))
        hs = 0.75 / np.array(list(runs))
        order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    detail = (f"L-inf order {order:.3f} >= 1.8 at T/2 "
              f"(errors {', '.join(f'{e:.2e}' for e in errs)})")
    assert acceptance(2, order >= 1.8, detail, elapsed + c.elapsed, 30.0)


def test_criterion_03_extinction(trace_runs, acceptance):
    sol, runs, elapsed = trace_runs
    with Clock() as c:
        spec, tr = runs[256]
        T = detect_extinction(tr, spec=spec)
        close = abs(T - sol.T) <= 0.02 * sol.T
        # lower bound on the trace run: an admissible ball inside the annulus
        ball = Ball(0.625, 0.039)
        ks = kappa_star(VERY_FAST, ball)
        t_star = minimal_life_time(_field(tr.grid, tr.values[0]), VERY_FAST, ball, ks)
        # the upper bound needs zero boundary data, so the full bracket is
        # checked on a Dirichlet run with the same exponents
        g = build_grid(VERY_FAST, 0.0, 1.0, 128)
        dr = run(ProblemSpec(VERY_FAST, g, MDP(0.25), bump(g.centers, 0.25), 0.3, 1e-5,
                             dt_max=1e-4, stop_at_extinction=True))
        S = measure_ckn_constant(VERY_FAST)
        b = Ball(0.0, 0.25)
        rep = check_extinction_bounds(dr, b, 2.0, S, kappa_star(VERY_FAST, b))
    ok = close and t_star <= T and rep.passed
    detail = (f"trace T = {T:.5f} vs {sol.T} (<= 2%), t* = {t_star:.2e} <= T; "
              f"Dirichlet bump {rep.context['t_star']:.2e} <= {rep.context['T']:.4f} "
              f"<= {rep.context['upper']:.4f}")
    assert acceptance(3, ok, detail, elapsed + c.elapsed, 60.0)


def test_criterion_04_smoothing_threshold(acceptance):
    sol = separable(VERY_FAST, 1.0)
    pc = VERY_FAST.p_c
    with Clock() as c:
        verdicts = {f: smoothing_discrimination(sol, 0.5, f * pc, 0.5).passed
                    for f in (0.6, 0.8, 0.95, 1.05, 1.5, 2.0)}
    ok = all(not verdicts[f] for f in (0.6, 0.8, 0.95)) and \
        all(verdicts[f] for f in (1.05, 1.5, 2.0))
    detail = "smoothing " + ", ".join(
        f"{f}p_c:{'pass' if v else 'fail'}" for f, v in verdicts.items())
    assert acceptance(4, ok, detail, c.elapsed, 30.0)


def test_criterion_05_conservation_and_comparison(acceptance):
    rng = np.random.default_rng(20261016)
    with Clock() as c:
        g = build_grid(GOOD, 0.0, 1.0, 64)
        u0 = 1.0 + 0.5 * np.cos(np.pi * g.centers)
        tr = run(ProblemSpec(GOOD, g, ZeroFlux(), u0, 1.0, 1e-3, adaptive=False))
        steps = len(tr.diagnostics["dt"])
        mass = tr.mass()
        drift = float(np.max(np.abs(mass - mass[0])) / mass[0])
        gs = build_grid(GOOD, 0.0, 1.0, 32)
        worst = -math.inf
        for _ in range(50):
            a = np.abs(rng.normal(1.0, 0.5, gs.n)) + 0.1
            b = a + rng.uniform(0.0, 1.0, gs.n)
            lo = run(ProblemSpec(GOOD, gs, ZeroFlux(), a, 0.02, 1e-3, adaptive=False))
            hi = run(ProblemSpec(GOOD, gs, ZeroFlux(), b, 0.02, 1e-3, adaptive=False))
            rep = check_comparison(lo, hi, 1e-9)
            worst = max(worst, rep.measured_constant)
    ok = steps >= 1000 and drift <= 1e-12 and worst <= 1e-9
    detail = (f"mass drift {drift:.1e} over {steps} steps; "
              f"worst comparison excess {worst:.1e} on 50 pairs")
    assert acceptance(5, ok, detail, c.elapsed, 60.0)


def _lower_bound_constant(delta):
    g = build_grid(GOOD, 0.0, 1.0, 192)
    u0 = bump(g.centers, 0.25)
    ball = Ball(0.0, 0.125)
    ks = kappa_star(GOOD, ball)
    t_star = minimal_life_time(_field(g, u0), GOOD, ball, ks)
    outs = tuple(np.linspace(0, t_star, 41)[1:])
    tr = run(ProblemSpec(GOOD, g, MDP(0.25, delta), u0, t_star, t_star / 1000,
                         output_times=outs))
    return check_lower_bound(tr, ball, t_star, n_times=10), t_star


def test_criterion_06_positivity(acceptance):
    with Clock() as c:
        first, t_star = _lower_bound_constant(1e-12)
        again, _ = _lower_bound_constant(1e-12)
        finer, _ = _lower_bound_constant(1e-13)
    k = first.measured_constant
    positive = min(first.context["infima"]) > 0 and len(first.context["infima"]) == 10
    rerun = abs(again.measured_constant - k) / k
    dshift = abs(finer.measured_constant - k) / k
    ok = positive and math.isfinite(k) and rerun <= 1e-4 and dshift <= 1e-4 and first.passed
    detail = (f"inf over B_2R > 0 at 10 times in (0, {t_star:.2e}]; kappa = {k:.6g}, "
              f"rerun shift {rerun:.1e}, floor shift {dshift:.1e}")
    assert acceptance(6, ok, detail, c.elapsed, 120.0)


HARNACK_DATA = {
    # name: (profile on cell centers, minimal Dirichlet radius)
    "bump": (lambda r: bump(r, 0.25), 0.25),
    "narrow": (lambda r: 10 * bump(r, 0.05), 0.05),
    "ring": (lambda r: np.where(np.abs(r - 0.15) < 0.05, 1.0, 0.0), 0.2),
    "plateau": (lambda r: np.where(r < 0.2, 1.0, 0.0), 0.2),
    "steep": (lambda r: 3 * bump(r, 0.25, k=6), 0.25),
}


def test_criterion_07_harnack(acceptance):
    R = 0.125
    with Clock() as c:
        g = build_grid(GOOD, 0.0, 1.0, 192)
        ks = kappa_star(GOOD, Ball(0.0, 2 * R))
        quotients = {}
        for name, (prof, R_mdp) in HARNACK_DATA.items():
            u0 = prof(g.centers)
            t_star = minimal_life_time(_field(g, u0), GOOD, Ball(0.0, 2 * R), ks)
            outs = tuple(np.linspace(0, t_star, 41)[1:])
            tr = run(ProblemSpec(GOOD, g, MDP(R_mdp), u0, t_star, t_star / 1000,
                                 output_times=outs))
            reps = harnack_triptych(tr, Ball(0.0, R), 0.1, ks)
            quotients[name] = [r.measured_constant for r in reps]
        const = run(ProblemSpec(GOOD, g, ZeroFlux(), np.full(g.n, 2.5), 0.1, 1e-2,
                                adaptive=False))
        q1 = harnack_quotient(const, Ball(0.0, R), 0.05, 0.0).measured_constant
    finite = all(np.isfinite(q).all() for q in quotients.values())
    ok = finite and abs(q1 - 1.0) <= 1e-12
    detail = ("max(back, ell, fwd) " + ", ".join(
        f"{k}:{max(v):.3g}" for k, v in quotients.items())
        + f"; constant solution elliptic {q1:.15f}")
    assert acceptance(7, ok, detail, c.elapsed, 120.0)


def test_criterion_08_barenblatt_holder(acceptance):
    with Clock() as c:
        sol = barenblatt(GOOD, D=2.0)
        cyl = make_cylinder(GOOD, "full", 1.0, Ball(0.0, 0.01))
        alpha = holder_exponent(sol, cyl)
    assert acceptance(8, abs(alpha - 1.0) <= 0.05,
                      f"Hoelder exponent at x = 0 is {alpha:.4f} (1 +- 0.05)",
                      c.elapsed, 10.0)


def test_criterion_09_inequalities(acceptance):
    unweighted = Params(3, 0.0, 0.0, 0.5)
    with Clock() as c:
        ratio = ckn_ratio(talenti(unweighted), unweighted)
        sharp = sharp_sobolev_constant(3)
        sob_err = abs(ratio - sharp) / sharp
        poin_err = 0.0
        for f in (bump_probe(2, 1.0), cosine(1.0), gaussian(4.0)):
            base = poincare_on_ball(f, GOOD, Ball(0.0, 1.0)).measured_constant
            for R in (0.1, 10.0):
                got = poincare_on_ball(f.scaled(1.0 / R), GOOD, Ball(0.0, R)).measured_constant
                poin_err = max(poin_err, abs(got - base) / base)
        g = build_grid(GOOD, 0.0, 1.0, 192)
        u0 = bump(g.centers, 0.25)
        ks = kappa_star(GOOD, Ball(0.0, 0.25))
        t_star = minimal_life_time(_field(g, u0), GOOD, Ball(0.0, 0.25), ks)
        tr = run(ProblemSpec(GOOD, g, MDP(0.25), u0, t_star, t_star / 1000,
                             output_times=tuple(np.linspace(0, t_star, 11)[1:])))
        k6 = measure_john_nirenberg(GOOD)
        rh = [check_bmo_window(tr, Ball(0.0, 0.125), f * t_star, k6, math.e)
              for f in (0.3, 0.6, 1.0)]
    ok = sob_err <= 5e-3 and poin_err <= 1e-6 and all(r.passed for r in rh)
    detail = (f"Talenti/sharp - 1 = {sob_err:.1e}; Poincare scale drift {poin_err:.1e}; "
              f"reverse Hoelder on 3 slices: "
              + ", ".join(f"{r.measured_constant:.4f}" for r in rh))
    assert acceptance(9, ok, detail, c.elapsed, 60.0)


def test_criterion_10_geometry_constants(acceptance):
    with Clock() as c:
        radii = tuple(np.geomspace(0.1, 10.0, 9))
        spread = 0.0
        for sc in (Scenario.S1, Scenario.S2, Scenario.S3):
            per = measure_sandwich_constants(GOOD, radii, (sc,))["per_radius"]
            for name in ("kappa16", "kappa18", "kappa19"):
                vals = np.array([per[R][name] for R in radii])
                med = float(np.median(vals))
                spread = max(spread, float(np.max(np.abs(vals - med)) / med))
        edges = np.linspace(0.0, 2.0, 401)
        c_ = 0.5 * (edges[1:] + edges[:-1])
        u = 1.0 + np.cos(3 * c_) ** 2
        worst = 0.0
        for x0 in (0.0, 0.25, 1.2):
            base = compute_Hp(RadialField(values=u, edges=edges), GOOD,
                              Ball(x0, 0.3), 2.0).H_p_tilde
            for lam, amp in ((0.1, 7.0), (10.0, 0.01)):
                f = RadialField(values=amp * u, edges=lam * edges)
                got = compute_Hp(f, GOOD, Ball(lam * x0, lam * 0.3), 2.0).H_p_tilde
                worst = max(worst, abs(got - base) / base)
    ok = spread <= 0.2 and worst <= 1e-9
    detail = (f"kappa16/18/19 spread {spread:.1e} (<= 20%) over R in [0.1, 10] "
              f"x 3 scenarios; H~_p scaling drift {worst:.1e}")
    assert acceptance(10, ok, detail, c.elapsed, 30.0)

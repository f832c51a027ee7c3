"""Both sides of the quantitative estimates, evaluated on trajectories.

Trajectories come from the radial solver, so balls are centered at the
origin unless stated otherwise.  Sup and inf over a ball use the cells whose
centers lie inside it; integrals over B_R(0) use exact partial cell masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Ball, h_sigma, mu
from .inequalities import (RadialField, bmo_gamma, herrero_pierre_constant,
                           reverse_holder)
from .params import DomainError, Params, theta
from .reports import CheckReport, ConstantLedger
from .solver import Snapshot, Trajectory, build_grid, detect_extinction


class ZeroDatum(ValueError):
    pass


class RegularityError(ValueError):
    pass


class ZeroInfimum(RuntimeError):
    pass


class InsufficientSamples(ValueError):
    pass


UNCONSTRAINED = math.inf


# ------------------------------------------------------------------ helpers

def _datum_field(datum, grid=None) -> RadialField:
    if isinstance(datum, RadialField):
        return datum
    if isinstance(datum, Snapshot):
        if grid is None:
            raise DomainError("a Snapshot datum needs its grid")
        return RadialField(values=datum.values, edges=grid.edges)
    if callable(datum):
        return RadialField(func=datum)
    raise DomainError(f"unsupported datum {type(datum).__name__}")


def _ball_integral(grid, values, R: float, fn=None, alpha=None) -> float:
    """Integral over B_R(0) of fn(u)|x|^-alpha for cell values u."""
    w = grid.ball_masses(R, alpha)
    v = values if fn is None else fn(values)
    return float(w @ v)


MIN_CELLS_IN_BALL = 16


def _in_ball(grid, R: float) -> np.ndarray:
    mask = grid.centers < R
    if not np.any(mask):
        raise DomainError(f"no cell center inside B_{R}")
    return mask


def _resolved_ball(grid, R: float) -> np.ndarray:
    """Cell mask of B_R; sup/inf checks need MIN_CELLS_IN_BALL cells there."""
    mask = _in_ball(grid, R)
    if mask.sum() < MIN_CELLS_IN_BALL:
        raise DomainError(f"B_{R:g} holds {mask.sum()} cells, "
                          f"need at least {MIN_CELLS_IN_BALL}")
    return mask


def _require_origin(ball: Ball):
    if ball.center_norm != 0.0:
        raise DomainError("trajectory checks use balls centered at the origin")


def _time_integral(times, vals) -> float:
    times = np.asarray(times, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if len(times) < 2:
        return 0.0
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times)))


def _times_in(traj: Trajectory, a: float, b: float) -> np.ndarray:
    eps = 1e-12 * max(1.0, abs(b))
    return np.nonzero((traj.times >= a - eps) & (traj.times <= b + eps))[0]


# -------------------------------------------------------------- H_p and t*

@dataclass(frozen=True)
class HpQuantities:
    H_p: float
    H_p_tilde: float
    p: float
    ball: Ball


def compute_Hp(datum, params: Params, ball: Ball, p: float,
               grid=None) -> HpQuantities:
    """H_p and H~_p = 1 + (|x0|/R max 1)^{beta-gamma} H_p^{1-m} of a datum."""
    fld = _datum_field(datum, grid)
    N, g, m, sig = params.N, params.gamma, params.m, params.sigma
    mg = mu(g, ball, N)
    mg0 = mu(g, Ball(0.0, ball.radius), N)
    l1 = fld.integral(ball, g, N)
    if not l1 > 0:
        raise ZeroDatum("datum vanishes on the ball")
    lp = fld.integral(ball, g, N, lambda v: np.abs(v) ** p) ** (1.0 / p)
    th = theta(params, p)
    bracket = mg * lp / (mg ** (1.0 / p) * l1)
    Hp = (mg / mg0) ** (sig * th) * bracket ** (p * sig * th)
    Ht = 1.0 + max(ball.center_norm / ball.radius, 1.0) ** (params.beta - g) * Hp ** (1.0 - m)
    return HpQuantities(float(Hp), float(Ht), p, ball)


def kappa_star(params: Params, ball: Ball, kappa10p: float | None = None) -> float:
    """kappa_* = 2^m / (5 kappa10')."""
    k = herrero_pierre_constant(params, ball) if kappa10p is None else kappa10p
    return 2.0 ** params.m / (5.0 * k)


def minimal_life_time(datum, params: Params, ball: Ball,
                      kappa_star_value: float, grid=None) -> float:
    """t* = kappa_* R^sigma (||u0||_{L^1_g(B_R)} / mu_g(B_R))^{1-m}."""
    fld = _datum_field(datum, grid)
    l1 = fld.integral(ball, params.gamma, params.N)
    if l1 <= 0:
        return 0.0
    avg = l1 / mu(params.gamma, ball, params.N)
    return kappa_star_value * ball.radius ** params.sigma * avg ** (1.0 - params.m)


# --------------------------------------------------------------- smoothing

def smoothing_terms(traj: Trajectory, R: float, p: float, t: float):
    """(sup_{B_R} u(t), term1, term2) of the local smoothing estimate."""
    params = traj.params
    grid = traj.grid
    if 2.0 * R > grid.r_max * (1 + 1e-12):
        raise DomainError("B_2R must lie inside the computational domain")
    if not t > traj.times[0]:
        raise DomainError("t must be positive")
    N, g, b, m, sig = params.N, params.gamma, params.beta, params.m, params.sigma
    u_t = traj.at(t).values
    lhs = float(np.max(u_t[_resolved_ball(grid, R)]))
    lp_p = _ball_integral(grid, traj.values[0], 2.0 * R, lambda v: v ** p)
    th = theta(params, p)
    t_rel = t - traj.times[0]
    term1 = t_rel ** (-(N - g) * th) * lp_p ** (sig * th) if lp_p > 0 else 0.0
    ball = Ball(0.0, R)
    ratio = mu(b, ball, N) / mu(g, ball, N)
    term2 = (ratio * t_rel / R ** 2) ** (1.0 / (1.0 - m))
    return lhs, term1, term2


def check_smoothing(traj: Trajectory, ball: Ball, p: float, t: float,
                    kappa1: float | None = None,
                    kappa2: float | None = None) -> CheckReport:
    """sup_{B_R} u(t) <= k1 t^{-(N-g)th_p} ||u0||_{p,B_2R}^{p sigma th_p}
    + k2 ((mu_b/mu_g) t/R^2)^{1/(1-m)}.

    The measured constant is the smallest k with k1 = k2 = k that passes.
    """
    _require_origin(ball)
    lhs, t1, t2 = smoothing_terms(traj, ball.radius, p, t)
    denom = t1 + t2
    lam = lhs / denom if denom > 0 else (0.0 if lhs == 0 else math.inf)
    if kappa1 is None or kappa2 is None:
        rhs = lam * denom
        ok = math.isfinite(lam)
    else:
        rhs = kappa1 * t1 + kappa2 * t2
        ok = lhs <= rhs * (1 + 1e-9)
    return CheckReport("smoothing", lhs, rhs, lam, ok,
                       {"ball": ball, "p": p, "t": t, "term1": t1, "term2": t2,
                        "kappa1": kappa1, "kappa2": kappa2,
                        "grid_id": traj.grid.grid_id})


def exact_trajectory(solution, grid, times) -> Trajectory:
    """Trajectory of an exact solution sampled on grid cell centers."""
    times = np.asarray(times, dtype=float)
    vals = np.array([solution.evaluate(t, grid.centers) for t in times])
    return Trajectory(grid, times, vals, bc="exact")


def smoothing_discrimination(solution, R: float, p: float, t: float,
                             cutoffs=None, n_cells: int = 240) -> CheckReport:
    """Does the smoothing estimate hold with a constant independent of the
    resolution near the origin?

    The exact solution is sampled on grids of B_2R(0) minus B_{r_in}(0) for a
    decreasing sequence of inner radii r_in.  The smallest passing constant
    stays bounded when the estimate holds and blows up when it fails; the
    verdict compares the growth rate of log(constant) against log(1/r_in)
    with half the blow-up rate sigma/(1-m) of the sup.
    """
    params = solution.params
    if cutoffs is None:
        cutoffs = 2.0 * R * np.geomspace(1e-2, 1e-8, 7)
    t0 = 0.0
    lams, reps = [], []
    for r_in in cutoffs:
        # widths grow geometrically away from r_in
        ratio = (2.0 * R / r_in) ** (1.0 / n_cells)
        grid = build_grid(params, r_in, 2.0 * R, n_cells, "geometric", ratio)
        tr = exact_trajectory(solution, grid, [t0, t])
        rep = check_smoothing(tr, Ball(0.0, R), p, t)
        lams.append(rep.measured_constant)
        reps.append(rep)
    x = np.log(1.0 / np.asarray(cutoffs))
    y = np.log(np.asarray(lams))
    slope = float(np.polyfit(x[-3:], y[-3:], 1)[0])
    threshold = 0.5 * params.sigma / (1.0 - params.m)
    last = reps[-1]
    return CheckReport("smoothing_discrimination", last.lhs, last.rhs, lams[-1],
                       slope < threshold,
                       {"p": p, "p_c": params.p_c, "t": t, "R": R,
                        "cutoffs": list(map(float, cutoffs)),
                        "constants": list(map(float, lams)),
                        "growth_rate": slope, "threshold": threshold})


# ------------------------------------------------------- L^1 and L^p control

def check_herrero_pierre(traj: Trajectory, ball: Ball, t: float, tau: float,
                         kappa10p: float) -> CheckReport:
    """||u(t)||_{1,B_R}^{1-m} <= ||u(tau)||_{1,B_2R}^{1-m}
    + kappa10' mu_g(B_R)^{1-m} |t-tau| / R^sigma."""
    _require_origin(ball)
    params, grid = traj.params, traj.grid
    R = ball.radius
    if 2.0 * R > grid.r_max * (1 + 1e-12):
        raise DomainError("B_2R must lie inside the computational domain")
    m = params.m
    a = _ball_integral(grid, traj.at(t).values, R) ** (1.0 - m)
    b = _ball_integral(grid, traj.at(tau).values, 2.0 * R) ** (1.0 - m)
    scale = mu(params.gamma, ball, params.N) ** (1.0 - m) * abs(t - tau) / R ** params.sigma
    rhs = b + kappa10p * scale
    measured = max(a - b, 0.0) / scale if scale > 0 else 0.0
    return CheckReport("herrero_pierre", a, rhs, measured,
                       a <= rhs * (1 + 1e-9) + 1e-300,
                       {"ball": ball, "t": t, "tau": tau, "constant": kappa10p})


def lp_stability_constant(params: Params, R0: float, R1: float, p: float,
                          center_norm: float = 0.0) -> tuple[float, float]:
    """(K, c_p) for the local L^p stability estimate.

    K is what the energy argument gives for the cut-off psi = phi^k,
    phi linear from 1 on B_R1 to 0 on the sphere of radius R0, k = p/(1-m):
    K = 2m(1-m)/(p-1) k^2 (R0-R1)^-2 mu_{-w}(annulus)^{(1-m)/p},
    w = (g(p+m-1) - b p)/(1-m).  c_p is K divided by
    h_sigma/(R0-R1)^sigma mu_g(annulus)^{(1-m)/p}.
    """
    if not p > 1:
        raise RegularityError("L^p stability needs p > 1")
    N, g, b, m = params.N, params.gamma, params.beta, params.m
    if center_norm != 0.0:
        raise DomainError("only annuli centered at the origin are supported")
    w = (g * (p + m - 1.0) - b * p) / (1.0 - m)
    k = p / (1.0 - m)
    ann = mu(-w, Ball(0.0, R0), N) - mu(-w, Ball(0.0, R1), N)
    K = 2.0 * m * (1.0 - m) / (p - 1.0) * k * k * (R0 - R1) ** -2 * ann ** ((1.0 - m) / p)
    ann_g = mu(g, Ball(0.0, R0), N) - mu(g, Ball(0.0, R1), N)
    shape = h_sigma(params, R0, R1, center_norm) / (R0 - R1) ** params.sigma \
        * ann_g ** ((1.0 - m) / p)
    return K, K / shape


def check_lp_stability(traj: Trajectory, R1: float, R0: float, p: float,
                       t: float, tau: float, K: float | None = None) -> CheckReport:
    """[int_{B_R1} u^p(t)]^{(1-m)/p} <= [int_{B_R0} u^p(tau)]^{(1-m)/p} + K (t-tau)."""
    if t < tau:
        raise DomainError("need t >= tau")
    params, grid = traj.params, traj.grid
    if R0 > grid.r_max * (1 + 1e-12):
        raise DomainError("B_R0 must lie inside the computational domain")
    if K is None:
        K = lp_stability_constant(params, R0, R1, p)[0]
    e = (1.0 - params.m) / p
    a = _ball_integral(grid, traj.at(t).values, R1, lambda v: v ** p) ** e
    b = _ball_integral(grid, traj.at(tau).values, R0, lambda v: v ** p) ** e
    rhs = b + K * (t - tau)
    measured = max(a - b, 0.0) / (t - tau) if t > tau else 0.0
    return CheckReport("lp_stability", a, rhs, measured, a <= rhs * (1 + 1e-9) + 1e-300,
                       {"R1": R1, "R0": R0, "p": p, "t": t, "tau": tau, "K": K})


# ---------------------------------------------------------- energy estimates

def _dirichlet_form(grid, g_vals, R: float, weight=None) -> float:
    """sum over edges inside B_R of tau (g_{i+1}-g_i)^2 (times weight at edge)."""
    inner = grid.edges[1:-1]
    mask = inner < R
    d = np.diff(g_vals) ** 2 * grid.trans
    if weight is not None:
        d = d * weight(inner)
    return float(np.sum(d[mask]))


def _energy_sides(traj, R, R1, times_lhs, times_rhs, lhs_kind, power_lhs,
                  grad_power, rhs_powers):
    grid = traj.grid
    i_l = times_lhs
    if lhs_kind == "sup":
        first = max(_ball_integral(grid, traj.values[i], R1, lambda v: v ** power_lhs)
                    for i in i_l)
    else:
        first = _ball_integral(grid, traj.values[i_l[0]], R1, lambda v: v ** power_lhs)
    grads = [_dirichlet_form(grid, traj.values[i] ** grad_power, R1) for i in i_l]
    second = _time_integral(traj.times[i_l], grads)
    dens = [sum(_ball_integral(grid, traj.values[i], R, lambda v, q=q: v ** q)
                for q in rhs_powers) for i in times_rhs]
    third = _time_integral(traj.times[times_rhs], dens)
    return first + second, third


def _energy_report(name, traj, R, R1, T_gap, lhs, integ, const, extra):
    params = traj.params
    geo = h_sigma(params, R, R1, 0.0) / (R - R1) ** params.sigma + 1.0 / T_gap
    rhs_nc = geo * integ
    measured = lhs / rhs_nc if rhs_nc > 0 else (0.0 if lhs == 0 else math.inf)
    c = measured if const is None else const
    return CheckReport(name, lhs, c * rhs_nc, measured,
                       lhs <= c * rhs_nc * (1 + 1e-9) + 1e-300,
                       {"R": R, "R1": R1, "constant": c, **extra})


def check_energy_upper(traj: Trajectory, R: float, R1: float, T0: float,
                       T1: float, T: float, p: float,
                       c1: float | None = None) -> CheckReport:
    """Energy inequality for subsolutions, p > 1."""
    if not p > 1:
        raise RegularityError("the upper energy estimate needs p > 1")
    m = traj.params.m
    lhs, integ = _energy_sides(traj, R, R1, _times_in(traj, T1, T),
                               _times_in(traj, T0, T), "sup", p,
                               (p + m - 1.0) / 2.0, (p + m - 1.0, p))
    return _energy_report("energy_upper", traj, R, R1, T1 - T0, lhs, integ, c1,
                          {"p": p, "T0": T0, "T1": T1, "T": T})


def check_energy_mid(traj: Trajectory, R: float, R1: float, T0: float,
                     T1: float, T: float, p: float,
                     c2: float | None = None) -> CheckReport:
    """Energy inequality for supersolutions u >= delta, 0 < p < 1-m."""
    m = traj.params.m
    if not 0 < p < 1.0 - m:
        raise RegularityError("this energy estimate needs 0 < p < 1-m")
    _require_positive(traj)
    lhs, integ = _energy_sides(traj, R, R1, _times_in(traj, T0, T1),
                               _times_in(traj, T0, T), "first", p,
                               (p + m - 1.0) / 2.0, (p + m - 1.0, p))
    return _energy_report("energy_mid", traj, R, R1, T - T1, lhs, integ, c2,
                          {"p": p, "T0": T0, "T1": T1, "T": T})


def check_energy_lower(traj: Trajectory, R: float, R1: float, T0: float,
                       T1: float, T: float, p: float,
                       c3: float | None = None) -> CheckReport:
    """Energy inequality for negative powers, supersolutions u >= delta, p > 0."""
    if not p > 0:
        raise RegularityError("the lower energy estimate needs p > 0")
    _require_positive(traj)
    m = traj.params.m
    lhs, integ = _energy_sides(traj, R, R1, _times_in(traj, T1, T),
                               _times_in(traj, T0, T), "sup", -p,
                               (-p + m - 1.0) / 2.0, (-p + m - 1.0, -p))
    return _energy_report("energy_lower", traj, R, R1, T1 - T0, lhs, integ, c3,
                          {"p": p, "T0": T0, "T1": T1, "T": T})


def _require_positive(traj):
    if np.any(traj.values <= 0):
        raise RegularityError("this estimate needs a strictly positive solution")


def smooth_cutoff(R_in: float, R_out: float):
    """psi(r) = 1 on [0, R_in], 0 beyond R_out (C^2 step), with derivative."""
    def psi(r):
        y = np.clip((R_out - np.asarray(r)) / (R_out - R_in), 0.0, 1.0)
        return y ** 3 * (10.0 - 15.0 * y + 6.0 * y * y)

    def dpsi(r):
        y = np.clip((R_out - np.asarray(r)) / (R_out - R_in), 0.0, 1.0)
        return -30.0 * y * y * (1.0 - y) ** 2 / (R_out - R_in)

    return psi, dpsi


def check_caccioppoli(traj: Trajectory, R: float, tau: float, t: float,
                      R_in: float | None = None, slack: float = 1e-3) -> CheckReport:
    """int u(tau)^{1-m} psi^2 + m^2(1-m)/2 int int psi^2 |grad log u|^2
    <= 2(1-m) int int |grad psi|^2 + int u(t)^{1-m} psi^2, for u >= delta.

    The constants are explicit, so the measured constant is LHS/RHS;
    ``slack`` absorbs discretisation error.
    """
    _require_positive(traj)
    if not tau < t:
        raise DomainError("need tau < t")
    params, grid = traj.params, traj.grid
    m = params.m
    R_in = R / 2.0 if R_in is None else R_in
    psi, dpsi = smooth_cutoff(R_in, R)
    w = grid.masses * psi(grid.centers) ** 2
    idx = _times_in(traj, tau, t)
    if len(idx) < 2:
        raise DomainError("need at least two stored times in [tau, t]")
    e_tau = float(w @ traj.at(tau).values ** (1.0 - m))
    e_t = float(w @ traj.at(t).values ** (1.0 - m))
    inner = grid.edges[1:-1]
    psi_e2 = psi(inner) ** 2
    grads = [float(np.sum(grid.trans * np.diff(np.log(traj.values[i])) ** 2 * psi_e2))
             for i in idx]
    grad_term = _time_integral(traj.times[idx], grads)
    # |grad psi|^2 integrated against |x|^-beta, exactly per cell midpoint rule
    dpsi_int = float(grid.beta_masses @ dpsi(grid.centers) ** 2)
    lhs = e_tau + 0.5 * m * m * (1.0 - m) * grad_term
    rhs = 2.0 * (1.0 - m) * dpsi_int * (traj.times[idx[-1]] - traj.times[idx[0]]) + e_t
    return CheckReport("caccioppoli", lhs, rhs, lhs / rhs,
                       lhs <= rhs * (1 + slack),
                       {"R": R, "R_in": R_in, "tau": tau, "t": t, "slack": slack})


# ---------------------------------------------------------- lower bounds

def check_lower_bound(traj: Trajectory, ball: Ball, t_star: float,
                      n_times: int = 10, kappa: float | None = None) -> CheckReport:
    """inf_{B_2R} u(t) >= kappa ((mu_b/mu_g)(B_R) t / R^2)^{1/(1-m)}, t in (0, t*].

    Also requires inf > 0 at every sampled time.
    """
    _require_origin(ball)
    params, grid = traj.params, traj.grid
    R = ball.radius
    if 4.0 * R > grid.r_max * (1 + 1e-12):
        raise DomainError("B_4R must lie inside the computational domain")
    t0 = traj.times[0]
    if t_star <= 0:
        return CheckReport("lower_bound", 0.0, 0.0, 0.0, True,
                           {"ball": ball, "t_star": t_star, "vacuous": True})
    t_hi = min(t_star, traj.times[-1] - t0)
    ts = t0 + t_hi * np.arange(1, n_times + 1) / n_times
    N, g, b, m = params.N, params.gamma, params.beta, params.m
    ratio = mu(b, ball, N) / mu(g, ball, N)
    _resolved_ball(grid, R)
    mask = _in_ball(grid, 2.0 * R)
    infs, scales = [], []
    for t in ts:
        infs.append(float(np.min(traj.at(t).values[mask])))
        scales.append((ratio * (t - t0) / R ** 2) ** (1.0 / (1.0 - m)))
    infs, scales = np.array(infs), np.array(scales)
    measured = float(np.min(infs / scales))
    positive = bool(np.all(infs > 0))
    const = measured if kappa is None else kappa
    ok = positive and bool(np.all(infs >= const * scales * (1 - 1e-9)))
    j = int(np.argmin(infs / scales))
    return CheckReport("lower_bound", float(infs[j]), float(const * scales[j]),
                       measured, ok,
                       {"ball": ball, "t_star": t_star, "times": ts.tolist(),
                        "infima": infs.tolist(), "constant": const})


# ------------------------------------------------------------- extinction

def kappa_p0(params: Params, p: float, kappa13: float) -> float:
    """Decay rate of ||u||_p^{1-m} per unit mu_g(B_R0)^{-sigma/(N-g)(1-p_c/p)}.

    4 m (p-1)(1-m) / (kappa13^2 (p+m-1)^2); the factor m comes from
    differentiating int u^p along u_t = |x|^g div(|x|^-b grad u^m).
    """
    m = params.m
    return 4.0 * m * (p - 1.0) * (1.0 - m) / (kappa13 ** 2 * (p + m - 1.0) ** 2)


def extinction_upper_bound(params: Params, datum_values, grid, p: float,
                           kappa13: float, domain_mass: float | None = None) -> float:
    """mu^{sigma/(N-g)} (||u0||_p / mu^{1/p})^{1-m} / kappa_{p,0}.

    mu is the mu_gamma measure of the Dirichlet domain, by default the
    ball covered by the grid.  Valid for zero boundary data only.
    """
    if not (p > 1 and p > params.p_c):
        raise DomainError("the extinction upper bound needs p > max(1, p_c)")
    mu_dom = float(grid.masses.sum()) if domain_mass is None else domain_mass
    lp = float(grid.masses @ np.asarray(datum_values) ** p) ** (1.0 / p)
    return (mu_dom ** (params.sigma / (params.N - params.gamma))
            * (lp / mu_dom ** (1.0 / p)) ** (1.0 - params.m)
            / kappa_p0(params, p, kappa13))


def check_extinction_bounds(traj: Trajectory, ball: Ball, p: float,
                            kappa13: float, kappa_star_value: float,
                            T: float | None = None) -> CheckReport:
    """t* <= T <= upper bound, with t* computed on ``ball`` (may be off-center)."""
    params, grid = traj.params, traj.grid
    if T is None:
        T = traj.extinction_time if traj.extinction_time is not None \
            else detect_extinction(traj)
    u0 = RadialField(values=traj.values[0], edges=grid.edges)
    t_star = minimal_life_time(u0, params, ball, kappa_star_value)
    upper = extinction_upper_bound(params, traj.values[0], grid, p, kappa13)
    ok = t_star <= T <= upper
    return CheckReport("extinction_bounds", T, upper, T / upper, ok,
                       {"t_star": t_star, "T": T, "upper": upper, "ball": ball,
                        "p": p, "kappa13": kappa13, "kappa_star": kappa_star_value})


def check_lq_decay(traj: Trajectory, q: float, kappa13: float, tau: float,
                   t: float) -> CheckReport:
    """||u(t)||_q^{1-m} <= ||u(tau)||_q^{1-m} - kappa_q (t - tau) on a Dirichlet run.

    Only meaningful while the right-hand side stays nonnegative; past that
    point the report compares against zero.
    """
    params, grid = traj.params, traj.grid
    if not (q > 1 and q > params.p_c):
        raise DomainError("L^q decay needs q > max(1, p_c)")
    if t < tau:
        raise DomainError("need t >= tau")
    m = params.m
    mu_dom = float(grid.masses.sum())
    kq = kappa_p0(params, q, kappa13) * mu_dom ** (
        -params.sigma / (params.N - params.gamma) * (1.0 - params.p_c / q))
    a = float(grid.masses @ traj.at(t).values ** q) ** ((1.0 - m) / q)
    b = float(grid.masses @ traj.at(tau).values ** q) ** ((1.0 - m) / q)
    rhs = max(b - kq * (t - tau), 0.0)
    measured = (b - a) / (t - tau) if t > tau else math.inf
    return CheckReport("lq_decay", a, rhs, measured, a <= rhs * (1 + 1e-9) + 1e-14 * b,
                       {"q": q, "tau": tau, "t": t, "kappa_q": kq})


def check_time_monotonicity(traj: Trajectory, slack: float = 1e-6) -> CheckReport:
    """lambda^{-1/(1-m)} u(lambda t) <= u(t) for lambda >= 1 on a Dirichlet run.

    Equivalently t^{-1/(1-m)} u(t, x) is nonincreasing in t at every cell
    (times measured from the first stored time).  The measured constant is
    the largest relative increase between consecutive stored times.
    """
    m = traj.params.m
    ts = traj.times - traj.times[0]
    keep = ts > 0
    scaled = traj.values[keep] * ts[keep, None] ** (-1.0 / (1.0 - m))
    if len(scaled) < 2:
        raise InsufficientSamples("need two positive stored times")
    top = np.maximum(scaled[:-1], 1e-300)
    worst = float(np.max((scaled[1:] - scaled[:-1]) / top))
    return CheckReport("time_monotonicity", worst, slack, worst, worst <= slack,
                       {"n_times": int(len(scaled)), "slack": slack})


def check_comparison(lower: Trajectory, upper: Trajectory,
                     slack: float = 1e-9) -> CheckReport:
    """u <= v at every stored time when u0 <= v0 (same grid and times)."""
    if lower.values.shape != upper.values.shape:
        raise DomainError("trajectories must share grid and output times")
    scale = max(float(np.max(np.abs(upper.values))), 1e-300)
    excess = float(np.max(lower.values - upper.values)) / scale
    return CheckReport("comparison", excess, slack, excess, excess <= slack, {})


def check_l1_contraction(a: Trajectory, b: Trajectory,
                         slack: float = 1e-9) -> CheckReport:
    """t -> ||u(t) - v(t)||_{L^1_gamma} is nonincreasing."""
    if a.values.shape != b.values.shape:
        raise DomainError("trajectories must share grid and output times")
    d = np.abs(a.values - b.values) @ a.grid.masses
    top = max(float(d[0]), 1e-300)
    worst = float(np.max(np.diff(d))) / top if len(d) > 1 else 0.0
    return CheckReport("l1_contraction", worst, slack, worst, worst <= slack,
                       {"initial_distance": float(d[0])})


# ------------------------------------------------------------------ Harnack

def harnack_window(traj: Trajectory, R: float, eps: float,
                   kappa_star_value: float, t0: float | None = None):
    """[t0 + eps t*, t0 + t*], t* from u(t0) on B_2R(0)."""
    t0 = traj.times[0] if t0 is None else t0
    u = RadialField(values=traj.at(t0).values, edges=traj.grid.edges)
    ts = minimal_life_time(u, traj.params, Ball(0.0, 2.0 * R), kappa_star_value)
    return t0 + eps * ts, t0 + ts


def harnack_quotient(traj: Trajectory, ball: Ball, t: float, theta_: float,
                     window: tuple | None = None,
                     kappa3: float | None = None) -> CheckReport:
    """sup_{B_R} u(t) / inf_{B_R} u(t + theta); theta<0 backward, 0 elliptic."""
    _require_origin(ball)
    grid = traj.grid
    if 8.0 * ball.radius > grid.r_max * (1 + 1e-12):
        raise DomainError("B_8R must lie inside the computational domain")
    if window is not None:
        a, b = window
        for s in (t, t + theta_):
            if not a - 1e-12 <= s <= b + 1e-12:
                raise DomainError(f"time {s} outside the Harnack window [{a}, {b}]")
    mask = _resolved_ball(grid, ball.radius)
    sup = float(np.max(traj.at(t).values[mask]))
    inf = float(np.min(traj.at(t + theta_).values[mask]))
    if inf <= 0:
        raise ZeroInfimum(f"inf_B u({t + theta_}) = {inf}")
    qt = sup / inf
    kind = "elliptic" if theta_ == 0 else ("forward" if theta_ > 0 else "backward")
    ok = math.isfinite(qt) and (kappa3 is None or qt <= kappa3)
    return CheckReport(f"harnack_{kind}", sup, inf if kappa3 is None else kappa3 * inf,
                       qt, ok, {"ball": ball, "t": t, "theta": theta_,
                                "window": window, "constant": kappa3})


def harnack_triptych(traj: Trajectory, ball: Ball, eps: float,
                     kappa_star_value: float, kappa3: float | None = None):
    """The three Harnack quotients (theta < 0, = 0, > 0) at mid-window."""
    a, b = harnack_window(traj, ball.radius, eps, kappa_star_value)
    t = 0.5 * (a + b)
    th = 0.25 * (b - a)
    return [harnack_quotient(traj, ball, t, s, (a, b), kappa3) for s in (-th, 0.0, th)]


# ------------------------------------------------------------------ Hoelder

def _evaluator(source):
    """(t, r) -> values for an exact solution or a trajectory."""
    if isinstance(source, Trajectory):
        grid = source.grid

        def ev(t, r):
            u = source.at(t).values
            return np.interp(np.abs(r), grid.centers, u)
        return ev, source.params
    return (lambda t, r: source.evaluate(t, np.abs(r))), source.params


def holder_exponent(source, cylinder, n_space: int = 161, n_time: int = 11,
                    n_scales: int = 8) -> float:
    """Fitted exponent of the modulus of continuity on the cylinder.

    Points fill the cylinder on the axis through x0 (signed radial
    coordinate); the modulus omega(d) is the largest oscillation over pairs
    at standard quasi-distance <= d, and the exponent is the least-squares
    slope of log omega against log d for d between twice the sampling step
    and an eighth of the spatial radius.
    """
    ev, params = _evaluator(source)
    t_a, t_b = cylinder.time_interval
    t_a = max(t_a, source.times[0] if isinstance(source, Trajectory) else 0.0)
    if not t_b > t_a:
        raise InsufficientSamples("empty time interval")
    x0 = cylinder.ball.center_norm
    rad = cylinder.spatial_radius
    xs = np.linspace(x0 - rad, x0 + rad, n_space)
    ts = np.linspace(t_a + 1e-12 * max(1.0, t_b), t_b, n_time)
    vals = np.concatenate([np.asarray(ev(t, xs), dtype=float) for t in ts])
    T = np.repeat(ts, len(xs))
    X = np.tile(xs, len(ts))
    i, j = np.triu_indices(len(T), k=1)
    dist = np.abs(X[i] - X[j]) + np.abs(T[i] - T[j]) ** (1.0 / max(2.0, params.sigma))
    osc = np.abs(vals[i] - vals[j])
    if np.max(osc) == 0.0:
        return UNCONSTRAINED
    # the modulus bends over once d is comparable to the spatial radius,
    # so the fit window stops well before that
    d_lo = 2.0 * np.min(dist[dist > 0])
    d_hi = min(0.5 * np.max(dist), rad / 8.0)
    if not d_hi > d_lo:
        raise InsufficientSamples("not enough distinct scales")
    order = np.argsort(dist)
    ds, om = dist[order], np.maximum.accumulate(osc[order])
    # evaluate omega at attained distances, not between them, so the
    # staircase shape of the sampled modulus does not bias the slope
    last = np.r_[ds[1:] != ds[:-1], True]
    ds, om = ds[last], om[last]
    inside = (ds >= d_lo) & (ds <= d_hi) & (om > 0)
    ds, om = ds[inside], om[inside]
    if len(ds) < 3:
        raise InsufficientSamples("fewer than three scales with oscillation")
    pick = np.unique(np.searchsorted(ds, np.geomspace(ds[0], ds[-1], n_scales)).clip(0, len(ds) - 1))
    scales, omega = ds[pick], om[pick]
    keep = omega > 0
    if keep.sum() < 3:
        raise InsufficientSamples("fewer than three scales with oscillation")
    return float(np.polyfit(np.log(scales[keep]), np.log(omega[keep]), 1)[0])


def linear_holder_exponent(kappa_l: float, A: float, lambda0: float,
                           lambda1: float) -> float:
    """alpha = log_A(K/(K-1)), K = kappa_l^{1/lambda0 + lambda1}, kappa_l >= 2."""
    if kappa_l < 2:
        raise DomainError("kappa_l must be >= 2")
    K = kappa_l ** (1.0 / lambda0 + lambda1)
    return math.log(K / (K - 1.0)) / math.log(A)


# ---------------------------------------------------------------- BMO window

def check_bmo_window(traj: Trajectory, ball: Ball, t: float, kappa6: float,
                     kappa7: float, depth: int = 4,
                     fraction: float = 0.5) -> CheckReport:
    """BMO norm of log u(t) against its structural bound, then reverse Hoelder.

    The structural constant C = ||log u||_BMO / (1 + (R^sigma/t) M^{1-m})^{1/2}
    with M = sup u(t) is reported; the check itself is the reverse Hoelder
    inequality at s = min(fraction * window, 1).
    """
    _require_origin(ball)
    params, grid = traj.params, traj.grid
    u = traj.at(t).values
    if np.any(u <= 0):
        raise ZeroInfimum("log u needs u > 0")
    logf = RadialField(values=np.log(u), edges=grid.edges)
    bmo = bmo_gamma(logf, params, ball, depth).bmo_norm
    M = float(np.max(u))
    t_rel = t - traj.times[0]
    struct = math.sqrt(1.0 + ball.radius ** params.sigma / t_rel * M ** (1.0 - params.m))
    window = math.inf if bmo == 0 else 1.0 / (kappa6 * bmo)
    # any s inside the window will do; cap it to keep u^{+-s} in range
    s = min(fraction * window, 1.0)
    field = RadialField(values=u, edges=grid.edges)
    rep = reverse_holder(field, params, ball, s, kappa6, kappa7, bmo_norm=bmo)
    rep.name = "bmo_window"
    rep.context.update({"t": t, "bmo": bmo, "structural_constant": bmo / struct,
                        "M": M})
    return rep


# ------------------------------------------------------------------ ledger

def measure_ledger(params: Params, ledger: ConstantLedger | None = None) -> ConstantLedger:
    """Probe-family and geometry constants for one parameter set."""
    from . import geometry as geo
    from . import inequalities as ineq

    led = ConstantLedger() if ledger is None else ledger
    sand = geo.measure_sandwich_constants(params)
    src = f"sandwich probes, radii 0.1/1/10, scenario offsets {ineq.PROBE_FAMILY_VERSION}"
    for k, v in sand["overall"].items():
        led.record(k, v, src)
    S_bar = ineq.measure_ckn_constant(params)
    led.record("S_bar", S_bar, "whole-space CKN probes")
    led.record("S", ineq.measure_ball_ckn_constant(params), "ball CKN probes")
    led.record("P", ineq.measure_poincare_constant(params), "Poincare probes")
    kappa5 = math.e
    led.record("kappa5", kappa5, "fixed by convention")
    led.record("kappa6", ineq.measure_john_nirenberg(params, kappa5), "BMO probe fields")
    led.record("kappa7", kappa5, "reverse Hoelder from John-Nirenberg: kappa7 = kappa5")
    led.record("kappa13", S_bar, "Hoelder chain through the whole-space CKN constant")
    A = max(geo.measured_inclusion_factor(params, b) for _, b in geo.scenario_balls(1.0))
    led.record("A", A, "measured inclusion factor over scenario balls")
    led.record("kappa_l", 2.0, "normalisation kappa_l >= 2")
    if not params.linear:
        ball = Ball(0.0, 1.0)
        led.record("kappa10", ineq.kappa10_test_function(params, ball),
                   "cut-off test function, scenario S1")
        k10p = herrero_pierre_constant(params, ball)
        led.record("kappa10_prime", k10p, "cut-off integral, scenario S1")
        led.record("kappa_star", kappa_star(params, ball, k10p), "2^m/(5 kappa10')")
    return led

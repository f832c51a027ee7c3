"""Weighted functional inequalities evaluated on radial functions.

All norms are weighted Lebesgue norms: L^q_alpha means integration against
|x|^-alpha dx.  Fields are radial about the origin; balls may be off-center.
Constants are "measured": the largest ratio LHS / (RHS without constant)
over a fixed, versioned family of probe functions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .geometry import (Ball, QuadratureNonConvergence, _quad, cell_ball_weights,
                       mu, rho, sphere_area, weighted_integral)
from .params import DomainError, Params
from .reports import CheckReport


class ThresholdExceeded(ValueError):
    """The exponent lies outside the admissible reverse Hoelder window."""


# ------------------------------------------------------------ test functions

@dataclass(frozen=True)
class TestFunction:
    """Radial profile f(r) with its derivative f'(r), zero beyond ``support``."""

    __test__ = False

    name: str
    profile: Callable
    derivative: Callable
    support: float = math.inf

    def f(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.support, self.profile(np.minimum(r, self.support)), 0.0)

    def df(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.support, self.derivative(np.minimum(r, self.support)), 0.0)

    def scaled(self, lam: float) -> "TestFunction":
        """x -> f(lam x)."""
        return TestFunction(f"{self.name}(x{lam:g})",
                            lambda r: self.profile(lam * np.asarray(r)),
                            lambda r: lam * self.derivative(lam * np.asarray(r)),
                            self.support / lam)


def talenti(params: Params) -> TestFunction:
    """(1 + r^sigma)^{-(N-2-beta)/sigma}; Aubin-Talenti when gamma = beta = 0."""
    s = params.sigma
    k = (params.N - 2.0 - params.beta) / s
    return TestFunction("talenti",
                        lambda r: (1.0 + r ** s) ** (-k),
                        lambda r: -k * s * r ** (s - 1.0) * (1.0 + r ** s) ** (-k - 1.0))


def bump(k: int = 2, R: float = 1.0) -> TestFunction:
    """(1 - (r/R)^2)^k on B_R."""
    return TestFunction(f"bump{k}",
                        lambda r: (1.0 - (r / R) ** 2) ** k,
                        lambda r: -2.0 * k * r / R ** 2 * (1.0 - (r / R) ** 2) ** (k - 1),
                        R)


def gaussian(a: float = 1.0) -> TestFunction:
    return TestFunction(f"gauss{a:g}", lambda r: np.exp(-a * r * r),
                        lambda r: -2.0 * a * r * np.exp(-a * r * r))


def power(k: float) -> TestFunction:
    return TestFunction(f"r^{k:g}", lambda r: r ** k, lambda r: k * r ** (k - 1.0))


def cosine(R: float = 1.0) -> TestFunction:
    return TestFunction("cos", lambda r: np.cos(np.pi * r / R),
                        lambda r: -np.pi / R * np.sin(np.pi * r / R))


def constant(c: float = 1.0) -> TestFunction:
    return TestFunction("const", lambda r: c + 0.0 * r, lambda r: 0.0 * r)


# ------------------------------------------------------------------ norms

def _integral(g, alpha: float, N: int, ball: Ball | None, support=math.inf,
              rtol: float = 1e-10) -> float:
    """Integral of g(|x|)|x|^-alpha over ball (None means R^N)."""
    if ball is not None:
        return weighted_integral(g, alpha, ball, N, rtol)
    e = N - 1.0 - alpha
    split = min(1.0, support)
    val = _quad(lambda r: float(g(r)), 0.0, split, rtol, power=e)
    if support > 1.0:
        def tail(r):
            return float(g(r)) * r ** e
        upper = support if math.isfinite(support) else np.inf
        with np.errstate(all="ignore"):
            v, err = integrate.quad(tail, 1.0, upper, epsabs=0.0, epsrel=rtol,
                                    limit=400)
        if not np.isfinite(v) or err > max(100 * rtol * abs(v), 1e-300):
            raise QuadratureNonConvergence(f"tail integral {v} +- {err}")
        val += v
    return sphere_area(N) * val


def lq_norm(f: TestFunction, q: float, alpha: float, N: int,
            ball: Ball | None = None) -> float:
    return _integral(lambda r: abs(float(f.f(r))) ** q, alpha, N, ball,
                     f.support) ** (1.0 / q)


def grad_norm(f: TestFunction, params: Params, ball: Ball | None = None) -> float:
    """||grad f||_{L^2_beta}."""
    return _integral(lambda r: float(f.df(r)) ** 2, params.beta, params.N, ball,
                     f.support) ** 0.5


def ckn_ratio(f: TestFunction, params: Params) -> float:
    """||f||_{L^{r*}_gamma} / ||grad f||_{L^2_beta} on R^N."""
    return (lq_norm(f, params.r_star, params.gamma, params.N)
            / grad_norm(f, params))


def sharp_sobolev_constant(N: int) -> float:
    """Best constant in ||f||_{2N/(N-2)} <= S ||grad f||_2 on R^N."""
    return (1.0 / math.sqrt(math.pi * N * (N - 2.0))
            * (math.gamma(N) / math.gamma(N / 2.0)) ** (1.0 / N))


def ckn_on_ball(f: TestFunction, params: Params, ball: Ball,
                S: float | None = None) -> CheckReport:
    """||f||_{r*,g} <= S (||grad f||_{2,b} + mu_g(B)^{-sigma/(2(N-g))} ||f||_{2,g})."""
    N, g = params.N, params.gamma
    lhs = lq_norm(f, params.r_star, g, N, ball)
    mg = mu(g, ball, N)
    rhs = grad_norm(f, params, ball) + mg ** (-params.sigma / (2 * (N - g))) * lq_norm(f, 2.0, g, N, ball)
    measured = lhs / rhs
    const = measured if S is None else S
    return CheckReport("ckn_on_ball", lhs, const * rhs, measured,
                       lhs <= const * rhs * (1 + 1e-9),
                       {"function": f.name, "ball": ball, "constant": const})


def poincare_on_ball(f: TestFunction, params: Params, ball: Ball,
                     P: float | None = None) -> CheckReport:
    """(avg_g |f - avg_g f|^2)^(1/2) <= P R (avg_b |grad f|^2)^(1/2)."""
    N, g, b = params.N, params.gamma, params.beta
    mg, mb = mu(g, ball, N), mu(b, ball, N)
    mean = weighted_integral(lambda r: float(f.f(r)), g, ball, N) / mg
    lhs = (weighted_integral(lambda r: (float(f.f(r)) - mean) ** 2, g, ball, N) / mg) ** 0.5
    grad = (weighted_integral(lambda r: float(f.df(r)) ** 2, b, ball, N) / mb) ** 0.5
    rhs = ball.radius * grad
    measured = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    const = measured if P is None else P
    return CheckReport("poincare_on_ball", lhs, const * rhs, measured,
                       lhs <= const * rhs * (1 + 1e-9) + 1e-300,
                       {"function": f.name, "ball": ball, "constant": const})


def iterative_ckn(f: Callable, df: Callable, params: Params, ball: Ball,
                  times: tuple, a: float, S: float | None = None,
                  n_times: int = 24) -> CheckReport:
    """Space-time CKN: f(t, r), df(t, r) radial in r, t in [T0, T1].

    int int f^{2a} <= 2 S^2 [int int f^2 + mu^{sigma/(N-g)} int int |grad f|^2]
                      * sup_t (mu^{-1} int f^{2(a-1)q})^{1/q}
    With S=None the largest per-slice CKN-on-ball ratio is used.
    """
    N, g, b = params.N, params.gamma, params.beta
    if not 1.0 <= a <= params.r_star / 2.0 + 1e-12:
        raise DomainError(f"a must lie in [1, r*/2] = [1, {params.r_star / 2}]")
    T0, T1 = times
    q = params.q
    x, w = np.polynomial.legendre.leggauss(n_times)
    ts = 0.5 * (T1 - T0) * x + 0.5 * (T1 + T0)
    w = 0.5 * (T1 - T0) * w
    mg = mu(g, ball, N)

    def I(fun, alpha):
        return weighted_integral(fun, alpha, ball, N)

    lhs = rhs_f2 = rhs_g2 = 0.0
    sup_t = 0.0
    slice_ratios = []
    for t, wt in zip(ts, w):
        ft = lambda r, t=t: float(f(t, r))
        dft = lambda r, t=t: float(df(t, r))
        f2 = I(lambda r: ft(r) ** 2, g)
        g2 = I(lambda r: dft(r) ** 2, b)
        lhs += wt * I(lambda r: abs(ft(r)) ** (2 * a), g)
        rhs_f2 += wt * f2
        rhs_g2 += wt * g2
        if a == 1.0:
            sup_t = 1.0
        else:
            sup_t = max(sup_t, (I(lambda r: abs(ft(r)) ** (2 * (a - 1) * q), g) / mg) ** (1.0 / q))
        if S is None and g2 + f2 > 0:
            lr = I(lambda r: abs(ft(r)) ** params.r_star, g) ** (1 / params.r_star)
            slice_ratios.append(lr / (g2 ** 0.5 + mg ** (-params.sigma / (2 * (N - g))) * f2 ** 0.5))
    const = S if S is not None else max(slice_ratios, default=1.0)
    bracket = rhs_f2 + mg ** (params.sigma / (N - g)) * rhs_g2
    rhs = 2.0 * const ** 2 * bracket * sup_t
    denom = 2.0 * bracket * sup_t
    measured = math.sqrt(lhs / denom) if denom > 0 else 0.0
    return CheckReport("iterative_ckn", lhs, rhs, measured,
                       lhs <= rhs * (1 + 1e-6),
                       {"ball": ball, "times": times, "a": a, "constant": const})


# ---------------------------------------------------------------------- BMO

class RadialField:
    """A positive radial field: piecewise constant on cells or a callable."""

    def __init__(self, values=None, edges=None, func: Callable | None = None):
        if func is None and (values is None or edges is None):
            raise DomainError("need cell values with edges, or a callable")
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.edges = None if edges is None else np.asarray(edges, dtype=float)
        self.func = func

    @classmethod
    def from_snapshot(cls, grid, snapshot) -> "RadialField":
        vals = getattr(snapshot, "values", snapshot)
        return cls(values=vals, edges=grid.edges)

    def mapped(self, fn: Callable) -> "RadialField":
        if self.func is not None:
            g = self.func
            return RadialField(func=lambda r: fn(g(r)))
        return RadialField(values=fn(self.values), edges=self.edges)

    def integral(self, ball: Ball, alpha: float, N: int, fn=None) -> float:
        """Integral over ball of fn(field) |x|^-alpha (fn=None: the field)."""
        fn = (lambda v: v) if fn is None else fn
        if self.func is not None:
            return weighted_integral(lambda r: float(fn(self.func(r))), alpha, ball, N)
        if ball.center_norm + ball.radius > self.edges[-1] * (1 + 1e-12):
            raise DomainError("ball extends beyond the field's grid")
        wts = cell_ball_weights(self.edges, alpha, ball, N)
        return float(wts @ fn(self.values))

    def average(self, ball: Ball, params: Params, fn=None) -> float:
        if self.func is None:
            wts = cell_ball_weights(self.edges, params.gamma, ball, params.N)
            fn = (lambda v: v) if fn is None else fn
            return float(wts @ fn(self.values) / wts.sum())
        return (self.integral(ball, params.gamma, params.N, fn)
                / mu(params.gamma, ball, params.N))


def dyadic_subballs(ball: Ball, depth: int = 5):
    """Sub-balls of radius R/2^k centered at x0 + j R/2^k along the axis."""
    out = []
    for k in range(depth + 1):
        rk = ball.radius / 2 ** k
        for j in range(-(2 ** k - 1), 2 ** k):
            out.append(Ball(abs(ball.center_norm + j * rk), rk))
    return out


@dataclass
class BMOReport:
    balls: list
    oscillations: np.ndarray
    bmo_norm: float
    depth: int


def mean_oscillation(field: RadialField, ball: Ball, params: Params) -> float:
    if field.func is None:
        wts = cell_ball_weights(field.edges, params.gamma, ball, params.N)
        tot = wts.sum()
        mean = wts @ field.values / tot
        return float(wts @ np.abs(field.values - mean) / tot)
    mean = field.average(ball, params)
    return field.average(ball, params, lambda v: abs(v - mean))


def bmo_gamma(field: RadialField, params: Params, ball: Ball,
              depth: int = 5) -> BMOReport:
    """sup over the dyadic family of mu_gamma mean oscillations of ``field``."""
    balls = dyadic_subballs(ball, depth)
    osc = np.array([mean_oscillation(field, b, params) for b in balls])
    return BMOReport(balls, osc, float(osc.max()), depth)


def john_nirenberg_average(field: RadialField, ball: Ball, params: Params,
                           s: float) -> float:
    """avg_B exp(s |f - f_B|) for the field f."""
    mean = field.average(ball, params)
    return field.average(ball, params, lambda v: np.exp(s * np.abs(v - mean)))


def reverse_holder(field: RadialField, params: Params, ball: Ball, s: float,
                   kappa6: float, kappa7: float | None = None,
                   bmo_norm: float | None = None, depth: int = 5) -> CheckReport:
    """||u||_{L^s_g} <= kappa7^{2/s} mu_g(B)^{2/s} ||u||_{L^{-s}_g}.

    ``field`` holds u > 0; the window 0 < s < 1/(kappa6 ||log u||_BMO) is
    enforced.  The inequality is equivalent to
    avg(u^s) avg(u^-s) <= kappa7^2, whose square root is the measured kappa7.
    """
    vals = field.values if field.func is None else None
    if vals is not None and np.any(vals <= 0):
        raise DomainError("reverse Hoelder needs a positive field")
    logf = field.mapped(np.log) if vals is not None else \
        RadialField(func=lambda r: math.log(field.func(r)))
    if bmo_norm is None:
        bmo_norm = bmo_gamma(logf, params, ball, depth).bmo_norm
    window = math.inf if bmo_norm == 0 else 1.0 / (kappa6 * bmo_norm)
    if not 0 < s < window:
        raise ThresholdExceeded(f"s={s} outside the window (0, {window})")
    N, g = params.N, params.gamma
    mg = mu(g, ball, N)
    mean_log = logf.average(ball, params)
    # shift by the mean of log u to keep the exponentials tame
    a_plus = logf.average(ball, params, lambda v: np.exp(s * (v - mean_log)))
    a_minus = logf.average(ball, params, lambda v: np.exp(-s * (v - mean_log)))
    measured = math.sqrt(a_plus * a_minus)
    const = measured if kappa7 is None else kappa7
    lhs = math.exp(mean_log) * (mg * a_plus) ** (1.0 / s)
    norm_minus = math.exp(mean_log) * (mg * a_minus) ** (-1.0 / s)
    rhs = const ** (2.0 / s) * mg ** (2.0 / s) * norm_minus
    return CheckReport("reverse_holder", lhs, rhs, measured,
                       measured <= const * (1 + 1e-12),
                       {"ball": ball, "s": s, "window": window, "bmo": bmo_norm,
                        "kappa6": kappa6, "constant": const})


# ------------------------------------------------------ cut-off test function

def _smoothstep(y):
    """C^2 step: 0 at y<=0, 1 at y>=1; returns value and two derivatives."""
    y = np.clip(y, 0.0, 1.0)
    v = y ** 3 * (10.0 - 15.0 * y + 6.0 * y * y)
    d1 = 30.0 * y * y * (1.0 - y) ** 2
    d2 = 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y)
    return v, d1, d2


def cutoff_radii(ball: Ball) -> tuple[float, float]:
    """(l1, l2): psi = 1 for |x-x0| <= l1 and psi = 0 for |x-x0| >= l2."""
    R = ball.radius
    if ball.center_norm <= 1.5 * R:
        return 1.75 * R, 2.0 * R
    return R, 1.25 * R


def _cutoff_terms(params: Params, ball: Ball, b: float, ell, cos_theta):
    """psi, and phi^{-m}|L phi| written as psi^{b(1-m)-2} |bracket| |x|^{g-b}."""
    N, g, be, s = params.N, params.gamma, params.beta, params.sigma
    R = ball.radius
    d = ball.center_norm
    l1, l2 = cutoff_radii(ball)
    s1, s2 = (l1 / R) ** s, (l2 / R) ** s
    z = (ell / R) ** s
    y = (s2 - z) / (s2 - s1)
    v, d1, d2 = _smoothstep(y)
    psi = v
    dpsi = -d1 / (s2 - s1)
    ddpsi = d2 / (s2 - s1) ** 2
    g1 = s * ell ** (s - 1.0) / R ** s
    g2 = s * (s - 1.0) * ell ** (s - 2.0) / R ** s
    # phi' / psi^{b-2} and phi'' / psi^{b-2}
    p1 = b * psi * dpsi * g1
    p2 = b * (b - 1.0) * dpsi ** 2 * g1 ** 2 + b * psi * ddpsi * g1 ** 2 + b * psi * dpsi * g2
    x2 = d * d + ell * ell + 2.0 * d * ell * cos_theta
    xdoty = d * ell * cos_theta + ell * ell
    bracket = p2 + (N - 1.0) / ell * p1 - be * xdoty / (x2 * ell) * p1
    return psi, x2, bracket


def _cutoff_density(params: Params, ball: Ball, b: float, ell, cos_theta):
    """phi^{-m/(1-m)} |L phi|^{1/(1-m)} on (|x-x0|, cos angle) points."""
    m = params.m
    psi, x2, bracket = _cutoff_terms(params, ball, b, ell, cos_theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        core = psi ** (b * (1.0 - m) - 2.0) * np.abs(bracket) * x2 ** ((params.gamma - params.beta) / 2.0)
    core = np.where(psi > 0, core, 0.0)
    return core ** (1.0 / (1.0 - m)), x2


def _check_b(params: Params, b):
    bmin = 2.0 / (1.0 - params.m)
    if b is None:
        return bmin
    if b < bmin - 1e-12:
        raise DomainError(f"b={b} below the admissible threshold 2/(1-m)={bmin}")
    return float(b)


def kappa10_test_function(params: Params, ball: Ball, b: float | None = None,
                          n_radial: int = 4000, n_angle: int = 181) -> float:
    """sup of phi^{-m/(1-m)} |L phi|^{1/(1-m)} times rho(R)^{1/(1-m)}.

    phi = psi(|x-x0|^sigma / R^sigma)^b is the cut-off equal to one near the
    ball; the product is scale invariant when x0 = 0.
    """
    if params.linear:
        raise DomainError("needs m < 1")
    b = _check_b(params, b)
    l1, l2 = cutoff_radii(ball)
    ell = np.linspace(l1, l2, n_radial)
    if ball.center_norm == 0.0:
        ct = np.array([1.0])
    else:
        ct = np.cos(np.linspace(0.0, np.pi, n_angle))
    L, C = np.meshgrid(ell, ct, indexing="ij")
    dens, _ = _cutoff_density(params, ball, b, L, C)
    return float(np.max(dens)) * rho(params, ball) ** (1.0 / (1.0 - params.m))


def herrero_pierre_constant(params: Params, ball: Ball, b: float | None = None,
                            n_radial: int = 400, n_angle: int = 96) -> float:
    """kappa10' with |d/dt int u phi| bounded through the cut-off.

    (1-m) C(phi) R^sigma / mu_g(B_R)^{1-m}, where
    C(phi) = (int phi^{-m/(1-m)} |L phi|^{1/(1-m)} |x|^-g)^{1-m}.
    """
    b = _check_b(params, b)
    N, g, m = params.N, params.gamma, params.m
    l1, l2 = cutoff_radii(ball)
    # split the transition layer to resolve the cut-off profile
    xs, ws = np.polynomial.legendre.leggauss(40)
    pieces = np.linspace(l1, l2, n_radial // 40 + 1)
    ell = np.concatenate([0.5 * (bb - aa) * xs + 0.5 * (bb + aa) for aa, bb in zip(pieces[:-1], pieces[1:])])
    w_ell = np.concatenate([0.5 * (bb - aa) * ws for aa, bb in zip(pieces[:-1], pieces[1:])])
    if ball.center_norm == 0.0:
        dens, x2 = _cutoff_density(params, ball, b, ell, np.ones_like(ell))
        integral = sphere_area(N) * np.sum(w_ell * dens * x2 ** (-g / 2.0) * ell ** (N - 1.0))
    else:
        xt, wt = np.polynomial.legendre.leggauss(n_angle)
        theta = 0.5 * np.pi * (xt + 1.0)
        wt = 0.5 * np.pi * wt * np.sin(theta) ** (N - 2.0)
        L, TH = np.meshgrid(ell, theta, indexing="ij")
        dens, x2 = _cutoff_density(params, ball, b, L, np.cos(TH))
        inner = (dens * x2 ** (-g / 2.0)) @ wt
        integral = sphere_area(N - 1) * np.sum(w_ell * inner * ell ** (N - 1.0))
    C = integral ** (1.0 - m)
    return (1.0 - m) * C * ball.radius ** params.sigma / mu(g, ball, N) ** (1.0 - m)


# ------------------------------------------------------------ probe families

PROBE_FAMILY_VERSION = "1"


def probe_manifest(params: Params) -> dict:
    """Names and parameters of the probe functions (structured, versioned)."""
    return {
        "version": PROBE_FAMILY_VERSION,
        "whole_space": ["talenti", "gauss1", "bump2", "bump3", "bump4", "exp_talenti2"],
        "ball": ["const", "bump2", "bump3", "r^1", "r^2", "cos", "gauss4"],
        "ball_radii": [0.1, 1.0, 10.0],
        "ball_offsets": [0.0, 16.0, 0.25],
        "bmo_fields": ["log r", "log(r^2+0.01)", "-r^sigma", "log(1+r)"],
        "john_nirenberg_kappa5": math.e,
        "params": params.as_dict(),
    }


def probe_family_hash(params: Params) -> str:
    text = json.dumps(probe_manifest(params), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _whole_space_probes(params: Params):
    tal = talenti(params)
    k2 = 2.0 * (params.N - 2.0 - params.beta) / params.sigma
    s = params.sigma
    tal2 = TestFunction("exp_talenti2", lambda r: (1.0 + r ** s) ** (-k2),
                        lambda r: -k2 * s * r ** (s - 1.0) * (1.0 + r ** s) ** (-k2 - 1.0))
    return [tal, gaussian(1.0), bump(2), bump(3), bump(4), tal2]


def _ball_probes(R: float, center: float):
    span = center + R
    return [constant(), bump(2, span), bump(3, span), power(1.0), power(2.0),
            cosine(span), gaussian(4.0 / span ** 2)]


def measure_ckn_constant(params: Params) -> float:
    """max over the whole-space probes of the CKN ratio."""
    return max(ckn_ratio(f, params) for f in _whole_space_probes(params))


def _probe_balls():
    for R in (0.1, 1.0, 10.0):
        for k in (0.0, 16.0, 0.25):
            yield Ball(k * R, R)


def measure_ball_ckn_constant(params: Params) -> float:
    best = 0.0
    for ball in _probe_balls():
        for f in _ball_probes(ball.radius, ball.center_norm):
            best = max(best, ckn_on_ball(f, params, ball).measured_constant)
    return best


def measure_poincare_constant(params: Params) -> float:
    best = 0.0
    for ball in _probe_balls():
        for f in _ball_probes(ball.radius, ball.center_norm)[1:]:
            best = max(best, poincare_on_ball(f, params, ball).measured_constant)
    return best


_BMO_EDGES = np.concatenate(([0.0], np.geomspace(1e-8, 1.0, 400)))


def _bmo_probe_fields(params: Params):
    """Probe fields projected on a fixed geometric grid of [0, 1]."""
    s = params.sigma
    c = 0.5 * (_BMO_EDGES[:-1] + _BMO_EDGES[1:])
    return [RadialField(values=f, edges=_BMO_EDGES)
            for f in (np.log(c), np.log(c * c + 0.01), -c ** s, np.log1p(c))]


def measure_john_nirenberg(params: Params, kappa5: float = math.e,
                           depth: int = 3) -> float:
    """Smallest kappa6 with avg_B exp(|f-f_B| / (kappa6 ||f||_BMO)) <= kappa5
    on every probe field and every ball of the dyadic family of B_1(0)."""
    ball = Ball(0.0, 1.0)
    worst = 0.0
    for fld in _bmo_probe_fields(params):
        rep = bmo_gamma(fld, params, ball, depth=depth)
        if rep.bmo_norm == 0:
            continue
        for sub in rep.balls[: 1 + 3]:
            def excess(k6):
                with np.errstate(over="ignore"):
                    val = john_nirenberg_average(fld, sub, params, 1.0 / (k6 * rep.bmo_norm))
                return min(val, 1e300) - kappa5
            lo, hi = 1.0, 1.0
            while excess(hi) > 0:
                hi *= 2.0
            while excess(lo) <= 0:
                lo /= 2.0
                if lo < 1e-6:
                    break
            if excess(lo) <= 0:
                continue
            worst = max(worst, optimize.brentq(excess, lo, hi, rtol=1e-8))
    return worst

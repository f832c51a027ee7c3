"""Weighted measures, the scale function rho, h_sigma, scenarios, cylinders.

Every function of |x| integrated over a ball B_R(x0) reduces, by rotational
symmetry, to a one-dimensional integral over spheres |x| = r weighted by the
fraction of each sphere lying inside the ball.  Only |x0| matters.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .params import DomainError, Params


class QuadratureNonConvergence(RuntimeError):
    pass


class GeometryError(ValueError):
    pass


def sphere_area(N: int) -> float:
    """|S^{N-1}|."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class Ball:
    center_norm: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"radius must be positive, got {self.radius}")
        if self.center_norm < 0:
            raise GeometryError("center_norm must be >= 0")

    def scaled(self, factor: float) -> "Ball":
        """Same center, radius multiplied by ``factor``."""
        return Ball(self.center_norm, self.radius * factor)

    def dilated(self, lam: float) -> "Ball":
        """Image of the ball under x -> lam x."""
        return Ball(self.center_norm * lam, self.radius * lam)


# ---------------------------------------------------------------- quadrature

def cap_fraction(N: int, r, d: float, R: float):
    """Fraction of the sphere {|x| = r} inside B_R(x0), |x0| = d."""
    r = np.asarray(r, dtype=float)
    if d == 0.0:
        return np.where(r < R, 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # (r-R)(r+R) avoids cancellation when d is tiny and r is near R
        c = ((r - R) * (r + R) + d * d) / (2.0 * r * d)
    c = np.where(r == 0.0, np.where(d < R, -np.inf, np.inf), c)
    cc = np.clip(c, -1.0, 1.0)
    half = 0.5 * special.betainc((N - 1) / 2.0, 0.5, 1.0 - cc * cc)
    frac = np.where(cc >= 0.0, half, 1.0 - half)
    frac = np.where(c <= -1.0, 1.0, frac)
    return np.where(c >= 1.0, 0.0, frac)


def _quad(fun, a, b, rtol, power=None, scale=0.0):
    """quad with an optional exact r^power weight at the left end a = 0.

    The error is judged against max(|value|, scale), so a thin piece of a
    larger integral only needs to be accurate relative to the whole.
    """
    kw = dict(epsabs=0.0, epsrel=rtol, limit=400)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if power is not None and a == 0.0:
            val, err = integrate.quad(fun, a, b, weight="alg",
                                      wvar=(power, 0.0), **kw)
        else:
            val, err = integrate.quad(fun, a, b, **kw)
    if not np.isfinite(val) or err > max(100 * rtol * max(abs(val), scale), 1e-300):
        raise QuadratureNonConvergence(
            f"integral on [{a}, {b}] = {val} with error {err}")
    return val


def weighted_integral(func, alpha: float, ball: Ball, N: int,
                      rtol: float = 1e-10) -> float:
    """Integral of func(|x|) |x|^-alpha over ``ball`` (func=None means 1)."""
    if alpha >= N:
        raise DomainError(f"alpha={alpha} must be < N={N}")
    d, R = ball.center_norm, ball.radius
    e = N - 1.0 - alpha
    f = (lambda r: 1.0) if func is None else func
    total = 0.0
    lo = abs(R - d)
    if d < R:
        # spheres of radius r <= R - d lie entirely inside the ball
        if func is None:
            total += (R - d) ** (e + 1.0) / (e + 1.0)
        else:
            total += _quad(lambda r: float(f(r)), 0.0, R - d, rtol, power=e)
    if d > 0.0:
        def cap(r):
            return float(f(r)) * float(cap_fraction(N, r, d, R))
        if lo == 0.0:
            total += _quad(cap, 0.0, R + d, rtol, power=e)
        else:
            total += _quad(lambda r: cap(r) * r ** e, lo, R + d, rtol, scale=abs(total))
    return sphere_area(N) * total


def mu(alpha: float, ball: Ball, N: int, rtol: float = 1e-10) -> float:
    """mu_alpha(B) = integral of |x|^-alpha over B."""
    if alpha >= N:
        raise DomainError(f"alpha={alpha} must be < N={N}")
    if ball.center_norm == 0.0:
        return sphere_area(N) * ball.radius ** (N - alpha) / (N - alpha)
    return weighted_integral(None, alpha, ball, N, rtol)


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, e: float):
    return special.roots_jacobi(n, 0.0, e)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def cell_ball_weights(edges, alpha: float, ball: Ball, N: int,
                      order: int = 16) -> np.ndarray:
    """Integral of |x|^-alpha over {x in ball : r_{i-1/2} < |x| < r_{i+1/2}}.

    Integrating a piecewise-constant radial field over the ball is then a dot
    product with these weights.  Cells inside the full-sphere region use the
    exact power antiderivative; cap pieces use Gauss rules split at kinks.
    """
    edges = np.asarray(edges, dtype=float)
    d, R = ball.center_norm, ball.radius
    e = N - 1.0 - alpha
    S = sphere_area(N)
    a, b = edges[:-1], edges[1:]
    inner = max(R - d, 0.0)
    # full-sphere part
    lo_f = np.minimum(a, inner)
    hi_f = np.minimum(b, inner)
    out = S * (hi_f ** (e + 1.0) - lo_f ** (e + 1.0)) / (e + 1.0)
    if d == 0.0:
        return out
    cap_lo, cap_hi = abs(R - d), R + d
    gx, gw = (_GL_X, _GL_W) if order == 16 else \
        np.polynomial.legendre.leggauss(order)
    for i in np.nonzero((b > cap_lo) & (a < cap_hi))[0]:
        lo, hi = max(a[i], cap_lo), min(b[i], cap_hi)
        if hi <= lo:
            continue
        if lo == 0.0:
            xj, wj = _jacobi_rule(order, e)
            r = 0.5 * hi * (1.0 + xj)
            val = (0.5 * hi) ** (e + 1.0) * np.sum(wj * cap_fraction(N, r, d, R))
        else:
            r = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
            val = 0.5 * (hi - lo) * np.sum(gw * r ** e * cap_fraction(N, r, d, R))
        out[i] += S * val
    return out


# ----------------------------------------------------------- scale function

def _rho_alpha(params: Params) -> float:
    return (params.gamma - params.beta) * params.N / 2.0


def rho(params: Params, ball: Ball) -> float:
    """rho_{x0}(R) = (integral over B_R(x0) of |x|^{(beta-gamma)N/2})^{2/N}."""
    return mu(_rho_alpha(params), ball, params.N) ** (2.0 / params.N)


def rho_inverse(params: Params, center_norm: float, s: float,
                rtol: float = 1e-10) -> float:
    """The radius r with rho_{x0}(r) = s."""
    if not s > 0:
        if s == 0:
            return 0.0
        raise DomainError(f"s must be positive, got {s}")
    N = params.N
    alpha = _rho_alpha(params)
    if center_norm == 0.0:
        c = (sphere_area(N) / (N - alpha)) ** (2.0 / N)
        return (s / c) ** (1.0 / params.sigma)

    def f(r):
        return math.log(rho(params, Ball(center_norm, r)) / s)

    hi = max(center_norm, 1e-300)
    while f(hi) < 0:
        hi *= 2.0
    lo = hi / 2.0
    while f(lo) > 0:
        lo /= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=rtol * 1e-2,
                           maxiter=500)


def h_sigma(params: Params, R0: float, R1: float, center_norm: float) -> float:
    """Annulus geometry factor for B_{R0}(x0) minus B_{R1}(x0)."""
    if not 0 < R1 < R0:
        raise GeometryError(f"need 0 < R1 < R0, got R1={R1}, R0={R0}")
    sig, d = params.sigma, center_norm
    if sig < 2.0:
        return ((R0 + d) / (R0 - R1)) ** (2.0 - sig)
    if d < R1:
        return max(1.0, ((R0 - R1) / (R1 - d)) ** (sig - 2.0))
    if d > R0:
        return max(1.0, ((R0 - R1) / (d - R0)) ** (sig - 2.0))
    raise GeometryError(
        f"origin lies in the closed annulus (|x0|={d}, R1={R1}, R0={R0})")


# ---------------------------------------------------------------- scenarios

class Scenario(enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    OUT = "OUT"


def classify_scenario(ball: Ball) -> Scenario:
    d, R = ball.center_norm, ball.radius
    if d == 0.0:
        return Scenario.S1
    if d / 32.0 <= R <= d / 16.0:
        return Scenario.S2
    if 2.5 * d <= R <= 4.0 * d:
        return Scenario.S3
    return Scenario.OUT


# ----------------------------------------------------------- quasi-metrics

def quasi_distance(params: Params, pt1, pt2) -> float:
    """|x-y| max rho^{-1}_{(x+y)/2}(|t-s|), points as (t, signed radius)."""
    (t, x), (s, y) = pt1, pt2
    dx = abs(x - y)
    dt = abs(t - s)
    if dt == 0.0:
        return dx
    return max(dx, rho_inverse(params, abs(x + y) / 2.0, dt))


def standard_quasi_distance(params: Params, pt1, pt2) -> float:
    """|x-y| + |t-s|^{1/(2 max sigma)}."""
    (t, x), (s, y) = pt1, pt2
    return abs(x - y) + abs(t - s) ** (1.0 / max(2.0, params.sigma))


# ----------------------------------------------------------------- cylinders

class CylinderKind(enum.Enum):
    FULL = "full"
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class Cylinder:
    t_end: float
    ball: Ball
    kind: CylinderKind
    rho: float

    @property
    def time_interval(self) -> tuple[float, float]:
        """(start, stop]; the time extent is sized by rho."""
        t0, r = self.t_end, self.rho
        if self.kind is CylinderKind.FULL:
            return t0 - r, t0
        if self.kind is CylinderKind.FORWARD:
            return t0 - r / 4.0, t0
        return t0 - 7.0 * r / 8.0, t0 - 5.0 * r / 8.0

    @property
    def spatial_radius(self) -> float:
        R = self.ball.radius
        return 2.0 * R if self.kind is CylinderKind.FULL else R / 2.0

    def contains(self, other: "Cylinder") -> bool:
        if other.ball.center_norm != self.ball.center_norm:
            return False
        a, b = self.time_interval
        c, e = other.time_interval
        return a <= c and e <= b and other.spatial_radius <= self.spatial_radius


def make_cylinder(params: Params, kind, t_end: float, ball: Ball) -> Cylinder:
    kind = CylinderKind(kind)
    return Cylinder(t_end, ball, kind, rho(params, ball))


def inclusion_factor(params: Params, kappa18: float) -> float:
    """A = 4 max 2 kappa18 max (4 kappa18^2)^(1/sigma)."""
    return max(4.0, 2.0 * kappa18, (4.0 * kappa18 ** 2) ** (1.0 / params.sigma))


def measured_inclusion_factor(params: Params, ball: Ball) -> float:
    """Smallest A >= 4 with rho(R/A) <= rho(R)/4 for this ball."""
    r = rho_inverse(params, ball.center_norm, rho(params, ball) / 4.0)
    return max(4.0, ball.radius / r)


# --------------------------------------------------------------- sandwiches

def sandwich_ratios(params: Params, ball: Ball) -> dict:
    """Ratios whose sup/inf define the two-sided geometry constants.

    k16: (R^2 mu_g/mu_b) / rho, k17: (R^2 mu_g/mu_b) / R^sigma,
    k18: rho / (R^2 (R max |x0|)^(beta-gamma)),
    k19: R / (s^(1/2) (s^(1/sigma) max |x0|)^((gamma-beta)/2)) with s = rho(R),
    D: mu_g(B_2R)/mu_g(B_R).
    """
    N, g, b, sig = params.N, params.gamma, params.beta, params.sigma
    d, R = ball.center_norm, ball.radius
    mg = mu(g, ball, N)
    mb = mu(b, ball, N)
    rh = rho(params, ball)
    scale = R * R * mg / mb
    s = rh
    return {
        "kappa16": scale / rh,
        "kappa17": scale / R ** sig,
        "kappa18": rh / (R * R * max(R, d) ** (b - g)),
        "kappa19": R / (math.sqrt(s) * max(s ** (1.0 / sig), d) ** ((g - b) / 2.0)),
        "D_gamma": mu(g, ball.scaled(2.0), N) / mg,
    }


SCENARIO_OFFSETS = {
    # |x0| / R samples covering each scenario's admissible band
    Scenario.S1: (0.0,),
    Scenario.S2: (16.0, 24.0, 32.0),
    Scenario.S3: (0.25, 1.0 / 3.0, 0.4),
}


def scenario_balls(radius: float, scenarios=(Scenario.S1, Scenario.S2, Scenario.S3)):
    for sc in scenarios:
        for k in SCENARIO_OFFSETS[sc]:
            yield sc, Ball(k * radius, radius)


def two_sided(values) -> float:
    """Smallest K with 1/K <= v <= K for every v."""
    v = np.asarray(list(values), dtype=float)
    return float(max(np.max(v), np.max(1.0 / v)))


def measure_sandwich_constants(params: Params, radii=(0.1, 1.0, 10.0),
                               scenarios=(Scenario.S1, Scenario.S2, Scenario.S3)):
    """Per-radius and overall two-sided constants kappa16..kappa19 and D_gamma.

    Returns {"per_radius": {R: {name: K}}, "overall": {name: K}}.
    """
    names = ("kappa16", "kappa17", "kappa18", "kappa19")
    per_radius = {}
    pooled = {n: [] for n in names}
    doubling = []
    for R in radii:
        vals = {n: [] for n in names}
        for _, ball in scenario_balls(R, scenarios):
            rat = sandwich_ratios(params, ball)
            for n in names:
                vals[n].append(rat[n])
                pooled[n].append(rat[n])
            doubling.append(rat["D_gamma"])
        per_radius[R] = {n: two_sided(vals[n]) for n in names}
    overall = {n: two_sided(pooled[n]) for n in names}
    overall["D_gamma"] = float(max(doubling))
    return {"per_radius": per_radius, "overall": overall}


class GeometryContext:
    """Geometry evaluators bound to one parameter set."""

    def __init__(self, params: Params, rtol: float = 1e-10):
        self.params = params
        self.rtol = rtol
        self._doubling = None

    def mu_gamma(self, ball: Ball) -> float:
        return mu(self.params.gamma, ball, self.params.N, self.rtol)

    def mu_beta(self, ball: Ball) -> float:
        return mu(self.params.beta, ball, self.params.N, self.rtol)

    def rho(self, ball: Ball) -> float:
        return rho(self.params, ball)

    def rho_inverse(self, center_norm: float, s: float) -> float:
        return rho_inverse(self.params, center_norm, s, self.rtol)

    def h_sigma(self, R0, R1, center_norm) -> float:
        return h_sigma(self.params, R0, R1, center_norm)

    @property
    def doubling_gamma(self) -> float:
        if self._doubling is None:
            self._doubling = measure_sandwich_constants(
                self.params, radii=(1.0,))["overall"]["D_gamma"]
        return self._doubling

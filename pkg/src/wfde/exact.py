"""Closed-form solutions: the separable extinction profile and Barenblatt.

Both are radial, so they are evaluated at r = |x|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .geometry import sphere_area
from .params import DomainError, Params


class RegimeError(ValueError):
    """The requested solution does not exist for these parameters."""


@dataclass(frozen=True)
class SeparableSolution:
    """U(t,x) = c (T-t)^{1/(1-m)} |x|^{-sigma/(1-m)}, vanishing for t >= T."""

    params: Params
    T: float
    c: float

    @property
    def space_exponent(self) -> float:
        return self.params.sigma / (1.0 - self.params.m)

    def evaluate(self, t, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("the separable solution is singular at r = 0")
        m = self.params.m
        tau = np.maximum(self.T - np.asarray(t, dtype=float), 0.0)
        out = self.c * tau ** (1.0 / (1.0 - m)) * r ** (-self.space_exponent)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def extinction_time(self) -> float:
        return self.T


def separable_amplitude_power(params: Params) -> float:
    """c^{1-m} = m sigma (N - 2 - beta - m sigma/(1-m))."""
    m, s = params.m, params.sigma
    return m * s * (params.N - 2.0 - params.beta - m * s / (1.0 - m))


def separable(params: Params, T: float) -> SeparableSolution:
    if params.linear:
        raise RegimeError("no separable extinction profile for m = 1")
    bracket = separable_amplitude_power(params)
    if not bracket > 0:
        raise RegimeError(
            f"m sigma (N-2-beta - m sigma/(1-m)) = {bracket} <= 0; "
            "the separable solution needs m < m_c")
    if not T > 0:
        raise DomainError("T must be positive")
    return SeparableSolution(params, float(T), bracket ** (1.0 / (1.0 - params.m)))


@dataclass(frozen=True)
class BarenblattSolution:
    """B(t,x) = t^a F(|x| t^-b), F(r) = A (D + r^sigma)^{1/(m-1)}."""

    params: Params
    A: float
    D: float
    a: float
    b: float

    def profile(self, xi):
        xi = np.asarray(xi, dtype=float)
        m = self.params.m
        out = self.A * (self.D + xi ** self.params.sigma) ** (1.0 / (m - 1.0))
        return out if out.ndim else float(out)

    def evaluate(self, t, r):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("the Barenblatt solution is defined for t > 0")
        r = np.abs(np.asarray(r, dtype=float))
        out = t ** self.a * self.profile(r * t ** (-self.b))
        out = np.asarray(out)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def value_at_origin(self, t: float) -> float:
        return t ** self.a * self.A * self.D ** (1.0 / (self.params.m - 1.0))

    def mass(self) -> float:
        """Integral of B(t,.) |x|^-gamma over R^N (independent of t)."""
        return _barenblatt_mass(self.params, self.A, self.D)

    def rescaled(self, R: float, tau: float) -> "BarenblattSolution":
        """The solution M B(tau t, R x) with M = (R^sigma/tau)^{1/(1-m)}.

        It is again a Barenblatt solution with D' = D tau^{b sigma} / R^sigma.
        """
        sig = self.params.sigma
        return BarenblattSolution(self.params, self.A,
                                  self.D * tau ** (self.b * sig) / R ** sig,
                                  self.a, self.b)


def barenblatt_exponents(params: Params) -> tuple[float, float]:
    """(a, b) with b = 1/(sigma - (N-gamma)(1-m)) and a = -(N-gamma) b."""
    denom = params.sigma - (params.N - params.gamma) * (1.0 - params.m)
    if not denom > 0:
        raise RegimeError(f"Barenblatt solutions need m > m_c = {params.m_c}")
    b = 1.0 / denom
    return -(params.N - params.gamma) * b, b


def barenblatt_amplitude(params: Params) -> float:
    """A from the profile equation (F^m)' = -b r^{sigma-1} F; independent of D."""
    _, b = barenblatt_exponents(params)
    m = params.m
    return (b * (1.0 - m) / (m * params.sigma)) ** (1.0 / (m - 1.0))


def _barenblatt_mass(params: Params, A: float, D: float) -> float:
    k = 1.0 / (1.0 - params.m)
    a1 = (params.N - params.gamma) / params.sigma
    return (sphere_area(params.N) * A / params.sigma * D ** (a1 - k)
            * special.beta(a1, k - a1))


def barenblatt(params: Params, D: float | None = None,
               mass: float | None = None) -> BarenblattSolution:
    """Barenblatt solution fixed by D, or by its mu_gamma-mass."""
    if params.linear or params.m <= params.m_c:
        raise RegimeError(f"Barenblatt solutions need m_c = {params.m_c} < m < 1")
    a, b = barenblatt_exponents(params)
    A = barenblatt_amplitude(params)
    if D is None and mass is None:
        D = 1.0
    if D is None:
        k = 1.0 / (1.0 - params.m)
        a1 = (params.N - params.gamma) / params.sigma
        D = (mass / _barenblatt_mass(params, A, 1.0)) ** (1.0 / (a1 - k))
    if not D > 0:
        raise DomainError("D must be positive")
    return BarenblattSolution(params, A, float(D), a, b)


def profile_ode_residual(sol: BarenblattSolution, xi):
    """(F^m)' + b xi^{sigma-1} F evaluated analytically, relative to b xi^{sigma-1} F."""
    xi = np.asarray(xi, dtype=float)
    m, s = sol.params.m, sol.params.sigma
    base = sol.D + xi ** s
    dFm = (sol.A ** m * m / (m - 1.0) * base ** (m / (m - 1.0) - 1.0)
           * s * xi ** (s - 1.0))
    rhs = sol.b * xi ** (s - 1.0) * sol.profile(xi)
    return (dFm + rhs) / rhs


# -------------------------------------------------------- residual oracles

def weighted_laplacian_fd(phi, params: Params, r: float, h: float) -> float:
    """Central flux-form difference of r^{gamma-N+1} (r^{N-1-beta} phi')'."""
    N, g, b = params.N, params.gamma, params.beta

    def flux(s):
        return s ** (N - 1.0 - b) * (phi(s + h / 2) - phi(s - h / 2)) / h

    return r ** (g - N + 1.0) * (flux(r + h / 2) - flux(r - h / 2)) / h


def pde_residual(solution, t: float, r: float, h: float,
                 dt: float | None = None) -> float:
    """u_t - |x|^gamma div(|x|^-beta grad u^m) by central differences.

    Normalised by |u_t|.  The error of the differences is O(h^2 + dt^2).
    """
    params = solution.params
    m = params.m
    dt = h if dt is None else dt
    u_t = (solution.evaluate(t + dt, r) - solution.evaluate(t - dt, r)) / (2 * dt)
    lap = weighted_laplacian_fd(lambda s: solution.evaluate(t, s) ** m,
                                params, r, h)
    return (u_t - lap) / abs(u_t)


def richardson_residual(solution, t: float, r: float, h: float,
                        dt: float | None = None) -> float:
    """Richardson combination (4 R(h/2) - R(h)) / 3 of the residual."""
    dt = h if dt is None else dt
    return (4.0 * pde_residual(solution, t, r, h / 2, dt / 2)
            - pde_residual(solution, t, r, h, dt)) / 3.0


def residual_order(solution, t: float, r: float, h0: float, levels: int = 4,
                   richardson: bool = True, dt0: float | None = None):
    """Observed convergence order of the residual under h -> h/2.

    Returns (order, residuals).
    """
    fn = richardson_residual if richardson else pde_residual
    dt0 = h0 if dt0 is None else dt0
    hs = h0 / 2.0 ** np.arange(levels)
    res = np.array([abs(fn(solution, t, r, h, dt0 * h / h0)) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    return float(slope), res


def sample(solution, grid, t: float):
    """Snapshot of ``solution`` at time t on the cell centers of ``grid``."""
    from .solver import Snapshot

    return Snapshot(float(t), np.asarray(solution.evaluate(t, grid.centers),
                                         dtype=float))


def rescale_mass_data(params: Params, u0, R: float, M: float):
    """u0 -> (R^{N-gamma}/M) u0(R .), the normalisation behind H~_p invariance."""
    k = R ** (params.N - params.gamma) / M
    return lambda r: k * u0(R * np.asarray(r))

"""Parameter range and derived exponents for u_t = |x|^g div(|x|^-b grad u^m)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

RANGE_TOL = 1e-12


class RangeViolation(ValueError):
    """Raised when (N, gamma, beta, m, p) leaves the admissible range.

    ``which`` names the inequality that failed.
    """

    def __init__(self, which: str, detail: str = ""):
        self.which = which
        msg = which if not detail else f"{which}: {detail}"
        super().__init__(msg)


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class Params:
    """Exponent bundle (N, gamma, beta, m, p) of one equation.

    ``linear=True`` admits m = 1; the nonlinear solver refuses such params.
    """

    N: int
    gamma: float
    beta: float
    m: float
    p: float = 1.0
    linear: bool = False

    def __post_init__(self):
        _check_range(self.N, self.gamma, self.beta, self.m, self.p, self.linear)

    @property
    def sigma(self) -> float:
        return 2.0 + self.beta - self.gamma

    @property
    def m_c(self) -> float:
        return (self.N - 2.0 - self.beta) / (self.N - self.gamma)

    @property
    def p_c(self) -> float:
        return (1.0 - self.m) * (self.N - self.gamma) / self.sigma

    @property
    def r_star(self) -> float:
        return 2.0 * (self.N - self.gamma) / (self.N - 2.0 - self.beta)

    @property
    def q(self) -> float:
        return (self.N - self.gamma) / self.sigma

    @property
    def theta_p(self) -> float:
        return theta(self, self.p)

    def with_p(self, p: float) -> "Params":
        return replace(self, p=p)

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {"N": self.N, "gamma": self.gamma, "beta": self.beta,
                "m": self.m, "p": self.p, "linear": self.linear}


def _check_range(N, gamma, beta, m, p, linear):
    if int(N) != N or N < 3:
        raise RangeViolation("N >= 3", f"N={N}")
    if not gamma < N - RANGE_TOL:
        raise RangeViolation("gamma < N", f"gamma={gamma}, N={N}")
    if not beta > gamma - 2.0 + RANGE_TOL:
        raise RangeViolation("gamma - 2 < beta",
                             f"{gamma - 2.0} < {beta} is false")
    upper = (N - 2.0) * gamma / N
    if not beta <= upper + RANGE_TOL:
        raise RangeViolation("beta <= (N-2)gamma/N",
                             f"{beta} <= {upper} is false")
    if linear:
        if m != 1.0:
            raise RangeViolation("m = 1 in linear mode", f"m={m}")
    elif not 0.0 < m < 1.0:
        raise RangeViolation("0 < m < 1", f"m={m}")
    if not p >= 1.0:
        raise RangeViolation("p >= 1", f"p={p}")
    sigma = 2.0 + beta - gamma
    m_c = (N - 2.0 - beta) / (N - gamma)
    p_c = (1.0 - m) * (N - gamma) / sigma
    if m <= m_c and not p > p_c:
        raise RangeViolation("p > p_c when m <= m_c", f"p={p}, p_c={p_c}")


def validate_params(N, gamma, beta, m, p=1.0, linear=False) -> Params:
    """Build a Params, raising RangeViolation naming the failed inequality."""
    return Params(int(N) if float(N).is_integer() else N, float(gamma),
                  float(beta), float(m), float(p), bool(linear))


def theta(params: Params, p: float) -> float:
    """1/(sigma (p - p_c)); negative below p_c, infinite at p_c."""
    d = params.sigma * (p - params.p_c)
    return math.inf if d == 0 else 1.0 / d


@dataclass(frozen=True)
class ExponentSet:
    sigma: float
    m_c: float
    p_c: float
    theta_p: float
    r_star: float
    q: float


def exponents(params: Params) -> ExponentSet:
    return ExponentSet(sigma=params.sigma, m_c=params.m_c, p_c=params.p_c,
                       theta_p=params.theta_p, r_star=params.r_star,
                       q=params.q)


@dataclass(frozen=True)
class IterationExponents:
    epsilon: float
    k_eps: int
    s_eps: float
    eta_eps: float
    zeta_eps: float
    nu0: float


def reverse_holder_threshold(params: Params, tau_star: float, Hp_tilde: float,
                             kappa15: float = 1.0) -> float:
    """nu0 = m(1-m) tau*^(sigma p theta_p) / (kappa15 * sqrt(H~_p))."""
    m = params.m
    expo = params.sigma * params.p * params.theta_p
    return m * (1.0 - m) * tau_star ** expo / (kappa15 * math.sqrt(Hp_tilde))


def _k_for(r_star: float, m: float, eps: float) -> int:
    k, s = 0, eps
    while not s > 1.0 - m:
        k += 1
        s *= r_star / 2.0
    return k


def iteration_exponents(params: Params, epsilon="auto", tau_star: float = 1.0,
                        Hp_tilde: float = 1.0,
                        kappa15: float = 1.0) -> IterationExponents:
    """Exponents of the reverse Hoelder iteration.

    With ``epsilon="auto"`` the choice eps0 = (2/r*)^k0 (1-m) is used, k0 the
    smallest integer with eps0 < nu0.
    """
    m, rs = params.m, params.r_star
    if not 0.0 < tau_star <= 1.0:
        raise DomainError(f"tau_star must lie in (0,1], got {tau_star}")
    if Hp_tilde < 1.0:
        raise DomainError(f"H~_p must be >= 1, got {Hp_tilde}")
    nu0 = reverse_holder_threshold(params, tau_star, Hp_tilde, kappa15)
    if isinstance(epsilon, str):
        if epsilon != "auto":
            raise DomainError(f"unknown epsilon mode {epsilon!r}")
        k0 = 1
        while (2.0 / rs) ** k0 * (1.0 - m) >= nu0:
            k0 += 1
        eps = (2.0 / rs) ** k0 * (1.0 - m)
    else:
        eps = float(epsilon)
    if not 0.0 < eps < 1.0 - m:
        raise DomainError(f"epsilon must lie in (0, 1-m) = (0, {1 - m}), got {eps}")
    k = _k_for(rs, m, eps)
    s = (rs / 2.0) ** k * eps
    eta = -(1.0 / (s + m - 1.0)) * (params.q + 1.0)
    zeta = -(1.0 / eps) * (1.0 - (2.0 / rs) ** k) / (1.0 - 2.0 / rs)
    return IterationExponents(epsilon=eps, k_eps=k, s_eps=s, eta_eps=eta,
                              zeta_eps=zeta, nu0=nu0)

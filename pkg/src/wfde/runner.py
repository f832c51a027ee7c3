"""Named checks driven by a RunConfig.

Each check entry is a dict with a ``name`` plus its window parameters;
``expect`` ("pass" or "fail") states the verdict the entry anticipates.
Constants missing from the ledger are measured on first use.
"""

from __future__ import annotations

import numpy as np

from . import estimates as est
from . import geometry as geo
from . import inequalities as ineq
from .config import RunConfig
from .reports import ConstantLedger
from .solver import run


class UnknownCheck(KeyError):
    pass


class CheckContext:
    def __init__(self, cfg: RunConfig, ledger: ConstantLedger | None = None,
                 seed: int = 0, trajectory=None):
        self.cfg = cfg
        self.params = cfg.build_params()
        self.ledger = ConstantLedger() if ledger is None else ledger
        self.rng = np.random.default_rng(seed)
        self._traj = trajectory

    @property
    def traj(self):
        if self._traj is None:
            self._traj = run(self.cfg.build_spec())
        return self._traj

    def constant(self, name: str) -> float:
        if name not in self.ledger:
            if name == "kappa13":
                self.ledger.record(name, ineq.measure_ckn_constant(self.params),
                                   "whole-space CKN probes")
            elif name == "kappa6":
                self.ledger.record(name, ineq.measure_john_nirenberg(self.params),
                                   "BMO probe fields")
            else:
                raise KeyError(f"constant {name} is not in the ledger")
        return self.ledger[name]

    def kappa_star(self, ball) -> float:
        key = f"kappa_star[{ball.center_norm:g},{ball.radius:g}]"
        if "kappa_star" in self.ledger and ball.center_norm == 0.0:
            # scale invariant at the origin
            return self.ledger["kappa_star"]
        if key not in self.ledger:
            self.ledger.record(key, est.kappa_star(self.params, ball),
                               "2^m/(5 kappa10') on this ball")
        return self.ledger[key]


def _ball(e, default_R=0.25):
    return geo.Ball(e.get("center", 0.0), e.get("R", default_R))


def _pairs(ctx, n):
    ts = ctx.traj.times
    out = []
    for _ in range(n):
        i, j = sorted(ctx.rng.integers(0, len(ts), size=2))
        out.append((float(ts[j]), float(ts[i])))
    return out


def _smoothing(ctx, e):
    return [est.check_smoothing(ctx.traj, _ball(e), e.get("p", ctx.params.p), e["t"],
                                e.get("kappa1"), e.get("kappa2"))]


def _discrimination(ctx, e):
    sol = ctx.cfg.exact_solution(ctx.params)
    p = e["p"] if "p" in e else e["p_factor"] * ctx.params.p_c
    return [est.smoothing_discrimination(sol, e.get("R", 0.5), p, e.get("t", 0.5))]


def _herrero_pierre(ctx, e):
    ball = _ball(e)
    k = ineq.herrero_pierre_constant(ctx.params, ball)
    return [est.check_herrero_pierre(ctx.traj, ball, t, tau, k)
            for t, tau in _pairs(ctx, e.get("n_pairs", 20))]


def _lp_stability(ctx, e):
    return [est.check_lp_stability(ctx.traj, e["R1"], e["R0"], e["p"], t, tau)
            for t, tau in _pairs(ctx, e.get("n_pairs", 20))]


def _energy(fn):
    def go(ctx, e):
        return [fn(ctx.traj, e["R"], e["R1"], e["T0"], e["T1"], e["T"], e["p"],
                   e.get("constant"))]
    return go


def _caccioppoli(ctx, e):
    return [est.check_caccioppoli(ctx.traj, e["R"], e["tau"], e["t"], e.get("R_in"))]


def _lower_bound(ctx, e):
    ball = _ball(e)
    u0 = ineq.RadialField.from_snapshot(ctx.traj.grid, ctx.traj.initial)
    ts = est.minimal_life_time(u0, ctx.params, ball, ctx.kappa_star(ball))
    return [est.check_lower_bound(ctx.traj, ball, ts, e.get("n_times", 10),
                                  e.get("kappa"))]


def _extinction(ctx, e):
    return [est.check_extinction_bounds(ctx.traj, _ball(e), e.get("p", ctx.params.p),
                                        ctx.constant("kappa13"),
                                        ctx.kappa_star(_ball(e)))]


def _harnack(ctx, e):
    ball = _ball(e, 0.125)
    return est.harnack_triptych(ctx.traj, ball, e.get("eps", 0.1),
                                ctx.kappa_star(geo.Ball(0.0, 2.0 * ball.radius)),
                                e.get("kappa3"))


def _holder(ctx, e):
    src = ctx.cfg.exact_solution(ctx.params) if e.get("source") == "exact" else ctx.traj
    cyl = geo.make_cylinder(ctx.params, e.get("kind", "full"), e["t"], _ball(e, 0.01))
    alpha = est.holder_exponent(src, cyl)
    target = e.get("target")
    tol = e.get("tol", 0.05)
    ok = target is None or abs(alpha - target) <= tol
    return [est.CheckReport("holder_exponent", alpha,
                            alpha if target is None else target, alpha, ok,
                            {"cylinder": cyl, "target": target, "tol": tol})]


def _bmo(ctx, e):
    return [est.check_bmo_window(ctx.traj, _ball(e, 0.125), e["t"],
                                 ctx.constant("kappa6"), ctx.ledger.get("kappa7", np.e))]


def _monotone(ctx, e):
    return [est.check_time_monotonicity(ctx.traj, e.get("slack", 1e-6))]


def _lq_decay(ctx, e):
    return [est.check_lq_decay(ctx.traj, e.get("q", ctx.params.p),
                               ctx.constant("kappa13"), e["tau"], e["t"])]


CHECKS = {
    "smoothing": _smoothing,
    "smoothing_discrimination": _discrimination,
    "herrero_pierre": _herrero_pierre,
    "lp_stability": _lp_stability,
    "energy_upper": _energy(est.check_energy_upper),
    "energy_mid": _energy(est.check_energy_mid),
    "energy_lower": _energy(est.check_energy_lower),
    "caccioppoli": _caccioppoli,
    "lower_bound": _lower_bound,
    "extinction_bounds": _extinction,
    "harnack": _harnack,
    "holder": _holder,
    "bmo_window": _bmo,
    "time_monotonicity": _monotone,
    "lq_decay": _lq_decay,
}


def select_checks(cfg: RunConfig, names=()) -> list:
    """Config entries filtered by name; a bare name adds a default entry."""
    for n in names:
        if n not in CHECKS:
            raise UnknownCheck(n)
    for e in cfg.checks:
        if e["name"] not in CHECKS:
            raise UnknownCheck(e["name"])
    if not names:
        return list(cfg.checks)
    picked = [e for e in cfg.checks if e["name"] in names]
    have = {e["name"] for e in picked}
    return picked + [{"name": n} for n in names if n not in have]


def run_checks(ctx: CheckContext, entries) -> list:
    """[(entry, report, ok)] where ok compares the verdict with ``expect``."""
    out = []
    for e in entries:
        want = e.get("expect", "pass") == "pass"
        for rep in CHECKS[e["name"]](ctx, e):
            out.append((e, rep, bool(rep.passed) == want))
    return out

"""Radial finite-volume solver for u_t = |x|^g div(|x|^-b grad u^m).

Cells carry their exact mu_gamma mass, edges carry the two-point
transmissibility |S^{N-1}| r^{N-1-beta} / (r_{i+1} - r_i).  Time stepping is
backward Euler; the tridiagonal nonlinear system is solved by Newton in the
variable v = u^m, where the diffusion part is linear and the accumulation
term v^{1/m} is convex.  From the previous time level the Newton iterates
then approach the solution monotonically from above, so they never go
negative.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .geometry import sphere_area
from .params import DomainError, Params


class GradingError(ValueError):
    pass


class NewtonDivergence(RuntimeError):
    pass


class NonphysicalState(RuntimeError):
    pass


class NotExtinct(RuntimeError):
    pass


# --------------------------------------------------------------------- grid

@dataclass(frozen=True, eq=False)
class WeightedGrid:
    params: Params
    edges: np.ndarray
    centers: np.ndarray
    masses: np.ndarray
    beta_masses: np.ndarray
    trans: np.ndarray
    grading: str = "uniform"

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def r_min(self) -> float:
        return float(self.edges[0])

    @property
    def r_max(self) -> float:
        return float(self.edges[-1])

    def boundary_trans(self, side: str) -> float:
        """Transmissibility between the outer cell and a boundary value."""
        p = self.params
        if side == "left":
            r, dist = self.edges[0], self.centers[0] - self.edges[0]
        else:
            r, dist = self.edges[-1], self.edges[-1] - self.centers[-1]
        if r == 0.0:
            return 0.0
        return sphere_area(p.N) * r ** (p.N - 1.0 - p.beta) / dist

    @property
    def grid_id(self) -> str:
        h = hashlib.sha256(np.asarray(self.edges, dtype="<f8").tobytes())
        h.update(repr((self.params.N, self.params.gamma, self.params.beta)).encode())
        return h.hexdigest()[:16]

    def cells_in(self, radius: float) -> np.ndarray:
        """Mask of cells whose center lies in B_radius(0)."""
        return self.centers < radius

    def ball_masses(self, radius: float, alpha: float | None = None) -> np.ndarray:
        """Exact mu_alpha mass of each cell intersected with B_radius(0)."""
        p = self.params
        alpha = p.gamma if alpha is None else alpha
        e = p.N - alpha
        lo = np.minimum(self.edges[:-1], radius)
        hi = np.minimum(self.edges[1:], radius)
        return sphere_area(p.N) * (hi ** e - lo ** e) / e


def _power_cell_masses(edges, N, alpha):
    e = N - alpha
    return sphere_area(N) * (edges[1:] ** e - edges[:-1] ** e) / e


def build_grid(params: Params, r_min: float, r_max: float, n_cells: int,
               grading: str = "uniform", ratio: float = 1.0) -> WeightedGrid:
    """Radial grid on [r_min, r_max].

    ``grading="geometric"`` makes successive widths grow by ``ratio``
    (ratio < 1 clusters cells at the outer end, ratio > 1 at the inner one).
    """
    if not 0 <= r_min < r_max:
        raise GradingError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
    if n_cells < 4:
        raise GradingError("need at least 4 cells")
    if grading == "uniform" or (grading == "geometric" and ratio == 1.0):
        edges = np.linspace(r_min, r_max, n_cells + 1)
    elif grading == "geometric":
        if not ratio > 0:
            raise GradingError(f"geometric ratio must be positive, got {ratio}")
        w = ratio ** np.arange(n_cells)
        edges = r_min + (r_max - r_min) * np.concatenate(([0.0], np.cumsum(w) / w.sum()))
        edges[-1] = r_max
    else:
        raise GradingError(f"unknown grading {grading!r}")
    if np.any(np.diff(edges) <= 0):
        raise GradingError("grid edges are not strictly increasing")
    N = params.N
    centers = 0.5 * (edges[:-1] + edges[1:])
    masses = _power_cell_masses(edges, N, params.gamma)
    beta_masses = _power_cell_masses(edges, N, params.beta)
    inner = edges[1:-1]
    trans = sphere_area(N) * inner ** (N - 1.0 - params.beta) / np.diff(centers)
    return WeightedGrid(params, edges, centers, masses, beta_masses, trans,
                        grading if ratio != 1.0 else "uniform")


def grid_from_edges(params: Params, edges) -> WeightedGrid:
    edges = np.asarray(edges, dtype=float)
    if len(edges) < 5 or edges[0] < 0 or np.any(np.diff(edges) <= 0):
        raise GradingError("edges must be >= 0, strictly increasing, >= 4 cells")
    N = params.N
    centers = 0.5 * (edges[:-1] + edges[1:])
    trans = sphere_area(N) * edges[1:-1] ** (N - 1.0 - params.beta) / np.diff(centers)
    return WeightedGrid(params, edges, centers,
                        _power_cell_masses(edges, N, params.gamma),
                        _power_cell_masses(edges, N, params.beta), trans,
                        "custom")


# ---------------------------------------------------------- snapshots, bcs

@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ZeroFlux:
    pass


@dataclass(frozen=True)
class DeltaMDP:
    delta: float


@dataclass(frozen=True)
class MDP:
    """Homogeneous Dirichlet data on B_{R0}, datum supported in B_R.

    Solved through the lifted problems with boundary value delta/2^k,
    k = 0..levels-1, extrapolated to delta = 0.  delta has to sit well below
    the smallest value of interest, or the extrapolation is not in its
    asymptotic range.
    """

    R: float
    delta: float = 1e-12
    levels: int = 3


@dataclass(frozen=True)
class ExactTrace:
    solution: object


def boundary_values(bc, grid: WeightedGrid, t: float):
    """(left, right) Dirichlet values at time t; None means no flux."""
    if isinstance(bc, ZeroFlux):
        return None, None
    if isinstance(bc, DeltaMDP):
        return None, bc.delta
    if isinstance(bc, MDP):
        return None, 0.0
    if isinstance(bc, ExactTrace):
        sol = bc.solution
        left = float(sol.evaluate(t, grid.r_min)) if grid.r_min > 0 else None
        return left, float(sol.evaluate(t, grid.r_max))
    raise DomainError(f"unknown boundary condition {bc!r}")


def value_floor(bc) -> float:
    return bc.delta if isinstance(bc, DeltaMDP) else 0.0


@dataclass
class ProblemSpec:
    params: Params
    grid: WeightedGrid
    bc: object
    initial: Snapshot
    t_end: float
    dt: float
    dt_max: float | None = None
    adaptive: bool = True
    newton_tol: float = 1e-13
    max_iter: int = 60
    output_times: tuple | None = None
    extinction_tol: float = 1e-8
    stop_at_extinction: bool = False

    def __post_init__(self):
        if self.params.linear:
            raise DomainError("the nonlinear solver needs 0 < m < 1")
        if not isinstance(self.initial, Snapshot):
            self.initial = Snapshot(0.0, np.asarray(self.initial, dtype=float))
        if self.initial.values.shape != (self.grid.n,):
            raise DomainError("initial data does not match the grid")
        if np.any(self.initial.values < 0) or not np.all(np.isfinite(self.initial.values)):
            raise NonphysicalState("initial data must be finite and nonnegative")
        if isinstance(self.bc, MDP):
            R0 = self.grid.r_max
            if 4.0 * self.bc.R > R0 * (1 + 1e-12):
                raise DomainError(f"MDP needs 4R <= R0, got R={self.bc.R}, R0={R0}")
            outside = self.grid.centers > self.bc.R
            if np.any(self.initial.values[outside] != 0.0):
                raise DomainError("MDP datum must be supported in B_R")
        if isinstance(self.bc, DeltaMDP):
            if np.any(self.initial.values < self.bc.delta * (1 - 1e-14)):
                raise DomainError("delta-MDP datum must be >= delta")
        if self.dt_max is None:
            self.dt_max = self.dt if not self.adaptive else np.inf
        if not self.t_end > self.initial.time:
            raise DomainError("t_end must exceed the initial time")


# ------------------------------------------------------------------ stepping

@dataclass
class StepInfo:
    iterations: int
    residual: float


def _newton(grid: WeightedGrid, m: float, u_old: np.ndarray, dt: float,
            left, right, floor: float, tol: float, max_iter: int):
    n = grid.n
    w = grid.masses / dt
    tr = grid.trans
    tl = grid.boundary_trans("left") if left is not None else 0.0
    trr = grid.boundary_trans("right") if right is not None else 0.0
    gl = left ** m if left is not None else 0.0
    gr = right ** m if right is not None else 0.0
    vfloor = floor ** m
    inv_m = 1.0 / m

    def residual(v):
        flux = tr * np.diff(v)
        div = np.zeros(n)
        div[:-1] += flux
        div[1:] -= flux
        div[0] += tl * (gl - v[0])
        div[-1] += trr * (gr - v[-1])
        return w * (v ** inv_m - u_old) - div

    v = np.maximum(u_old ** m, vfloor)
    ab = np.zeros((3, n))
    ab[0, 1:] = -tr
    ab[2, :-1] = -tr
    offdiag_sum = np.zeros(n)
    offdiag_sum[:-1] += tr
    offdiag_sum[1:] += tr
    offdiag_sum[0] += tl
    offdiag_sum[-1] += trr
    F = residual(v)
    scale = max(float(np.max(np.abs(w * u_old))), float(np.max(np.abs(w))) * vfloor ** inv_m, 1e-300)
    for it in range(1, max_iter + 1):
        if not np.all(np.isfinite(F)):
            raise NewtonDivergence("non-finite residual")
        if np.max(np.abs(F)) <= 1e-15 * scale:
            return v ** inv_m, StepInfo(it - 1, float(np.max(np.abs(F)) / scale))
        ab[1] = w * inv_m * v ** (inv_m - 1.0) + offdiag_sum
        dv = solve_banded((1, 1), ab, -F, check_finite=False)
        v_new = np.maximum(v + dv, vfloor)
        if not np.all(np.isfinite(v_new)):
            raise NewtonDivergence("non-finite Newton update")
        change = np.max(np.abs(v_new - v))
        v = v_new
        F = residual(v)
        if change <= tol * max(float(np.max(v)), vfloor):
            return v ** inv_m, StepInfo(it, float(np.max(np.abs(F)) / scale))
    raise NewtonDivergence(f"no convergence in {max_iter} iterations")


def step_implicit(spec: ProblemSpec, snapshot: Snapshot, dt: float,
                  info: list | None = None) -> Snapshot:
    """One backward Euler step from ``snapshot`` of length dt."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    t_new = snapshot.time + dt
    bc = spec.bc
    if isinstance(bc, MDP):
        bc = DeltaMDP(0.0)
    left, right = boundary_values(bc, spec.grid, t_new)
    u, si = _newton(spec.grid, spec.params.m, snapshot.values, dt, left, right,
                    value_floor(bc), spec.newton_tol, spec.max_iter)
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise NonphysicalState("negative or non-finite values after a step")
    if info is not None:
        info.append(si)
    return Snapshot(t_new, u)


# -------------------------------------------------------------- trajectories

@dataclass(eq=False)
class Trajectory:
    grid: WeightedGrid
    times: np.ndarray
    values: np.ndarray
    bc: object = None
    diagnostics: dict = field(default_factory=dict)
    extinction_time: float | None = None
    members: tuple = ()
    deltas: tuple = ()

    @property
    def params(self) -> Params:
        return self.grid.params

    @property
    def initial(self) -> Snapshot:
        return Snapshot(float(self.times[0]), self.values[0])

    def __len__(self):
        return len(self.times)

    def snapshot(self, i: int) -> Snapshot:
        return Snapshot(float(self.times[i]), self.values[i])

    @property
    def snapshots(self) -> list:
        return [self.snapshot(i) for i in range(len(self.times))]

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > rtol * max(1.0, abs(t)):
            raise DomainError(f"time {t} is not stored in the trajectory")
        return i

    def at(self, t: float) -> Snapshot:
        """Stored snapshot at t, or linear interpolation between neighbours."""
        ts = self.times
        if t < ts[0] - 1e-14 or t > ts[-1] + 1e-14:
            raise DomainError(f"time {t} outside [{ts[0]}, {ts[-1]}]")
        j = int(np.searchsorted(ts, t))
        if j < len(ts) and abs(ts[j] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.snapshot(j)
        if j > 0 and abs(ts[j - 1] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.snapshot(j - 1)
        lam = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
        return Snapshot(t, (1 - lam) * self.values[j - 1] + lam * self.values[j])

    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def mass(self) -> np.ndarray:
        """Discrete mu_gamma mass sum_i w_i u_i at every stored time."""
        return self.values @ self.grid.masses

    # ---- serialization
    def to_dict(self) -> dict:
        p = self.params
        return {
            "format": "wfde-trajectory/1",
            "params": p.as_dict(),
            "grid": {"edges": self.grid.edges.tolist(),
                     "grading": self.grid.grading,
                     "grid_id": self.grid.grid_id},
            "bc": describe_bc(self.bc),
            "extinction_time": self.extinction_time,
            "deltas": list(self.deltas),
            "snapshots": [{"t": float(t), "u": v.tolist()}
                          for t, v in zip(self.times, self.values)],
            "diagnostics": {k: list(map(float, v)) for k, v in self.diagnostics.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        pp = d["params"]
        params = Params(int(pp["N"]), pp["gamma"], pp["beta"], pp["m"],
                        pp.get("p", 1.0), pp.get("linear", False))
        grid = grid_from_edges(params, d["grid"]["edges"])
        times = np.array([s["t"] for s in d["snapshots"]], dtype=float)
        values = np.array([s["u"] for s in d["snapshots"]], dtype=float)
        diag = {k: np.asarray(v) for k, v in d.get("diagnostics", {}).items()}
        return cls(grid, times, values, bc=d.get("bc"), diagnostics=diag,
                   extinction_time=d.get("extinction_time"),
                   deltas=tuple(d.get("deltas", ())))

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Long format: t, r, u; one row per (time, cell)."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "r", "u"])
        r = self.grid.centers
        for t, v in zip(self.times, self.values):
            for ri, ui in zip(r, v):
                wr.writerow([repr(float(t)), repr(float(ri)), repr(float(ui))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, grid: WeightedGrid) -> "Trajectory":
        rows = list(csv.DictReader(io.StringIO(text)))
        times = sorted({float(row["t"]) for row in rows})
        idx = {t: i for i, t in enumerate(times)}
        values = np.zeros((len(times), grid.n))
        col = {float(r): j for j, r in enumerate(grid.centers)}
        for row in rows:
            values[idx[float(row["t"])], col[float(row["r"])]] = float(row["u"])
        return cls(grid, np.array(times), values)


def describe_bc(bc):
    if bc is None or isinstance(bc, (str, dict)):
        return bc
    if isinstance(bc, ExactTrace):
        return {"kind": "ExactTrace", "solution": type(bc.solution).__name__}
    d = {"kind": type(bc).__name__}
    d.update({k: v for k, v in vars(bc).items()})
    return d


# ---------------------------------------------------------------------- run

def _targets(spec: ProblemSpec):
    t0 = spec.initial.time
    ts = set()
    if spec.output_times is not None:
        ts.update(float(t) for t in spec.output_times if t0 < t <= spec.t_end)
    ts.add(float(spec.t_end))
    return sorted(ts)


def _run_single(spec: ProblemSpec) -> Trajectory:
    store_all = spec.output_times is None
    targets = _targets(spec)
    snap = spec.initial
    times, values = [snap.time], [snap.values.copy()]
    iters, resid, dts = [], [], []
    rejections = 0
    dt = spec.dt
    dt_floor = 1e-12 * spec.t_end
    sup0 = float(np.max(snap.values)) if snap.values.size else 0.0
    k = 0
    while k < len(targets):
        target = targets[k]
        remaining = target - snap.time
        h = min(dt, remaining)
        hit = h >= remaining * (1 - 1e-12)
        if hit:
            h = remaining
        info: list = []
        try:
            new = step_implicit(spec, snap, h, info)
        except NewtonDivergence:
            rejections += 1
            dt = h / 2.0
            if dt < dt_floor:
                raise NewtonDivergence(
                    f"step size fell below {dt_floor} at t={snap.time}")
            continue
        if hit:
            new = Snapshot(target, new.values)
            k += 1
        snap = new
        iters.append(info[0].iterations)
        resid.append(info[0].residual)
        dts.append(h)
        if store_all or hit:
            times.append(snap.time)
            values.append(snap.values.copy())
        if spec.adaptive and not (hit and h < dt):
            dt = min(dt * 1.2, spec.dt_max)
        if spec.stop_at_extinction and np.max(snap.values) <= spec.extinction_tol * sup0:
            if times[-1] != snap.time:
                times.append(snap.time)
                values.append(snap.values.copy())
            break
    return Trajectory(spec.grid, np.array(times), np.array(values), bc=spec.bc,
                      diagnostics={"newton_iterations": np.array(iters),
                                   "residuals": np.array(resid),
                                   "dt": np.array(dts),
                                   "rejections": np.array([rejections])})


def richardson_weights(deltas, exponent: float = 1.0) -> np.ndarray:
    """Lagrange weights extrapolating values at nodes delta^exponent to 0."""
    x = np.asarray(deltas, dtype=float) ** exponent
    wts = np.ones(len(x))
    for i in range(len(x)):
        for j in range(len(x)):
            if i != j:
                wts[i] *= (0.0 - x[j]) / (x[i] - x[j])
    return wts


DELTA_EXPONENT = 1.0


def _run_mdp(spec: ProblemSpec) -> Trajectory:
    bc: MDP = spec.bc
    if spec.output_times is None:
        t0 = spec.initial.time
        outs = tuple(np.linspace(t0, spec.t_end, 51)[1:])
    else:
        outs = tuple(spec.output_times)
    deltas = tuple(bc.delta / 2.0 ** k for k in range(bc.levels))
    members = []
    for d in deltas:
        sub = ProblemSpec(spec.params, spec.grid, DeltaMDP(d),
                          Snapshot(spec.initial.time, spec.initial.values + d),
                          spec.t_end, spec.dt, spec.dt_max, spec.adaptive,
                          spec.newton_tol, spec.max_iter, outs,
                          spec.extinction_tol, False)
        members.append(_run_single(sub))
    n_t = min(len(mb.times) for mb in members)
    wts = richardson_weights(deltas, DELTA_EXPONENT)
    values = sum(wk * mb.values[:n_t] for wk, mb in zip(wts, members))
    values = np.maximum(values, 0.0)
    values[0] = spec.initial.values
    diag = {"newton_iterations": np.concatenate(
        [mb.diagnostics["newton_iterations"] for mb in members])}
    return Trajectory(spec.grid, members[0].times[:n_t], values, bc=bc,
                      diagnostics=diag, members=tuple(members), deltas=deltas)


def run(spec: ProblemSpec) -> Trajectory:
    """Integrate the problem up to t_end and return the trajectory."""
    if isinstance(spec.bc, MDP):
        return _run_mdp(spec)
    return _run_single(spec)


# ---------------------------------------------------------------- extinction

def _crossing(t_a, s_a, t_b, s_b, tol, m):
    """Interpolate the tol-crossing in sup^(1-m), which is near-linear in T - t."""
    ya, yb, yt = s_a ** (1 - m), s_b ** (1 - m), tol ** (1 - m)
    if ya == yb:
        return t_b
    return t_a + (t_b - t_a) * (ya - yt) / (ya - yb)


def detect_extinction(traj: Trajectory, tol: float | None = None,
                      spec: ProblemSpec | None = None, depth: int = 3,
                      substeps: int = 32) -> float:
    """First time with sup u <= tol.

    With ``spec`` the bracketing interval is re-run from the last snapshot
    above tol with smaller steps, ``depth`` times.
    """
    sups = traj.sup_norms()
    sup0 = float(sups[0])
    if tol is None:
        tol = 1e-8 * sup0
    if sup0 <= tol:
        return float(traj.times[0])
    below = np.nonzero(sups <= tol)[0]
    if len(below) == 0:
        raise NotExtinct(f"sup u = {sups[-1]:.3e} > tol at t_end = {traj.times[-1]}")
    k = int(below[0])
    t_a, t_b = float(traj.times[k - 1]), float(traj.times[k])
    s_a, s_b = float(sups[k - 1]), float(sups[k])
    m = traj.params.m
    if spec is not None and not isinstance(spec.bc, MDP):
        snap = traj.snapshot(k - 1)
        for _ in range(depth):
            h = (t_b - t_a) / substeps
            sub = ProblemSpec(spec.params, spec.grid, spec.bc, snap, t_b, h,
                              h, False, spec.newton_tol, spec.max_iter)
            tr = _run_single(sub)
            ss = tr.sup_norms()
            j = int(np.nonzero(ss <= tol)[0][0]) if np.any(ss <= tol) else len(ss) - 1
            if j == 0:
                break
            t_a, t_b = float(tr.times[j - 1]), float(tr.times[j])
            s_a, s_b = float(ss[j - 1]), float(ss[j])
            snap = tr.snapshot(j - 1)
    return float(_crossing(t_a, s_a, t_b, s_b, tol, m))

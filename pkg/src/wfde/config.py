"""Run configuration as a JSON document of named blocks, plus the builders
that turn it into solver objects."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from . import exact, solver
from .params import Params, validate_params


class ConfigError(ValueError):
    pass


DATUM_PROFILES = ("bump", "characteristic", "barenblatt-slice",
                  "separable-slice", "custom-table")
BC_KINDS = ("ZeroFlux", "DeltaMDP", "MDP", "ExactTrace")


@dataclass
class RunConfig:
    params: dict
    grid: dict
    problem: dict
    checks: list = field(default_factory=list)
    output: dict = field(default_factory=lambda: {"directory": "out",
                                                   "formats": ["json"]})

    # ---------------------------------------------------------------- I/O
    def to_dict(self) -> dict:
        return copy.deepcopy({"params": self.params, "grid": self.grid,
                              "problem": self.problem, "checks": self.checks,
                              "output": self.output})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        missing = [k for k in ("params", "grid", "problem") if k not in d]
        if missing:
            raise ConfigError(f"missing config blocks: {', '.join(missing)}")
        extra = set(d) - {"params", "grid", "problem", "checks", "output"}
        if extra:
            raise ConfigError(f"unknown config blocks: {', '.join(sorted(extra))}")
        cfg = cls(copy.deepcopy(d["params"]), copy.deepcopy(d["grid"]),
                  copy.deepcopy(d["problem"]), copy.deepcopy(d.get("checks", [])))
        if "output" in d:
            cfg.output = copy.deepcopy(d["output"])
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    # ---------------------------------------------------------- validation
    def validate(self):
        self.build_params()
        datum = self.problem.get("datum", {})
        if datum.get("profile") not in DATUM_PROFILES:
            raise ConfigError(f"unknown datum profile {datum.get('profile')!r}; "
                              f"expected one of {', '.join(DATUM_PROFILES)}")
        bc = self.problem.get("bc", {})
        if bc.get("kind") not in BC_KINDS:
            raise ConfigError(f"unknown boundary condition {bc.get('kind')!r}")
        t_end = self.problem.get("t_end")
        if not isinstance(t_end, (int, float)) or not t_end > 0:
            raise ConfigError("problem.t_end must be a positive number")
        for chk in self.checks:
            if not isinstance(chk, dict) or "name" not in chk:
                raise ConfigError("each check needs a name")
            for key in ("t", "tau"):
                if key in chk and not 0 <= chk[key] <= t_end:
                    raise ConfigError(f"check {chk['name']}: {key}={chk[key]} "
                                      f"outside [0, t_end={t_end}]")

    # ------------------------------------------------------------ builders
    def build_params(self) -> Params:
        p = self.params
        try:
            return validate_params(p["N"], p["gamma"], p["beta"], p["m"],
                                   p.get("p", 1.0), p.get("linear", False))
        except KeyError as exc:
            raise ConfigError(f"params block is missing {exc}") from exc

    def build_grid(self, params: Params | None = None):
        params = self.build_params() if params is None else params
        g = self.grid
        if "edges" in g:
            return solver.grid_from_edges(params, np.asarray(g["edges"], dtype=float))
        return solver.build_grid(params, g.get("r_min", 0.0), g.get("r_max", 1.0),
                                 g.get("n_cells", 128), g.get("grading", "uniform"),
                                 g.get("ratio", 1.0))

    def exact_solution(self, params: Params | None = None):
        """The closed-form solution a datum or trace refers to, if any."""
        params = self.build_params() if params is None else params
        spec = self.problem.get("bc", {})
        if spec.get("kind") != "ExactTrace":
            spec = self.problem.get("datum", {})
        kind = spec.get("solution", spec.get("profile"))
        if kind in ("separable", "separable-slice"):
            return exact.separable(params, spec.get("T", 1.0))
        if kind in ("barenblatt", "barenblatt-slice"):
            return exact.barenblatt(params, D=spec.get("D"), mass=spec.get("mass"))
        return None

    def build_datum(self, grid) -> np.ndarray:
        d = self.problem["datum"]
        prof = d["profile"]
        c = grid.centers
        amp = d.get("amplitude", 1.0)
        if prof == "bump":
            R, k = d.get("R", 0.25), d.get("k", 2)
            return amp * np.where(c < R, np.clip(1.0 - (c / R) ** 2, 0.0, None) ** k, 0.0)
        if prof == "characteristic":
            return amp * np.where(c < d.get("R", 0.25), 1.0, 0.0)
        if prof in ("barenblatt-slice", "separable-slice"):
            sol = self.exact_solution(grid.params)
            t = d.get("t", 1.0 if prof == "barenblatt-slice" else 0.0)
            return amp * np.asarray(sol.evaluate(t, c))
        if prof == "custom-table":
            r, u = np.asarray(d["r"], dtype=float), np.asarray(d["u"], dtype=float)
            return amp * np.interp(c, r, u, right=0.0)
        raise ConfigError(f"unknown datum profile {prof!r}")

    def build_bc(self, params: Params | None = None):
        b = self.problem["bc"]
        kind = b["kind"]
        if kind == "ZeroFlux":
            return solver.ZeroFlux()
        if kind == "DeltaMDP":
            return solver.DeltaMDP(b["delta"])
        if kind == "MDP":
            return solver.MDP(b.get("R", self.problem["datum"].get("R", 0.25)),
                              b.get("delta", 1e-12), b.get("levels", 3))
        return solver.ExactTrace(self.exact_solution(params))

    def build_spec(self) -> solver.ProblemSpec:
        params = self.build_params()
        grid = self.build_grid(params)
        bc = self.build_bc(params)
        u0 = self.build_datum(grid)
        if isinstance(bc, solver.DeltaMDP):
            u0 = np.maximum(u0, bc.delta)
        pr = self.problem
        t0 = pr.get("t0", 0.0)
        dt = pr.get("dt", 1e-3 * (pr["t_end"] - t0))
        outs = pr.get("output_times")
        if outs is None and "n_outputs" in pr:
            outs = list(np.linspace(t0, pr["t_end"], pr["n_outputs"] + 1)[1:])
        return solver.ProblemSpec(params, grid, bc, solver.Snapshot(t0, u0), pr["t_end"],
                                  dt, pr.get("dt_max"), pr.get("adaptive", True),
                                  output_times=None if outs is None else tuple(outs),
                                  stop_at_extinction=pr.get("stop_at_extinction", False))

    def with_value(self, path: str, value) -> "RunConfig":
        """Copy with one dotted key replaced, e.g. 'params.m'."""
        d = self.to_dict()
        node = d
        keys = path.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
        return RunConfig.from_dict(d)

"""
Driving the lab from a config file
==================================

The ``wfde`` command reads a JSON run configuration.  This script writes
one to a temporary directory and runs the main subcommands on it.
"""

import json
import pathlib
import tempfile

from wfde.cli import main

cfg = {
    "params": {"N": 3, "gamma": 1.0, "beta": 0.0, "m": 0.6},
    "grid": {"r_min": 0.0, "r_max": 1.0, "n_cells": 96},
    "problem": {"datum": {"profile": "bump", "R": 0.25},
                "bc": {"kind": "MDP", "R": 0.25},
                "t_end": 2e-4, "dt": 1e-6, "n_outputs": 20},
    "checks": [{"name": "time_monotonicity"},
               {"name": "harnack", "R": 0.125, "eps": 0.1},
               {"name": "smoothing", "R": 0.25, "p": 2.0, "t": 1e-4}],
}

with tempfile.TemporaryDirectory() as tmp:
    path = pathlib.Path(tmp) / "run.json"
    path.write_text(json.dumps(cfg))
    out = str(pathlib.Path(tmp) / "out")
    for cmd in (["simulate"], ["check"], ["constants"]):
        code = main(cmd + ["--config", str(path), "--out", out])
        print(f"wfde {cmd[0]} -> exit {code}")
    print(sorted(p.name for p in pathlib.Path(out).iterdir()))

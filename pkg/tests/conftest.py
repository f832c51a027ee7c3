import numpy as np
import pytest

from wfde import MDP, Params, ProblemSpec, ZeroFlux, build_grid, run


@pytest.fixture(scope="session")
def good_params():
    """Good fast-diffusion range: m above m_c = 1/2, sigma = 1."""
    return Params(3, 1.0, 0.0, 0.6)


@pytest.fixture(scope="session")
def very_fast_params():
    """m = 1/4 below m_c = 1/2, so p has to exceed p_c = 3/2."""
    return Params(3, 1.0, 0.0, 0.25, p=2.0)


def bump(centers, R, amp=1.0, k=2):
    return amp * np.where(centers < R, np.clip(1 - (centers / R) ** 2, 0, None) ** k, 0.0)


@pytest.fixture(scope="session")
def mdp_run(good_params):
    """Minimal Dirichlet run on B_1 with a bump datum supported in B_1/4."""
    g = build_grid(good_params, 0.0, 1.0, 192)
    u0 = bump(g.centers, 0.25)
    outs = tuple(np.linspace(0, 4e-4, 41)[1:])
    return run(ProblemSpec(good_params, g, MDP(0.25), u0, 4e-4, 4e-7, output_times=outs))


@pytest.fixture(scope="session")
def zero_flux_run(good_params):
    g = build_grid(good_params, 0.0, 1.0, 96)
    u0 = 1.0 + 0.5 * np.cos(np.pi * g.centers)
    return run(ProblemSpec(good_params, g, ZeroFlux(), u0, 0.05, 1e-3, adaptive=False))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(number, ok, detail, elapsed, limit):
        ok = bool(ok) and elapsed < limit
        line = (f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail} "
                f"[{elapsed:.2f}s < {limit:g}s]")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

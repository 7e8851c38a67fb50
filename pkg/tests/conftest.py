from dataclasses import replace

import numpy as np
import pytest
from hypothesis import settings

from sfisim.assembly import SimState
from sfisim.cases import builtin_case
from sfisim.units import DAY

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def small_case(name="lock_exchange", nx=3, nz=3, **kw):
    case = replace(builtin_case(name), nx=nx, nz=nz)
    return replace(case, **kw) if kw else case


def random_state(disc, state0, rng, dp=2e5, smin=0.05):
    """Interior random state (away from saturation bounds) with pressure noise."""
    nc, nph = disc.n_cells, disc.n_phases
    raw = rng.uniform(smin, 1.0, size=(nc, nph))
    s = raw / raw.sum(axis=1, keepdims=True)
    p = state0.p + rng.uniform(-dp, dp, size=nc)
    return SimState(p, s)


def fd_jacobian(fun, x, h):
    """Central finite-difference Jacobian of ``fun`` with per-entry steps ``h``."""
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(h, x.shape)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        cols.append((fun(x + e) - fun(x - e)) / (2 * h[j]))
    return np.column_stack(cols)


@pytest.fixture
def day():
    return DAY


ACCEPTANCE = {}


def record_criterion(number, title, ok, detail):
    ACCEPTANCE[number] = (title, bool(ok), detail)
    print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{n}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")

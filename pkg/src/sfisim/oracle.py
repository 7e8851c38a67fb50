"""Monolithic Newton solver on the coupled system; reference for SFI equivalence."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import SimState, assemble_fi
from .errors import LinearSolveError
from .newton import newton_solve, project_saturations


@dataclass
class FiResult:
    state: SimState
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = False


class OracleFailure(RuntimeError):
    pass


def _coupled_safeguard(n_phases, max_change):
    def apply(x, dx):
        X = x.reshape(-1, n_phases).copy()
        D = dx.reshape(-1, n_phases)
        X[:, 0] += D[:, 0]
        if n_phases > 1:
            ds = D[:, 1:]
            big = np.abs(ds).max(axis=1)
            fac = max_change / np.maximum(big, max_change)
            X[:, 1:] = project_saturations(X[:, 1:] + ds * fac[:, None])
        return X.ravel()

    return apply


def fi_solve_step(disc, state_n: SimState, dt, wells=(), x0: SimState | None = None,
                  tol=1e-10, max_iter=50, chop=0.2):
    """One backward-Euler step of the coupled equations by plain Newton.

    Raises ``OracleFailure`` when Newton does not reach ``tol`` in ``max_iter``
    iterations; callers may retry with a smaller ``dt``.
    """
    nph = disc.n_phases
    start = x0 if x0 is not None else state_n

    def unpack(x):
        X = x.reshape(-1, nph)
        return SimState.from_primary(X[:, 0], X[:, 1:].ravel(), nph)

    def asm(x):
        return assemble_fi(disc, unpack(x), state_n, dt, wells)

    x = np.column_stack([start.p, start.s[:, :-1]]).ravel()
    try:
        res = newton_solve(asm, x, tol, max_iter, _coupled_safeguard(nph, chop))
    except LinearSolveError as exc:
        raise OracleFailure(f"FI Newton failed: {exc}") from None
    if not res.converged:
        raise OracleFailure(
            f"FI Newton did not reach {tol:g} in {max_iter} iterations "
            f"(last residual {res.history[-1]:.3e})")
    return FiResult(unpack(res.x), res.iterations, res.history, True)

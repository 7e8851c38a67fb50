"""Newton driver for the inner sub-problems and inner tolerance strategies."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, LinearSolveError


class Strategy(str, enum.Enum):
    TIGHT = "tight"
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class TolerancePolicy:
    strategy: Strategy = Strategy.TIGHT
    eps_p: float = 1e-7
    eps_t: float = 1e-5
    xi_p: float = 0.1
    xi_t: float = 0.1
    beta_p: float = 0.5
    beta_t: float = 0.5
    xi_min: float = 0.01
    xi_max: float | None = None  # defaults to beta
    floor_p: float = 1e-8
    floor_t: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        vals = (self.eps_p, self.eps_t, self.floor_p, self.floor_t)
        if min(vals) <= 0:
            raise ConfigurationError("tolerances must be positive")
        for xi in (self.xi_p, self.xi_t, self.beta_p, self.beta_t, self.xi_min):
            if not 0 < xi < 1:
                raise ConfigurationError("relative factors must lie in (0, 1)")
        if self.xi_max is not None and not self.xi_min <= self.xi_max:
            raise ConfigurationError("xi_min must not exceed xi_max")

    @classmethod
    def preset(cls, name, **overrides):
        """Default inner-solver settings for each strategy."""
        strategy = Strategy(name)
        base = {
            Strategy.TIGHT: dict(eps_p=1e-7, eps_t=1e-5),
            Strategy.ABSOLUTE: dict(eps_p=1.0, eps_t=0.1),
            Strategy.RELATIVE: dict(xi_p=0.1, xi_t=0.1),
            Strategy.ADAPTIVE: dict(beta_p=0.5, beta_t=0.5),
        }[strategy]
        return cls(strategy=strategy, **{**base, **overrides})

    def with_(self, **kw):
        return replace(self, **kw)


def adaptive_factor(beta, R0, R0_prev, xi_min=0.01, xi_max=None):
    """Forcing factor beta * R0 / R0_prev clamped to [xi_min, xi_max (= beta)]."""
    hi = beta if xi_max is None else xi_max
    if R0_prev is None or R0_prev <= 0:
        return hi
    return float(np.clip(beta * R0 / R0_prev, xi_min, hi))


def effective_tolerance(policy: TolerancePolicy, which, R0, R0_prev_outer=None, outer_index=0):
    if R0 < 0:
        raise ValueError("R0 must be non-negative")
    pressure = which == "pressure"
    if which not in ("pressure", "transport"):
        raise ValueError(f"which must be 'pressure' or 'transport', got {which!r}")
    s = policy.strategy
    if s in (Strategy.TIGHT, Strategy.ABSOLUTE):
        return policy.eps_p if pressure else policy.eps_t
    floor = policy.floor_p if pressure else policy.floor_t
    if s is Strategy.RELATIVE:
        xi = policy.xi_p if pressure else policy.xi_t
    else:
        beta = policy.beta_p if pressure else policy.beta_t
        if outer_index == 0:
            xi = beta
        else:
            if R0_prev_outer is None:
                raise ValueError("adaptive tolerance needs the previous outer R0 for outer_index > 0")
            xi = adaptive_factor(beta, R0, R0_prev_outer, policy.xi_min, policy.xi_max)
    return max(xi * R0, floor)


@dataclass
class InnerResult:
    x: np.ndarray
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0

    @property
    def R0(self):
        return self.history[0]

    @property
    def R_final(self):
        return self.history[-1]


def _solve(J, r):
    if sp.issparse(J):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                dx = spla.splu(sp.csc_matrix(J)).solve(-r)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise LinearSolveError(f"singular Jacobian: {exc}") from None
    else:
        try:
            dx = np.linalg.solve(np.atleast_2d(J), -np.atleast_1d(r))
        except np.linalg.LinAlgError as exc:
            raise LinearSolveError(f"singular Jacobian: {exc}") from None
    if not np.all(np.isfinite(dx)):
        raise LinearSolveError("non-finite Newton update")
    return dx


def newton_solve(assemble, x0, tol, max_iter=20, safeguard=None, norm=None):
    """Newton iteration ``x += safeguard(x, dx)`` with ``J dx = -r`` until ``||R|| <= tol``.

    ``assemble(x)`` returns an object with ``r``, ``J`` and ``norm()`` (or
    pass ``norm`` explicitly).  Exits at k = 0 if ``x0`` already satisfies
    the tolerance.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    norm = norm or (lambda rs: rs.norm())
    x = np.array(x0, dtype=float, copy=True)
    rs = assemble(x)
    history = [norm(rs)]
    k = 0
    while history[-1] > tol and k < max_iter:
        dx = _solve(rs.J, rs.r)
        x = safeguard(x, dx) if safeguard is not None else x + dx
        k += 1
        rs = assemble(x)
        history.append(norm(rs))
        if not np.isfinite(history[-1]):
            raise LinearSolveError("non-finite residual")
    return InnerResult(x, k, history, history[-1] <= tol, tol)


def saturation_safeguard(n_phases, max_change=0.2):
    """Appleyard-style per-cell chop, then clamp to [0, 1] and renormalize."""
    m = n_phases - 1

    def apply(x, dx):
        d = dx.reshape(-1, m)
        big = np.abs(d).max(axis=1)
        fac = max_change / np.maximum(big, max_change)
        s = x.reshape(-1, m) + d * fac[:, None]
        return project_saturations(s).ravel()

    return apply


def project_saturations(s):
    """Clamp primary saturations to [0, 1] and rescale rows whose sum exceeds one."""
    s = np.clip(np.atleast_2d(s), 0.0, 1.0)
    tot = s.sum(axis=1)
    over = tot > 1.0
    s[over] /= tot[over, None]
    return s

"""Sequential fully implicit outer loop with QN acceleration and time-step control."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import (SimState, assemble_fi, assemble_pressure, assemble_transport,
                       compute_total_velocity, mass_imbalance)
from .errors import ConfigurationError, LinearSolveError, SimulationAbort, StepFailure
from .newton import (TolerancePolicy, effective_tolerance, newton_solve, project_saturations,
                     saturation_safeguard)
from .qn import QnConfig, QnWorkspace, qn_update
from .wells import active_wells, schedule_breaks

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OuterConfig:
    eps_p_out: float = 1e-3  # relative to p_scale
    eps_t_out: float = 1e-3
    max_outer: int = 30
    eps_final: float = 1e-5
    max_inner_p: int = 20
    max_inner_t: int = 20
    chop: float = 0.2

    def __post_init__(self):
        if min(self.eps_p_out, self.eps_t_out, self.eps_final) <= 0 or self.max_outer < 1:
            raise ConfigurationError("outer tolerances must be positive and max_outer >= 1")


@dataclass
class PassRecord:
    nu: int
    p_iters: int
    t_iters: int
    p_history: list
    t_history: list
    p_tol: float
    t_tol: float
    dp: float = np.nan
    dx: float = np.nan

    @property
    def p_R0(self):
        return self.p_history[0]

    @property
    def p_Rk(self):
        return self.p_history[-1]

    @property
    def t_R0(self):
        return self.t_history[0]

    @property
    def t_Rk(self):
        return self.t_history[-1]


@dataclass
class StepRecord:
    t: float
    dt: float
    accepted: bool
    passes: list = field(default_factory=list)
    fi_Rp: float = np.nan
    fi_Rt: float = np.nan
    reason: str = ""
    mass_imbalance: np.ndarray | None = None

    @property
    def outer(self):
        return len(self.passes)

    @property
    def p_iters(self):
        return sum(p.p_iters for p in self.passes)

    @property
    def t_iters(self):
        return sum(p.t_iters for p in self.passes)


@dataclass
class IterationReport:
    steps: list = field(default_factory=list)

    def _sum(self, attr, accepted=None):
        return sum(getattr(s, attr) for s in self.steps
                   if accepted is None or s.accepted == accepted)

    @property
    def outer(self):
        return self._sum("outer")

    @property
    def p_iters(self):
        return self._sum("p_iters")

    @property
    def t_iters(self):
        return self._sum("t_iters")

    @property
    def cuts(self):
        return sum(not s.accepted for s in self.steps)

    @property
    def wasted_outer(self):
        return self._sum("outer", accepted=False)

    @property
    def wasted_p(self):
        return self._sum("p_iters", accepted=False)

    @property
    def wasted_t(self):
        return self._sum("t_iters", accepted=False)

    @property
    def accepted_steps(self):
        return [s for s in self.steps if s.accepted]


def sfi_step(disc, state_n: SimState, dt, wells=(), policy=None, qn=None, outer=None,
             p_scale=None, record=None):
    """Advance one time step; raises StepFailure if the outer loop does not converge.

    Returns ``(state, StepRecord)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    policy = policy or TolerancePolicy()
    qn = qn or QnConfig(enabled=False)
    outer = outer or OuterConfig()
    p_scale = p_scale or float(np.max(np.abs(state_n.p)))
    nph = disc.n_phases
    rec = record or StepRecord(t=0.0, dt=dt, accepted=False)
    safeguard = saturation_safeguard(nph, outer.chop)
    ws = QnWorkspace(qn.m, qn.drop_tol)

    p = state_n.p.copy()
    x = state_n.primary.copy()
    R0p_prev = R0t_prev = None
    polish = False
    for nu in range(outer.max_outer):
        s = SimState.from_primary(p, x, nph).s

        def asm_p(pp, s=s):
            return assemble_pressure(disc, pp, s, state_n, dt, wells)

        try:
            rs0 = asm_p(p)
            R0p = rs0.norm()
            eps_p = effective_tolerance(policy, "pressure", R0p, R0p_prev, nu)
            if polish:
                eps_p = min(eps_p, outer.eps_final)
            res_p = newton_solve(asm_p, p, eps_p, outer.max_inner_p)
        except LinearSolveError as exc:
            raise StepFailure(f"pressure solve failed: {exc}", rec.passes) from None
        if not res_p.converged:
            rec.passes.append(PassRecord(nu, res_p.iterations, 0, res_p.history, [np.nan],
                                         eps_p, np.nan))
            raise StepFailure("pressure Newton did not converge", rec.passes)
        p_new = res_p.x
        uT = compute_total_velocity(disc, p_new, s)

        def asm_t(xx):
            return assemble_transport(disc, SimState.from_primary(p_new, xx, nph).s,
                                      state_n, p_new, uT, dt, wells)

        try:
            R0t = asm_t(x).norm()
            eps_t = effective_tolerance(policy, "transport", R0t, R0t_prev, nu)
            if polish:
                eps_t = min(eps_t, outer.eps_final)
            res_t = newton_solve(asm_t, x, eps_t, outer.max_inner_t, safeguard)
        except LinearSolveError as exc:
            raise StepFailure(f"transport solve failed: {exc}", rec.passes) from None
        pas = PassRecord(nu, res_p.iterations, res_t.iterations, res_p.history,
                         res_t.history, eps_p, eps_t)
        rec.passes.append(pas)
        if not res_t.converged:
            raise StepFailure("transport Newton did not converge", rec.passes)
        R0p_prev, R0t_prev = R0p, R0t

        x_tilde = res_t.x
        x_new = qn_update(ws, x, x_tilde, qn, nu) if qn.enabled else x_tilde
        x_new = project_saturations(x_new.reshape(-1, nph - 1)).ravel()
        pas.dp = float(np.max(np.abs(p_new - p))) / p_scale
        pas.dx = float(np.max(np.abs(x_new - x))) if x.size else 0.0
        p, x = p_new, x_new

        if pas.dp <= outer.eps_p_out and pas.dx <= outer.eps_t_out:
            cand = SimState.from_primary(p, x, nph)
            bn = assemble_fi(disc, cand, state_n, dt, wells).block_norms()
            Rp, Rt = float(bn[0]), float(np.max(bn[1:]))
            rec.fi_Rp, rec.fi_Rt = Rp, Rt
            if Rp <= outer.eps_final and Rt <= outer.eps_final:
                rec.accepted = True
                return cand, rec
            if not polish:
                # tighter inner solves change the fixed-point map; old secants no longer apply
                ws.reset()
            polish = True
    raise StepFailure(f"no outer convergence in {outer.max_outer} iterations", rec.passes)


def step_schedule(t_end, dtmax, breaks=()):
    """Nominal step sizes absent cuts (doubling back to dtmax is immediate)."""
    t, out = 0.0, []
    while t_end - t > 1e-9 * dtmax:
        dt = min(dtmax, t_end - t)
        for b in breaks:
            if t + 1e-9 * dtmax < b < t + dt:
                dt = b - t
                break
        out.append(dt)
        t += dt
    return out


def run_simulation(disc, state0: SimState, wells=(), policy=None, qn=None, outer=None,
                   dtmax=1.0, t_end=0.0, p_scale=None, max_cuts_factor=64, check_mass=True):
    """March from 0 to ``t_end``; halves dt on failure down to dtmax / 64.

    Returns ``(final_state, IterationReport)``.
    """
    if t_end < 0 or dtmax <= 0:
        raise ValueError("need t_end >= 0 and dtmax > 0")
    p_scale = p_scale or float(np.max(np.abs(state0.p)))
    report = IterationReport()
    dt_min = dtmax / max_cuts_factor
    breaks = schedule_breaks(wells)
    state = state0.copy()
    t, dt = 0.0, dtmax
    tiny = 1e-9 * dtmax
    while t_end - t > tiny:
        step = min(dt, t_end - t)
        for b in breaks:
            if t + tiny < b < t + step:
                step = b - t
                break
        act = active_wells(wells, t)
        rec = StepRecord(t=t, dt=step, accepted=False)
        try:
            new, rec = sfi_step(disc, state, step, act, policy, qn, outer, p_scale, record=rec)
        except StepFailure as exc:
            rec.reason = str(exc)
            report.steps.append(rec)
            log.info("t=%.4g dt=%.4g failed: %s", t, step, exc)
            if step / 2 < dt_min * (1 - 1e-12):
                raise SimulationAbort(
                    f"time step cut below dt_min={dt_min:.4g} at t={t:.6g}: {exc}", report
                ) from None
            dt = step / 2
            continue
        if check_mass:
            rec.mass_imbalance = mass_imbalance(disc, new, state, step, act)
        report.steps.append(rec)
        state = new
        t += step
        dt = min(2 * dt, dtmax)
    return state, report

"""Run drivers, CSV report emission and strategy comparisons."""
from __future__ import annotations

import csv
import itertools
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import units as u
from .errors import ConfigurationError, SimulationAbort
from .newton import Strategy, TolerancePolicy
from .sfi import IterationReport, run_simulation


@dataclass
class RunResult:
    case: str
    strategy: str
    qn: bool
    report: IterationReport
    state: object = None
    disc: object = None
    p_scale: float = 1.0
    runtime: float = 0.0
    error: str = ""

    @property
    def ok(self):
        return not self.error

    def totals(self):
        r = self.report
        return {"outer": r.outer, "p_iters": r.p_iters, "t_iters": r.t_iters,
                "cuts": r.cuts, "wasted_outer": r.wasted_outer,
                "wasted_p": r.wasted_p, "wasted_t": r.wasted_t}


def run_case(case, strategy="tight", qn=None, policy=None, check_mass=True):
    """Simulate ``case`` under one inner-tolerance strategy; aborts are captured, not raised."""
    policy = policy or TolerancePolicy.preset(strategy)
    qn_cfg = case.qn if qn is None else replace(case.qn, enabled=bool(qn))
    disc, state0, wells, p_scale = case.build()
    t0 = time.perf_counter()
    try:
        state, report = run_simulation(disc, state0, wells, policy, qn_cfg, case.outer,
                                       case.dtmax, case.t_end, p_scale, check_mass=check_mass)
        error = ""
    except SimulationAbort as exc:
        state, report, error = None, exc.report or IterationReport(), str(exc)
    return RunResult(case.name, Strategy(policy.strategy).value, qn_cfg.enabled, report, state,
                     disc, p_scale, time.perf_counter() - t0, error)


REPORT_FIELDS = ["step", "t_days", "dt_days", "accepted", "outer", "p_iters", "t_iters",
                 "fi_Rp", "fi_Rt", "max_mass_imbalance", "reason"]
RESIDUAL_FIELDS = ["step", "accepted", "nu", "solver", "k", "R0", "Rk", "tol"]


def _fmt(x):
    return f"{x:.10e}" if isinstance(x, float) else x


def report_rows(report: IterationReport):
    for n, s in enumerate(report.steps):
        mi = np.nan if s.mass_imbalance is None else float(np.max(np.abs(s.mass_imbalance)))
        yield {"step": n, "t_days": s.t / u.DAY, "dt_days": s.dt / u.DAY,
               "accepted": int(s.accepted), "outer": s.outer, "p_iters": s.p_iters,
               "t_iters": s.t_iters, "fi_Rp": float(s.fi_Rp), "fi_Rt": float(s.fi_Rt),
               "max_mass_imbalance": mi, "reason": s.reason}


def residual_rows(report: IterationReport):
    """One row per inner iterate: enough to redraw residual envelopes over outer passes."""
    for n, s in enumerate(report.steps):
        for ps in s.passes:
            for solver, hist, tol in (("pressure", ps.p_history, ps.p_tol),
                                      ("transport", ps.t_history, ps.t_tol)):
                for k, r in enumerate(hist):
                    yield {"step": n, "accepted": int(s.accepted), "nu": ps.nu,
                           "solver": solver, "k": k, "R0": float(hist[0]), "Rk": float(r),
                           "tol": float(tol)}


def _write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def write_outputs(run: RunResult, out_dir):
    """Write report.csv, residuals.csv, final_state.csv and summary.txt into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "report.csv", REPORT_FIELDS, report_rows(run.report))
    _write_csv(out / "residuals.csv", RESIDUAL_FIELDS, residual_rows(run.report))
    names = list(run.disc.model.names) if run.disc is not None else []
    fields = ["cell", "i", "k", "p_pa"] + [f"s_{n}" for n in names]
    rows = []
    if run.state is not None:
        nx = run.disc.grid.nx
        for c in range(run.disc.n_cells):
            row = {"cell": c, "i": c % nx, "k": c // nx, "p_pa": float(run.state.p[c])}
            row.update({f"s_{n}": float(run.state.s[c, l]) for l, n in enumerate(names)})
            rows.append(row)
    _write_csv(out / "final_state.csv", fields, rows)
    tot = run.totals()
    lines = [f"case: {run.case}", f"strategy: {run.strategy}",
             f"qn: {'on' if run.qn else 'off'}",
             f"status: {'ok' if run.ok else 'aborted'}"]
    if run.error:
        lines.append(f"error: {run.error}")
    lines += [f"{k}: {v}" for k, v in tot.items()]
    lines.append(f"accepted_steps: {len(run.report.accepted_steps)}")
    lines.append(f"runtime_s: {run.runtime:.2f}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return out


@dataclass
class Comparison:
    rows: list = field(default_factory=list)
    runs: dict = field(default_factory=dict)
    max_diff: dict = field(default_factory=dict)  # (a, b) -> saturation inf-norm difference
    tol: float = 1e-3

    @property
    def consistent(self):
        return all(d <= self.tol for d in self.max_diff.values()) and \
            all(r.ok for r in self.runs.values())

    def format(self):
        head = f"{'strategy':<10} {'outer':>6} {'p_inner':>8} {'t_inner':>8} {'cuts':>5} {'wasted':>7}  status"
        lines = [head]
        for r in self.rows:
            lines.append(f"{r['strategy']:<10} {r['outer']:>6} {r['p_iters']:>8} {r['t_iters']:>8} "
                         f"{r['cuts']:>5} {r['wasted_outer']:>7}  {r['status']}")
        for (a, b), d in self.max_diff.items():
            flag = "" if d <= self.tol else "  <-- exceeds outer tolerance"
            lines.append(f"max |s_{a} - s_{b}| = {d:.3e}{flag}")
        return "\n".join(lines)


def compare_strategies(case, strategies, qn=True, tol=None):
    """Run each strategy on ``case`` and cross-check the final states."""
    strategies = list(strategies)
    if len(strategies) < 2:
        raise ConfigurationError("compare_strategies needs at least two strategies")
    tol = case.outer.eps_t_out if tol is None else tol
    cmp = Comparison(tol=tol)
    for k, st in enumerate(strategies):
        key = st if st not in cmp.runs else f"{st}#{k}"
        run = run_case(case, st, qn)
        cmp.runs[key] = run
        cmp.rows.append({"strategy": key, **run.totals(),
                         "status": "ok" if run.ok else f"FAILED: {run.error}"})
    for a, b in itertools.combinations(cmp.runs, 2):
        ra, rb = cmp.runs[a], cmp.runs[b]
        if ra.ok and rb.ok:
            cmp.max_diff[(a, b)] = float(np.max(np.abs(ra.state.s - rb.state.s)))
    return cmp

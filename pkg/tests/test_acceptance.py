"""End-to-end acceptance gate; one PASS/FAIL line per criterion in the terminal summary."""
import csv
import itertools
import time
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from sfisim.assembly import SimState, assemble_fi
from sfisim.cases import builtin_case
from sfisim.flux import phase_flux_hu, total_velocity
from sfisim.harness import run_case, write_outputs
from sfisim.newton import TolerancePolicy, adaptive_factor, effective_tolerance
from sfisim.oracle import fi_solve_step
from sfisim.qn import QnWorkspace
from sfisim.sfi import OuterConfig, sfi_step

from conftest import fd_jacobian, random_state, record_criterion, small_case

pytestmark = pytest.mark.acceptance

DAY = 86400.0
SCALE = 0.25  # 15 x 15 desk-scale variants
STRATEGIES = ("tight", "absolute", "relative", "adaptive")


@lru_cache(maxsize=None)
def run(name, strategy, qn=True, scale=SCALE, dtmax_days=None, t_end_days=None):
    case = builtin_case(name, scale)
    if dtmax_days is not None:
        case = replace(case, dtmax=dtmax_days * DAY)
    if t_end_days is not None:
        case = replace(case, t_end=t_end_days * DAY)
    return run_case(case, strategy, qn)


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    outer = OuterConfig(eps_p_out=1e-10, eps_t_out=1e-10, eps_final=1e-10, max_outer=60)
    worst_s = worst_p = 0.0
    for n in (4, 8):
        disc, st0, wells, ps = small_case("lock_exchange", nx=n, nz=n).build()
        a = b = st0
        for _ in range(5):
            a, _ = sfi_step(disc, a, DAY, wells, TolerancePolicy.preset("tight"), None, outer, ps)
            b = fi_solve_step(disc, b, DAY, wells).state
        worst_s = max(worst_s, np.abs(a.s - b.s).max())
        worst_p = max(worst_p, np.abs(a.p - b.p).max() / ps)
    elapsed = time.perf_counter() - t0
    ok = worst_s <= 1e-6 and worst_p <= 1e-8 and elapsed < 10
    record_criterion(1, "SFI vs FI oracle", ok,
                     f"|ds|={worst_s:.2e} (<=1e-6), |dp|/p0={worst_p:.2e} (<=1e-8), {elapsed:.1f}s")
    assert ok


def test_criterion_2_strategy_invariance():
    t0 = time.perf_counter()
    runs = {s: run("lock_exchange", s) for s in STRATEGIES}
    elapsed = time.perf_counter() - t0
    failed = [s for s, r in runs.items() if not r.ok]
    diffs = {(a, b): float(np.abs(runs[a].state.s - runs[b].state.s).max())
             for a, b in itertools.combinations(STRATEGIES, 2) if a not in failed and b not in failed}
    worst = max(diffs.values()) if diffs else np.inf
    ok = not failed and worst <= 1e-3 and elapsed < 60
    detail = f"max pairwise |ds|={worst:.2e} (<=1e-3), {elapsed:.1f}s"
    if failed:
        detail += f"; aborted: {', '.join(failed)} ({runs[failed[0]].error})"
    record_criterion(2, "solution invariance across strategies", ok, detail)
    assert ok


def test_criterion_3_oversolving_mitigation():
    parts, ok = [], True
    for name in ("lock_exchange", "grav_segregation"):
        t, a = run(name, "tight"), run(name, "adaptive")
        ratio = a.report.t_iters / t.report.t_iters
        growth = a.report.outer / t.report.outer
        ok &= t.ok and a.ok and ratio <= 0.8 and growth <= 1.5
        parts.append(f"{name}: transport {a.report.t_iters}/{t.report.t_iters}={ratio:.2f} (<=0.8), "
                     f"outer x{growth:.2f} (<=1.5)")
    record_criterion(3, "adaptive reduces transport iterations", ok, "; ".join(parts))
    assert ok


def test_criterion_4_qn_acceleration():
    base = builtin_case("lock_exchange", SCALE)
    dt = base.dtmax / DAY
    t_end = base.t_end / DAY
    largest, split = None, None
    for _ in range(10):
        te = max(t_end, dt)
        basic = run("lock_exchange", "tight", False, dtmax_days=dt, t_end_days=te)
        acc = run("lock_exchange", "tight", True, dtmax_days=dt, t_end_days=te)
        if basic.ok and basic.report.cuts == 0:
            largest = (dt, basic, acc)
        elif acc.ok and acc.report.cuts == 0:
            split = (dt, basic, acc)
            break
        dt *= 2
    ok = largest is not None and split is not None
    detail = []
    if largest:
        d, b, a = largest
        ok &= a.report.outer <= b.report.outer
        detail.append(f"largest converging dt={d:g}d: QN outer {a.report.outer} vs basic {b.report.outer}")
    if split:
        d, b, a = split
        detail.append(f"dt={d:g}d: basic {b.report.cuts} cuts, QN {a.report.cuts} cuts")
    else:
        detail.append("no dt found where basic fails and QN succeeds")
    record_criterion(4, "QN acceleration", ok, "; ".join(detail))
    assert ok


def test_criterion_5_conservation():
    runs = [run("lock_exchange", s) for s in STRATEGIES]
    runs += [run("grav_segregation", s) for s in ("tight", "adaptive")]
    runs += [run("quarter_five_spot", "adaptive", True, 0.1, None, 40.0),
             run("wag_3phase", "tight", True, 0.1, None, 60.0)]
    worst, steps = 0.0, 0
    for r in runs:
        g = r.disc.grid
        phi_b = float(np.max(g.poro)) * max(ph.b_ref for ph in r.disc.model.phases)
        bound = g.n_cells * 1e-5 * phi_b * float(np.max(g.volume))
        for s in r.report.accepted_steps:
            worst = max(worst, float(np.max(np.abs(s.mass_imbalance))) / bound)
            steps += 1
    ok = steps > 0 and worst <= 1.0
    record_criterion(5, "per-phase mass conservation", ok,
                     f"worst imbalance / bound = {worst:.2e} over {steps} accepted steps")
    assert ok


def _kernel_checks():
    out = {}
    # Jacobian vs central differences on a 3x3 grid
    disc, st0, wells, _ = small_case("water_inject_3phase", gravity=True).build()
    rng = np.random.default_rng(0)
    old, state = random_state(disc, st0, rng), random_state(disc, st0, rng)
    nph = disc.n_phases
    x = np.column_stack([state.p, state.s[:, :-1]]).ravel()

    def r(y):
        X = y.reshape(-1, nph)
        return assemble_fi(disc, SimState.from_primary(X[:, 0], X[:, 1:].ravel(), nph),
                           old, DAY, wells).r

    J = assemble_fi(disc, state, old, DAY, wells).J.toarray()
    Jfd = fd_jacobian(r, x, np.tile([10.0] + [1e-6] * (nph - 1), disc.n_cells))
    scale = np.maximum(np.abs(J).max(axis=0), 1e-300)
    out["jacobian"] = float(np.max(np.abs(J - Jfd) / scale))
    # QR update vs dense refactorization
    worst = 0.0
    for _ in range(50):
        ws = QnWorkspace(3)
        for _ in range(int(rng.integers(1, 8))):
            ws.append(rng.normal(size=12), rng.normal(size=12))
        v = rng.normal(size=12)
        ref = np.linalg.lstsq(ws.matrices()[1], v, rcond=None)[0]
        worst = max(worst, float(np.abs(ws.solve(v) - ref).max() / np.abs(ref).max()))
    out["qr"] = worst
    # HU sum and continuity on a vertical face
    from test_flux import _column, random_ctx
    sums = 0.0
    for _ in range(50):
        ctx = random_ctx(rng, 8, 3)
        uT = rng.normal(0, 1e-8, 8)
        tot = sum(f.val for f in phase_flux_hu(ctx, uT).flux)
        sums = max(sums, float(np.abs(tot - uT).max() / np.abs(uT).max()))
    out["hu_sum"] = sums
    flip = _column(0.0).grav[0].val[0]
    lo, hi = _column(flip - 1e-3), _column(flip + 1e-3)
    a = np.array([f.val[0] for f in phase_flux_hu(lo, total_velocity(lo)).flux])
    b = np.array([f.val[0] for f in phase_flux_hu(hi, total_velocity(hi)).flux])
    out["hu_jump"] = float(np.abs(a - b).max() / np.abs(a).max())
    pol = TolerancePolicy.preset("adaptive")
    out["adaptive"] = (adaptive_factor(0.5, 0.3, 1.0) == pytest.approx(0.15)
                       and adaptive_factor(0.5, 1.4, 1.0) == 0.5
                       and adaptive_factor(0.5, 0.001, 1.0) == 0.01
                       and effective_tolerance(pol, "pressure", 2.0, None, 0) == pytest.approx(1.0))
    return out


def test_criterion_6_numerical_kernels():
    k = _kernel_checks()
    ok = (k["jacobian"] <= 1e-5 and k["qr"] <= 1e-10 and k["hu_sum"] <= 1e-12
          and k["hu_jump"] <= 1e-6 and k["adaptive"])
    record_criterion(6, "numerical kernels", ok,
                     f"jacobian {k['jacobian']:.1e} (<=1e-5), QR {k['qr']:.1e} (<=1e-10), "
                     f"sum HU-uT {k['hu_sum']:.1e} (<=1e-12), HU jump {k['hu_jump']:.1e}, "
                     f"adaptive clamps {'ok' if k['adaptive'] else 'wrong'}")
    assert ok


def test_criterion_7_residual_rebound(tmp_path):
    r = run("grav_segregation", "tight")
    write_outputs(r, tmp_path)
    with open(tmp_path / "residuals.csv") as fh:
        rows = [x for x in csv.DictReader(fh) if x["solver"] == "transport" and x["accepted"] == "1"]
    passes = {}
    for x in rows:
        key = (int(x["step"]), int(x["nu"]))
        passes.setdefault(key, []).append(float(x["Rk"]))
    hits = total = 0
    for (step, nu), hist in passes.items():
        prev = passes.get((step, nu - 1))
        if prev is None:
            continue
        total += 1
        hits += hist[0] >= 2 * prev[-1]
    frac = hits / total if total else 0.0
    ok = total > 0 and frac >= 0.8
    record_criterion(7, "transport residual rebound", ok,
                     f"{hits}/{total} passes rebound by >=2x ({frac:.0%}, need >=80%)")
    assert ok

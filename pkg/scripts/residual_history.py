#!/usr/bin/env python3
"""Print the inner residual envelope of one time step (pressure and transport per outer pass).

Shows the rebound of the transport residual at the start of every outer pass
and how much of each inner solve is spent below the level the outer loop uses.
"""
import argparse

from sfisim.cases import REGISTRY, builtin_case
from sfisim.harness import run_case


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--case", default="grav_segregation", choices=sorted(REGISTRY))
    ap.add_argument("--scale", type=float, default=0.25)
    ap.add_argument("--strategy", default="tight")
    ap.add_argument("--step", type=int, default=0)
    ap.add_argument("--qn", choices=["on", "off"], default="off")
    args = ap.parse_args()
    run = run_case(builtin_case(args.case, args.scale), args.strategy, args.qn == "on")
    rec = run.report.steps[args.step]
    print(f"step {args.step}: t = {rec.t / 86400:g} d, dt = {rec.dt / 86400:g} d, {rec.outer} outer passes")
    for ps in rec.passes:
        p = " ".join(f"{r:.1e}" for r in ps.p_history)
        t = " ".join(f"{r:.1e}" for r in ps.t_history)
        print(f"nu={ps.nu:2d}  pressure [{p}]")
        print(f"       transport [{t}]")


if __name__ == "__main__":
    main()

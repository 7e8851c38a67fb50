#!/usr/bin/env python3
"""Double dt until basic SFI needs cuts; compare against QN at every level."""
import argparse
from dataclasses import replace

from sfisim.cases import builtin_case
from sfisim.harness import run_case


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--case", default="lock_exchange")
    ap.add_argument("--scale", type=float, default=0.25)
    ap.add_argument("--levels", type=int, default=8)
    args = ap.parse_args()
    base = builtin_case(args.case, args.scale)
    dt = base.dtmax
    print(f"{'dt [d]':>8} {'basic outer':>12} {'cuts':>5} {'qn outer':>9} {'cuts':>5}")
    for _ in range(args.levels):
        case = replace(base, dtmax=dt, t_end=max(base.t_end, dt))
        basic, acc = run_case(case, "tight", False), run_case(case, "tight", True)
        print(f"{dt / 86400:8g} {basic.report.outer:12d} {basic.report.cuts:5d} "
              f"{acc.report.outer:9d} {acc.report.cuts:5d}")
        if basic.report.cuts and not acc.report.cuts:
            print("basic SFI needs cuts here while QN does not")
            break
        dt *= 2


if __name__ == "__main__":
    main()

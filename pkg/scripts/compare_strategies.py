#!/usr/bin/env python3
"""Iteration totals of the four inner-tolerance strategies on one case.

    python3 scripts/compare_strategies.py --case lock_exchange --scale 0.25
"""
import argparse

from sfisim.cases import REGISTRY, builtin_case
from sfisim.harness import compare_strategies


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--case", default="lock_exchange", choices=sorted(REGISTRY))
    ap.add_argument("--scale", type=float, default=0.25)
    ap.add_argument("--qn", choices=["on", "off"], default="on")
    ap.add_argument("--strategies", nargs="+", default=["tight", "absolute", "relative", "adaptive"])
    args = ap.parse_args()
    case = builtin_case(args.case, args.scale)
    cmp = compare_strategies(case, args.strategies, qn=args.qn == "on")
    print(f"{case.name} {case.nx}x{case.nz}, dtmax {case.dtmax / 86400:g} d, qn {args.qn}")
    print(cmp.format())


if __name__ == "__main__":
    main()

"""Command-line entry point: ``sfisim --case lock_exchange --scale 0.25 --out runs/le``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import units as u
from .cases import REGISTRY, builtin_case, load_case_config
from .errors import ConfigurationError, IngestionError
from .harness import run_case, write_outputs
from .newton import Strategy, TolerancePolicy


def build_parser():
    ap = argparse.ArgumentParser(prog="sfisim", description="Sequential fully implicit two/three-phase simulator")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--case", choices=sorted(REGISTRY), help="built-in case name")
    src.add_argument("--config", help="JSON case file")
    ap.add_argument("--strategy", default="tight", choices=[s.value for s in Strategy])
    ap.add_argument("--qn", choices=["on", "off"], default=None,
                    help="quasi-Newton acceleration (default: case setting)")
    ap.add_argument("--scale", type=float, default=1.0, help="grid and dtmax resolution factor")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for generated heterogeneous fields")
    ap.add_argument("--t-end", type=float, default=None, help="end time [days]")
    ap.add_argument("--dtmax", type=float, default=None, help="maximum time step [days]")
    ap.add_argument("--perm", default=None, help="permeability CSV in mD (nx*nz values)")
    ap.add_argument("--poro", default=None, help="porosity CSV (nx*nz values)")
    ap.add_argument("--eps-p", type=float, default=None, help="override pressure inner tolerance")
    ap.add_argument("--eps-t", type=float, default=None, help="override transport inner tolerance")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _case_from_args(args):
    case = builtin_case(args.case) if args.case else load_case_config(args.config)
    if args.perm or args.poro:
        case = replace(case, perm_file=args.perm or case.perm_file,
                       poro_file=args.poro or case.poro_file)
    if args.seed is not None:
        case = case.with_seed(args.seed)
    if args.scale != 1.0:
        case = case.scaled(args.scale)
    if args.dtmax is not None:
        case = replace(case, dtmax=u.days(args.dtmax))
    if args.t_end is not None:
        case = replace(case, t_end=u.days(args.t_end))
    return case


def run_cli(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        case = _case_from_args(args)
        over = {}
        if args.eps_p is not None:
            over["eps_p"] = args.eps_p
        if args.eps_t is not None:
            over["eps_t"] = args.eps_t
        policy = TolerancePolicy.preset(args.strategy, **over)
        qn = None if args.qn is None else args.qn == "on"
        run = run_case(case, args.strategy, qn, policy=policy)
    except (ConfigurationError, IngestionError, OSError) as exc:
        print(f"sfisim: error: {exc}", file=sys.stderr)
        return 1
    out = write_outputs(run, args.out)
    tot = run.totals()
    print(f"{case.name} [{run.strategy}, qn {'on' if run.qn else 'off'}] "
          f"outer={tot['outer']} pressure={tot['p_iters']} transport={tot['t_iters']} "
          f"cuts={tot['cuts']} -> {out}")
    if not run.ok:
        print(f"sfisim: simulation aborted: {run.error}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

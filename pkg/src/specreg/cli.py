"""Command-line entry point: ``specreg <subcommand>``.

Every subcommand prints JSON to stdout. The exit code is 0 iff all of the
subcommand's pass/fail gates pass.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import filters, harness, index_fn, operators, theory
from .errors import SpecRegError
from .synthetic import Sample


def _json_arg(text: str):
    p = Path(text)
    if p.is_file():
        return json.loads(p.read_text())
    return json.loads(text)


def _filter_arg(text: str) -> dict:
    if text.lstrip().startswith("{") or Path(text).is_file():
        return _json_arg(text)
    return {"filter": text}


def cmd_fit(args) -> int:
    sample = Sample.from_csv(args.sample)
    if args.kernel == "linear":
        kernel = operators.linear_kernel()
    else:
        kernel = operators.gaussian_kernel(args.width)
    block = _filter_arg(args.filter)
    s = args.s if args.s is not None else 1.0
    filt = filters.from_config(block, s=s)
    spec = operators.eigh(operators.gram(kernel, sample.covariates))
    est = operators.fit(filt, args.lam, spec, sample.y, points=sample.covariates)
    out = {"filter": filt.label, "lambda": est.lam, "n": spec.n,
           "coefficients": est.coefficients.tolist()}
    if kernel.linear:
        out["coordinates"] = operators.coordinates(est, kernel).tolist()
    if args.spectrum:
        spec.to_csv(args.spectrum)
    _emit(out, args.out)
    return 0


def cmd_rates(args) -> int:
    cfg = harness.ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    if args.jobs is not None:
        cfg.jobs = args.jobs
    report = harness.run_convergence(cfg)
    if cfg.output:
        harness.emit_report(report, cfg.output)
    print(json.dumps(report.slopes_dict(), indent=2, sort_keys=True))
    return 0 if report.passed else 1


def cmd_audit(args) -> int:
    filt = filters.from_config(_filter_arg(args.filter), s=args.s)
    rep = filters.audit_filter(filt, nu_list=args.nu, s=args.s)
    print(json.dumps(rep.to_dict(), indent=2))
    return 0 if rep.passed else 1


def cmd_theory(args) -> int:
    reports = theory.run_theory_checks(seed=args.seed)
    payload = [r.to_dict() for r in reports]
    _emit(payload, args.out)
    return 0 if all(r.passed for r in reports) else 1


def cmd_covering(args) -> int:
    block = _json_arg(args.phi)
    phi = index_fn.from_config(block, s=args.s) if args.s is not None else index_fn.from_config(block)
    res = index_fn.covering_check(phi, args.nu, c_floor=args.c_floor)
    print(json.dumps({"phi": phi.label, "nu0": args.nu, "covered": res.covered,
                      "c_estimate": res.c_estimate, "decaying": res.decaying}, indent=2))
    return 0 if res.covered else 1


def _emit(obj, out):
    text = json.dumps(obj, indent=2, default=_np_default)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _np_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="single fit from a sample CSV (coord_1..coord_d, y)")
    p.add_argument("sample")
    p.add_argument("--filter", default="tikhonov", help="name or JSON block")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--kernel", choices=["linear", "gaussian"], default="linear")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--s", type=float, default=None, help="spectral bound for landweber")
    p.add_argument("--spectrum", help="write Gram eigenvalues to this CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rates", help="convergence experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("audit-filter", help="measure filter constants on grids")
    p.add_argument("filter", help="name or JSON block")
    p.add_argument("--nu", type=float, nargs="+", default=[1.0])
    p.add_argument("--s", type=float, default=1.0)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("theory-checks", help="run the lemma suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("covering", help="does qualification nu cover an index function")
    p.add_argument("phi", help='JSON block, e.g. \'{"kind": "holder", "r": 2}\'')
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--c-floor", type=float, default=index_fn.DEFAULT_C_FLOOR)
    p.set_defaults(func=cmd_covering)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SpecRegError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

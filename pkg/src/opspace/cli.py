"""Command-line entry point.

Exit codes: 0 success, 1 a checked inequality failed, 2 bad arguments or
input file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .crplab import (
    cmp_campaign,
    crp_ratio_campaign,
    sandwich_probe,
    verify_lemmas,
)
from .matcore import PExponent, schatten_norm
from .ohnorm import oh_matrix_norm
from .opmatrix import BlockMatrix, flatten, matrix_from_json
from .pnorm import OptimizerConfig, m1_norm_dual, mn_schatten_norm
from .witnesses import FAMILIES, family

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _exponent(text: str) -> PExponent:
    try:
        return PExponent.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _p_grid(text: str) -> list[PExponent]:
    return [_exponent(t) for t in text.split(",") if t.strip()]


def _n_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b or a comma list, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"n range {text!r} must hold positive integers")
    return values


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--restarts", type=_positive_int, default=64)
    common.add_argument("--max-iters", type=_positive_int, default=500)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--step-rule", choices=("dual", "gradient"), default="dual")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None,
                        help="output format (default depends on the command)")
    common.add_argument("--output", default=None, help="write output here instead of stdout")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--file", help="matrix or block-matrix JSON file")
    source.add_argument("--family", choices=FAMILIES, help="named witness instead of a file")
    source.add_argument("--n", type=_positive_int, help="size of the named witness")

    parser = argparse.ArgumentParser(prog="opspace", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("schatten", parents=[common, source], help="Schatten norm of a matrix")
    s.add_argument("--p", type=_exponent, required=True)

    s = sub.add_parser("mn-norm", parents=[common, source], help="M_n(S_p) norm estimate")
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--n1-upper", type=float, default=None,
                   help="certified M_n(S_1) bound, enables the p < 2 interpolation bound")

    sub.add_parser("oh-norm", parents=[common, source], help="operator Hilbert space norm")
    sub.add_parser("m1-dual", parents=[common, source], help="M_n(S_1) dual-pairing estimate")

    s = sub.add_parser("verify", parents=[common], help="exact lemma checks")
    s.add_argument("target", choices=("lemmas",))
    s.add_argument("--n-max", type=_positive_int, default=4)
    s.add_argument("--p-grid", type=_p_grid, default=_p_grid("1,1.5,2,3,4,inf"))
    s.add_argument("--trials", type=_positive_int, default=1000)

    s = sub.add_parser("crp-ratio", parents=[common], help="certified column-row ratios")
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--n-range", type=_n_range, required=True)
    s.add_argument("--probe", action="store_true", help="also run the ascent on each column")

    s = sub.add_parser("sandwich", parents=[common], help="search for the transpose ratio")
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--candidates", type=int, default=4)

    s = sub.add_parser("cmp-check", parents=[common], help="column-matrix inequality for OH")
    s.add_argument("--samples", type=_positive_int, default=500)
    s.add_argument("--n", type=_positive_int, default=3)
    s.add_argument("--m", type=_positive_int, default=3)
    return parser


def _load_source(args) -> BlockMatrix | np.ndarray:
    if args.family:
        if args.n is None:
            raise UsageError("--family needs --n")
        return family(args.family, args.n).payload
    if not args.file:
        raise UsageError("give --file or --family")
    try:
        with open(args.file) as fh:
            obj = json.load(fh)
        if isinstance(obj, dict) and "blocks" in obj:
            return BlockMatrix.from_json(obj)
        return matrix_from_json(obj)
    except (OSError, ValueError, AttributeError) as exc:
        raise UsageError(f"cannot read matrix file {args.file}: {exc}") from None


def _as_block(x) -> BlockMatrix:
    return x if isinstance(x, BlockMatrix) else BlockMatrix(x[None, None])


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(restarts=args.restarts, max_iters=args.max_iters,
                           step_rule=args.step_rule, tol=args.tol, seed=args.seed)


def _envelope(args, result) -> dict:
    config = {k: (str(v) if isinstance(v, PExponent) else
                  [str(t) for t in v] if isinstance(v, list) and v and isinstance(v[0], PExponent)
                  else v)
              for k, v in sorted(vars(args).items()) if k not in ("output", "format")}
    return {"version": __version__, "seed": args.seed, "config": config, "result": result}


def _run(args) -> tuple[str, int]:
    cfg = _config(args)
    cmd = args.command
    fmt = args.format

    if cmd == "schatten":
        x = _load_source(args)
        value = schatten_norm(flatten(x) if isinstance(x, BlockMatrix) else x, args.p)
        if fmt == "json":
            return json.dumps(_envelope(args, {"value": value}), indent=2), EXIT_OK
        return format(value, ".17g"), EXIT_OK

    if cmd in ("mn-norm", "oh-norm", "m1-dual"):
        x = _as_block(_load_source(args))
        if cmd == "oh-norm":
            value = oh_matrix_norm(x)
            if fmt == "text":
                return format(value, ".17g"), EXIT_OK
            return json.dumps(_envelope(args, {"value": value}), indent=2), EXIT_OK
        if cmd == "mn-norm":
            est = mn_schatten_norm(x, args.p, cfg, args.n1_upper)
        else:
            est = m1_norm_dual(x, cfg)
        if fmt == "text":
            return f"{est.lower!r} {est.upper!r}", EXIT_OK
        return json.dumps(_envelope(args, est.to_json()), indent=2), EXIT_OK

    if cmd == "verify":
        outcomes = verify_lemmas(args.n_max, args.p_grid, args.trials, args.seed)
        ok = all(o.passed for o in outcomes)
        code = EXIT_OK if ok else EXIT_ASSERT
        if fmt == "text":
            lines = [f"{'PASS' if o.passed else 'FAIL'} {o.lemma} n={o.n} p={o.p} "
                     f"expected={o.expected!r} observed={o.observed!r}" for o in outcomes]
            return "\n".join(lines), code
        result = {"all_passed": ok, "outcomes": [o.to_json() for o in outcomes]}
        return json.dumps(_envelope(args, result), indent=2), code

    if cmd == "crp-ratio":
        if args.p.p == 2.0:
            raise UsageError("crp-ratio needs p != 2")
        report = crp_ratio_campaign(args.p, args.n_range, cfg, probe=args.probe)
        ok = all(r.ratio_lower >= r.target - 1e-9 for r in report.rows)
        code = EXIT_OK if ok else EXIT_ASSERT
        if fmt in (None, "csv", "text"):
            return report.to_csv().rstrip("\n"), code
        return json.dumps(_envelope(args, report.to_json()), indent=2), code

    if cmd == "sandwich":
        if args.p.p == 2.0:
            raise UsageError("sandwich needs p != 2")
        res = sandwich_probe(args.p, args.n, cfg, args.candidates)
        return json.dumps(_envelope(args, res.to_json()), indent=2), EXIT_OK

    if cmd == "cmp-check":
        rep = cmp_campaign(args.samples, args.n, args.m, args.seed)
        code = EXIT_OK if rep.all_ok else EXIT_ASSERT
        return json.dumps(_envelope(args, rep.to_json()), indent=2), code

    raise UsageError(f"unknown command {cmd!r}")


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text, code = _run(args)
    except (UsageError, ValueError) as exc:
        print(f"opspace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"opspace: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

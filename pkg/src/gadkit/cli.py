"""Command line front end: ``gadkit {decompose,rank,reconstruct,kernel,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import benchlab
from .apolarity import ContractError, catalecticant, check_f, hankel_family, matrix_kernel
from .decomposer import DecomposeOptions, DegreeBoundError, GADError, gad_decompose
from .invsystems import GAD, ell_rank, gad_rank, reconstruct
from .polycore import DimensionError, LinearForm, PolyParseError, format_poly, parse_poly

DEFAULT_SEED = 20240601
SEED_ENV = "GADKIT_SEED"

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_IO = 74

log = logging.getLogger("gadkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Canonical JSON: sorted keys, floats with 17 significant digits, non-finite as null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + f"\n{end}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + f"\n{end}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return f"{x:.17g}" if math.isfinite(x) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _read_text(value: str) -> str:
    """Inline text, ``@path`` for a file, or ``-`` for stdin."""
    if value == "-":
        return sys.stdin.read()
    if value.startswith("@"):
        return Path(value[1:]).read_text()
    return value


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve_seed(args) -> int:
    if args.entropy:
        return int(np.random.SeedSequence().entropy % (2**63))
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def _add_seed(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("randomness")
    g.add_argument("--seed", type=int, default=None, help=f"master seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    g.add_argument("--entropy", action="store_true", help="seed from OS randomness instead of a fixed seed")


def _add_decompose_options(p: argparse.ArgumentParser) -> None:
    d = DecomposeOptions()
    g = p.add_argument_group("decomposer")
    g.add_argument("--svd-tol", type=float, default=d.svd_tol, help="relative singular value cutoff for the rank")
    g.add_argument("--cluster-tol", type=float, default=d.cluster_tol, help="eigenvalue gap threshold, relative to the spread")
    g.add_argument("--nil-tol", type=float, default=d.nil_tol, help="Frobenius threshold in the nil-index test")
    g.add_argument("--accept-tol", type=float, default=d.accept_tol, help="relative apolar error that validates an unforced clustering")
    g.add_argument("--retries", type=int, default=d.retries, help="cap on clustering stability retries")
    g.add_argument("--coord-trials", type=int, default=d.coord_trials, help="random coordinate changes to try")
    g.add_argument("--rank", type=int, default=None, dest="forced_rank", help="force the quotient rank")
    g.add_argument("--clusters", type=int, default=None, dest="forced_clusters", help="force the number of clusters")
    g.add_argument("--split", type=int, default=None, help="Hankel split degree c (default d - floor((d-1)/2))")
    g.add_argument("--fixed-coords", action="store_true", help="skip the random coordinate change (localize at x0 = 1)")
    g.add_argument("--normalize-supports", action="store_true", help="rescale supports to unit norm")
    g.add_argument("--nil-fallback", action="store_true", help="use the block size as nil-index when a block is not nilpotent")


def _options(args) -> DecomposeOptions:
    return DecomposeOptions(
        svd_tol=args.svd_tol,
        cluster_tol=args.cluster_tol,
        nil_tol=args.nil_tol,
        accept_tol=args.accept_tol,
        retries=args.retries,
        coord_trials=args.coord_trials,
        forced_rank=args.forced_rank,
        forced_clusters=args.forced_clusters,
        split=args.split,
        normalize_supports=args.normalize_supports,
        random_coords=not args.fixed_coords,
        nil_fallback=args.nil_fallback,
    )


def _options_dict(opts: DecomposeOptions) -> dict:
    return {k: getattr(opts, k) for k in opts.__dataclass_fields__}


def _load_gad(text: str) -> GAD:
    try:
        return GAD.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed GAD JSON: {exc}") from exc


def cmd_decompose(args) -> int:
    f = parse_poly(_read_text(args.poly))
    seed = _resolve_seed(args)
    opts = _options(args)
    meta = {"seed": seed, "options": _options_dict(opts)}
    try:
        rep = gad_decompose(f, opts, seed)
    except GADError as exc:
        body = dict(meta, error=type(exc).__name__, message=str(exc))
        if isinstance(exc, DegreeBoundError):
            body["details"] = exc.details
        _write(dumps(body) + "\n", args.output)
        print(f"gadkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    body = dict(rep.to_dict(), **meta)
    body["supports_text"] = [format_poly(t.ell.as_poly(), args.imag_tol) for t in rep.gad.terms]
    body["weights_text"] = [format_poly(t.omega, args.imag_tol) for t in rep.gad.terms]
    _write(dumps(body) + "\n", args.output)
    return EXIT_OK


def cmd_rank(args) -> int:
    if args.gad is not None:
        g = _load_gad(_read_text(args.gad))
        ranks = [ell_rank(t.omega, t.ell) for t in g.terms]
        body = {"rank": gad_rank(g), "term_ranks": ranks}
    elif args.omega is not None and args.ell is not None:
        omega = parse_poly(_read_text(args.omega))
        coeffs = [complex(c.strip().replace("i", "j")) for c in args.ell.split(",")]
        if len(coeffs) != omega.nvars:
            # omega may not mention every variable; pad it to the form's length
            omega = parse_poly(_read_text(args.omega), len(coeffs))
        body = {"rank": ell_rank(omega, LinearForm(tuple(coeffs)))}
    else:
        raise UsageError("rank needs either --gad or both --omega and --ell")
    _write(dumps(body) + "\n", args.output)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    g = _load_gad(_read_text(args.gad))
    _write(format_poly(reconstruct(g), args.imag_tol) + "\n", args.output)
    return EXIT_OK


def cmd_kernel(args) -> int:
    f = parse_poly(_read_text(args.poly))
    fs = check_f(f)
    if args.row_degree is not None or args.col_degree is not None:
        if args.row_degree is None or args.col_degree is None:
            raise UsageError("--row-degree and --col-degree go together")
        fam = catalecticant(fs, args.row_degree, args.col_degree)
    else:
        fam = hankel_family(fs, f.degree, args.split)
    kernel = matrix_kernel(fam.matrices[0], fam.cols, args.svd_tol)
    lines = [format_poly(g.cleanup(args.clean_tol), args.imag_tol, first_var=1) for g in kernel]
    _write("".join(line + "\n" for line in lines), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.config:
        cfg = benchlab.BenchConfig.from_json(_read_text(args.config))
    else:
        if args.n is None or args.d is None or args.ks is None:
            raise UsageError("bench needs --config or all of --n, --d, --ks")
        ks = tuple(int(k) for k in args.ks.split(",") if k.strip())
        grid = benchlab.default_eps_grid(args.eps_min_exp, args.eps_max_exp, args.eps_step)
        seed = _resolve_seed(args)
        cfg = benchlab.BenchConfig(
            args.n, args.d, ks, grid, args.trials, seed, args.bases, args.auto, workers=args.workers
        )
    rows = benchlab.sweep(cfg)
    if args.csv:
        benchlab.emit(rows, csv_path=args.csv)
    else:
        sys.stdout.write(benchlab.rows_to_csv(rows))
    if args.svg:
        benchlab.emit(rows, svg_path=args.svg, title=f"(n, d, ks) = ({cfg.n}, {cfg.d}, {list(cfg.ks)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gadkit", description="Generalized additive decompositions of homogeneous forms.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log more (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="decompose a form and print a JSON report")
    p.add_argument("poly", help="polynomial text, @file, or - for stdin")
    _add_decompose_options(p)
    _add_seed(p)
    p.add_argument("--imag-tol", type=float, default=1e-8, help="drop relative imaginary parts below this in text output")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("rank", help="GAD-rank of a GAD, or l-rank of one term")
    p.add_argument("--gad", help="GAD JSON, @file, or -")
    p.add_argument("--omega", help="weight polynomial text")
    p.add_argument("--ell", help="comma separated coefficients of the support")
    p.add_argument("-o", "--output", help="output file")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("reconstruct", help="expand a GAD JSON into a polynomial")
    p.add_argument("gad", help="GAD JSON, @file, or -")
    p.add_argument("--imag-tol", type=float, default=1e-8, help="drop relative imaginary parts below this")
    p.add_argument("-o", "--output", help="output file")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("kernel", help="kernel of the Hankel matrix of a form, as affine polynomials in x1..xn")
    p.add_argument("poly", help="polynomial text, @file, or -")
    p.add_argument("--split", type=int, default=None, help="Hankel split degree c")
    p.add_argument("--row-degree", type=int, default=None, help="use the catalecticant with rows of this degree")
    p.add_argument("--col-degree", type=int, default=None, help="and columns of this degree")
    p.add_argument("--svd-tol", type=float, default=DecomposeOptions().svd_tol, help="relative rank cutoff")
    p.add_argument("--clean-tol", type=float, default=1e-12, help="drop kernel coefficients below this")
    p.add_argument("--imag-tol", type=float, default=1e-8, help="drop relative imaginary parts below this")
    p.add_argument("-o", "--output", help="output file")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("bench", help="perturbation sweep; CSV to stdout or --csv, optional SVG")
    p.add_argument("--config", help="BenchConfig JSON, @file, or -")
    p.add_argument("--n", type=int, help="number of affine variables")
    p.add_argument("--d", type=int, help="degree")
    p.add_argument("--ks", help="weight degrees, e.g. 1,1,0")
    p.add_argument("--trials", type=int, default=10, help="perturbations per level")
    p.add_argument("--bases", type=int, default=1, help="number of base generators")
    p.add_argument("--eps-min-exp", type=float, default=-14.0, help="smallest log10 eps")
    p.add_argument("--eps-max-exp", type=float, default=0.0, help="largest log10 eps")
    p.add_argument("--eps-step", type=float, default=0.5, help="log10 step")
    p.add_argument("--auto", action="store_true", help="do not pass the generator's rank and cluster count")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--csv", help="CSV output path")
    p.add_argument("--svg", help="SVG plot path")
    _add_seed(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PolyParseError as exc:
        print(f"gadkit: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ContractError, DimensionError) as exc:
        print(f"gadkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gadkit: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

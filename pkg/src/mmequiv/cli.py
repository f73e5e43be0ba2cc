"""Command-line entry point: ``mmequiv <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from . import transforms as tf
from .batch import run_batch
from .clustering import clustering_reports
from .core import build_tensor, fixture, verify_decomposition
from .cpd import SolveConfig, sample_population
from .discretize import nd_score
from .equivalence import Tolerances, check_equivalence
from .errors import AssumptionViolationError, InvalidArgumentError

EXIT_PARSE = 64
EXIT_ERROR = 3


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _load(path):
    try:
        return io.load_decomposition(path)
    except InvalidArgumentError as exc:
        raise _InputError(str(exc)) from exc


def _mpn(text):
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M,P,N, got {text!r}") from None
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"expected three positive integers, got {text!r}")
    return dims


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_verify(args):
    dec = _load(args.file)
    rep = verify_decomposition(dec, args.tol)
    if args.json:
        _emit({"max_residual": rep.max_residual, "frobenius_residual": rep.frobenius_residual,
               "tol": rep.tol, "passed": rep.passed})
    else:
        status = "ok" if rep.passed else "FAILED"
        print(f"{status} residual={rep.max_residual:.3e} tol={args.tol:g}")
    return 0 if rep.passed else 1


def cmd_cluster(args):
    dec = _load(args.file)
    reps = clustering_reports(dec)
    out = {
        "clustering_vector": [reps[k].value for k in "UVW"],
        "modes": {k: {"value": r.value, "rank": r.rank, "zero_columns": r.zero_columns,
                      "nullspace_dim": r.nullspace_dim} for k, r in reps.items()},
    }
    if args.json:
        _emit(out)
    else:
        print("clustering vector:", tuple(out["clustering_vector"]))
    return 0


def cmd_equiv(args):
    dec1, dec2 = _load(args.file1), _load(args.file2)
    mode = "no_assumption" if args.mode == "no-assumption" else "full"
    try:
        cert = check_equivalence(dec1, dec2, trials=args.trials, tols=Tolerances(),
                                 mode=mode, rng=args.seed)
    except AssumptionViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.json:
        _emit(io.certificate_to_dict(cert, timing=args.timing))
    else:
        line = cert.verdict
        if cert.residual is not None:
            line += f" residual={cert.residual:.3e}"
        print(line)
    return {"equivalent": 0, "inequivalent": 1, "inconclusive": 2}[cert.verdict]


def cmd_discretize(args):
    dec = _load(args.file)
    rep = nd_score(dec, args.q, args.draws, args.beta_bound, rng=args.seed,
                   threshold=args.threshold)
    _emit(rep.to_dict())
    return 0 if rep.passes else 1


def cmd_decompose(args):
    cfg = SolveConfig(max_restarts=args.max_restarts, seed=args.seed)
    pop = sample_population(build_tensor(*args.mpn), args.rank, args.count, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(args.count)))
    names = []
    for k, dec in enumerate(pop.decompositions):
        name = f"{k:0{width}d}.json"
        io.dump_json(io.decomposition_to_dict(dec), out / name)
        names.append(name)
    manifest = {
        "mpn": list(args.mpn), "F": args.rank, "seed": args.seed, "requested": args.count,
        "exhausted": pop.exhausted, "files": names, "trials": pop.trials,
        "residuals": pop.residuals,
    }
    io.dump_json(manifest, out / "manifest.json")
    if pop.exhausted:
        print(f"warning: only {len(names)} of {args.count} decompositions found", file=sys.stderr)
        return 1
    return 0


def cmd_gen(args):
    dec = _load(args.file)
    t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(args.seed))
    io.dump_json(io.decomposition_to_dict(tf.apply(t, dec)), args.out)
    if args.transform_out:
        io.dump_json(io.transform_to_dict(t), args.transform_out)
    return 0


def cmd_batch(args):
    try:
        report = run_batch(args.dir, max_pairs=args.pairs, seed=args.seed, jobs=args.jobs,
                           q=args.q, draws=args.draws, beta_bound=args.beta_bound)
    except InvalidArgumentError as exc:
        raise _InputError(str(exc)) from exc
    data = report.to_dict()
    if not args.timing:
        data.pop("mean_equiv_time")
    io.dump_json(data, args.json_out)
    if args.csv_out:
        report.write_csv(args.csv_out)
    return 0


def cmd_fixture(args):
    io.dump_json(io.decomposition_to_dict(fixture(args.name, *args.dims)), args.out)
    return 0


def build_parser():
    parser = _Parser(prog="mmequiv", description="Equivalence tools for matrix multiplication decompositions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="check a decomposition against its tensor")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cluster", help="clustering vector of a decomposition")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("equiv", help="decide equivalence of two decompositions")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--mode", choices=("full", "no-assumption"), default="full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.add_argument("--timing", action="store_true", help="include wall time in the certificate")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("discretize", help="necessary discretizability test")
    p.add_argument("file")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--draws", type=int, default=16)
    p.add_argument("--beta-bound", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("decompose", help="sample decompositions numerically")
    p.add_argument("--mpn", type=_mpn, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-restarts", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gen", help="apply a random invariance transform")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--transform-out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("batch", help="pairwise statistics over a population directory")
    p.add_argument("dir")
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--draws", type=int, default=16)
    p.add_argument("--beta-bound", type=int, default=5)
    p.add_argument("--json-out", default="-")
    p.add_argument("--csv-out")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("fixture", help="write a reference decomposition as JSON")
    p.add_argument("name", choices=("strassen", "laderman", "dotprod121", "naive"))
    p.add_argument("dims", nargs="*", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidArgumentError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

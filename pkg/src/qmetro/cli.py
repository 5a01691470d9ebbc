"""Command-line entry point: ``qmetro <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__

log = logging.getLogger("qmetro")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def _workers(value: str):
    if value == "auto":
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--workers expects an integer or 'auto', got {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("--workers must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="INI-style config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--n-states", type=int, help="ensemble size")
    common.add_argument("--workers", type=_workers, help="process count or 'auto' (fallback: $QMETRO_WORKERS)")
    common.add_argument("--output", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qmetro", description="Entanglement vs. maximized QFI experiments for two-qubit states.")
    p.add_argument("--version", action="version", version=f"qmetro {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="sample the ensemble and compute all measures")
    g.add_argument("--ree-subsample", help="states receiving REE: an integer or 'all'")
    g.add_argument("--force", action="store_true", help="discard a conflicting partial or finished run")

    a = sub.add_parser("analyze", parents=[common], help="binning, fits, bootstrap and CV on an ensemble CSV")
    a.add_argument("--input", type=Path, help="ensemble CSV (default: <output>/ensemble.csv)")
    a.add_argument("--bootstrap-n", type=int)
    a.add_argument("--n-bins", help="integer or 'auto'")

    sub.add_parser("sweep", parents=[common], help="decoherence-channel sweeps")

    b = sub.add_parser("baseline", parents=[common], help="MQFI of certified separable mixtures")
    b.add_argument("--n", type=int, dest="baseline_n", help="number of separable states")

    sub.add_parser("report", parents=[common], help="collect headline numbers into report.json")
    sub.add_parser("verify", parents=[common], help="run the built-in identity checks")
    return p


def _config(args):
    from .config import load_config

    extra = {}
    if getattr(args, "ree_subsample", None) is not None:
        v = args.ree_subsample
        extra["ree_subsample"] = v if v == "all" else int(v)
    if getattr(args, "n_bins", None) is not None:
        extra["n_bins"] = args.n_bins if args.n_bins == "auto" else int(args.n_bins)
    for key in ("bootstrap_n", "baseline_n"):
        if getattr(args, key, None) is not None:
            extra[key] = getattr(args, key)
    try:
        return load_config(
            args.config,
            master_seed=args.seed,
            n_states=args.n_states,
            workers=args.workers,
            output_dir=args.output,
            **extra,
        )
    except FileNotFoundError as exc:
        raise UsageError(f"--config: {exc}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _run(args) -> int:
    from . import pipeline, verify

    if args.command == "verify":
        results = verify.run_checks()
        for c in results:
            print(verify.summary_line(c))
        failed = sum(not c.passed for c in results)
        print(f"{len(results) - failed}/{len(results)} checks passed")
        return EXIT_OK if failed == 0 else EXIT_RUNTIME

    cfg = _config(args)
    if args.command == "generate":
        path, manifest = pipeline.run_ensemble(cfg, overwrite=args.force)
        print(f"wrote {path} ({manifest['counts']['states']['completed']} states)")
    elif args.command == "analyze":
        src = args.input or Path(cfg.output_dir) / "ensemble.csv"
        summary = pipeline.run_analysis(src, cfg)
        print(json.dumps(pipeline._plain({m: s["exponential"]["params"] for m, s in summary["measures"].items()}), indent=2))
    elif args.command == "sweep":
        bundle = pipeline.run_sweeps(cfg)
        print(f"wrote {len(bundle)} sweeps to {Path(cfg.output_dir) / 'sweeps'}")
    elif args.command == "baseline":
        s = pipeline.run_separable_baseline(cfg)
        print(f"separable MQFI/4: mean {s['mean']:.4f}, median {s['median']:.4f}, std {s['std']:.4f} (n={s['n']})")
    elif args.command == "report":
        rep = pipeline.report(cfg)
        print(f"wrote {Path(cfg.output_dir) / 'report.json'}; missing stages: {', '.join(rep['missing_stages']) or 'none'}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except UsageError as exc:
        print(f"qmetro: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"qmetro {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

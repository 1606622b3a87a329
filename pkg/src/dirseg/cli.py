"""Command line interface.

Subcommands: estimate-priors, segment, compare, sample, stats.  Exit codes:
0 on success, 2 on configuration errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, parse_config
from .kernels import BACKEND
from .model import DataError
from .pipelines import compare, config_digest, estimate_priors, sample, segment, stats
from .segmentation import NotApplicableError

_OVERRIDE_HELP = """\
Concentration override expressions ([prior] N / M with mode=override) are
resolved per test sequence: 'n' is the sequence length, 'N1' and 'M1' are
1 / (smallest positive transition / emission count ratio) of the training
corpus.  A number written directly before a symbol multiplies it, so the
usual grid values '20n', '2n', 'n', 'n/2', 'N1+1', 'M1/4' all parse.
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirseg",
        description="MAP path segmentation for sparse hidden Markov models "
                    "under Dirichlet priors.",
        epilog=_OVERRIDE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} (kernels: {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--output-dir", default=None,
                       help="override the configured output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="process sequences concurrently with this many workers")

    p = sub.add_parser("estimate-priors",
                       help="derive masks and empirical priors from the training corpus")
    common(p)
    p.set_defaults(func=_cmd_estimate_priors)

    p = sub.add_parser("segment", help="run the configured methods on the test corpus")
    common(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("compare",
                       help="frequentist / Bayesian / no-training-data comparison tables")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sample", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--out", default=None,
                   help="corpus file to write (default <output-dir>/sample.corpus)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("stats", help="path statistics for a labeled corpus")
    common(p)
    p.add_argument("--corpus", default=None,
                   help="corpus file (default: the configured test corpus)")
    p.set_defaults(func=_cmd_stats)
    return parser


def _context(args):
    cfg = parse_config(args.config)
    digest = config_digest(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    out_dir = Path(args.output_dir if args.output_dir is not None else cfg.output_dir)
    return cfg, digest, seed, out_dir


def _cmd_estimate_priors(args) -> int:
    cfg, digest, seed, out_dir = _context(args)
    for p in estimate_priors(cfg, out_dir, digest, seed):
        print(f"wrote {p}")
    return 0


def _cmd_segment(args) -> int:
    cfg, digest, seed, out_dir = _context(args)
    for p in segment(cfg, out_dir, digest, seed, jobs=args.jobs):
        print(f"wrote {p}")
    return 0


def _cmd_compare(args) -> int:
    cfg, digest, seed, out_dir = _context(args)
    for p in compare(cfg, out_dir, digest, seed, jobs=args.jobs):
        print(f"wrote {p}")
    return 0


def _cmd_sample(args) -> int:
    cfg, digest, seed, out_dir = _context(args)
    out = Path(args.out) if args.out else out_dir / "sample.corpus"
    print(f"wrote {sample(cfg, out, seed)}")
    return 0


def _cmd_stats(args) -> int:
    cfg, digest, seed, out_dir = _context(args)
    corpus_path = args.corpus or cfg.test
    if not corpus_path:
        raise ConfigError("stats needs --corpus or a configured test corpus")
    for p in stats(cfg, corpus_path, out_dir, digest, seed):
        print(f"wrote {p}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, NotApplicableError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical or estimation
failure, 4 I/O failure.
"""

import argparse
import logging
import os
import sys

from . import __version__
from ._backend import BACKEND
from .config import PRESET_DESCRIPTIONS, PRESETS, get_preset, parse_config, with_overrides
from .errors import CatelabError, ConfigError
from .harness import appendix_sweep
from .report import ReportIOError, fmt, run_and_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

SEED_ENV = "CATELAB_SEED"
APPENDIX_TOLERANCE = 0.01


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_run_flags(p, out_default):
    p.add_argument("--out", default=out_default, help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=_u64, help=f"master seed for every scenario (else ${SEED_ENV}, else the config)")
    p.add_argument("--reps", type=_positive, help="override the replication count")
    p.add_argument("--n", type=_positive, help="override the number of units per replication")
    p.add_argument("--threads", type=_positive, default=1, help="worker threads; never changes output bytes")


def build_parser():
    parser = argparse.ArgumentParser(prog="catelab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"catelab {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenarios from config files or preset names")
    run.add_argument("targets", nargs="+", metavar="config|preset")
    run.add_argument("--format", choices=("all", "csv", "json"), default="all",
                     help="which per-scenario outputs to write (manifest.json is always written)")
    _add_run_flags(run, "catelab-out")

    sub.add_parser("list-presets", help="list built-in scenario presets")

    verify = sub.add_parser("verify-appendix", help="check closed-form CATE/ITE correlation against Monte Carlo")
    _add_run_flags(verify, None)
    return parser


def resolve_seed(seed, environ=os.environ):
    if seed is not None:
        return seed
    raw = environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return _u64(raw.strip())
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(f"${SEED_ENV}: {exc}") from None


def load_targets(targets):
    configs = []
    for target in targets:
        if os.path.isfile(target):
            configs.extend(parse_config(target))
        elif target in PRESETS:
            configs.append(get_preset(target))
        else:
            raise ConfigError(f"{target!r} is neither a readable config file nor a preset "
                              f"(presets: {', '.join(PRESETS)})")
    names = [c.name for c in configs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"duplicate scenario name {dupes[0]!r} across targets", field="name")
    return configs


def _cmd_run(args):
    seed = resolve_seed(args.seed)
    configs = [with_overrides(c, seed=seed, reps=args.reps, n=args.n) for c in load_targets(args.targets)]
    formats = ("csv", "json") if args.format == "all" else (args.format,)
    manifest = run_and_report(configs, args.out, formats=formats, threads=args.threads)
    for s in manifest.scenarios:
        line = f"{s.name}: {s.status}"
        if s.error:
            line += f" ({s.error})"
        print(line)
    print(f"manifest: {manifest.manifest_path}")
    return EXIT_OK if manifest.ok else EXIT_NUMERICAL


def _cmd_list(args):
    width = max(len(n) for n in PRESETS)
    for name in PRESETS:
        print(f"{name:<{width}}  {PRESET_DESCRIPTIONS.get(name, '')}")
    return EXIT_OK


def _cmd_verify(args):
    config = with_overrides(get_preset("appendix-sweep"), seed=resolve_seed(args.seed), reps=args.reps, n=args.n)
    if args.out:
        run_and_report([config], args.out, threads=args.threads)
    rows = appendix_sweep(config, threads=args.threads)
    header = ("index", "beta4", "beta5", "rho", "sigma_x", "sigma_z", "closed_corr", "mc_corr", "abs_diff")
    print("  ".join(f"{h:>11}" for h in header))
    for r in rows:
        cells = (r.index, r.beta4, r.beta5, r.rho, r.sigma_x, r.sigma_z, r.closed_form_corr, r.empirical_corr,
                 r.abs_diff)
        print("  ".join(f"{c:>11}" if isinstance(c, int) else f"{fmt(c)[:11]:>11}" for c in cells))
    diffs = [r.abs_diff for r in rows if r.abs_diff is not None]
    checks = {
        "closed form in [0, 1]": all(0.0 <= r.closed_form_corr <= 1.0 for r in rows),
        f"max |closed - mc| <= {APPENDIX_TOLERANCE}": bool(diffs) and max(diffs) <= APPENDIX_TOLERANCE,
        "zero-slope inputs give exactly 0": all(r.closed_form_corr == 0.0 for r in rows if r.constructed),
    }
    print(f"max |closed - mc| = {max(diffs) if diffs else float('nan'):.3g}")
    for label, passed in checks.items():
        print(f"{'PASS' if passed else 'FAIL'}  {label}")
    return EXIT_OK if all(checks.values()) else EXIT_NUMERICAL


_COMMANDS = {"run": _cmd_run, "list-presets": _cmd_list, "verify-appendix": _cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"catelab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportIOError as exc:
        print(f"catelab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CatelabError as exc:
        print(f"catelab: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"catelab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

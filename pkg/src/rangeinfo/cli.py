"""Command line entry point: ``rangeinfo {sweep,posterior-demo,theorem,plot}``.

On failure the last line on stderr reads ``error[<category>]: <message>`` and
the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from rangeinfo.errors import RangeInfoError

EXIT_USAGE = 2
EXIT_ERROR = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, EXIT_USAGE)


def _fail(category: str, message: str, code: int):
    text = " ".join(str(message).split())
    print(f"error[{category}]: {text}", file=sys.stderr)
    raise SystemExit(code)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI configuration file")
    common.add_argument("--seed", type=_u64, default=None, help="override the configured seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads for SNR points")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="rangeinfo", description="Range information and estimation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", parents=[common], help="SNR sweep to sweep.csv plus figures")
    p.add_argument("--no-plots", action="store_true", help="write only the CSV")

    p = sub.add_parser("posterior-demo", parents=[common], help="posterior of one snapshot")
    p.add_argument("--snr", type=float, required=True, help="SNR in dB")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("theorem", parents=[common], help="typicality checks over the (m, epsilon) lattice")
    p.add_argument("--cache", type=Path, default=None, help="reference-entropy cache directory")

    p = sub.add_parser("plot", parents=[common], help="figures from an existing sweep CSV")
    p.add_argument("--csv", type=Path, default=None, help="sweep CSV (default: <out>/sweep.csv)")
    return parser


def _run(args) -> list[Path]:
    # imports deferred so that `--help` stays fast
    from rangeinfo import harness, plotting

    if args.command == "sweep":
        csv_path = harness.run_sweep(args.config, args.out, seed=args.seed, threads=args.threads)
        return [csv_path] + ([] if args.no_plots else plotting.emit_plots(csv_path, args.out))
    if args.command == "posterior-demo":
        res = harness.run_posterior_demo(args.snr, args.seed, args.out, args.config, plot=not args.no_plots)
        return [p for p in (res.csv_path, res.plot_path) if p is not None]
    if args.command == "theorem":
        return [harness.run_theorem_suite(args.config, args.out, seed=args.seed, cache_dir=args.cache)]
    csv_path = args.csv if args.csv is not None else args.out / "sweep.csv"
    return plotting.emit_plots(csv_path, args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        written = _run(args)
    except RangeInfoError as exc:
        _fail(exc.category, exc, EXIT_ERROR)
    except OSError as exc:
        _fail("io", exc, EXIT_IO)
    except (ValueError, ArithmeticError) as exc:
        _fail("value", exc, EXIT_ERROR)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``lambda-memory {spectrum,transmit,store-retrieve}``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import io as lio
from .model import ConfigError
from .scenarios import run_store_retrieve, run_transmission_scan, spectral_overlap
from .solver import NumericalError, SolverDomainError
from .susceptibility import GridResolutionError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lambda-memory", description="Lambda-medium probe storage simulator")
    sub = parser.add_subparsers(dest="scenario", required=True, parser_class=_Parser)
    for name, text in (
        ("spectrum", "susceptibility and probe spectrum tables"),
        ("transmit", "probe transmission with a stationary or single-window coupling"),
        ("store-retrieve", "write, dark storage and readout"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--scan", help="carrier-offset scan, delta:<start>:<stop>:<step>")
        p.add_argument("--doppler", action="store_true", help="enable Doppler averaging")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--plot-script", action="store_true", help="also write a gnuplot script")
    return parser


def _run(args) -> int:
    raw = lio.apply_overrides(lio.read_config(args.config), args.set)
    if args.doppler:
        raw.overrides.append("--doppler")
    config = lio.build_config(raw, doppler_flag=args.doppler)
    deltas = lio.parse_scan(args.scan) if args.scan else [config.probe.carrier_offset]
    params = raw.canonical() + (";--doppler" if args.doppler else "")
    scenario = args.scenario
    if scenario == "spectrum":
        results = []
        for d in deltas:
            row = spectral_overlap(config, d)
            row["carrier_offset"] = d
            results.append(row)
    elif scenario == "transmit":
        results = run_transmission_scan(config, deltas, solver=raw.get("run.solver"))
    else:
        results = run_store_retrieve(config, deltas, with_coherence=False)
    files = lio.write_outputs(results, args.out, scenario, params, config.schedule)
    if args.plot_script:
        files.append(lio.write_gnuplot(Path(args.out) / f"{scenario}.gp", scenario, files))
    if not args.quiet:
        for res in results:
            if isinstance(res, dict):
                continue
            r = res.report
            print(
                f"delta={res.carrier_offset:+.3f}  T={r.transmittance:.4f}  R={r.retrieval_efficiency:.4f}  "
                f"delay={r.delay:.3f}  osc={r.oscillation_freq:.3f}"
            )
        print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        try:
            return _run(args)
        except (ConfigError, GridResolutionError, SolverDomainError) as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (NumericalError, FloatingPointError) as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

# src/polar_fault_lab/cli.py
"""Command-line interface for polar-fault-lab"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from polar_fault_lab import __version__
from polar_fault_lab.core.analysis.construction import (
    code_definition,
    k_from_rate,
    load_code_definition,
)
from polar_fault_lab.core.errors import ConfigError, FaultLabError, ResourceLimitError
from polar_fault_lab.core.export import output_stream, write_csv, write_json, write_rows
from polar_fault_lab.core.fault_lab import FaultLab
from polar_fault_lab.core.simulation.codec import FaultPattern, polar_encode, sc_decode, transmit_bec

logger = logging.getLogger("polar_fault_lab.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7")
BOUND_COLUMNS = [
    "n", "N", "K", "rate", "upper", "lower",
    "upper_trivialized", "lower_trivialized", "union_sum", "bonferroni",
]


def parse_rates(text: str) -> List[float]:
    """Comma list ``0.1,0.2`` or inclusive range ``start:stop:step``"""
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0:
                raise ConfigError(f"rate step must be positive in {text!r}")
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse rates {text!r}: {exc}") from exc


def parse_ints(text: str) -> List[int]:
    try:
        if ":" in text:
            start, stop = (int(part) for part in text.split(":"))
            return list(range(start, stop + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polar-fault-lab",
        description="polar-fault-lab - polar codes on the erasure channel with a faulty SC decoder",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"polar-fault-lab {__version__}"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    parser.add_argument("--log-file", help="Also write the log to this file")
    parser.add_argument("--config", help="JSON settings file (see FaultLab.save_config)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, help="Channel erasure probability")
    common.add_argument("--delta", type=float, help="Decoder fault probability")
    common.add_argument("--protected-levels", type=int, default=0, help="Fault-free root-side levels")
    common.add_argument("--n-max-bounds", type=int, help="Largest n for dense covariance")
    common.add_argument("--out", help="Output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    code = argparse.ArgumentParser(add_help=False)
    code.add_argument("--n", type=int, help="Blocklength exponent, N = 2^n")
    size = code.add_mutually_exclusive_group()
    size.add_argument("--rate", type=float, help="Code rate, K = ceil(R N)")
    size.add_argument("--k", type=int, help="Number of information bits")

    simulation = argparse.ArgumentParser(add_help=False)
    simulation.add_argument("--trials", type=int, help="Frames to simulate")
    simulation.add_argument("--seed", type=int, help="Master seed")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    construct_parser = subparsers.add_parser(
        "construct", parents=[common, code], help="Build a code and its sorted Z table"
    )
    construct_parser.add_argument(
        "--z-out", help="Sorted Z table output path (default: <out stem>_z.csv next to --out)"
    )

    bounds_parser = subparsers.add_parser(
        "bounds", parents=[common, code], help="Upper and lower FER bounds"
    )
    bounds_parser.add_argument("--sweep", choices=["rate", "n"], help="Sweep rates or blocklengths")
    bounds_parser.add_argument("--rates", help="Rates for --sweep rate (list or start:stop:step)")
    bounds_parser.add_argument("--n-values", help="Exponents for --sweep n (list or start:stop)")

    simulate_parser = subparsers.add_parser(
        "simulate", parents=[common, code, simulation], help="Monte-Carlo FER estimate"
    )
    simulate_parser.add_argument("--engine", choices=["indicator", "decoder"])
    simulate_parser.add_argument("--target-erasures", type=int, help="Early stop; 0 disables")
    simulate_parser.add_argument("--batch-size", type=int)
    simulate_parser.add_argument("--code", help="Code definition JSON written by construct")
    simulate_parser.add_argument("--validate", action="store_true", help="Check against the bounds")
    simulate_parser.add_argument("--trace", help="Write the message trace of one frame here")

    optimize_parser = subparsers.add_parser(
        "optimize", parents=[common, simulation], help="FER-minimizing blocklength"
    )
    optimize_parser.add_argument("--rate", type=float, required=True)
    optimize_parser.add_argument("--n-max", type=int, default=12)

    uep_parser = subparsers.add_parser(
        "uep", parents=[common], help="Bounds against the number of protected levels"
    )
    uep_parser.add_argument("--n", type=int, required=True)
    uep_parser.add_argument("--rates", default="0.01:0.40:0.01")
    uep_parser.add_argument("--protected-values", help="n_p values (default 0..n+1)")

    reproduce_parser = subparsers.add_parser(
        "reproduce", parents=[common, simulation], help="Data for a figure preset"
    )
    reproduce_parser.add_argument("figure", choices=FIGURES)

    return parser


def main(argv: Optional[Sequence[str]] = None):
    """Main CLI entry point"""
    sys.exit(run(argv))


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        with make_lab(args) as lab:
            COMMANDS[args.command](lab, args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ResourceLimitError as e:
        logger.error(f"Resource limit: {e}")
        return EXIT_RESOURCE
    except FaultLabError as e:
        logger.error(f"Error: {e}")
        return EXIT_ERROR
    return EXIT_OK


def make_lab(args) -> FaultLab:
    settings: Dict[str, Any] = {}
    for key in ("p", "delta", "n_max_bounds", "trials", "seed", "engine", "batch_size"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    target = getattr(args, "target_erasures", None)
    if target is not None:
        settings["target_erasures"] = target or None

    lab = FaultLab(log_file=args.log_file)
    try:
        if args.config:
            lab.load_config(args.config)
        lab.load_settings(settings)
    except FaultLabError:
        lab.executor.shutdown(wait=False)
        raise

    root = logging.getLogger("polar_fault_lab")
    root.setLevel(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
    return lab


def _code_spec(lab: FaultLab, args):
    if args.n is None:
        raise ConfigError("--n is required")
    if args.rate is None and args.k is None:
        raise ConfigError("give one of --rate or --k")
    return lab.spec(args.n, rate=args.rate, k=args.k, protected_levels=args.protected_levels)


def _bounds_row(n: int, rate: float, K: int, b) -> Dict[str, Any]:
    return {
        "n": n, "N": 1 << n, "K": K, "rate": rate,
        "upper": b.upper, "lower": b.lower,
        "upper_trivialized": b.upper_trivialized, "lower_trivialized": b.lower_trivialized,
        "union_sum": b.union_sum, "bonferroni": b.bonferroni,
    }


def _emit(args, rows: List[Dict[str, Any]], columns: Optional[List[str]] = None, document=None):
    if document is not None and args.format == "json":
        with output_stream(args.out) as stream:
            write_json(stream, document)
    else:
        write_rows(args.out, rows, args.format, columns)


def default_z_path(out: Optional[str], fmt: str) -> Optional[str]:
    """Z table path beside a code definition file; none when the definition goes to stdout"""
    if out is None or out == "-":
        return None
    suffix = ".json" if fmt == "json" else ".csv"
    return os.path.splitext(out)[0] + "_z" + suffix


def cmd_construct(lab: FaultLab, args):
    """Write the code definition and the sorted Z table"""
    spec = _code_spec(lab, args)
    z, info = lab.construct(spec)
    order = np.argsort(z.values, kind="stable")
    rows = [
        {"rank": rank, "index": int(i), "sign_string": z.sign_string(int(i)), "z_value": float(z.values[i])}
        for rank, i in enumerate(order)
    ]
    z_out = args.z_out or default_z_path(args.out, args.format)
    with output_stream(args.out) as stream:
        write_json(stream, code_definition(spec, info))
        if z_out:
            with output_stream(z_out) as z_stream:
                if args.format == "json":
                    write_json(z_stream, rows)
                else:
                    write_csv(z_stream, rows, ["rank", "index", "sign_string", "z_value"])
    logger.info(f"Constructed n={spec.n} K={spec.k}: min Z={z.values.min():.3g}")


def cmd_bounds(lab: FaultLab, args):
    if args.sweep == "n":
        if args.rate is None:
            raise ConfigError("--sweep n needs --rate")
        n_values = parse_ints(args.n_values or "0:12")
        rows = [
            _bounds_row(n, args.rate, k_from_rate(n, args.rate), b)
            for n, b in lab.sweep_blocklengths(args.rate, n_values, args.protected_levels)
        ]
    elif args.sweep == "rate":
        if args.n is None:
            raise ConfigError("--sweep rate needs --n")
        rates = parse_rates(args.rates or "0.05:0.50:0.01")
        rows = [
            _bounds_row(args.n, rate, k_from_rate(args.n, rate), b)
            for rate, b in lab.sweep_rates(args.n, rates, args.protected_levels)
        ]
    else:
        spec = _code_spec(lab, args)
        rows = [_bounds_row(spec.n, spec.rate, spec.k, lab.bounds(spec))]
    _emit(args, rows, BOUND_COLUMNS)


def cmd_simulate(lab: FaultLab, args):
    if args.code:
        try:
            with open(args.code, "r") as f:
                spec, info = load_code_definition(json.load(f))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read code definition {args.code}: {exc}") from exc
    else:
        spec = _code_spec(lab, args)
        _, info = lab.construct(spec)

    if args.trace:
        write_trace(args.trace, spec, info, lab.settings["seed"])

    if args.validate:
        report = lab.validate(spec, info)
        rows = [report.to_dict()]
    else:
        estimate = lab.simulate(spec, info)
        rows = [{**spec.to_dict(), "K": info.K, **estimate.to_dict()}]
    _emit(args, rows)


def write_trace(path: str, spec, info, seed: int):
    """Decode one seeded frame and dump every write"""
    rng = np.random.default_rng(seed)
    u = np.where(info.mask(), rng.integers(0, 2, size=spec.N), 0)
    y = transmit_bec(polar_encode(u, spec.n), spec.p, rng)
    faults = FaultPattern.sample(spec.n, spec.delta, rng, spec.protected_levels)
    trace: list = []
    result = sc_decode(y, spec, info, faults=faults, trace=trace)
    with output_stream(path) as stream:
        write_csv(
            stream,
            [dict(zip(("level", "position", "message", "fault_flag"), row)) for row in trace],
            ["level", "position", "message", "fault_flag"],
        )
    logger.info(f"Trace of one frame written to {path}: {result}")


def cmd_optimize(lab: FaultLab, args):
    decision = lab.optimize(args.rate, args.n_max, protected_levels=args.protected_levels)
    rows = decision.decision_rows()
    document = {"n_star": decision.n_star, "N": decision.N, "method": decision.method,
                "candidates": list(decision.candidates), "capped": list(decision.capped),
                "rows": rows}
    _emit(args, rows, ["n", "N", "K", "upper", "lower", "mc_fer", "chosen"], document)
    logger.info(f"n*={decision.n_star} (N={decision.N}) via {decision.method}")


def cmd_uep(lab: FaultLab, args):
    protected = parse_ints(args.protected_values) if args.protected_values else None
    _emit(args, lab.uep_sweep(args.n, parse_rates(args.rates), protected))


def reproduce_rows(lab: FaultLab, figure: str) -> List[Dict[str, Any]]:
    """Data behind one figure preset"""
    rows: List[Dict[str, Any]] = []
    if figure == "fig3":
        rates = parse_rates("0.05:0.50:0.01")
        for n in (8, 10, 12):
            rows += [_bounds_row(n, r, k_from_rate(n, r), b) for r, b in lab.sweep_rates(n, rates)]
    elif figure == "fig4":
        for n in (8, 10, 12):
            for delta in (lab.settings["delta"], 0.0):
                z = lab.z_table(n, delta=delta)
                rows += [
                    {"n": n, "delta": delta, "rank": rank, "z_value": float(v)}
                    for rank, v in enumerate(z.sorted_values())
                ]
    elif figure == "fig5":
        for rate in (0.125, 0.1875, 0.25):
            decision = lab.optimize(rate, 12)
            rows += [
                {"rate": rate, **row, "method": decision.method}
                for row in decision.decision_rows()
            ]
    elif figure == "fig6":
        n = 10
        rows = lab.uep_sweep(n, parse_rates("0.01:0.40:0.01"), list(range(6)) + [n + 1])
    elif figure == "fig7":
        rates = parse_rates("0.05:0.50:0.01")
        for n in (8, 10, 12):
            for curve, n_p in (("protected", n - 5), ("fault_free", n + 1)):
                rows += [
                    {"n": n, "n_p": n_p, "curve": curve, "rate": r, "upper": b.upper, "lower": b.lower}
                    for r, b in lab.sweep_rates(n, rates, n_p)
                ]
    else:
        raise ConfigError(f"unknown figure {figure!r}")
    return rows


def cmd_reproduce(lab: FaultLab, args):
    rows = reproduce_rows(lab, args.figure)
    write_rows(args.out, rows, args.format)
    logger.info(f"{args.figure}: {len(rows)} rows")


COMMANDS = {
    "construct": cmd_construct,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "uep": cmd_uep,
    "reproduce": cmd_reproduce,
}


if __name__ == "__main__":
    main()

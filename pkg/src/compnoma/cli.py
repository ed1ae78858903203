"""Command-line front end: resolve a config, run the sweep, emit CSV.

Exit codes: 0 success, 1 configuration rejected, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from typing import Sequence, TextIO

from .config import PRESETS, config_from_dict, config_to_dict, parse_config
from .errors import ConfigError
from .harness import SweepResult, run_sweep

log = logging.getLogger("compnoma")

CSV_HEADER = "sweep_m,scheme,mean_se_bps_hz,ci95,infeasible_frac,trials"


def format_csv(result: SweepResult) -> str:
    """Render rows sorted by (sweep value, scheme), numbers at 9 significant
    digits; refuses to serialize non-finite values."""
    import math

    lines = [CSV_HEADER]
    for row in sorted(result.rows, key=lambda r: (r.sweep_value, r.scheme)):
        values = {
            "sweep_m": row.sweep_value,
            "mean_se_bps_hz": row.mean_se_bps_hz,
            "ci95": row.ci95,
            "infeasible_frac": row.infeasible_frac,
        }
        for name, v in values.items():
            if not math.isfinite(v):
                raise ValueError(
                    f"refusing to emit non-finite {name}={v!r} "
                    f"(sweep={row.sweep_value}, scheme={row.scheme})"
                )
        lines.append(
            f"{row.sweep_value:.9g},{row.scheme},{row.mean_se_bps_hz:.9g},"
            f"{row.ci95:.9g},{row.infeasible_frac:.9g},{row.trials}"
        )
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, target: str | TextIO | None) -> None:
    text = format_csv(result)
    if target is None:
        sys.stdout.write(text)
    elif hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors (exit 1), not argparse's exit 2
    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="compnoma",
        description=(
            "Monte-Carlo spectral-efficiency sweeps for two-cell coordinated "
            "multipoint downlinks with superposed (NOMA) and orthogonal access."
        ),
    )
    parser.add_argument(
        "preset",
        nargs="?",
        choices=sorted(PRESETS),
        help="named sweep preset; omit when using --config or --scenario",
    )
    parser.add_argument("--config", help="JSON config path")
    parser.add_argument("--scenario", type=int, help="scenario id (1, 2 or 3)")
    parser.add_argument(
        "--scheme",
        action="append",
        help="scheme to run (repeatable or comma separated); overrides the config",
    )
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument(
        "--case",
        choices=("case1", "case2", "both", "1", "2"),
        help="shared decode order for the asymmetric scenario (1/2 are aliases)",
    )
    parser.add_argument(
        "--interference",
        choices=("negligible", "full"),
        help="cross-cell interference model",
    )
    parser.add_argument(
        "--split",
        choices=("equal_received", "equal_transmit"),
        help="how coordinated cells share an edge user's power demand",
    )
    parser.add_argument("--workers", type=int, default=1, help="worker processes")
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    return parser


def _resolve_config(args: argparse.Namespace):
    if args.preset and args.config:
        raise ConfigError("give a preset or --config, not both")
    if args.preset:
        base = config_to_dict(PRESETS[args.preset]())
    elif args.config:
        base = config_to_dict(parse_config(args.config))
    elif args.scenario is not None:
        base = {"scenario_id": args.scenario}
    else:
        raise ConfigError("a preset, --config, or --scenario is required")

    if args.scenario is not None:
        base["scenario_id"] = args.scenario
        if "schemes" in base:
            del base["schemes"]  # scenario change invalidates inherited schemes
    if args.scheme:
        schemes: list[str] = []
        for chunk in args.scheme:
            schemes.extend(s.strip() for s in chunk.split(",") if s.strip())
        base["schemes"] = schemes
    if args.trials is not None:
        base["trials"] = args.trials
    if args.seed is not None:
        base["seed"] = args.seed
    if args.case:
        base["decode_case"] = {"1": "case1", "2": "case2"}.get(args.case, args.case)
    if args.interference:
        base["interference_mode"] = args.interference
    if args.split:
        base["jt_split"] = args.split
    if args.out:
        base["output_path"] = args.out
    return config_from_dict(base)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except ConfigError as e:  # bad flag value or unknown flag
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        config = _resolve_config(args)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    log.info("resolved config: %s", json.dumps(config_to_dict(config), sort_keys=True))

    try:
        result = run_sweep(config, workers=args.workers)
        emit_csv(result, config.output_path)
        if config.output_path:
            sidecar = config.output_path + ".config.json"
            with open(sidecar, "w", encoding="utf-8") as fh:
                json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
            log.info("wrote %s and %s", config.output_path, sidecar)
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

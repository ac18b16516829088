"""Command-line interface: list scenarios, run a config or built-in scenario,
and sweep one numeric config key.

Exit codes: 2 config/schema problem, 3 dimension cap exceeded, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .hilbert import DimensionCapError
from .runner import ConfigError, run_scenario, set_config_value, sweep
from .scenarios import SCENARIOS, registry_lines, scenario_config
from .spectral import NumericalError


def _load_config(source: str) -> dict:
    path = Path(source)
    if path.exists():
        try:
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse '{source}': {exc}") from exc
    if source in SCENARIOS:
        return scenario_config(source)
    raise ConfigError(f"'{source}' is neither a config file nor a known scenario id")


def _parse_set(pairs) -> list:
    out = []
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        key, raw = pair.split("=", 1)
        try:
            value = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        out.append((key, value))
    return out


def _parse_values(raw: str) -> list:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be a comma-separated number list: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qme", description="quench simulations and relaxation diagnostics "
                                "for spin-1/2 chains")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list built-in scenarios")

    run_p = sub.add_parser("run", help="run a TOML config file or a scenario id")
    run_p.add_argument("config", help="path to a TOML config, or a scenario id")
    run_p.add_argument("--outdir", help="output directory (overrides run.outdir)")
    run_p.add_argument("--threads", type=int, help="worker threads (overrides run.threads)")
    run_p.add_argument("--seed", type=int, help="master seed (overrides run.master_seed)")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key by dotted path (repeatable)")

    sweep_p = sub.add_parser("sweep", help="run a config once per value of one key")
    sweep_p.add_argument("config", help="path to a TOML config, or a scenario id")
    sweep_p.add_argument("--axis", required=True, help="dotted config path, e.g. model.j_h")
    sweep_p.add_argument("--values", required=True, help="comma-separated numbers")
    sweep_p.add_argument("--outdir", help="output directory (overrides run.outdir)")
    sweep_p.add_argument("--threads", type=int)
    sweep_p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for line in registry_lines():
                print(line)
            return 0
        config = _load_config(args.config)
        if args.command == "run":
            for key, value in _parse_set(args.set):
                set_config_value(config, key, value)
            record = run_scenario(config, outdir=args.outdir, threads=args.threads,
                                  master_seed=args.seed)
            print(f"{record.scenario}: wrote {len(record.files)} files to {record.out_dir} "
                  f"({record.wall_seconds:.1f}s)")
            return 0
        records = sweep(config, args.axis, _parse_values(args.values),
                        outdir=args.outdir, threads=args.threads, master_seed=args.seed)
        print(f"swept {args.axis} over {len(records)} values; "
              f"summary in {records[-1].files[-1]}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DimensionCapError as exc:
        print(f"dimension cap: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Scenario-driven command line front end.

Usage: ``puriflow <scenario> [flags]``.  Flags override values from an
optional INI config file (``--config``), which in turn overrides the
scenario defaults.  Output is UTF-8 CSV with a header row, LF line
endings, and 17-significant-digit floats so identical configurations
reproduce byte-identical files.

Exit codes: 0 success, 2 usage/configuration error, 3 unwritable output
path, 4 integration failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import sys
from typing import Dict, Optional

from .constrained import IntegrationError
from .scenarios import SCENARIOS, ScenarioConfig, make_config, run_scenario

# long-flag name -> ScenarioConfig field
FLAG_FIELDS = {
    "mu": "mu",
    "omega": "omega",
    "alpha": "alpha",
    "epsilon": "eps",
    "gamma": "gamma",
    "energy": "energy",
    "system": "system",
    "lindblads": "lindblads",
    "cutoff": "cutoff",
    "number": "number",
    "theta": "theta",
    "phi": "phi",
    "dt": "dt",
    "t-final": "t_final",
    "stride": "sample_stride",
    "paths": "n_paths",
    "seed": "base_seed",
    "orbits": "n_orbits",
    "points": "n_points",
    "out": "out",
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _converter(field: str):
    kind = _FIELD_TYPES[field]
    if kind in ("float", float):
        return float
    if kind in ("int", int):
        return int
    if kind in ("bool", bool):
        return lambda s: str(s).strip().lower() in ("1", "true", "yes", "on")
    return str


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puriflow",
        description="Constrained quantum dynamics scenarios (CSV output).")
    sub = parser.add_subparsers(dest="scenario", required=True,
                                metavar="{" + ",".join(sorted(SCENARIOS)) + "}")
    for name, (runner, defaults) in sorted(SCENARIOS.items()):
        p = sub.add_parser(name, help=(runner.__doc__ or "").strip().splitlines()[0]
                           if runner.__doc__ else None)
        p.add_argument("--config", default=None, metavar="FILE",
                       help="INI file with [common] and [%(prog)s] sections")
        for flag, field in FLAG_FIELDS.items():
            kwargs = dict(dest=field, default=argparse.SUPPRESS)
            if field == "system":
                kwargs["choices"] = ["s", "ns"]
            elif field == "lindblads":
                kwargs["choices"] = ["J", "quadrature"]
            elif field != "out":
                kwargs["type"] = _converter(field)
            p.add_argument("--" + flag, **kwargs)
        p.add_argument("--projection", dest="projection",
                       action="store_true", default=argparse.SUPPRESS)
    return parser


def _load_config_section(path: str, scenario: str) -> Dict:
    ini = configparser.ConfigParser()
    read = ini.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    values: Dict = {}
    for section in ("common", scenario):
        if not ini.has_section(section):
            continue
        for key, raw in ini.items(section):
            flag = key.replace("_", "-")
            if flag in FLAG_FIELDS:
                field = FLAG_FIELDS[flag]
            elif key in _FIELD_TYPES:
                field = key
            else:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
            values[field] = _converter(field)(raw)
    return values


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".17g")


def write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    scenario = args.scenario
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("scenario", "config")}
    try:
        config_values = (_load_config_section(args.config, scenario)
                         if args.config else {})
        merged = {**config_values, **overrides}
        cfg = make_config(scenario, merged)
    except ValueError as exc:
        print(f"puriflow: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_scenario(cfg)
    except IntegrationError as exc:
        print(f"puriflow: integration failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"puriflow: scenario error: {exc}", file=sys.stderr)
        return 2

    out_path = cfg.out or f"{scenario}.csv"
    try:
        write_csv(out_path, result.header, result.rows)
    except OSError as exc:
        print(f"puriflow: cannot write output {out_path!r}: {exc}", file=sys.stderr)
        return 3

    print(f"{result.summary} -> {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

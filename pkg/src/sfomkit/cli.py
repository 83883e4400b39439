"""Command-line entry point: ``sfomkit <subcommand> [--config FILE] [--field VALUE ...]``.

Every config field is exposed as a ``--field-name`` flag; flags override the
JSON config file, which overrides the defaults. Sequence fields take
space-separated values.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import typing
from pathlib import Path

from . import __version__
from .experiments import (
    CONFIG_TYPES,
    config_from_dict,
    run_advection_cfl_map,
    run_burgers,
    run_diffusion_sweep,
    run_simulate,
    run_stability_report,
    write_outputs,
)

log = logging.getLogger("sfomkit")

RUNNERS = {
    "diffusion-sweep": run_diffusion_sweep,
    "advection-cfl-map": run_advection_cfl_map,
    "burgers": run_burgers,
    "stability-report": run_stability_report,
    "simulate": run_simulate,
}

HELP = {
    "diffusion-sweep": "per-DOF and augmented diffusion models over a (dx, dt) lattice",
    "advection-cfl-map": "stable/unstable map of per-DOF advection models",
    "burgers": "2D Burgers model with L-curve selection and IC sweep",
    "stability-report": "row norms, consistency sums and spectrum of a saved model",
    "simulate": "roll out a saved model from an initial condition",
}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_field(parser: argparse.ArgumentParser, f: dataclasses.Field, hints: dict):
    flag = "--" + f.name.replace("_", "-")
    default = f.default
    kind = hints[f.name]
    if isinstance(default, tuple):
        elem = type(default[0]) if default else str
        parser.add_argument(flag, dest=f.name, nargs="+", type=elem, default=None,
                            help=f"default: {' '.join(map(str, default))}")
    elif kind is bool:
        parser.add_argument(flag, dest=f.name, type=_parse_bool, default=None,
                            help=f"default: {default}")
    else:
        parser.add_argument(flag, dest=f.name, type=kind, default=None,
                            help=f"default: {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfomkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sfomkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, cls in CONFIG_TYPES.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, help="JSON file with config fields")
        p.add_argument("--out-dir", type=Path, default=Path("results") / name,
                       help="output directory (default: results/<subcommand>)")
        hints = typing.get_type_hints(cls)
        for f in dataclasses.fields(cls):
            if f.name != "experiment":
                _add_field(p, f, hints)
    return parser


def resolve_config(command: str, args: argparse.Namespace):
    """Merge defaults, the ``--config`` file and explicit flags."""
    data = {}
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        data.pop("experiment", None)
        data.pop("out_dir", None)
    for f in dataclasses.fields(CONFIG_TYPES[command]):
        value = getattr(args, f.name, None)
        if f.name != "experiment" and value is not None:
            data[f.name] = value
    return config_from_dict(command, data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args.command, args)
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        parser.error(str(exc))
    log.info("running %s", args.command)
    try:
        result = RUNNERS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"sfomkit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    out = write_outputs(result, args.out_dir)
    log.info("wrote %s", out)
    print(json.dumps({"out_dir": str(out), "rows": len(result.table.rows)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())

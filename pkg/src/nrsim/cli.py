"""Command-line front end.

    nrsim run (--config FILE | --preset ID) [--out DIR] [--seed N] [--drops N]
              [--parallelism N] [--set key=value ...] [--append] [--per-ue]
    nrsim validate (--config FILE | --preset ID) [--set key=value ...]
    nrsim presets list
    nrsim presets show ID

Exit codes: 0 ok, 2 validation, 3 I/O, 4 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from datetime import datetime, timezone
from typing import Optional, Sequence

from . import __version__
from .config import ScenarioConfig, load_preset, parse_config, parse_override, preset_ids, preset_text
from .errors import ConfigError, InvalidArgument, NoCapacityError, PolicyRejected
from .report import emit_report
from .simulation import run_scenario, scenario_carriers

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4
OUTPUT_ENV = "NRSIM_OUTPUT_DIR"

log = logging.getLogger("nrsim")


def load_config(config_path=None, preset=None, overrides: Sequence[str] = (), seed=None, drops=None) -> ScenarioConfig:
    if (config_path is None) == (preset is None):
        raise ConfigError("<cli>", "give exactly one of --config or --preset")
    cfg = parse_config(config_path) if config_path is not None else load_preset(preset)
    changes = dict(parse_override(o) for o in overrides)
    if seed is not None:
        changes["seed"] = seed
    if drops is not None:
        changes["drops"] = drops
    if changes:
        cfg = cfg.with_overrides(changes)
    scenario_carriers(cfg)  # refarm policy checked against the band list
    return cfg


def run(config_path, output_dir, overrides: Sequence[str] = (), parallelism: int = 1, *,
        preset=None, seed=None, drops=None, append=False, per_ue=False) -> int:
    """Load, simulate and write one scenario; returns a process exit status."""
    try:
        cfg = load_config(config_path, preset, overrides, seed, drops)
    except (ConfigError, PolicyRejected, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    out = output_dir or os.environ.get(OUTPUT_ENV) or "nrsim-out"
    start = datetime.now(timezone.utc).isoformat()
    try:
        log.info("running %s: %d drops, parallelism %d", cfg.scenario_id, cfg.drops, parallelism)
        report = run_scenario(cfg, parallelism=parallelism)
    except (InvalidArgument, PolicyRejected, NoCapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL
    report.metadata["start"] = start
    report.metadata["end"] = datetime.now(timezone.utc).isoformat()
    try:
        bundle = emit_report(report, out, config=cfg.to_dict(), append=append, per_ue=per_ue)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(bundle.kpi_table.read_text(), end="")
    return EXIT_OK


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario file (YAML or JSON)")
    src.add_argument("--preset", choices=preset_ids(), help="built-in scenario preset")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field by dotted path (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nrsim", description="LTE-to-NR migration Monte Carlo simulator")
    ap.add_argument("--version", action="version", version=f"nrsim {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write KPI outputs")
    _add_source(r)
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./nrsim-out)")
    r.add_argument("--seed", type=int)
    r.add_argument("--drops", type=int)
    r.add_argument("--parallelism", type=int, default=1)
    r.add_argument("--append", action="store_true", help="append rows to an existing KPI table")
    r.add_argument("--per-ue", action="store_true", help="also write per-UE samples")

    v = sub.add_parser("validate", help="check a scenario file without running it")
    _add_source(v)

    p = sub.add_parser("presets", help="list or show built-in presets")
    psub = p.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("id", choices=preset_ids())
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "presets":
        if args.action == "list":
            for pid in preset_ids():
                print(pid)
        else:
            print(preset_text(args.id), end="")
        return EXIT_OK

    if args.command == "validate":
        try:
            cfg = load_config(args.config, args.preset, args.overrides)
        except (ConfigError, PolicyRejected, InvalidArgument) as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"ok {cfg.scenario_id} digest={cfg.digest()}")
        return EXIT_OK

    if args.parallelism < 1:
        print("error: --parallelism must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    return run(args.config, args.out, args.overrides, args.parallelism, preset=args.preset,
               seed=args.seed, drops=args.drops, append=args.append, per_ue=args.per_ue)


if __name__ == "__main__":
    sys.exit(main())

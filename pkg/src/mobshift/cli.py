"""Command line entry point: ``mobshift <stage> [--config PATH] [--set k=v ...] [--out DIR] [--seed N]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import metrics, model, pipeline

EXIT_OK, EXIT_MISSING, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("ingest", "index", "features", "train", "profile", "score", "evaluate", "synth", "all")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mobshift", description="Individual-level mobility behavior change detection.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML config file (merged over the packaged defaults)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value by dotted name, e.g. model.K=8 (repeatable)")
    p.add_argument("--out", default="run", help="run directory (default: ./run)")
    p.add_argument("--seed", type=int, help="seed for both model training and the synthetic generator")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides += [f"model.seed={args.seed}", f"synth.seed={args.seed}"]
    try:
        cfg = pipeline.load_config(args.config, overrides)
        result = pipeline.run_stage(args.command, args.out, cfg)
    except pipeline.MissingArtifact as exc:
        print(f"error: missing artifact {exc.path}", file=sys.stderr)
        return EXIT_MISSING
    except pipeline.ConfigError as exc:
        print(f"error: config field {exc.field}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (model.TrainingDiverged, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if isinstance(result, dict):
        print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

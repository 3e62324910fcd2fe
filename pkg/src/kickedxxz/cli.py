"""``kickedxxz`` command line: run an experiment config or build a Bethe catalog."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .experiments import ConfigError, default_out_dir, load_config, run_experiment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kickedxxz", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default: config 'output' or out/<name>)")
    run.add_argument("--override-caps", action="store_true",
                     help="allow runs beyond the desk-scale size caps")
    bethe = sub.add_parser("bethe", help="enumerate the two-magnon Bethe roots for a config")
    bethe.add_argument("config")
    bethe.add_argument("--out", help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "bethe":
            if cfg.experiment != "bethe":
                cfg = dataclasses.replace(cfg, experiment="bethe")
        elif args.override_caps:
            cfg = dataclasses.replace(cfg, override_caps=True)
        out = args.out or default_out_dir(cfg, args.config)
        manifest, _ = run_experiment(cfg, out)
    except (ConfigError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"kickedxxz: error: {exc}", file=sys.stderr)
        return 2
    summary = {"output": str(out), "files": sorted(manifest.files), "results": manifest.results}
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())

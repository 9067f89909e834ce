"""Command-line front end: one subcommand per experiment stage."""

from __future__ import annotations

import argparse
import sys

from .pipeline import SUBCOMMANDS, ConfigError, load_config, run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hartree-mix",
        description="Spectral stability certification and phase-mixing "
                    "experiments for mean-field quantum dynamics around "
                    "translation-invariant states.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS,
                        help="experiment stage to run")
    parser.add_argument("--config", required=True,
                        help="path to the JSON run configuration")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed override for randomized property checks")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, out=args.out, seed=args.seed)
        return run(cfg, args.subcommand)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, exit 1
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

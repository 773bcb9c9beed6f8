"""Command line entry point.

Subcommands::

    cleanstream run --config exp.conf [--key=value ...]
    cleanstream matrix --config exp.conf [--key=value ...]
    cleanstream gen-synthetic --config exp.conf --out data.csv [--key=value ...]

Any config key can be overridden on the command line as ``--key=value``;
overrides are applied before the config is type-checked.
"""

from __future__ import annotations

import argparse
import sys

from .core import generate_synthetic, save_csv
from .harness import (
    ConfigError,
    apply_overrides,
    comparison_lines,
    config_from_mapping,
    expand_matrix,
    load_config_file,
    run_experiment,
    run_matrix,
    summary_lines,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cleanstream",
        description="Train classifiers on label-noisy batch streams by "
        "cleansing each arriving batch first.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "run one variant at one noise level"),
        ("matrix", "run a variants x noise-levels comparison"),
        ("gen-synthetic", "write a synthetic dataset CSV"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="path to a key=value config file")
        if name == "gen-synthetic":
            cmd.add_argument("--out", required=True, help="CSV path to write")
    return parser


def _parse_overrides(extras: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for raw in extras:
        if not raw.startswith("--") or "=" not in raw:
            raise ConfigError(
                f"unrecognized argument {raw!r}; overrides look like --key=value"
            )
        key, _, value = raw[2:].partition("=")
        if not key:
            raise ConfigError(f"override {raw!r} has no key")
        overrides[key] = value
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        mapping = apply_overrides(load_config_file(args.config), _parse_overrides(extras))

        if args.command == "gen-synthetic":
            config = config_from_mapping(mapping)
            dataset = generate_synthetic(config.stream, separation=config.separation)
            save_csv(dataset, args.out)
            print(f"wrote {len(dataset)} instances to {args.out}")
            return 0

        if args.command == "run":
            outcome = run_experiment(config_from_mapping(mapping))
            for line in summary_lines(outcome.results, [outcome.summary]):
                print(line)
            if outcome.config.output_dir:
                print(f"results under {outcome.config.output_dir}")
            for error in outcome.errors:
                print(f"error: {error}", file=sys.stderr)
            return 1 if outcome.errors else 0

        outcomes = run_matrix(expand_matrix(mapping))
        summaries = [o.summary for o in outcomes if o.summary is not None]
        for line in comparison_lines(summaries):
            print(line)
        failed = False
        for outcome in outcomes:
            for error in outcome.errors:
                failed = True
                print(
                    f"error: variant={outcome.config.variant} "
                    f"noise={outcome.config.noise.mean_level:g}: {error}",
                    file=sys.stderr,
                )
        if outcomes and outcomes[0].config.output_dir:
            print(f"results under {outcomes[0].config.output_dir}")
        return 1 if failed else 0
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

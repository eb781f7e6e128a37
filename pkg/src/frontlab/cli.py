"""Command-line front end.

    frontlab run <config> [--out DIR]     run a scenario config file
    frontlab preset <name> [--out DIR]    run a built-in preset
    frontlab preset --list                list preset names
    frontlab verify <run_dir>             recompute checks for a stored run
    frontlab probe <config> [--out DIR]   run with the uniqueness probe forced on

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numeric stability or front escape error.

The environment variable FRONTLAB_THREADS sets how many fixed-point solves
the uniqueness probe runs concurrently (default 1).  Results are identical
for any thread count.
"""

import argparse
import sys

from .config import parse_config
from .errors import ConfigError, ConstructionError, FrontEscapeError, StabilityError
from .presets import VERIFY_ALL, list_presets, preset_text
from .runner import EXIT_CONFIG, EXIT_NUMERIC, run, run_verify_all, verify_run_dir


def _emit(result) -> int:
    for line in result.verdicts:
        print(line)
    return result.exit_code


def _run_text(text: str, out_dir, force_probe: bool = False) -> int:
    try:
        config = parse_config(text)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if force_probe:
        config.probe_enabled = True
        if not config.probe_seeds:
            config.probe_seeds = ("bracket", "empty", "ball")
    try:
        return _emit(run(config, out_dir=out_dir, config_text=text))
    except (ConfigError, ConstructionError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (StabilityError, FrontEscapeError) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frontlab",
        description="level-set runs for nonlocal front evolutions, with "
        "built-in quantitative checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config file")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("--out", default=None, help="output directory override")

    p_preset = sub.add_parser("preset", help="run a built-in preset")
    p_preset.add_argument("name", nargs="?", default=None)
    p_preset.add_argument("--out", default=None)
    p_preset.add_argument("--list", action="store_true", help="list preset names")

    p_verify = sub.add_parser("verify", help="recompute checks for a stored run")
    p_verify.add_argument("run_dir")

    p_probe = sub.add_parser("probe", help="run a config with the uniqueness probe on")
    p_probe.add_argument("config")
    p_probe.add_argument("--out", default=None)

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            text = open(args.config).read()
        except OSError as err:
            print(f"config error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        return _run_text(text, args.out)

    if args.command == "preset":
        if args.list or args.name is None:
            for name in list_presets():
                print(name)
            return 0
        if args.name == VERIFY_ALL:
            out = args.out or "out/verify-all"
            return _emit(run_verify_all(out))
        try:
            text = preset_text(args.name)
        except KeyError:
            print(f"config error: unknown preset {args.name!r}", file=sys.stderr)
            return EXIT_CONFIG
        return _run_text(text, args.out)

    if args.command == "verify":
        return _emit(verify_run_dir(args.run_dir))

    if args.command == "probe":
        try:
            text = open(args.config).read()
        except OSError as err:
            print(f"config error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        return _run_text(text, args.out, force_probe=True)

    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())

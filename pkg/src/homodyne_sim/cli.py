"""Command-line front end.

Subcommands:
  run           execute a JSON experiment config
  validate      check a config and report size estimates without running
  preset        run one of the built-in figure presets
  list-presets  show available presets

The HOMODYNE_SIM_MAX_DIM environment variable caps the total Hilbert-space
dimension any command may allocate.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import ExperimentConfig, run_experiment, validate_config
from .presets import PRESET_NOTES, PRESETS


def _load_config(path: str) -> ExperimentConfig:
    payload = json.loads(Path(path).read_text())
    return ExperimentConfig.from_dict(payload)


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    cutoff = getattr(args, "cutoff_override", None)
    if cutoff is not None:
        if config.signal is not None:
            config = replace(config, signal=config.signal.with_cutoff(cutoff))
        if config.lo is not None:
            config = replace(config, lo=config.lo.with_cutoff(cutoff))
    return config


def _emit_error(message: str, report: dict | None = None) -> None:
    payload = {"error": message}
    if report is not None:
        payload["validation"] = report
    print(json.dumps(payload, indent=2), file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args.config)
    except (OSError, ValueError, KeyError) as exc:
        _emit_error(f"could not load config: {exc}")
        return 2
    config = _apply_overrides(config, args)
    report = validate_config(config)
    if not report["ok"]:
        _emit_error("config failed validation", report)
        return 2
    try:
        manifest = run_experiment(
            config,
            Path(args.out),
            name=args.name,
            jobs=args.jobs,
            make_plots=not args.no_plots,
        )
    except (ValueError, MemoryError) as exc:
        _emit_error(str(exc))
        return 2
    print(json.dumps({"ok": True, "outputs": manifest["outputs"], "out_dir": str(args.out)}))
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args.config)
    except (OSError, ValueError, KeyError) as exc:
        _emit_error(f"could not load config: {exc}")
        return 2
    report = validate_config(_apply_overrides(config, args))
    print(json.dumps(report, indent=2))
    return 0 if report["ok"] else 2


def _cmd_preset(args: argparse.Namespace) -> int:
    builder = PRESETS.get(args.name)
    if builder is None:
        _emit_error(f"unknown preset {args.name!r}; try list-presets")
        return 2
    config = _apply_overrides(builder(), args)
    out_dir = Path(args.out) if args.out else Path("homodyne-sim-out") / args.name
    try:
        manifest = run_experiment(
            config,
            out_dir,
            name=args.name,
            jobs=args.jobs,
            make_plots=not args.no_plots,
        )
    except (ValueError, MemoryError) as exc:
        _emit_error(str(exc))
        return 2
    print(json.dumps({"ok": True, "outputs": manifest["outputs"], "out_dir": str(out_dir)}))
    return 0


def _cmd_list_presets(_: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        print(f"{name:8s} {PRESET_NOTES[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homodyne-sim",
        description="entanglement-criteria experiments with finite local oscillators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_out: bool = True) -> None:
        if with_out:
            p.add_argument("--out", default="homodyne-sim-out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep evaluations")
        p.add_argument(
            "--cutoff-override",
            type=int,
            default=None,
            help="force an explicit Fock cutoff on signal and LO specs",
        )
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    p_run = sub.add_parser("run", help="run a config file")
    p_run.add_argument("--config", required=True, help="path to a JSON config")
    p_run.add_argument("--name", default="run", help="basename for output files")
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--cutoff-override", type=int, default=None)
    p_val.set_defaults(func=_cmd_validate)

    p_pre = sub.add_parser("preset", help="run a built-in figure preset")
    p_pre.add_argument("name", choices=sorted(PRESETS), help="preset name")
    p_pre.add_argument("--out", default=None, help="output directory")
    p_pre.add_argument("--seed", type=int, default=None)
    p_pre.add_argument("--jobs", type=int, default=1)
    p_pre.add_argument("--cutoff-override", type=int, default=None)
    p_pre.add_argument("--no-plots", action="store_true")
    p_pre.set_defaults(func=_cmd_preset)

    p_list = sub.add_parser("list-presets", help="list built-in presets")
    p_list.set_defaults(func=_cmd_list_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

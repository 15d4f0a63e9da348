"""Command-line driver.

Every subcommand reads an optional flat YAML/JSON config (``--config``);
each config key can be overridden by the flag of the same name.

    structcert generate --dataset_dir data
    structcert train    --dataset_dir data --model_path model.json
    structcert certify  --mode anisotropic --noise 0.02 0.45 --output_dir out
    structcert certify  --sweep --N 10000 --output_dir sweep_out
    structcert score    --output_dir sweep_out
    structcert report   --output_dir out
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import typing
from pathlib import Path

import yaml

from . import pipeline
from .engine import pareto_front
from .graph import InvalidInputError, ResourceLimitError
from .pipeline import ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4


_LIST_KEYS = {"noise": float, "r_max": int, "sweep_motif": float, "sweep_random": float}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat YAML or JSON file of config keys")
    hints = typing.get_type_hints(ExperimentConfig)
    for f in ExperimentConfig.fields():
        flag = f"--{f.name}"
        if f.name in _LIST_KEYS:
            parser.add_argument(flag, nargs="+", type=_LIST_KEYS[f.name], default=None)
        elif hints[f.name] is bool:
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, default=None)
        else:
            kind = int if hints[f.name] in (int, typing.Optional[int]) else \
                float if hints[f.name] is float else str
            parser.add_argument(flag, type=kind, default=None)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        if not isinstance(loaded, dict):
            raise InvalidInputError(f"{args.config}: expected a mapping of config keys")
        known = {f.name for f in ExperimentConfig.fields()}
        unknown = set(loaded) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for f in ExperimentConfig.fields():
        value = getattr(args, f.name, None)
        if value is not None:
            values[f.name] = value
    return ExperimentConfig(**values)


def cmd_generate(cfg: ExperimentConfig, args) -> None:
    root = pipeline.run_generate(cfg)
    print(f"wrote {cfg.train_size + cfg.val_size + cfg.test_size} graphs to {root}")


def cmd_train(cfg: ExperimentConfig, args) -> None:
    _, acc = pipeline.run_train(cfg)
    print("accuracy " + " ".join(f"{k}={v:.4f}" for k, v in acc.items()))


def cmd_certify(cfg: ExperimentConfig, args) -> None:
    if args.sweep:
        pipeline.run_sweep(cfg)
        print(f"sweep written under {Path(cfg.output_dir) / 'sweep'}")
        return
    out = pipeline.run_certify(cfg)
    s = out["summary"]
    print(f"{s['num_graphs']} graphs, smoothed accuracy {s['smoothed_accuracy']:.4f}, "
          f"abstained {s['abstained']}, score {s['score']}")


def cmd_score(cfg: ExperimentConfig, args) -> None:
    out = pipeline.run_score(cfg)
    table = out["table"]
    header = "p_motif\\p_random " + " ".join(f"{pr:>5g}" for pr in cfg.sweep_random)
    print(header)
    for pm in cfg.sweep_motif:
        print(f"{pm:>16g} " + " ".join(f"{table[(pm, pr)]:>5d}" for pr in cfg.sweep_random))
    print(f"best p = {out['best']} with score {table[out['best']]}")


def cmd_report(cfg: ExperimentConfig, args) -> None:
    out_dir = Path(cfg.output_dir)
    summary = json.loads((out_dir / "certified_ratio.json").read_text())
    ratio = pipeline.read_ratio_csv(out_dir / "certified_ratio.csv")
    full = pareto_front(ratio >= 1.0)
    majority = pareto_front(ratio > 0.5)
    report = {**summary, "ratio_at_origin": float(ratio.flat[0]),
              "pareto_all_certified": [list(p) for p in full],
              "pareto_majority_certified": [list(p) for p in majority]}
    metrics = Path(cfg.model_path).with_suffix(".metrics.json")
    if metrics.exists():
        report["base_accuracy"] = json.loads(metrics.read_text())["accuracy"]
    (out_dir / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    for key in ("mode", "noise", "N", "alpha", "num_graphs", "smoothed_accuracy", "abstained",
                "score", "base_accuracy", "pareto_all_certified", "pareto_majority_certified"):
        if key in report:
            print(f"{key}: {report[key]}")


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "certify": cmd_certify,
            "score": cmd_score, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structcert", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_config_flags(p)
        if name == "certify":
            p.add_argument("--sweep", action="store_true",
                           help="certify every (p_motif, p_random) of the sweep grid")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        COMMANDS[args.command](cfg, args)
    except (InvalidInputError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

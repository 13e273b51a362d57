"""
Command-Line Entry Point

    python -m local_learning train    --config run.toml --seed 7
    python -m local_learning pipeline --config run.toml
    python -m local_learning e2e      --config run.toml
    python -m local_learning cost     --L 101 --K 11 --eps 0.1 --beta-f 0.02
    python -m local_learning cost     --config run.toml          (verify against the model)
    python -m local_learning cka      --config run.toml
    python -m local_learning probe    --config run.toml
    python -m local_learning ablation --config run.toml

Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a run aborts.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from . import engine
from .components.cost.tools import calculate_costs
from .config import load_run_config
from .errors import UsageError, exit_code_for
from .settings import configure_logging

logger = logging.getLogger(__name__)

RUN_COMMANDS = {"train": "sequential", "pipeline": "pipeline", "e2e": "e2e"}

# CLI dest -> RunConfig key, for flags that override the config file
OVERRIDES = [
    "model", "output_dir", "seed", "timing", "eta_l", "eta_a", "epochs", "batch_size", "optimizer", "momentum",
    "weight_decay", "schedule", "alpha", "coupling_mode", "use_ema", "use_lb", "use_scalable", "queue_capacity",
    "deterministic", "dataset", "train_images", "train_labels", "test_images", "test_labels", "train_csv",
    "test_csv", "classes", "dim", "n", "noise", "limit_train", "limit_test", "normalization", "eval_batch",
]


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value run file (TOML) or a previous summary.json")
    parser.add_argument("--model", help="model description file")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--timing", action=argparse.BooleanOptionalAction, default=None,
                        help="record wall-clock times (metrics files are then no longer byte-reproducible)")
    parser.add_argument("--eta-l", dest="eta_l", type=float)
    parser.add_argument("--eta-a", dest="eta_a", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--optimizer", choices=["sgd_nesterov", "adam"])
    parser.add_argument("--momentum", type=float)
    parser.add_argument("--weight-decay", dest="weight_decay", type=float)
    parser.add_argument("--schedule", choices=["cosine", "constant"])
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--coupling-mode", dest="coupling_mode", choices=["literal", "convex"])
    parser.add_argument("--use-ema", dest="use_ema", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--use-lb", dest="use_lb", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--use-scalable", dest="use_scalable", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--queue-capacity", dest="queue_capacity", type=int)
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--dataset", choices=["idx", "csv", "synthetic"])
    parser.add_argument("--train-images", dest="train_images")
    parser.add_argument("--train-labels", dest="train_labels")
    parser.add_argument("--test-images", dest="test_images")
    parser.add_argument("--test-labels", dest="test_labels")
    parser.add_argument("--train-csv", dest="train_csv")
    parser.add_argument("--test-csv", dest="test_csv")
    parser.add_argument("--classes", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--noise", type=float)
    parser.add_argument("--limit-train", dest="limit_train", type=int)
    parser.add_argument("--limit-test", dest="limit_test", type=int)
    parser.add_argument("--normalization", choices=["none", "standardize"])
    parser.add_argument("--eval-batch", dest="eval_batch", type=int)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="local_learning", description="Coupled local learning engine")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for name, help_text in [
        ("train", "sequential local learning"),
        ("pipeline", "pipeline-parallel local learning"),
        ("e2e", "end-to-end backpropagation baseline"),
        ("cka", "layer-wise CKA against an end-to-end reference"),
        ("probe", "local vs end-to-end gradient gap per block"),
        ("ablation", "component ablation over several seeds"),
    ]:
        _add_run_flags(commands.add_parser(name, help=help_text))
    cost = commands.add_parser("cost", help="cost formulas, or their verification against a model")
    _add_run_flags(cost)
    cost.add_argument("--L", dest="L", type=int)
    cost.add_argument("--K", dest="K", type=int)
    cost.add_argument("--p-min", dest="p_min", type=float)
    cost.add_argument("--p-max", dest="p_max", type=float)
    cost.add_argument("--p-mean", dest="p_mean", type=float)
    cost.add_argument("--beta", type=float)
    cost.add_argument("--beta-f", dest="beta_f", type=float)
    cost.add_argument("--beta-a", dest="beta_a", type=float)
    cost.add_argument("--eps", type=float)
    cost.add_argument("--target", dest="rho_mem", type=float, help="memory ratio target")
    cost.add_argument("--json", action="store_true", help="print the report as JSON instead of a table")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in OVERRIDES if getattr(args, key, None) is not None}


def _finish(result: Dict[str, Any], show: Optional[List[str]] = None) -> int:
    if result.get("status") != "success":
        print(f"error: {result.get('error_message')}", file=sys.stderr)
        return exit_code_for(result.get("error_type", ""))
    for key in show or []:
        if key in result:
            print(f"{key}: {result[key]}")
    return 0


def _cost(args: argparse.Namespace) -> int:
    fields = {k: getattr(args, k) for k in ("L", "K", "p_min", "p_max", "p_mean", "beta", "beta_f", "beta_a", "eps", "rho_mem")}
    fields = {k: v for k, v in fields.items() if v is not None}
    if "L" in fields:
        result = calculate_costs(**fields)
    elif args.config or args.model:
        config = load_run_config(args.config, _overrides(args))
        result = engine.run_model_costs(config, eps=fields.get("eps", 0.1), rho_mem=fields.get("rho_mem", 0.25))
    else:
        raise UsageError("cost needs --L (closed form) or --config/--model (verification)")
    if result.get("status") == "success":
        print(json.dumps(result["report"], indent=2, sort_keys=True) if args.json else result["table"])
    return _finish(result)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        if args.command == "cost":
            return _cost(args)
        overrides = _overrides(args)
        if args.command in RUN_COMMANDS:
            overrides["mode"] = RUN_COMMANDS[args.command]
        config = load_run_config(args.config, overrides)
        if args.command in RUN_COMMANDS:
            return _finish(engine.run_training(config), ["metrics_path", "summary_path", "test_acc"])
        if args.command == "cka":
            return _finish(engine.run_cka(config), ["cka_path", "mean_cka"])
        if args.command == "probe":
            return _finish(engine.run_probe(config), ["probe_path", "bias"])
        return _finish(engine.run_ablation(config), ["ablation_path", "means"])
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(type(e).__name__)


if __name__ == "__main__":
    sys.exit(main())

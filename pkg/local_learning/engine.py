"""
Local Learning Engine - Run Composition

Wires the dataset readers, the model file, the trainers, the pipeline and the
analysis components into the run modes the CLI and the dashboard expose.
Every run function returns a status dictionary and writes its files into the
configured output directory.
"""

import json
import logging
import os
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .components.analysis.probes import gradient_bias_probe
from .components.analysis.similarity import layerwise_cka
from .components.blocks.model_file import ModelDescription, read_model_file, write_model_file
from .components.blocks.network import Network, build_network
from .components.cost.report import render_table
from .components.cost.verify import verify_against_model
from .components.data.dataset import DataSplit, Dataset
from .components.data.loader import load_split
from .components.pipeline.stats import write_stats_csv
from .components.pipeline.workers import run_pipeline
from .components.trainer.loop import MetricRow, evaluate, fit, write_metrics_csv
from .config import CouplingConfig, RunConfig
from .seeding import RandomStreams

logger = logging.getLogger(__name__)

# (use_ema, use_lb, use_scalable) rows of the component ablation
ABLATION_ROWS = [(False, False, False), (True, False, False), (True, True, False), (True, True, True)]


@dataclass
class RunContext:
    """Everything derived from a RunConfig before any training happens."""

    config: RunConfig
    streams: RandomStreams
    description: ModelDescription
    split: DataSplit

    @classmethod
    def prepare(cls, config: RunConfig) -> "RunContext":
        streams = RandomStreams(config.seed)
        description = read_model_file(config.model)
        split = load_split(config.dataset_spec(), streams.generator("data"))
        return cls(config=config, streams=streams, description=description, split=_adapt_inputs(split, description))

    def build(self, coupling: Optional[CouplingConfig] = None) -> Network:
        """A freshly initialized network; the same seed always gives the same backbone."""
        train = self.config.train_config()
        if coupling is not None:
            train = train.model_copy(update={"coupling": coupling})
        layers = self.description.build_layers(self.streams.generator("model-init"))
        return build_network(layers, self.description.K, self.split.classes, train, self.streams, self.split.input_shape)

    def eval_batch(self) -> Tuple[np.ndarray, np.ndarray]:
        """A fixed evaluation batch drawn from the test split (or train when there is no test data)."""
        source = self.split.test if len(self.split.test) >= 2 else self.split.train
        size = min(self.config.eval_batch, len(source))
        index = np.sort(self.streams.generator("eval").choice(len(source), size=size, replace=False))
        return source.x[index], source.y[index]


def _adapt_inputs(split: DataSplit, description: ModelDescription) -> DataSplit:
    """Flatten image inputs for models whose first layer is linear."""
    if description.entries[0][0] != "linear" or len(split.input_shape) == 1:
        return split

    def flat(data: Dataset) -> Dataset:
        return Dataset(data.x.reshape(data.x.shape[0], -1), data.y, data.classes)

    return DataSplit(train=flat(split.train), test=flat(split.test))


def _output_path(config: RunConfig, name: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


def _final_rows(rows: List[MetricRow]) -> List[Dict[str, Any]]:
    if not rows:
        return []
    last = max(r.epoch for r in rows)
    return [{"block": r.block, "loss": r.loss, "acc": r.acc} for r in rows if r.epoch == last]


def write_summary(config: RunConfig, payload: Dict[str, Any], name: str = "summary.json") -> str:
    """JSON summary; the config echo can be fed back with --config to repeat the run."""
    path = _output_path(config, name)
    document = dict(payload)
    document["config"] = config.model_dump(mode="json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _error(prefix: str, e: Exception) -> Dict[str, Any]:
    return {"status": "error", "error_message": f"{prefix}: {str(e)}", "error_type": str(type(e).__name__)}


def run_training(config: RunConfig) -> Dict[str, Any]:
    """
    Train in the configured mode and write metrics.csv and summary.json.

    Args:
        config: Validated run configuration (mode sequential, e2e or pipeline)

    Returns:
        Dictionary with the output paths, record counts and final accuracies
    """
    try:
        ctx = RunContext.prepare(config)
        network = ctx.build()
        train = config.train_config()
        started = time.perf_counter()
        summary: Dict[str, Any] = {"mode": config.mode, "K": network.K}
        if config.mode == "pipeline":
            result = run_pipeline(network, ctx.split.train, train, config.pipeline_config(network.K),
                                  ctx.streams, timing=config.timing)
            rows = result.rows
            test_acc = evaluate(network, ctx.split.test, config.eval_batch)
            if result.stats is not None:
                write_stats_csv(result.stats, _output_path(config, "stats.csv"))
                if config.timing:
                    summary["pipeline"] = result.stats.to_dict()
                else:
                    summary["pipeline"] = {"messages_per_edge": result.stats.messages_per_edge}
        else:
            outcome = fit(network, ctx.split.train, ctx.split.test, train, ctx.streams, mode=config.mode,
                          timing=config.timing, eval_batch=config.eval_batch)
            rows, test_acc = outcome.rows, outcome.test_acc
        metrics_path = _output_path(config, "metrics.csv")
        write_metrics_csv(rows, metrics_path)
        model_path = _output_path(config, "model.txt")
        write_model_file(ctx.description, model_path)
        summary.update({
            "train_records": len(ctx.split.train),
            "test_records": len(ctx.split.test),
            "final": _final_rows(rows),
            "test_acc": test_acc,
        })
        if config.timing:
            summary["wall_s"] = time.perf_counter() - started
        summary_path = write_summary(config, summary)
        logger.info("Run finished: test accuracy %s, outputs in %s", test_acc, config.output_dir)
        return {
            "status": "success",
            "metrics_path": metrics_path,
            "model_path": model_path,
            "summary_path": summary_path,
            "train_records": len(ctx.split.train),
            "test_records": len(ctx.split.test),
            "test_acc": test_acc,
            "rows": len(rows),
        }
    except Exception as e:
        return _error("Training failed", e)


def run_model_costs(config: RunConfig, eps: float = 0.1, rho_mem: float = 0.25) -> Dict[str, Any]:
    """
    Verify the cost formulas against the configured model on one evaluation batch.

    Args:
        config: Run configuration naming the model and dataset
        eps: FLOPs budget
        rho_mem: Memory target

    Returns:
        Dictionary with the report and its table; the report is also written as cost.json
    """
    try:
        ctx = RunContext.prepare(config)
        network = ctx.build()
        x, _ = ctx.eval_batch()
        report = verify_against_model(network, x, eps=eps, rho_mem=rho_mem)
        path = _output_path(config, "cost.json")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(report.to_json() + "\n")
        return {"status": "success", "report": report.to_dict(), "table": render_table(report), "report_path": path}
    except Exception as e:
        return _error("Cost verification failed", e)


def run_cka(config: RunConfig) -> Dict[str, Any]:
    """
    Train the local model and an end-to-end reference from the same seed, then compare them layer by layer.

    Args:
        config: Run configuration; mode is ignored

    Returns:
        Dictionary with the cka.csv path and the mean score
    """
    try:
        ctx = RunContext.prepare(config)
        train = config.train_config()
        local = ctx.build()
        fit(local, ctx.split.train, None, train, ctx.streams, mode="sequential", timing=config.timing)
        reference = ctx.build()
        fit(reference, ctx.split.train, None, train, ctx.streams, mode="e2e", timing=config.timing)
        x, _ = ctx.eval_batch()
        frame = layerwise_cka(local, reference, x)
        path = _output_path(config, "cka.csv")
        frame.to_csv(path, index=False, float_format="%.10g")
        return {"status": "success", "cka_path": path, "layers": frame["layer"].tolist(),
                "cka": frame["cka"].tolist(), "mean_cka": float(frame["cka"].mean())}
    except Exception as e:
        return _error("CKA analysis failed", e)


def run_probe(config: RunConfig) -> Dict[str, Any]:
    """
    Gradient-bias probe on a fixed evaluation batch after config.epochs epochs of local training.

    Args:
        config: Run configuration

    Returns:
        Dictionary with one value per block; also written as probe.csv
    """
    try:
        ctx = RunContext.prepare(config)
        network = ctx.build()
        if config.epochs:
            fit(network, ctx.split.train, None, config.train_config(), ctx.streams, timing=config.timing)
        x, y = ctx.eval_batch()
        values = gradient_bias_probe(network, x, y)
        path = _output_path(config, "probe.csv")
        pd.DataFrame({"block": range(len(values)), "bias": values}).to_csv(path, index=False, float_format="%.10g")
        return {"status": "success", "probe_path": path, "bias": values}
    except Exception as e:
        return _error("Gradient probe failed", e)


def run_ablation(config: RunConfig) -> Dict[str, Any]:
    """
    Test accuracy of the four component rows (none, EMA, EMA+LB, EMA+LB+scale) over several seeds.

    Args:
        config: Run configuration; seed is replaced by each of ablation_seeds

    Returns:
        Dictionary with ablation.csv path and the per-row mean accuracy
    """
    try:
        records = []
        for seed in config.ablation_seeds:
            seeded = config.model_copy(update={"seed": seed})
            ctx = RunContext.prepare(seeded)
            for use_ema, use_lb, use_scalable in ABLATION_ROWS:
                coupling = seeded.coupling().model_copy(
                    update={"use_ema": use_ema, "use_lb": use_lb, "use_scalable": use_scalable})
                network = ctx.build(coupling)
                outcome = fit(network, ctx.split.train, ctx.split.test, network.train, ctx.streams,
                              timing=False, eval_batch=config.eval_batch)
                records.append({"seed": seed, "ema": int(use_ema), "lb": int(use_lb),
                                "scalable": int(use_scalable), "test_acc": outcome.test_acc})
                logger.info("Ablation seed %d ema=%s lb=%s scalable=%s: %s", seed, use_ema, use_lb,
                            use_scalable, outcome.test_acc)
        frame = pd.DataFrame(records, columns=["seed", "ema", "lb", "scalable", "test_acc"])
        path = _output_path(config, "ablation.csv")
        frame.to_csv(path, index=False, float_format="%.10g")
        means = frame.groupby(["ema", "lb", "scalable"], sort=False)["test_acc"].mean().reset_index()
        return {"status": "success", "ablation_path": path, "rows": records, "means": means.to_dict(orient="records")}
    except Exception as e:
        return _error("Ablation failed", e)

"""
Training Loops

The sequential local trainer (block after block on every batch), the
end-to-end trainer it is compared against, and evaluation. Both trainers
share the optimizer, schedule, accountant and metrics rows, so a one-block
local run and an end-to-end run from the same seed follow the same
parameter trajectory.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ...config import DIVERGENCE_THRESHOLD, TrainConfig
from ...errors import DivergenceError
from ...seeding import RandomStreams
from ..blocks.coupling import ema_couple, local_forward, target_arrays, update_local
from ..blocks.network import LocalUnit, Network
from ..blocks.partition import run_layers
from ..data.dataset import Dataset
from ..tensor import Tensor, backward, current_tape, softmax_cross_entropy
from .memory import MemoryAccountant
from .optim import Optimizer, ParamGroup
from .schedule import epoch_lr

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["epoch", "block", "loss", "acc", "lr", "peak_scalars", "wall_ms"]


@dataclass
class MetricRow:
    epoch: int
    block: int
    loss: float
    acc: float
    lr: float
    peak_scalars: int
    wall_ms: float


@dataclass
class BlockTally:
    """Running sums for one block over an epoch."""

    loss_sum: float = 0.0
    correct: int = 0
    seen: int = 0
    wall: float = 0.0

    def add(self, loss: float, correct: int, count: int, seconds: float) -> None:
        self.loss_sum += loss * count
        self.correct += correct
        self.seen += count
        self.wall += seconds

    def row(self, epoch: int, block: int, lr: float, peak: int, timing: bool) -> MetricRow:
        seen = max(self.seen, 1)
        return MetricRow(epoch=epoch, block=block, loss=self.loss_sum / seen, acc=self.correct / seen,
                         lr=lr, peak_scalars=int(peak), wall_ms=round(self.wall * 1000.0, 3) if timing else 0.0)


@dataclass
class StepResult:
    output: Tensor
    loss: float
    correct: int


@dataclass
class TrainResult:
    rows: List[MetricRow] = field(default_factory=list)
    test_acc: Optional[float] = None

    def to_frame(self) -> pd.DataFrame:
        return metrics_frame(self.rows)


def metrics_frame(rows: Sequence[MetricRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows], columns=METRIC_COLUMNS)


def write_metrics_csv(rows: Sequence[MetricRow], path: str) -> None:
    metrics_frame(rows).to_csv(path, index=False, float_format="%.10g")


def check_divergence(loss: float, block: int, epoch: int) -> None:
    if not math.isfinite(loss) or loss > DIVERGENCE_THRESHOLD:
        logger.error("Loss diverged at epoch %d, block %d: %r", epoch, block, loss)
        raise DivergenceError(
            f"loss {loss!r} at epoch {epoch}, block {block} exceeds {DIVERGENCE_THRESHOLD:g} or is not finite; "
            f"lower the learning rates or check the input normalization"
        )


def local_step(unit: LocalUnit, x: Tensor, labels: np.ndarray, eta_l: float, eta_a: float,
               accountant: MemoryAccountant, epoch: int) -> StepResult:
    """Forward, local loss, backward and update for one unit on one batch (no EMA)."""
    tape = current_tape()
    tape.clear()
    out, logits = local_forward(unit, x, accountant)
    loss = softmax_cross_entropy(logits, labels)
    check_divergence(loss.item(), unit.index, epoch)
    backward(loss)
    update_local(unit, eta_l, eta_a)
    accountant.release_all()
    correct = int((logits.data.argmax(axis=1) == labels).sum())
    tape.clear()
    return StepResult(output=out, loss=loss.item(), correct=correct)


def rates(train: TrainConfig, epoch: int):
    """(backbone rate, auxiliary rate) for an epoch."""
    return (epoch_lr(train.schedule, epoch, train.epochs, train.eta_l),
            epoch_lr(train.schedule, epoch, train.epochs, train.aux_rate))


def train_epoch_sequential(network: Network, data: Dataset, train: TrainConfig, epoch: int,
                           streams: RandomStreams, timing: bool = True) -> List[MetricRow]:
    """One epoch of local learning; every batch runs through block 0 .. K-1 in order."""
    eta_l, eta_a = rates(train, epoch)
    tallies = [BlockTally() for _ in network.units]
    accountants = [MemoryAccountant() for _ in network.units]
    for xb, yb in data.batches(train.batch_size, streams.generator("shuffle", epoch)):
        h = Tensor(xb)
        for unit in network.units:
            started = time.perf_counter()
            result = local_step(unit, h, yb, eta_l, eta_a, accountants[unit.index], epoch)
            if unit.head is not None:
                ema_couple(unit.head, target_arrays(network.units[unit.index + 1]))
            tallies[unit.index].add(result.loss, result.correct, len(yb), time.perf_counter() - started)
            h = result.output
    rows = [t.row(epoch, j, eta_l, accountants[j].peak, timing) for j, t in enumerate(tallies)]
    for row in rows:
        logger.info("epoch %d block %d: loss %.4f acc %.4f lr %.5f", row.epoch, row.block, row.loss, row.acc, row.lr)
    return rows


def e2e_optimizer(network: Network) -> Optimizer:
    return Optimizer.from_config(network.train)


def train_epoch_e2e(network: Network, optimizer: Optimizer, data: Dataset, train: TrainConfig, epoch: int,
                    streams: RandomStreams, timing: bool = True) -> List[MetricRow]:
    """One epoch of ordinary backpropagation through the whole backbone; heads are unused."""
    eta_l, _ = rates(train, epoch)
    tape = current_tape()
    part = network.part
    params = network.backbone_parameters()
    tally = BlockTally()
    accountant = MemoryAccountant()
    for xb, yb in data.batches(train.batch_size, streams.generator("shuffle", epoch)):
        started = time.perf_counter()
        tape.clear()
        logits = run_layers(part, range(part.L), Tensor(xb), accountant, phase="network", within_block=False)
        loss = softmax_cross_entropy(logits, yb)
        check_divergence(loss.item(), 0, epoch)
        backward(loss)
        optimizer.step([ParamGroup("backbone", params, eta_l)])
        optimizer.zero_grad(params)
        accountant.release_all()
        tally.add(loss.item(), int((logits.data.argmax(axis=1) == yb).sum()), len(yb), time.perf_counter() - started)
        tape.clear()
    row = tally.row(epoch, 0, eta_l, accountant.peak, timing)
    logger.info("epoch %d end-to-end: loss %.4f acc %.4f lr %.5f", row.epoch, row.loss, row.acc, row.lr)
    return [row]


def predict(network: Network, x: np.ndarray, batch: int = 256) -> np.ndarray:
    """Class predictions of the full backbone."""
    tape = current_tape()
    part = network.part
    predictions = []
    for start in range(0, x.shape[0], batch):
        tape.clear()
        logits = run_layers(part, range(part.L), Tensor(x[start : start + batch]))
        predictions.append(logits.data.argmax(axis=1))
    tape.clear()
    return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)


def evaluate(network: Network, data: Dataset, batch: int = 256) -> Optional[float]:
    """Accuracy of the last block's logits; None for an empty split."""
    if len(data) == 0:
        return None
    return float(np.mean(predict(network, data.x, batch) == data.y))


def fit(network: Network, train_data: Dataset, test_data: Optional[Dataset], train: TrainConfig,
        streams: RandomStreams, mode: str = "sequential", timing: bool = True, eval_batch: int = 256) -> TrainResult:
    """Train for train.epochs epochs in 'sequential' or 'e2e' mode."""
    result = TrainResult()
    optimizer = e2e_optimizer(network) if mode == "e2e" else None
    for epoch in range(train.epochs):
        if optimizer is not None:
            result.rows.extend(train_epoch_e2e(network, optimizer, train_data, train, epoch, streams, timing))
        else:
            result.rows.extend(train_epoch_sequential(network, train_data, train, epoch, streams, timing))
    if test_data is not None:
        result.test_acc = evaluate(network, test_data, eval_batch)
    return result


def activation_trace(network: Network, x: np.ndarray, mode: str = "local") -> MemoryAccountant:
    """Peak retained activations for one batch, without touching parameters.

    In local mode each block and its head are live together and released
    before the next block runs; in e2e mode the whole backbone is live.
    """
    tape = current_tape()
    accountant = MemoryAccountant()
    h = Tensor(x)
    tape.clear()
    if mode == "e2e":
        run_layers(network.part, range(network.part.L), h, accountant, phase="network", within_block=False)
    else:
        for unit in network.units:
            h, _ = local_forward(unit, h, accountant)
            accountant.release_all()
    tape.clear()
    return accountant


def final_state(network: Network) -> Dict[str, np.ndarray]:
    """Named copies of every parameter, for trajectory comparisons."""
    state = {}
    for i, layer in enumerate(network.part.layers):
        for name, p in zip(("weight", "bias"), layer.params):
            state[f"layer{i}.{name}"] = p.data.copy()
    for j, head in enumerate(network.heads):
        for i, p in enumerate(head.mirror_params):
            state[f"head{j}.mirror{i}"] = p.data.copy()
        state[f"head{j}.lb_bias"] = head.bias.data.copy()
        state[f"head{j}.scale"] = head.scale.data.copy()
        for i, p in enumerate(head.projection_params):
            state[f"head{j}.projection{i}"] = p.data.copy()
    return state

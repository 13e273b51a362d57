"""
Pipeline Schedule

Slot s = 0 carries an all-zero priming batch that is forwarded but never
trained on; slot s >= 1 carries batch s - 1. Worker i handles slot t - i at
tick t, so an epoch of n batches on K workers takes n + K ticks. A worker
that trains on slot s couples its head with the snapshot its successor took
when that successor started slot s - 1.

The delayed-update oracle replays this schedule in one thread and is the
reference the threaded pipeline must match bit for bit.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...config import TrainConfig
from ...seeding import RandomStreams
from ..blocks.coupling import ema_couple
from ..blocks.network import LocalUnit, Network
from ..blocks.partition import run_block
from ..data.dataset import Dataset
from ..tensor import Tensor, current_tape, detach
from ..trainer.loop import BlockTally, MetricRow, StepResult, final_state, local_step, rates
from ..trainer.memory import MemoryAccountant

Batch = Tuple[np.ndarray, np.ndarray]


@dataclass
class TickEntry:
    tick: int
    worker: int
    slot: int

    @property
    def batch(self) -> Optional[int]:
        return self.slot - 1 if self.slot > 0 else None


@dataclass
class SlotOutcome:
    output: Tensor
    step: Optional[StepResult] = None


@dataclass
class OracleResult:
    rows: List[MetricRow] = field(default_factory=list)
    trajectory: List[Dict[str, np.ndarray]] = field(default_factory=list)
    ticks: List[TickEntry] = field(default_factory=list)


def tick_table(K: int, n: int) -> List[TickEntry]:
    """(tick, worker, slot) for every slot a worker processes in one epoch."""
    return [TickEntry(t, i, t - i) for t in range(n + K) for i in range(K) if 0 <= t - i <= n]


def epoch_batches(data: Dataset, train: TrainConfig, streams: RandomStreams, epoch: int) -> List[Batch]:
    return list(data.batches(train.batch_size, streams.generator("shuffle", epoch)))


def priming_batch(batches: Sequence[Batch]) -> np.ndarray:
    first = batches[0][0]
    return np.zeros_like(first)


def snapshot_needed(network: Network) -> bool:
    return network.train.coupling.use_ema


def process_slot(unit: LocalUnit, x: Tensor, labels: Optional[np.ndarray], slot: int, eta_l: float, eta_a: float,
                 accountant: MemoryAccountant, epoch: int,
                 fetch_snapshot: Callable[[], Sequence[np.ndarray]]) -> SlotOutcome:
    """What one worker does with one slot; shared by the oracle and the threaded workers."""
    if slot == 0:
        tape = current_tape()
        tape.clear()
        out = detach(run_block(unit.part, unit.index, x))
        tape.clear()
        return SlotOutcome(output=out)
    step = local_step(unit, x, labels, eta_l, eta_a, accountant, epoch)
    if unit.head is not None and unit.head.config.use_ema:
        ema_couple(unit.head, fetch_snapshot())
    return SlotOutcome(output=step.output, step=step)


def oracle_epoch(network: Network, data: Dataset, train: TrainConfig, epoch: int,
                 streams: RandomStreams) -> Tuple[List[MetricRow], List[TickEntry]]:
    K = network.K
    units = network.units
    batches = epoch_batches(data, train, streams, epoch)
    eta_l, eta_a = rates(train, epoch)
    tallies = [BlockTally() for _ in units]
    accountants = [MemoryAccountant() for _ in units]
    ticks: List[TickEntry] = []
    n = len(batches)
    if n == 0:
        return [t.row(epoch, j, eta_l, 0, False) for j, t in enumerate(tallies)], ticks
    dummy = priming_batch(batches)
    carry: List[Optional[Tuple[Tensor, Optional[np.ndarray]]]] = [None] * K
    for tick in range(n + K):
        snapshots = [[p.data.copy() for p in units[i + 1].first_layer_params()] for i in range(K - 1)]
        next_carry: List[Optional[Tuple[Tensor, Optional[np.ndarray]]]] = [None] * K
        for i in range(K):
            slot = tick - i
            if not 0 <= slot <= n:
                continue
            if i == 0:
                x, labels = (Tensor(dummy), None) if slot == 0 else (Tensor(batches[slot - 1][0]), batches[slot - 1][1])
            else:
                x, labels = carry[i - 1]
            outcome = process_slot(units[i], x, labels, slot, eta_l, eta_a, accountants[i], epoch,
                                   lambda i=i: snapshots[i])
            if outcome.step is not None:
                tallies[i].add(outcome.step.loss, outcome.step.correct, len(labels), 0.0)
            next_carry[i] = (outcome.output, labels)
            ticks.append(TickEntry(tick, i, slot))
        carry = next_carry
    rows = [t.row(epoch, j, eta_l, accountants[j].peak, False) for j, t in enumerate(tallies)]
    return rows, ticks


def delayed_update_oracle(network: Network, data: Dataset, train: TrainConfig, streams: RandomStreams) -> OracleResult:
    """Single-thread emulation of the pipeline schedule for train.epochs epochs."""
    result = OracleResult()
    for epoch in range(train.epochs):
        rows, ticks = oracle_epoch(network, data, train, epoch, streams)
        result.rows.extend(rows)
        result.ticks.extend(ticks)
        result.trajectory.append(final_state(network))
    return result

"""
Pipeline Workers

One thread per local unit. Worker i reads inQ[i] and writes inQ[i + 1]
(wired once per epoch); worker 0 primes its own queue with the zero batch and
feeds the next data batch each time it takes one. Parameter snapshots travel
on a separate queue from worker i + 1 back to worker i. In deterministic mode
every worker also waits on a barrier after each tick; the result is the same
in both modes because every value a worker reads is fixed by queue order.
"""

import logging
import queue
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ...config import PipelineConfig, TrainConfig
from ...errors import ConfigurationError, InternalError, PipelineError
from ...seeding import RandomStreams
from ...settings import queue_timeout
from ..blocks.network import LocalUnit, Network
from ..data.dataset import Dataset
from ..tensor import Tensor
from ..trainer.loop import BlockTally, MetricRow, final_state, rates
from ..trainer.memory import MemoryAccountant
from .messages import ParamSnapshot, PipelineMessage
from .schedule import Batch, epoch_batches, priming_batch, process_slot, snapshot_needed
from .stats import PipelineStats, PipelineTrace, SlotEvent, throughput_report

logger = logging.getLogger(__name__)

POLL_SECONDS = 0.05


class WorkerAborted(PipelineError):
    """Raised in the surviving workers after another worker failed."""


@dataclass
class EpochChannels:
    inputs: List[queue.Queue]
    snapshots: List[queue.Queue]

    @classmethod
    def wire(cls, K: int, capacity: int) -> "EpochChannels":
        return cls(inputs=[queue.Queue(maxsize=capacity) for _ in range(K)],
                   snapshots=[queue.Queue(maxsize=capacity) for _ in range(K - 1)])

    def drained(self) -> bool:
        return all(q.empty() for q in self.inputs + self.snapshots)


@dataclass
class WorkerReport:
    index: int
    tally: BlockTally
    accountant: MemoryAccountant
    events: List[SlotEvent] = field(default_factory=list)
    pushed: Counter = field(default_factory=Counter)
    popped: Counter = field(default_factory=Counter)


class PipelineWorker:
    def __init__(self, unit: LocalUnit, K: int, channels: EpochChannels, batches: List[Batch], epoch: int,
                 train: TrainConfig, config: PipelineConfig, barrier: Optional[threading.Barrier],
                 abort: threading.Event, snapshots_on: bool, origin: float):
        self.unit = unit
        self.index = unit.index
        self.K = K
        self.channels = channels
        self.batches = batches
        self.n = len(batches)
        self.epoch = epoch
        self.eta_l, self.eta_a = rates(train, epoch)
        self.config = config
        self.barrier = barrier
        self.abort = abort
        self.snapshots_on = snapshots_on
        self.origin = origin
        self.timeout = queue_timeout()
        self.report = WorkerReport(index=self.index, tally=BlockTally(), accountant=MemoryAccountant())

    # --- queue access with deadlock detection ---

    def _get(self, q: queue.Queue, what: str):
        deadline = time.monotonic() + self.timeout
        while True:
            if self.abort.is_set():
                raise WorkerAborted(f"worker {self.index} stopped: another worker failed")
            try:
                return q.get(timeout=POLL_SECONDS)
            except queue.Empty:
                if time.monotonic() > deadline:
                    logger.error("Worker %d waited %.1fs for %s", self.index, self.timeout, what)
                    raise PipelineError(f"worker {self.index} waited {self.timeout:.1f}s for {what}; the pipeline is deadlocked")

    def _put(self, q: queue.Queue, item, what: str) -> None:
        deadline = time.monotonic() + self.timeout
        while True:
            if self.abort.is_set():
                raise WorkerAborted(f"worker {self.index} stopped: another worker failed")
            try:
                q.put(item, timeout=POLL_SECONDS)
                return
            except queue.Full:
                if time.monotonic() > deadline:
                    logger.error("Worker %d could not deliver %s for %.1fs", self.index, what, self.timeout)
                    raise PipelineError(f"worker {self.index} could not deliver {what} within {self.timeout:.1f}s")

    def _tick_barrier(self) -> None:
        if self.barrier is None:
            return
        try:
            self.barrier.wait()
        except threading.BrokenBarrierError as e:
            if self.abort.is_set():
                raise WorkerAborted(f"worker {self.index} stopped: another worker failed") from e
            raise PipelineError(f"worker {self.index} timed out at the tick barrier") from e

    # --- edges ---

    def _receive(self) -> PipelineMessage:
        message = self._get(self.channels.inputs[self.index], "its next input")
        self.report.popped["feed->0" if self.index == 0 else f"{self.index - 1}->{self.index}"] += 1
        return message

    def _feed(self, message: PipelineMessage) -> None:
        self._put(self.channels.inputs[0], message, f"batch {message.seq}")
        self.report.pushed["feed->0"] += 1

    def _publish_snapshot(self, slot: int) -> None:
        if self.index == 0 or not self.snapshots_on or slot > self.n - 1:
            return
        snapshot = ParamSnapshot.of(self.unit.first_layer_params(), seq=slot, epoch=self.epoch)
        self._put(self.channels.snapshots[self.index - 1], snapshot, f"snapshot {slot}")
        self.report.pushed[f"snapshot {self.index}->{self.index - 1}"] += 1

    def _fetch_snapshot(self, slot: int):
        snapshot = self._get(self.channels.snapshots[self.index], f"the snapshot for slot {slot}")
        self.report.popped[f"snapshot {self.index + 1}->{self.index}"] += 1
        if snapshot.seq != slot - 1 or snapshot.epoch != self.epoch:
            raise InternalError(f"worker {self.index} expected snapshot {slot - 1}, got {snapshot.seq}")
        return snapshot.arrays

    # --- work ---

    def _process(self, message: PipelineMessage, slot: int) -> None:
        if message.sentinel or message.seq != slot or message.epoch != self.epoch:
            raise InternalError(
                f"worker {self.index} expected slot {slot} of epoch {self.epoch}, "
                f"got {'sentinel' if message.sentinel else message.seq} of epoch {message.epoch}"
            )
        started = time.perf_counter()
        if self.index == 0:
            if slot < self.n:
                x, labels = self.batches[slot]
                self._feed(PipelineMessage.carry(Tensor(x), labels, slot + 1, self.epoch))
            else:
                self._feed(PipelineMessage.end_of_epoch(self.n + 1, self.epoch))
        self._publish_snapshot(slot)
        outcome = process_slot(self.unit, message.tensor(), message.labels, slot, self.eta_l, self.eta_a,
                               self.report.accountant, self.epoch, lambda: self._fetch_snapshot(slot))
        if outcome.step is not None:
            self.report.tally.add(outcome.step.loss, outcome.step.correct, len(message.labels),
                                  time.perf_counter() - started)
        if self.index < self.K - 1:
            self._put(self.channels.inputs[self.index + 1],
                      PipelineMessage.carry(outcome.output, message.labels, slot, self.epoch), f"slot {slot}")
            self.report.pushed[f"{self.index}->{self.index + 1}"] += 1
        self.report.events.append(SlotEvent(self.index, slot, started - self.origin, time.perf_counter() - self.origin))

    def _finish(self) -> None:
        message = self._receive()
        if not message.sentinel or message.seq != self.n + 1:
            raise InternalError(f"worker {self.index} expected the end-of-epoch marker, got slot {message.seq}")
        if self.index < self.K - 1:
            self._put(self.channels.inputs[self.index + 1], message, "the end-of-epoch marker")
            self.report.pushed[f"{self.index}->{self.index + 1}"] += 1

    def run(self) -> WorkerReport:
        logger.debug("Worker %d starting epoch %d", self.index, self.epoch)
        try:
            if self.barrier is not None:
                for tick in range(self.n + self.K):
                    slot = tick - self.index
                    if 0 <= slot <= self.n:
                        self._process(self._receive(), slot)
                    self._tick_barrier()
            else:
                for slot in range(self.n + 1):
                    self._process(self._receive(), slot)
            self._finish()
        except BaseException:
            self.abort.set()
            if self.barrier is not None:
                self.barrier.abort()
            raise
        logger.debug("Worker %d finished epoch %d", self.index, self.epoch)
        return self.report


@dataclass
class PipelineResult:
    rows: List[MetricRow] = field(default_factory=list)
    traces: List[PipelineTrace] = field(default_factory=list)
    trajectory: List[Dict] = field(default_factory=list)
    stats: Optional[PipelineStats] = None


def _reconcile(reports: List[WorkerReport], channels: EpochChannels) -> Dict[str, int]:
    pushed: Counter = Counter()
    popped: Counter = Counter()
    for report in reports:
        pushed.update(report.pushed)
        popped.update(report.popped)
    if pushed != popped or not channels.drained():
        raise PipelineError(f"message counts do not reconcile: pushed {dict(pushed)}, popped {dict(popped)}")
    return dict(pushed)


def run_pipeline_epoch(network: Network, data: Dataset, train: TrainConfig, config: PipelineConfig, epoch: int,
                       streams: RandomStreams, timing: bool = True) -> Tuple[List[MetricRow], PipelineTrace]:
    K = network.K
    batches = epoch_batches(data, train, streams, epoch)
    eta_l, _ = rates(train, epoch)
    if not batches:
        return [BlockTally().row(epoch, j, eta_l, 0, timing) for j in range(K)], PipelineTrace(K, 0, 0.0)
    channels = EpochChannels.wire(K, config.queue_capacity)
    channels.inputs[0].put(PipelineMessage.carry(Tensor(priming_batch(batches)), None, 0, epoch))
    barrier = threading.Barrier(K, timeout=queue_timeout()) if config.deterministic else None
    abort = threading.Event()
    origin = time.perf_counter()
    workers = [
        PipelineWorker(unit, K, channels, batches, epoch, train, config, barrier, abort, snapshot_needed(network), origin)
        for unit in network.units
    ]
    workers[0].report.pushed["feed->0"] += 1
    errors: List[BaseException] = []
    reports: List[WorkerReport] = []
    with ThreadPoolExecutor(max_workers=K, thread_name_prefix="pipeline-worker") as pool:
        futures = [pool.submit(worker.run) for worker in workers]
        for future in futures:
            try:
                reports.append(future.result())
            except Exception as e:
                errors.append(e)
    wall = time.perf_counter() - origin
    if errors:
        raise next((e for e in errors if not isinstance(e, WorkerAborted)), errors[0])
    messages = _reconcile(reports, channels)
    logger.debug("Epoch %d messages reconciled: %s", epoch, messages)
    rows = [r.tally.row(epoch, r.index, eta_l, r.accountant.peak, timing) for r in reports]
    for row in rows:
        logger.info("epoch %d block %d: loss %.4f acc %.4f lr %.5f", row.epoch, row.block, row.loss, row.acc, row.lr)
    events = [e for r in reports for e in r.events]
    return rows, PipelineTrace(K=K, batches=len(batches), wall=wall, events=events, messages=messages)


def run_pipeline(network: Network, data: Dataset, train: TrainConfig, config: PipelineConfig,
                 streams: RandomStreams, timing: bool = True) -> PipelineResult:
    """Pipeline-parallel local learning for train.epochs epochs; the epoch join is the barrier between epochs."""
    if network.K < 2:
        raise ConfigurationError("pipeline mode needs at least two blocks; use sequential mode for K=1")
    if config.workers != network.K:
        raise ConfigurationError(f"{config.workers} workers configured for a {network.K}-block network")
    result = PipelineResult()
    for epoch in range(train.epochs):
        rows, trace = run_pipeline_epoch(network, data, train, config, epoch, streams, timing)
        result.rows.extend(rows)
        result.traces.append(trace)
        result.trajectory.append(final_state(network))
    if any(t.events for t in result.traces):
        result.stats = throughput_report(result.traces)
    return result

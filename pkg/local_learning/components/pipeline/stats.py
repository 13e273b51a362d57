"""
Pipeline Throughput

Per-worker timing traces and the report derived from them: busy and idle
fractions, fill and drain time, message counts per edge and the utilization
speedup, summed worker busy time over wall time.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd
import psutil

from ...errors import UsageError

STATS_COLUMNS = ["worker", "busy_frac", "idle_frac"]


@dataclass
class SlotEvent:
    worker: int
    slot: int
    start: float
    end: float

    @property
    def seconds(self) -> float:
        return self.end - self.start


@dataclass
class PipelineTrace:
    """One epoch: events are relative to the epoch start."""

    K: int
    batches: int
    wall: float
    events: List[SlotEvent] = field(default_factory=list)
    messages: Dict[str, int] = field(default_factory=dict)

    def for_worker(self, worker: int) -> List[SlotEvent]:
        return [e for e in self.events if e.worker == worker]


@dataclass
class WorkerStats:
    worker: int
    busy_frac: float
    idle_frac: float
    slots: int


@dataclass
class PipelineStats:
    workers: List[WorkerStats]
    ideal_busy_frac: float
    fill_s: float
    drain_s: float
    wall_s: float
    busy_s: float
    utilization_speedup: float
    messages_per_edge: Dict[str, int]
    host_cores: Optional[int]
    physical_cores: Optional[int]

    def to_dict(self) -> Dict:
        return asdict(self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{k: getattr(w, k) for k in STATS_COLUMNS} for w in self.workers], columns=STATS_COLUMNS)


def ideal_busy_fraction(n: int, K: int) -> float:
    """n / (n + K - 1): the share of pipeline ticks a worker is busy with equal block costs."""
    return n / (n + K - 1)


def throughput_report(traces: Sequence[PipelineTrace]) -> PipelineStats:
    if not traces or not any(t.events for t in traces):
        raise UsageError("throughput report needs a completed run with a timing trace")
    K = traces[0].K
    wall = sum(t.wall for t in traces)
    busy = [sum(e.seconds for t in traces for e in t.for_worker(i)) for i in range(K)]
    workers = [
        WorkerStats(worker=i, busy_frac=busy[i] / wall if wall > 0 else 0.0,
                    idle_frac=1.0 - busy[i] / wall if wall > 0 else 1.0,
                    slots=sum(len(t.for_worker(i)) for t in traces))
        for i in range(K)
    ]
    fill = drain = 0.0
    for trace in traces:
        last_worker = [e for e in trace.for_worker(K - 1) if e.slot > 0]
        first_worker = trace.for_worker(0)
        if last_worker:
            fill += min(e.start for e in last_worker)
        if first_worker:
            drain += trace.wall - max(e.end for e in first_worker)
    messages: Dict[str, int] = {}
    for trace in traces:
        for edge, count in trace.messages.items():
            messages[edge] = messages.get(edge, 0) + count
    n = sum(t.batches for t in traces) / len(traces)
    return PipelineStats(
        workers=workers,
        ideal_busy_frac=ideal_busy_fraction(n, K) if n > 0 else 0.0,
        fill_s=fill,
        drain_s=drain,
        wall_s=wall,
        busy_s=sum(busy),
        utilization_speedup=1.0 if K == 1 else (sum(busy) / wall if wall > 0 else 0.0),
        messages_per_edge=messages,
        host_cores=psutil.cpu_count(logical=True),
        physical_cores=psutil.cpu_count(logical=False),
    )


def write_stats_csv(stats: PipelineStats, path: str) -> None:
    stats.to_frame().to_csv(path, index=False, float_format="%.6f")

"""
Activation Memory Accounting

Counts retained activation scalars (not bytes, not parameters). The engine
reports every activation-unit output it keeps for backward and releases a
phase when its backward is done. Head projection logits are tracked as a
separate surplus, outside the peak that the memory model predicts.
"""

from collections import Counter, deque
from typing import Deque, Tuple

from ...errors import InternalError

SURPLUS_PHASES = frozenset({"projection"})
LOG_LENGTH = 4096


class MemoryAccountant:
    def __init__(self):
        self.live_scalars = 0
        self.peak = 0
        self.surplus_live = 0
        self.surplus_peak = 0
        self.by_phase: Counter = Counter()
        self.log: Deque[Tuple[str, int, int]] = deque(maxlen=LOG_LENGTH)

    def account(self, phase: str, delta_scalars: int) -> None:
        """Adjust the live count by delta (positive on allocation, negative on release)."""
        delta = int(delta_scalars)
        if self.by_phase[phase] + delta < 0:
            raise InternalError(f"phase '{phase}' released {-delta} scalars but holds {self.by_phase[phase]}")
        self.by_phase[phase] += delta
        if phase in SURPLUS_PHASES:
            self.surplus_live += delta
            self.surplus_peak = max(self.surplus_peak, self.surplus_live)
        else:
            self.live_scalars += delta
            if self.live_scalars < 0:
                raise InternalError(f"live activation count went negative ({self.live_scalars})")
            self.peak = max(self.peak, self.live_scalars)
        self.log.append((phase, delta, self.live_scalars))

    def release_phase(self, phase: str) -> None:
        held = self.by_phase.get(phase, 0)
        if held:
            self.account(phase, -held)

    def release_all(self) -> None:
        for phase in [p for p, held in self.by_phase.items() if held]:
            self.release_phase(phase)

    def reset_peak(self) -> None:
        self.peak = self.live_scalars
        self.surplus_peak = self.surplus_live

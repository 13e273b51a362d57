"""
Pipeline Messages

Everything that crosses a worker boundary is a value copy: activations as
serialized bytes, labels and parameter snapshots as copied arrays.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ...errors import InternalError
from ..tensor import Tensor, from_bytes, to_bytes


@dataclass(frozen=True)
class PipelineMessage:
    seq: int
    epoch: int
    activation: bytes = b""
    labels: Optional[np.ndarray] = None
    sentinel: bool = False

    @classmethod
    def carry(cls, tensor: Tensor, labels: Optional[np.ndarray], seq: int, epoch: int) -> "PipelineMessage":
        """Pack a detached activation; anything still attached to a gradient is refused."""
        if tensor.requires_grad:
            raise InternalError("a parameter-like tensor cannot cross a queue")
        if not np.all(np.isfinite(tensor.data)):
            raise InternalError(f"non-finite activation in message {seq}")
        return cls(seq=seq, epoch=epoch, activation=to_bytes(tensor),
                   labels=None if labels is None else np.array(labels, copy=True))

    @classmethod
    def end_of_epoch(cls, seq: int, epoch: int) -> "PipelineMessage":
        return cls(seq=seq, epoch=epoch, sentinel=True)

    def tensor(self) -> Tensor:
        return from_bytes(self.activation)


@dataclass(frozen=True)
class ParamSnapshot:
    """Copy of a block's first-layer parameters, taken when it starts a slot."""

    seq: int
    epoch: int
    arrays: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def of(cls, params, seq: int, epoch: int) -> "ParamSnapshot":
        return cls(seq=seq, epoch=epoch, arrays=[p.data.copy() for p in params])

"""
Network Assembly

A Network is a partitioned layer list plus K - 1 auxiliary heads. Each block
and its head form one LocalUnit, the ownership unit that can be handed to a
pipeline worker; the unit also owns the optimizer state of its parameters.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ...config import TrainConfig
from ...errors import ConfigurationError
from ...seeding import RandomStreams
from ..tensor import Tensor
from ..trainer.optim import Optimizer
from .heads import AuxiliaryHead, build_aux_head
from .layers import LayerSpec, trace_shapes
from .partition import BlockPartition, partition


@dataclass
class LocalUnit:
    index: int
    part: BlockPartition
    head: Optional[AuxiliaryHead]
    optimizer: Optimizer
    steps: int = 0

    @property
    def is_last(self) -> bool:
        return self.index == self.part.K - 1

    @property
    def block_params(self) -> List[Tensor]:
        return self.part.block_params(self.index)

    def parameters(self) -> List[Tensor]:
        return self.block_params + (self.head.parameters() if self.head is not None else [])

    def first_layer_params(self) -> List[Tensor]:
        """Parameters of this block's first layer: what the previous head mirrors."""
        return self.part.first_layer(self.index).params


class Network:
    def __init__(self, part: BlockPartition, heads: Sequence[AuxiliaryHead], classes: int, train: TrainConfig):
        if len(heads) != part.K - 1:
            raise ConfigurationError(f"a {part.K}-block network needs {part.K - 1} heads, got {len(heads)}")
        self.part = part
        self.heads = list(heads)
        self.classes = classes
        self.train = train
        self.units = [
            LocalUnit(index=j, part=part, head=self.heads[j] if j < part.K - 1 else None,
                      optimizer=Optimizer.from_config(train))
            for j in range(part.K)
        ]

    @property
    def K(self) -> int:
        return self.part.K

    def parameters(self) -> List[Tensor]:
        return [p for unit in self.units for p in unit.parameters()]

    def backbone_parameters(self) -> List[Tensor]:
        return self.part.parameters()


def build_network(layers: Sequence[LayerSpec], K: int, classes: int, train: TrainConfig,
                  streams: RandomStreams, input_shape: Optional[Tuple[int, ...]] = None) -> Network:
    """Partition the layers, check the output width and attach heads."""
    part = partition(layers, K)
    if input_shape is not None:
        out_shape = trace_shapes(part.layers, (1,) + tuple(input_shape))[-1]
        if len(out_shape) != 2 or out_shape[1] != classes:
            raise ConfigurationError(f"network output {out_shape} does not produce {classes} class logits")
    heads = [build_aux_head(part, j, classes, train.coupling, streams.generator("heads", j)) for j in range(K - 1)]
    return Network(part, heads, classes, train)

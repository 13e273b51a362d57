"""
Parameter and FLOP Counting

Exact integer counts from instantiated tensors. FLOPs come from the
per-operation tallies the tensor engine keeps while count_ops() is active;
a matmul of [m x k] by [k x n] costs 2mkn, elementwise ops cost one per
output element.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..blocks.heads import AuxiliaryHead
from ..blocks.partition import BlockPartition
from ..tensor import Tensor, count_ops, current_tape


@dataclass
class ParamCounts:
    layer_params: List[int]
    block_params: List[int]
    parametric_layers: List[int]
    mirror_params: List[int] = field(default_factory=list)
    bias_params: List[int] = field(default_factory=list)
    projection_params: List[int] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.block_params)

    @property
    def head_overhead(self) -> int:
        """Mirror plus bias parameters: the head cost the cost model describes."""
        return sum(self.mirror_params) + sum(self.bias_params)

    @property
    def profile(self) -> List[int]:
        """p_i of every parametric layer."""
        return [self.layer_params[i] for i in self.parametric_layers]


def count_params(part: BlockPartition, heads: Sequence[AuxiliaryHead] = ()) -> ParamCounts:
    layer_params = [layer.param_count() for layer in part.layers]
    return ParamCounts(
        layer_params=layer_params,
        block_params=[sum(layer_params[i] for i in part.span(j)) for j in range(part.K)],
        parametric_layers=[i for i, layer in enumerate(part.layers) if layer.parametric],
        mirror_params=[sum(p.size for p in head.mirror_params) for head in heads],
        bias_params=[head.bias.size if head.config.use_lb else 0 for head in heads],
        projection_params=[sum(p.size for p in head.projection_params) for head in heads],
    )


@dataclass
class FlopCounts:
    layers: List[Counter]
    mirror: List[Counter] = field(default_factory=list)
    bias: List[Counter] = field(default_factory=list)
    projection: List[Counter] = field(default_factory=list)

    @staticmethod
    def _total(counters: Sequence[Counter]) -> int:
        return int(sum(sum(c.values()) for c in counters))

    @property
    def backbone(self) -> int:
        return self._total(self.layers)

    @property
    def head_overhead(self) -> int:
        return self._total(self.mirror) + self._total(self.bias)

    @property
    def projection_total(self) -> int:
        return self._total(self.projection)

    def by_op(self) -> Dict[str, int]:
        total: Counter = Counter()
        for counter in self.layers + self.mirror + self.bias + self.projection:
            total.update(counter)
        return dict(total)


def count_flops(part: BlockPartition, input_shape: Tuple[int, ...], heads: Sequence[AuxiliaryHead] = ()) -> FlopCounts:
    """Forward FLOPs of every layer and head part for an input batch of the given shape."""
    tape = current_tape()
    tape.clear()
    x = Tensor(np.zeros(input_shape))
    counts = FlopCounts(layers=[])
    boundaries = set(part.boundaries[1:-1])
    for index, layer in enumerate(part.layers):
        with count_ops() as counter:
            x = layer.forward(x)
        counts.layers.append(counter)
        if index + 1 in boundaries and heads:
            head = heads[part.boundaries.index(index + 1) - 1]
            with count_ops() as mirror:
                h = head.mirror.forward(x)
            with count_ops() as bias:
                h = head.apply_bias(h)
            with count_ops() as projection:
                head.classify(h)
            counts.mirror.append(mirror)
            counts.bias.append(bias)
            counts.projection.append(projection)
        tape.clear()
    tape.clear()
    return counts

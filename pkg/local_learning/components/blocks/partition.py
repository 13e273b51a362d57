"""
Block Partitioning

Splits an ordered layer list into K contiguous, gradient-isolated spans.
Blocks are indexed from 0 in code; block j's successor is block j + 1.
"""

from dataclasses import dataclass
from typing import List, Sequence

from ...errors import ConfigurationError
from ..tensor import Tensor
from .layers import LayerSpec


@dataclass
class BlockPartition:
    layers: List[LayerSpec]
    boundaries: List[int]

    @property
    def K(self) -> int:
        return len(self.boundaries) - 1

    @property
    def L(self) -> int:
        return len(self.layers)

    @property
    def B(self) -> float:
        return self.L / self.K

    def span(self, j: int) -> range:
        if not 0 <= j < self.K:
            raise IndexError(f"block {j} out of range for K={self.K}")
        return range(self.boundaries[j], self.boundaries[j + 1])

    def sizes(self) -> List[int]:
        return [len(self.span(j)) for j in range(self.K)]

    def block_layers(self, j: int) -> List[LayerSpec]:
        return [self.layers[i] for i in self.span(j)]

    def first_layer(self, j: int) -> LayerSpec:
        return self.layers[self.boundaries[j]]

    def block_params(self, j: int) -> List[Tensor]:
        return [p for layer in self.block_layers(j) for p in layer.params]

    def parameters(self) -> List[Tensor]:
        return [p for layer in self.layers for p in layer.params]

    def ends_unit(self, index: int, within_block: bool = True) -> bool:
        """Whether layer `index` closes an activation unit.

        A unit is a maximal run of layers that starts at a parametric layer
        (or at a block start) and ends before the next parametric layer; its
        output is what the memory accountant retains for backward.
        """
        if index == self.L - 1:
            return True
        if within_block and index + 1 in self.boundaries:
            return True
        return self.layers[index + 1].parametric

    def describe(self) -> List[List[str]]:
        return [[layer.describe() for layer in self.block_layers(j)] for j in range(self.K)]


def partition(layers: Sequence[LayerSpec], K: int) -> BlockPartition:
    """Balanced contiguous spans; earlier blocks take the extra layer on a remainder."""
    layers = list(layers)
    L = len(layers)
    if L == 0:
        raise ConfigurationError("cannot partition an empty layer list")
    if not 1 <= K <= L:
        raise ConfigurationError(f"block count K={K} must satisfy 1 <= K <= L={L}")
    base, remainder = divmod(L, K)
    boundaries = [0]
    for j in range(K):
        boundaries.append(boundaries[-1] + base + (1 if j < remainder else 0))
    return BlockPartition(layers=layers, boundaries=boundaries)


def run_layers(part: BlockPartition, indices: range, x: Tensor, accountant=None,
               phase: str = "block", within_block: bool = True) -> Tensor:
    """Forward through a contiguous layer range, reporting unit outputs to the accountant."""
    for index in indices:
        x = part.layers[index].forward(x)
        if accountant is not None and part.ends_unit(index, within_block):
            accountant.account(phase, x.size)
    return x


def run_block(part: BlockPartition, j: int, x: Tensor, accountant=None) -> Tensor:
    return run_layers(part, part.span(j), x, accountant, phase=f"block{j}")


def parametric_count(layers: Sequence[LayerSpec]) -> int:
    """Number of parametric layers, the layer count L of the cost model."""
    return sum(1 for layer in layers if layer.parametric)

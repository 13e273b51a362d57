"""
Auxiliary Heads

A head supervises block j from the output of block j. It mirrors the first
layer of block j + 1 (same parameter shapes, initialised as a copy), adds a
learnable bias scaled by a learnable scalar, applies ReLU and projects to
class logits. Conv mirrors are mean-pooled over the full spatial extent
before the projection.
"""

from typing import List, Optional

import numpy as np

from ...config import SCALE_EPS, CouplingConfig
from ...errors import ConstructionError
from ..tensor import Tensor, add, flatten, mean_pool2d, relu, scale_by
from .layers import Conv2d, LayerSpec, Linear, copy_layer
from .partition import BlockPartition


class AuxiliaryHead:
    def __init__(self, mirror: LayerSpec, classes: int, config: CouplingConfig,
                 rng: Optional[np.random.Generator] = None):
        if not mirror.parametric:
            raise ConstructionError(f"a head mirror must be parametric, got {mirror.kind}")
        self.mirror = mirror
        self.config = config
        self.pooled = isinstance(mirror, Conv2d)
        features = mirror.out_channels if self.pooled else mirror.out_features
        self.bias = Tensor(np.zeros(features), requires_grad=True, name="lb_bias")
        self.scale = Tensor(np.ones(1), requires_grad=True, name="scale")
        self.projection = Linear(features, classes, rng)

    # --- forward pieces ---

    def apply_bias(self, h: Tensor) -> Tensor:
        if not self.config.use_lb:
            return h
        bias = scale_by(self.bias, self.scale) if self.config.use_scalable else self.bias
        return add(h, bias)

    def classify(self, h: Tensor, accountant=None) -> Tensor:
        h = relu(h)
        if self.pooled:
            h = flatten(mean_pool2d(h, h.shape[2:]))
        logits = self.projection.forward(h)
        if accountant is not None:
            accountant.account("projection", logits.size)
        return logits

    def forward(self, x: Tensor, accountant=None, phase: str = "head") -> Tensor:
        h = self.mirror.forward(x)
        if accountant is not None:
            accountant.account(phase, h.size)
            if self.config.use_lb:
                accountant.account(phase, self.bias.size)
        return self.classify(self.apply_bias(h), accountant)

    # --- parameter groups ---

    @property
    def mirror_params(self) -> List[Tensor]:
        return self.mirror.params

    def coupled_params(self) -> List[Tensor]:
        """(gamma_j, b_j): the parameters whose step is scaled by (2 - s_j)."""
        return self.mirror_params + ([self.bias] if self.config.use_lb else [])

    @property
    def projection_params(self) -> List[Tensor]:
        return self.projection.params

    def parameters(self) -> List[Tensor]:
        return self.mirror_params + [self.bias, self.scale] + self.projection_params

    @property
    def scale_value(self) -> float:
        return self.scale.item()

    def aux_factor(self) -> float:
        """(2 - s_j), fixed at 1 when the scale is disabled."""
        if not self.config.use_scalable:
            return 1.0
        return 2.0 - self.scale_value

    def clamp_scale(self) -> None:
        np.clip(self.scale.data, SCALE_EPS, 2.0 - SCALE_EPS, out=self.scale.data)

    def beta(self) -> float:
        """||b_j||_0 / ||gamma_j||_0."""
        return self.bias.size / sum(p.size for p in self.mirror_params)


def build_aux_head(part: BlockPartition, j: int, classes: int, config: CouplingConfig,
                   rng: Optional[np.random.Generator] = None) -> AuxiliaryHead:
    """Head for block j, mirroring the first layer of block j + 1."""
    if not 0 <= j < part.K - 1:
        raise ConstructionError(f"heads exist for blocks 0..{part.K - 2}, got {j}")
    target = part.first_layer(j + 1)
    if not target.parametric:
        raise ConstructionError(
            f"block {j + 1} starts with '{target.kind}', but a head needs a linear or conv2d layer to mirror; "
            f"reorder layers or change K so every block after the first starts with a parametric layer"
        )
    mirror = copy_layer(target)
    for copied, source in zip(mirror.params, target.params):
        if copied.shape != source.shape:
            raise ConstructionError(f"mirror shape {copied.shape} differs from target {source.shape}")
    return AuxiliaryHead(mirror, classes, config, rng)

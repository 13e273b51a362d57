"""
Layer Specifications

The layer kinds a network may contain. Parametric layers (linear, conv2d) own
a weight and a bias tensor; the others are pure functions of their input.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ...errors import ConfigurationError, ShapeError
from ..tensor import Tensor, add, conv2d, flatten, matmul, mean_pool2d, relu, transpose
from ..tensor.autodiff import conv_output_size

Shape = Tuple[int, ...]


class LayerSpec:
    """Base class: one line of a model description."""

    kind = "layer"
    parametric = False

    @property
    def params(self) -> List[Tensor]:
        return []

    def param_count(self) -> int:
        return sum(p.size for p in self.params)

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def output_shape(self, input_shape: Shape) -> Shape:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{self.describe()}>"


def _uniform(rng: np.random.Generator, shape: Shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(LayerSpec):
    kind = "linear"
    parametric = True

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None):
        if in_features < 1 or out_features < 1:
            raise ConfigurationError(f"linear dimensions must be positive, got {in_features}, {out_features}")
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.weight = Tensor(_uniform(rng, (out_features, in_features), in_features), requires_grad=True, name="weight")
        self.bias = Tensor(_uniform(rng, (out_features,), in_features), requires_grad=True, name="bias")

    @property
    def params(self) -> List[Tensor]:
        return [self.weight, self.bias]

    def forward(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"linear({self.in_features}, {self.out_features}) got input {x.shape}")
        return add(matmul(x, transpose(self.weight)), self.bias)

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 2 or input_shape[1] != self.in_features:
            raise ShapeError(f"linear({self.in_features}, {self.out_features}) got input {input_shape}")
        return (input_shape[0], self.out_features)

    def describe(self) -> str:
        return f"linear {self.in_features} {self.out_features}"


class Conv2d(LayerSpec):
    kind = "conv2d"
    parametric = True

    def __init__(self, in_channels: int, out_channels: int, kh: int, kw: int, stride: int = 1,
                 rng: Optional[np.random.Generator] = None):
        if min(in_channels, out_channels, kh, kw, stride) < 1:
            raise ConfigurationError("conv2d channels, kernel and stride must be positive")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kh = kh
        self.kw = kw
        self.stride = stride
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kh * kw
        self.weight = Tensor(_uniform(rng, (out_channels, in_channels, kh, kw), fan_in), requires_grad=True, name="weight")
        self.bias = Tensor(_uniform(rng, (out_channels,), fan_in), requires_grad=True, name="bias")

    @property
    def params(self) -> List[Tensor]:
        return [self.weight, self.bias]

    def forward(self, x: Tensor) -> Tensor:
        return add(conv2d(x, self.weight, self.stride), self.bias)

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 4 or input_shape[1] != self.in_channels:
            raise ShapeError(f"{self.describe()} got input {input_shape}")
        n, _, h, w = input_shape
        if self.kh > h or self.kw > w:
            raise ShapeError(f"kernel {(self.kh, self.kw)} larger than input {(h, w)}")
        return (n, self.out_channels, conv_output_size(h, self.kh, self.stride), conv_output_size(w, self.kw, self.stride))

    def describe(self) -> str:
        return f"conv2d {self.in_channels} {self.out_channels} {self.kh} {self.kw} {self.stride}"


class ReLU(LayerSpec):
    kind = "relu"

    def forward(self, x: Tensor) -> Tensor:
        return relu(x)

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)


class Flatten(LayerSpec):
    kind = "flatten"

    def forward(self, x: Tensor) -> Tensor:
        return flatten(x)

    def output_shape(self, input_shape: Shape) -> Shape:
        return (input_shape[0], int(np.prod(input_shape[1:])))


class MeanPool2d(LayerSpec):
    kind = "mean_pool2d"

    def __init__(self, window: int):
        if window < 1:
            raise ConfigurationError(f"pool window must be positive, got {window}")
        self.window = window

    def forward(self, x: Tensor) -> Tensor:
        return mean_pool2d(x, self.window)

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 4 or self.window > min(input_shape[2:]):
            raise ShapeError(f"mean_pool2d {self.window} got input {input_shape}")
        n, c, h, w = input_shape
        return (n, c, h // self.window, w // self.window)

    def describe(self) -> str:
        return f"mean_pool2d {self.window}"


def copy_layer(layer: LayerSpec) -> LayerSpec:
    """A parametric layer of the same shape holding deep copies of the parameters."""
    if isinstance(layer, Linear):
        clone = Linear(layer.in_features, layer.out_features)
    elif isinstance(layer, Conv2d):
        clone = Conv2d(layer.in_channels, layer.out_channels, layer.kh, layer.kw, layer.stride)
    else:
        raise ConfigurationError(f"only parametric layers can be copied, got {layer.kind}")
    for target, source in zip(clone.params, layer.params):
        target.data = source.data.copy()
    return clone


def trace_shapes(layers: Sequence[LayerSpec], input_shape: Shape) -> List[Shape]:
    """Output shape of every layer for a given input shape."""
    shapes = []
    shape = tuple(input_shape)
    for layer in layers:
        shape = layer.output_shape(shape)
        shapes.append(shape)
    return shapes

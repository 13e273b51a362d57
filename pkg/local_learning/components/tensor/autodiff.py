"""
Tensor Engine

Dense float64 tensors recorded on a per-thread tape for reverse-mode
differentiation. Parameters are leaf tensors (requires_grad=True, never on a
tape); every op whose inputs are tracked appends one node to the tape of the
calling thread, so parents always precede children.

Gradients accumulate: backward adds into leaf .grad buffers and the optimizer
clears them. Calling backward twice on the same loss therefore doubles every
leaf gradient exactly.
"""

import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ...errors import InputError, InternalError, ShapeError, UsageError
from ...settings import debug_enabled

BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
Scalar = Union[float, int, "Tensor"]

_DEBUG = debug_enabled()
_local = threading.local()


def set_debug(enabled: bool) -> None:
    """Toggle the per-op finiteness assertion."""
    global _DEBUG
    _DEBUG = bool(enabled)


class Tensor:
    """A dense real array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "node_id", "tape", "generation", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        if any(dim <= 0 for dim in array.shape):
            raise ShapeError(f"tensor dimensions must be positive, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InputError("tensor values must be finite")
        self._init(array, requires_grad, name)

    def _init(self, array: np.ndarray, requires_grad: bool, name: Optional[str]) -> None:
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node_id: Optional[int] = None
        self.tape: Optional["Tape"] = None
        self.generation = -1
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        tensor = cls.__new__(cls)
        tensor._init(array, False, None)
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def grad_or_zeros(self) -> np.ndarray:
        return np.zeros_like(self.data) if self.grad is None else self.grad

    def zero_grad(self) -> None:
        self.grad = None

    def is_tracked(self) -> bool:
        if self.requires_grad:
            return True
        return self.node_id is not None and self.tape is not None and self.generation == self.tape.generation

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass
class TapeNode:
    op: str
    inputs: Tuple[Tensor, ...]
    backward: Optional[BackwardRule]


class Tape:
    """Ordered op records for one execution context."""

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.frozen = False
        self.generation = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs: Sequence[Tensor], backward: Optional[BackwardRule], output: Tensor) -> int:
        if self.frozen:
            raise UsageError(f"cannot record '{op}' while backward is running")
        node_id = len(self.nodes)
        self.nodes.append(TapeNode(op=op, inputs=tuple(inputs), backward=backward))
        output.node_id = node_id
        output.tape = self
        output.generation = self.generation
        return node_id

    def clear(self) -> None:
        """Drop every record; tensors from earlier generations become untracked."""
        if self.frozen:
            raise UsageError("cannot clear the tape during backward")
        self.nodes = []
        self.generation += 1

    def _owns(self, tensor: Tensor) -> bool:
        return tensor.node_id is not None and tensor.tape is self and tensor.generation == self.generation

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not self._owns(loss):
            raise UsageError("loss was not recorded on the current tape")
        self.frozen = True
        try:
            pending = {loss.node_id: np.ones_like(loss.data)}
            for node_id in range(loss.node_id, -1, -1):
                grad = pending.pop(node_id, None)
                if grad is None:
                    continue
                node = self.nodes[node_id]
                if not node.inputs:
                    continue
                input_grads = node.backward(grad)
                if len(input_grads) != len(node.inputs):
                    raise InternalError(f"backward of '{node.op}' returned {len(input_grads)} grads for {len(node.inputs)} inputs")
                for tensor, input_grad in zip(node.inputs, input_grads):
                    if input_grad is None:
                        continue
                    if input_grad.shape != tensor.shape:
                        raise InternalError(f"'{node.op}' produced grad {input_grad.shape} for input {tensor.shape}")
                    if self._owns(tensor):
                        previous = pending.get(tensor.node_id)
                        pending[tensor.node_id] = input_grad if previous is None else previous + input_grad
                    elif tensor.requires_grad:
                        tensor.grad = input_grad.copy() if tensor.grad is None else tensor.grad + input_grad
        finally:
            self.frozen = False


def current_tape() -> Tape:
    """The tape of the calling thread, created on first use."""
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


@contextmanager
def count_ops() -> Iterator[Counter]:
    """Tally FLOPs per op name for everything executed on this thread inside the block."""
    previous = getattr(_local, "counter", None)
    counter: Counter = Counter()
    _local.counter = counter
    try:
        yield counter
    finally:
        _local.counter = previous


def _count(op: str, flops: int) -> None:
    counter = getattr(_local, "counter", None)
    if counter is not None:
        counter[op] += int(flops)


def _result(op: str, array: np.ndarray, inputs: Sequence[Tensor], backward: BackwardRule, flops: int = 0) -> Tensor:
    if _DEBUG and not np.all(np.isfinite(array)):
        raise InputError(f"non-finite values after '{op}'")
    _count(op, flops)
    out = Tensor._wrap(array)
    if any(t.is_tracked() for t in inputs):
        tape = current_tape()
        for t in inputs:
            if t.node_id is not None and t.tape is not None and t.tape is not tape and t.generation == t.tape.generation:
                raise UsageError(f"'{op}' mixes tensors from different execution contexts")
        tape.record(op, inputs, backward, out)
    return out


# --- Ops ---

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs [m x k] @ [k x n], got {a.shape} @ {b.shape}")
    m, k = a.shape
    n = b.shape[1]

    def backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return _result("matmul", a.data @ b.data, (a, b), backward, flops=2 * m * k * n)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got {a.shape}")
    return _result("transpose", a.data.T.copy(), (a,), lambda g: (g.T.copy(),))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum, or a per-feature bias add when b is 1-D over axis 1 of a."""
    if a.shape == b.shape:
        return _result("add", a.data + b.data, (a, b), lambda g: (g, g), flops=a.size)
    if b.data.ndim == 1 and a.data.ndim >= 2 and a.shape[1] == b.shape[0]:
        view = (1, b.shape[0]) + (1,) * (a.data.ndim - 2)
        axes = tuple(i for i in range(a.data.ndim) if i != 1)

        def backward(g: np.ndarray):
            return g, g.sum(axis=axes)

        return _result("add", a.data + b.data.reshape(view), (a, b), backward, flops=a.size)
    raise ShapeError(f"add needs equal shapes or a bias over axis 1, got {a.shape} + {b.shape}")


def scale_by(x: Tensor, s: Scalar) -> Tensor:
    """Multiply by a scalar; a single-element tensor scale also receives a gradient."""
    if isinstance(s, Tensor):
        if s.size != 1:
            raise ShapeError(f"scale must have one element, got {s.shape}")
        factor = s.data.reshape(-1)[0]

        def backward(g: np.ndarray):
            return g * factor, np.array(np.sum(g * x.data)).reshape(s.shape)

        return _result("scale", x.data * factor, (x, s), backward, flops=x.size)
    factor = float(s)
    return _result("scale", x.data * factor, (x,), lambda g: (g * factor,), flops=x.size)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g: np.ndarray):
        return (g * mask,)

    return _result("relu", np.where(mask, x.data, 0.0), (x,), backward, flops=x.size)


def flatten(x: Tensor) -> Tensor:
    if x.data.ndim < 2:
        raise ShapeError(f"flatten needs a batch axis, got {x.shape}")
    shape = x.shape
    return _result("flatten", x.data.reshape(shape[0], -1), (x,), lambda g: (g.reshape(shape),))


def _pair(value) -> Tuple[int, int]:
    if isinstance(value, int):
        return value, value
    first, second = value
    return int(first), int(second)


def mean_pool2d(x: Tensor, window) -> Tensor:
    """Non-overlapping average pooling; trailing rows/columns that do not fill a window are dropped."""
    wh, ww = _pair(window)
    if x.data.ndim != 4:
        raise ShapeError(f"mean_pool2d needs [n x c x h x w], got {x.shape}")
    n, c, h, w = x.shape
    if wh < 1 or ww < 1 or wh > h or ww > w:
        raise ShapeError(f"pool window {(wh, ww)} does not fit input {(h, w)}")
    ho, wo = h // wh, w // ww
    cropped = x.data[:, :, : ho * wh, : wo * ww]
    out = cropped.reshape(n, c, ho, wh, wo, ww).mean(axis=(3, 5))

    def backward(g: np.ndarray):
        spread = np.repeat(np.repeat(g / (wh * ww), wh, axis=2), ww, axis=3)
        grad = np.zeros_like(x.data)
        grad[:, :, : ho * wh, : wo * ww] = spread
        return (grad,)

    return _result("mean_pool2d", out, (x,), backward, flops=cropped.size)


def conv_output_size(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1


def conv2d(x: Tensor, k: Tensor, stride: int = 1) -> Tensor:
    """Valid cross-correlation of [n x c x h x w] with [o x c x kh x kw]."""
    if x.data.ndim != 4 or k.data.ndim != 4 or x.shape[1] != k.shape[1]:
        raise ShapeError(f"conv2d needs [n x c x h x w] and [o x c x kh x kw], got {x.shape} and {k.shape}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    n, c, h, w = x.shape
    o, _, kh, kw = k.shape
    if kh > h or kw > w:
        raise ShapeError(f"kernel {(kh, kw)} larger than input {(h, w)}")
    ho, wo = conv_output_size(h, kh, stride), conv_output_size(w, kw, stride)
    windows = sliding_window_view(x.data, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.einsum("nchwij,ocij->nohw", windows, k.data)

    def backward(g: np.ndarray):
        grad_k = np.einsum("nchwij,nohw->ocij", windows, g)
        grad_x = np.zeros_like(x.data)
        for i in range(kh):
            for j in range(kw):
                grad_x[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += np.einsum(
                    "nohw,oc->nchw", g, k.data[:, :, i, j]
                )
        return grad_x, grad_k

    return _result("conv2d", out, (x, k), backward, flops=2 * n * o * ho * wo * c * kh * kw)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of integer labels under softmax(logits)."""
    if logits.data.ndim != 2:
        raise ShapeError(f"logits must be [n x c], got {logits.shape}")
    n, classes = logits.shape
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != n:
        raise ShapeError(f"{labels.shape[0]} labels for {n} rows of logits")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise InputError(f"labels must lie in [0, {classes})")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1)
    rows = np.arange(n)
    loss = np.mean(np.log(total) - shifted[rows, labels])
    probs = exp / total[:, None]

    def backward(g: np.ndarray):
        grad = probs.copy()
        grad[rows, labels] -= 1.0
        return (grad * (g.reshape(-1)[0] / n),)

    return _result("cross_entropy", np.array(loss), (logits,), backward, flops=4 * logits.size)


def detach(x: Tensor) -> Tensor:
    """Value copy whose tape record has no gradient parents."""
    out = Tensor._wrap(x.data.copy())
    if x.is_tracked():
        current_tape().record("detach", (), None, out)
    return out


def backward(loss: Tensor) -> None:
    """Run reverse-mode differentiation of a scalar loss on the current tape."""
    if loss.tape is not None and loss.tape is not current_tape():
        raise UsageError("loss belongs to another execution context")
    current_tape().backward(loss)


# --- Transfer between execution contexts ---

def to_bytes(x: Tensor) -> bytes:
    """Serialize values (not gradients or tape links) bit-exactly."""
    header = np.array([x.data.ndim, *x.shape], dtype="<i8").tobytes()
    return header + np.ascontiguousarray(x.data, dtype="<f8").tobytes()


def from_bytes(payload: bytes) -> Tensor:
    ndim = int(np.frombuffer(payload[:8], dtype="<i8")[0])
    shape = tuple(int(d) for d in np.frombuffer(payload[8 : 8 * (ndim + 1)], dtype="<i8"))
    data = np.frombuffer(payload[8 * (ndim + 1) :], dtype="<f8")
    if data.size != int(np.prod(shape, dtype=np.int64)):
        raise InternalError(f"serialized tensor holds {data.size} values for shape {shape}")
    return Tensor._wrap(data.reshape(shape).astype(np.float64))

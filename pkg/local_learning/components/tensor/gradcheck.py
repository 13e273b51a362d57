"""Central finite-difference checks for the tensor engine."""

from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .autodiff import (
    Tensor,
    add,
    backward,
    conv2d,
    current_tape,
    flatten,
    matmul,
    mean_pool2d,
    relu,
    scale_by,
    softmax_cross_entropy,
    transpose,
)

Case = Tuple[str, Callable[[], Tensor], List[Tensor]]


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-5) -> np.ndarray:
    """d fn() / d tensor by central differences, perturbing tensor.data in place."""
    tape = current_tape()
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        tape.clear()
        plus = fn().item()
        flat[i] = original - h
        tape.clear()
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    tape.clear()
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def gradient_check(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-5) -> Dict[str, float]:
    """Max relative error between tape gradients and finite differences, per input.

    Every input must be a leaf with requires_grad=True; fn must rebuild the graph
    from them on each call and return a single-element tensor.
    """
    tape = current_tape()
    tape.clear()
    for tensor in inputs:
        tensor.zero_grad()
    backward(fn())
    analytic = [t.grad_or_zeros().copy() for t in inputs]
    tape.clear()
    errors = {}
    for index, (tensor, grad) in enumerate(zip(inputs, analytic)):
        key = tensor.name or f"input{index}"
        errors[key] = relative_error(grad, numerical_gradient(fn, tensor, h))
    return errors


def _leaf(rng: np.random.Generator, *shape: int, name: str) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True, name=name)


def _weighted_sum(x: Tensor, w: np.ndarray) -> Tensor:
    """Scalar <x, w> built from tape ops, so every output element gets a distinct gradient."""
    flat = flatten(x) if x.data.ndim > 2 else x
    weights = Tensor(w.reshape(flat.shape[-1], 1))
    rows = matmul(flat, weights)
    ones = Tensor(np.ones((1, rows.shape[0])))
    return matmul(ones, rows)


def random_cases(rng: np.random.Generator) -> List[Case]:
    """One small random instance of every differentiable op, each reduced to a scalar."""
    cases: List[Case] = []
    m, k, n = rng.integers(1, 5, size=3)

    a, b = _leaf(rng, m, k, name="a"), _leaf(rng, k, n, name="b")
    w = rng.standard_normal(n)
    cases.append(("matmul", lambda: _weighted_sum(matmul(a, b), w), [a, b]))

    t = _leaf(rng, m, k, name="t")
    wt = rng.standard_normal(m)
    cases.append(("transpose", lambda: _weighted_sum(transpose(t), wt), [t]))

    p, q = _leaf(rng, m, n, name="p"), _leaf(rng, m, n, name="q")
    cases.append(("add", lambda: _weighted_sum(add(p, q), w), [p, q]))

    x4 = _leaf(rng, 2, 3, 4, 4, name="x")
    bias = _leaf(rng, 3, name="bias")
    w4 = rng.standard_normal(3 * 16)
    cases.append(("add_bias", lambda: _weighted_sum(add(x4, bias), w4), [x4, bias]))

    v, s = _leaf(rng, m, n, name="v"), _leaf(rng, 1, name="s")
    cases.append(("scale", lambda: _weighted_sum(scale_by(v, s), w), [v, s]))

    z = rng.standard_normal((m, n))
    r = Tensor(np.sign(z) * (0.1 + np.abs(z)),
               requires_grad=True, name="r")
    cases.append(("relu", lambda: _weighted_sum(relu(r), w), [r]))

    pool_x = _leaf(rng, 2, 2, 5, 4, name="pool_x")
    w_pool = rng.standard_normal(2 * 2 * 2)
    cases.append(("mean_pool2d", lambda: _weighted_sum(mean_pool2d(pool_x, 2), w_pool), [pool_x]))

    stride = int(rng.integers(1, 3))
    cx, ck = _leaf(rng, 2, 2, 5, 5, name="conv_x"), _leaf(rng, 3, 2, 2, 3, name="kernel")
    ho, wo = (5 - 2) // stride + 1, (5 - 3) // stride + 1
    w_conv = rng.standard_normal(3 * ho * wo)
    cases.append(("conv2d", lambda: _weighted_sum(conv2d(cx, ck, stride), w_conv), [cx, ck]))

    logits = _leaf(rng, m, n + 1, name="logits")
    labels = rng.integers(0, n + 1, size=m)
    cases.append(("cross_entropy", lambda: softmax_cross_entropy(logits, labels), [logits]))
    return cases

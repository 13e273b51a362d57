"""Tensor engine with reverse-mode differentiation."""

from .autodiff import (
    Tape,
    Tensor,
    add,
    backward,
    conv2d,
    count_ops,
    current_tape,
    detach,
    flatten,
    from_bytes,
    matmul,
    mean_pool2d,
    relu,
    scale_by,
    set_debug,
    softmax_cross_entropy,
    to_bytes,
    transpose,
)
from .gradcheck import gradient_check, numerical_gradient, random_cases, relative_error

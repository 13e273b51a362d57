"""
Optimizers

Nesterov SGD and Adam, both with decoupled weight decay. Parameters are
updated in groups so one optimizer can apply different rates to the backbone,
the coupled head parameters, the projection and the scale.

Update rules (per parameter p with gradient g, rate lr, decay wd):

    decay:     p <- p - lr * wd * p                      (skipped when wd == 0)
    nesterov:  v <- mu * v + g;  p <- p - lr * (g + mu * v)
    adam:      t <- t + 1
               m <- b1 * m + (1 - b1) * g
               v <- b2 * v + (1 - b2) * g * g
               p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
"""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np

from ...errors import InternalError
from ..tensor import Tensor


@dataclass
class ParamGroup:
    name: str
    params: List[Tensor]
    lr: float
    weight_decay: Optional[float] = None


@dataclass
class OptimizerState:
    """Per-parameter buffers; shapes mirror the parameter."""

    velocity: Optional[np.ndarray] = None
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    step: int = 0


def _check_shapes(param: np.ndarray, grad: np.ndarray, *buffers: Optional[np.ndarray]) -> None:
    for array in (grad, *buffers):
        if array is not None and array.shape != param.shape:
            raise InternalError(f"optimizer buffer {array.shape} does not match parameter {param.shape}")


def _decay(param: np.ndarray, lr: float, weight_decay: float) -> np.ndarray:
    if weight_decay == 0.0:
        return param
    return param - lr * weight_decay * param


def sgd_nesterov_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState, lr: float,
                      momentum: float, weight_decay: float) -> np.ndarray:
    """One Nesterov step; returns the new parameter array and updates state in place."""
    _check_shapes(param, grad, state.velocity)
    param = _decay(param, lr, weight_decay)
    velocity = grad.copy() if state.velocity is None else momentum * state.velocity + grad
    state.velocity = velocity
    state.step += 1
    return param - lr * (grad + momentum * velocity)


def adam_step(param: np.ndarray, grad: np.ndarray, state: OptimizerState, lr: float,
              beta1: float, beta2: float, eps: float, weight_decay: float) -> np.ndarray:
    _check_shapes(param, grad, state.m, state.v)
    param = _decay(param, lr, weight_decay)
    state.step += 1
    m = (1.0 - beta1) * grad if state.m is None else beta1 * state.m + (1.0 - beta1) * grad
    v = (1.0 - beta2) * grad * grad if state.v is None else beta2 * state.v + (1.0 - beta2) * grad * grad
    state.m, state.v = m, v
    m_hat = m / (1.0 - beta1 ** state.step)
    v_hat = v / (1.0 - beta2 ** state.step)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps)


class Optimizer:
    """Holds per-parameter state for the parameters it has stepped."""

    def __init__(self, kind: Literal["sgd_nesterov", "adam"] = "sgd_nesterov", momentum: float = 0.9,
                 weight_decay: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.kind = kind
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state: Dict[int, OptimizerState] = {}

    @classmethod
    def from_config(cls, train) -> "Optimizer":
        return cls(kind=train.optimizer, momentum=train.momentum, weight_decay=train.weight_decay,
                   beta1=train.beta1, beta2=train.beta2, eps=train.eps)

    def state_for(self, param: Tensor) -> OptimizerState:
        return self.state.setdefault(id(param), OptimizerState())

    def step(self, groups: Sequence[ParamGroup]) -> None:
        """Update every parameter that has a gradient; parameters without one are skipped."""
        for group in groups:
            wd = self.weight_decay if group.weight_decay is None else group.weight_decay
            for param in group.params:
                if param.grad is None:
                    continue
                state = self.state_for(param)
                if self.kind == "adam":
                    param.data = adam_step(param.data, param.grad, state, group.lr,
                                           self.beta1, self.beta2, self.eps, wd)
                else:
                    param.data = sgd_nesterov_step(param.data, param.grad, state, group.lr, self.momentum, wd)

    @staticmethod
    def zero_grad(params: Sequence[Tensor]) -> None:
        for param in params:
            param.zero_grad()

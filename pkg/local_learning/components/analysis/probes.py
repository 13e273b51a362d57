"""
Gradient Probes

Compare the gradient a block receives from its local loss with the gradient
the same parameters would receive from end-to-end backpropagation of the
global loss, on identical weights and batch. Also checks gradient isolation
between blocks.
"""

from typing import Dict, List

import numpy as np

from ...errors import UndefinedScoreError
from ..blocks.coupling import local_forward
from ..blocks.network import Network
from ..blocks.partition import run_block, run_layers
from ..tensor import Tensor, backward, current_tape, detach, softmax_cross_entropy


def _collect(params) -> np.ndarray:
    return np.concatenate([p.grad_or_zeros().reshape(-1) for p in params])


def _clear(network: Network) -> None:
    for p in network.parameters():
        p.zero_grad()


def end_to_end_gradients(network: Network, x: np.ndarray, y: np.ndarray) -> List[np.ndarray]:
    """Flattened global-loss gradient of each block's parameters."""
    tape = current_tape()
    tape.clear()
    _clear(network)
    logits = run_layers(network.part, range(network.part.L), Tensor(x), within_block=False)
    backward(softmax_cross_entropy(logits, y))
    grads = [_collect(unit.block_params) for unit in network.units]
    _clear(network)
    tape.clear()
    return grads


def local_gradients(network: Network, x: np.ndarray, y: np.ndarray) -> List[np.ndarray]:
    """Flattened local-loss gradient of each block's parameters; nothing is updated."""
    tape = current_tape()
    grads = []
    h = Tensor(x)
    for unit in network.units:
        tape.clear()
        _clear(network)
        out, logits = local_forward(unit, h, None)
        backward(softmax_cross_entropy(logits, y))
        grads.append(_collect(unit.block_params))
        h = out
    _clear(network)
    tape.clear()
    return grads


def gradient_bias_probe(network: Network, x: np.ndarray, y: np.ndarray) -> List[float]:
    """||g_local - g_e2e|| / ||g_e2e|| per block.

    The last block's local loss is the global loss, so its value measures 0;
    a block whose gradients agree exactly scores 0 even when both vanish.
    """
    e2e = end_to_end_gradients(network, x, y)
    local = local_gradients(network, x, y)
    values = []
    for j in range(network.K):
        gap = float(np.linalg.norm(local[j] - e2e[j]))
        if gap == 0.0:
            values.append(0.0)
            continue
        scale = np.linalg.norm(e2e[j])
        if scale == 0.0:
            raise UndefinedScoreError(f"block {j} has a zero end-to-end gradient on this batch")
        values.append(gap / float(scale))
    return values


def isolation_probe(network: Network, x: np.ndarray, y: np.ndarray) -> Dict[int, List[int]]:
    """For each block j, the indices of other blocks whose parameters got a nonzero gradient from loss j."""
    tape = current_tape()
    leaks: Dict[int, List[int]] = {}
    inputs = []
    h = Tensor(x)
    for unit in network.units:
        inputs.append(h)
        tape.clear()
        h = detach(run_block(network.part, unit.index, h))
    for unit in network.units:
        tape.clear()
        _clear(network)
        _, logits = local_forward(unit, Tensor(inputs[unit.index].data), None)
        backward(softmax_cross_entropy(logits, y))
        leaks[unit.index] = [
            other.index for other in network.units
            if other.index != unit.index and any(p.grad is not None and np.any(p.grad != 0) for p in other.block_params)
        ]
    _clear(network)
    tape.clear()
    return leaks

"""
Block Coupling

The three per-step operations of a local unit: the isolated forward, the
local update with the (2 - s_j) scaled auxiliary rate, and the EMA pull of
the head's mirror toward the next block's first layer.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from ...errors import InternalError, UsageError
from ..tensor import Tensor, detach
from ..trainer.optim import ParamGroup
from .heads import AuxiliaryHead
from .network import LocalUnit
from .partition import run_block


def local_forward(unit: LocalUnit, x: Tensor, accountant=None) -> Tuple[Tensor, Tensor]:
    """Returns (detached block output for the next block, logits for the local loss).

    The head reads the attached output so its loss reaches this block's
    parameters only; the last block's output is the logits itself.
    """
    out = run_block(unit.part, unit.index, x, accountant)
    if unit.head is None:
        return detach(out), out
    return detach(out), unit.head.forward(out, accountant, phase=f"head{unit.index}")


def update_local(unit: LocalUnit, eta_l: float, eta_a: float) -> None:
    """One optimizer step for the unit, then clear its gradients."""
    backbone = unit.block_params
    if any(p.grad is None for p in backbone):
        raise UsageError(f"block {unit.index} has parameters without gradients; run backward on its local loss first")
    groups = [ParamGroup("backbone", backbone, eta_l)]
    head = unit.head
    if head is not None:
        groups.append(ParamGroup("coupled", head.coupled_params(), head.aux_factor() * eta_a))
        groups.append(ParamGroup("projection", head.projection_params, eta_a))
        if head.config.use_scalable:
            groups.append(ParamGroup("scale", [head.scale], eta_a, weight_decay=0.0))
    unit.optimizer.step(groups)
    unit.steps += 1
    if head is not None and head.config.use_scalable:
        head.clamp_scale()
    for p in unit.parameters():
        p.zero_grad()


def ema_couple(head: AuxiliaryHead, target: Sequence[np.ndarray]) -> None:
    """Pull the mirror toward the next block's first-layer parameters.

    literal: gamma <- s * (alpha * gamma + (1 - alpha) * theta)
    convex:  gamma <- gamma + s * (1 - alpha) * (theta - gamma)
    Works on raw arrays; nothing is recorded and no gradient buffer changes.
    """
    config = head.config
    if not config.use_ema:
        return
    if len(target) != len(head.mirror_params):
        raise InternalError(f"mirror holds {len(head.mirror_params)} tensors, target {len(target)}")
    s = head.scale_value if config.use_scalable else 1.0
    alpha = config.alpha
    for gamma, theta in zip(head.mirror_params, target):
        if gamma.shape != theta.shape:
            raise InternalError(f"mirror {gamma.shape} drifted from target {theta.shape}")
        if config.mode == "literal":
            gamma.data = s * (alpha * gamma.data + (1.0 - alpha) * theta)
        else:
            gamma.data = gamma.data + (s * (1.0 - alpha)) * (theta - gamma.data)


def target_arrays(unit: Optional[LocalUnit]) -> Sequence[np.ndarray]:
    """Live first-layer arrays of a unit (read-only use)."""
    if unit is None:
        raise InternalError("the last block has no successor to couple with")
    return [p.data for p in unit.first_layer_params()]

"""
Cost Formulas

Closed-form overhead of coupled local learning relative to end-to-end
training, for a network of L parametric layers split into K blocks of
B = L / K layers, where every head adds one copy of the next block's first
layer plus a bias:

    parameters   dP = (K - 1) (1 + beta) p_mean
                 1 + (1 + beta)(K - 1) / (rho L)  <=  P / P_e2e  <=  1 + rho (1 + beta)(K - 1) / L
    FLOPs        1 + (K - 1) / L * (1 + beta_f / 2)
    memory       1 / K + (1 + beta_a) / L

The customary form of the parameter lower bound, 1 + (1 + beta) / B (1 - 1/K),
only holds for balanced layer sizes; both forms are reported.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

FLOOR_TOLERANCE = 1e-12


class CostParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    L: int = Field(..., ge=1)
    K: int = Field(1, ge=1)
    p_min: float = Field(1.0, gt=0.0)
    p_max: float = Field(1.0, gt=0.0)
    p_mean: Optional[float] = Field(None, gt=0.0)
    beta: float = Field(0.0, ge=0.0)
    beta_f: float = Field(0.0, ge=0.0)
    beta_a: float = Field(0.0, ge=0.0)
    F: float = Field(1.0, gt=0.0)
    A: float = Field(1.0, gt=0.0)
    eps: float = Field(0.1, ge=0.0)
    rho_mem: float = Field(0.25, gt=0.0)

    @model_validator(mode="after")
    def _check(self) -> "CostParams":
        if self.K > self.L:
            raise ValueError(f"K={self.K} exceeds L={self.L}")
        if self.p_max < self.p_min:
            raise ValueError("p_max must be >= p_min")
        return self

    @property
    def B(self) -> float:
        return self.L / self.K

    @property
    def rho(self) -> float:
        return self.p_max / self.p_min

    @property
    def mean_params(self) -> float:
        return self.p_mean if self.p_mean is not None else 0.5 * (self.p_min + self.p_max)


@dataclass
class MemoryGuideline:
    feasible: bool
    threshold: float
    bound: Optional[float] = None
    k_min: Optional[int] = None
    k_min_strict: Optional[int] = None


def expected_param_overhead(p: CostParams) -> float:
    return (p.K - 1) * (1.0 + p.beta) * p.mean_params


def param_ratio_bounds(p: CostParams) -> Tuple[float, float]:
    """(stated lower, upper) in the customary form."""
    share = (1.0 + p.beta) / p.B * (1.0 - 1.0 / p.K)
    return 1.0 + share, 1.0 + p.rho * share


def guaranteed_param_lower(p: CostParams) -> float:
    """Lower bound that holds for any layer-size profile within [p_min, p_max]."""
    return 1.0 + (1.0 + p.beta) * (p.K - 1) / (p.rho * p.L)


def flops_ratio(p: CostParams, K: Optional[int] = None) -> float:
    K = p.K if K is None else K
    return 1.0 + (K - 1) / p.L * (1.0 + p.beta_f / 2.0)


def max_blocks_for_flop_budget(p: CostParams) -> int:
    """Largest K with 1 + (K - 1)/L (1 + beta_f/2) <= 1 + eps, at least 1 and at most L."""
    bound = 1.0 + p.eps * p.L / (1.0 + p.beta_f / 2.0)
    k_max = int(math.floor(bound + FLOOR_TOLERANCE))
    return max(1, min(k_max, p.L))


def memory_ratio(p: CostParams, K: Optional[int] = None) -> float:
    K = p.K if K is None else K
    return 1.0 / K + (1.0 + p.beta_a) / p.L


def min_blocks_for_memory_target(p: CostParams) -> MemoryGuideline:
    """K >= 1 / (rho_mem - (1 + beta_a) / L), or infeasible when the head term alone exceeds the target.

    k_min is the integer part of the bound, the way the guideline is usually
    quoted; k_min_strict is the smallest K whose memory_ratio meets the target.
    """
    threshold = (1.0 + p.beta_a) / p.L
    if p.rho_mem <= threshold:
        return MemoryGuideline(feasible=False, threshold=threshold)
    bound = 1.0 / (p.rho_mem - threshold)
    return MemoryGuideline(
        feasible=True,
        threshold=threshold,
        bound=bound,
        k_min=max(1, int(math.floor(bound + FLOOR_TOLERANCE))),
        k_min_strict=max(1, int(math.ceil(bound - FLOOR_TOLERANCE))),
    )

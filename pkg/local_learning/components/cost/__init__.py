"""Closed-form cost model and its verification against instantiated networks."""

from .formulas import (
    CostParams,
    MemoryGuideline,
    expected_param_overhead,
    flops_ratio,
    guaranteed_param_lower,
    max_blocks_for_flop_budget,
    memory_ratio,
    min_blocks_for_memory_target,
    param_ratio_bounds,
)
from .report import CostReport, cost_report, render_table
from .verify import verify_against_model

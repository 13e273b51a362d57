"""Cost report assembly and rendering."""

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from .formulas import (
    CostParams,
    expected_param_overhead,
    flops_ratio,
    guaranteed_param_lower,
    max_blocks_for_flop_budget,
    memory_ratio,
    min_blocks_for_memory_target,
    param_ratio_bounds,
)


@dataclass
class CostReport:
    L: int
    K: int
    delta_p_expected: float
    ratio_lower: float
    ratio_lower_guaranteed: float
    ratio_upper: float
    flops_ratio: float
    flops_budget: float
    within_flops_budget: bool
    k_max_flops: int
    flops_ratio_at_k_equals_l: float
    mem_ratio: float
    mem_target: float
    mem_feasible: bool
    k_min_mem: Optional[int]
    k_min_mem_strict: Optional[int]
    notes: List[str] = field(default_factory=list)
    measured: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def cost_report(p: CostParams) -> CostReport:
    lower, upper = param_ratio_bounds(p)
    guideline = min_blocks_for_memory_target(p)
    worst = flops_ratio(p, K=p.L)
    notes = [
        f"FLOPs ratio at K=L is {worst:.4f}, i.e. +{(worst - 1.0) * 100:.1f}% over the forward-only baseline; "
        f"a figure near 51% arises only against a baseline that also counts backward FLOPs",
        "memory ratios are relative to an end-to-end run without heads, so K=1 gives slightly more than 1",
    ]
    if p.rho > 1.0:
        notes.append(
            f"with rho={p.rho:.3g} the lower bound {lower:.4f} can exceed real ratios; "
            f"the guaranteed lower bound is {guaranteed_param_lower(p):.4f}"
        )
    if not guideline.feasible:
        notes.append(f"memory target {p.rho_mem} is infeasible: heads alone cost {guideline.threshold:.4f}")
    elif guideline.k_min_strict is not None and guideline.k_min_strict > p.L:
        notes.append(f"meeting the memory target needs K={guideline.k_min_strict} > L={p.L}")
    return CostReport(
        L=p.L,
        K=p.K,
        delta_p_expected=expected_param_overhead(p),
        ratio_lower=lower,
        ratio_lower_guaranteed=guaranteed_param_lower(p),
        ratio_upper=upper,
        flops_ratio=flops_ratio(p),
        flops_budget=1.0 + p.eps,
        within_flops_budget=flops_ratio(p) <= 1.0 + p.eps + 1e-12,
        k_max_flops=max_blocks_for_flop_budget(p),
        flops_ratio_at_k_equals_l=worst,
        mem_ratio=memory_ratio(p),
        mem_target=p.rho_mem,
        mem_feasible=guideline.feasible,
        k_min_mem=guideline.k_min,
        k_min_mem_strict=guideline.k_min_strict,
        notes=notes,
    )


def render_table(report: CostReport) -> str:
    """Plain-text two-column table."""
    rows = [
        ("L / K", f"{report.L} / {report.K}"),
        ("expected extra params", f"{report.delta_p_expected:.6g}"),
        ("param ratio lower", f"{report.ratio_lower:.6f}"),
        ("param ratio lower (guaranteed)", f"{report.ratio_lower_guaranteed:.6f}"),
        ("param ratio upper", f"{report.ratio_upper:.6f}"),
        ("FLOPs ratio", f"{report.flops_ratio:.6f}"),
        ("FLOPs budget", f"{report.flops_budget:.6f} ({'within' if report.within_flops_budget else 'over'})"),
        ("K_max (FLOPs)", str(report.k_max_flops)),
        ("memory ratio", f"{report.mem_ratio:.6f}"),
        ("memory target", f"{report.mem_target:.6f}"),
        ("K_min (memory)", "infeasible" if not report.mem_feasible else f"{report.k_min_mem} (strict {report.k_min_mem_strict})"),
    ]
    for key, value in sorted(report.measured.items()):
        rows.append((f"measured {key}", f"{value:.6f}" if isinstance(value, float) else str(value)))
    width = max(len(key) for key, _ in rows)
    lines = [f"{key.ljust(width)}  {value}" for key, value in rows]
    lines += [f"note: {note}" for note in report.notes]
    return "\n".join(lines)

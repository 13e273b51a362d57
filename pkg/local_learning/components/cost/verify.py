"""
Model Verification

Measures the quantities the cost formulas predict on an instantiated
network and places them next to the closed forms. L counts parametric
layers; the per-layer units p_i, F and A are measured per parametric layer.
Head projections are outside the formulas and reported separately.
"""

from typing import Tuple

import numpy as np

from ..analysis.counting import count_flops, count_params
from ..blocks.network import Network
from ..trainer.loop import activation_trace
from .formulas import CostParams, flops_ratio, memory_ratio
from .report import CostReport, cost_report


def _activation_units(network: Network, x: np.ndarray) -> Tuple[float, float]:
    """(mean retained activation per unit end-to-end, mean head bias size over that unit)."""
    e2e = activation_trace(network, x, mode="e2e")
    A = float(np.mean([size for _, size, _ in e2e.log if size > 0]))
    biases = [head.bias.size for head in network.heads if head.config.use_lb]
    return A, float(np.mean(biases)) / A if biases else 0.0


def verify_against_model(network: Network, x: np.ndarray, eps: float = 0.1, rho_mem: float = 0.25) -> CostReport:
    """Closed forms with beta, beta_f, beta_a measured from the model, plus measured ratios."""
    part = network.part
    heads = network.heads
    params = count_params(part, heads)
    profile = params.profile
    flops = count_flops(part, x.shape, heads)
    layer_flops = [sum(flops.layers[i].values()) for i in params.parametric_layers]
    mirror_flops = sum(sum(c.values()) for c in flops.mirror)
    bias_flops = sum(sum(c.values()) for c in flops.bias)
    A, beta_a = _activation_units(network, x)
    p = CostParams(
        L=len(profile), K=part.K, p_min=min(profile), p_max=max(profile), p_mean=float(np.mean(profile)),
        beta=sum(params.bias_params) / sum(params.mirror_params) if heads else 0.0,
        beta_f=bias_flops / mirror_flops if mirror_flops else 0.0,
        beta_a=beta_a, F=float(np.mean(layer_flops)), A=A, eps=eps, rho_mem=rho_mem,
    )
    report = cost_report(p)
    local = activation_trace(network, x, mode="local")
    e2e = activation_trace(network, x, mode="e2e")
    report.measured = {
        "beta": p.beta,
        "beta_f": p.beta_f,
        "beta_a": p.beta_a,
        "rho": p.rho,
        "param_ratio": 1.0 + params.head_overhead / params.total,
        "projection_params": sum(params.projection_params),
        "flops_ratio": 1.0 + flops.head_overhead / flops.backbone,
        "flops_ratio_formula": flops_ratio(p),
        "flops_ratio_with_projection": 1.0 + (flops.head_overhead + flops.projection_total) / flops.backbone,
        "projection_flops_share": flops.projection_total / flops.backbone,
        "mem_ratio": local.peak / e2e.peak,
        "mem_ratio_formula": memory_ratio(p),
        "projection_peak_scalars": local.surplus_peak,
        "peak_scalars": local.peak,
        "e2e_peak_scalars": e2e.peak,
    }
    return report

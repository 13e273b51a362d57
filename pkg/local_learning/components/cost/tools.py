"""
Cost Tools

Status-dictionary wrappers around the closed-form calculator and the
model verification.
"""

from typing import Any, Dict

import numpy as np

from ...config import build_config
from ..blocks.network import Network
from .formulas import CostParams
from .report import cost_report, render_table
from .verify import verify_against_model


def calculate_costs(**params: Any) -> Dict[str, Any]:
    """
    Evaluate the cost formulas for the given network shape.

    Args:
        **params: CostParams fields (L, K, p_min, p_max, p_mean, beta, beta_f, beta_a, F, A, eps, rho_mem)

    Returns:
        Dictionary with the report fields and a rendered table
    """
    try:
        report = cost_report(build_config(CostParams, **params))
        return {"status": "success", "report": report.to_dict(), "table": render_table(report)}
    except Exception as e:
        return {"status": "error", "error_message": f"Error computing costs: {str(e)}", "error_type": str(type(e).__name__)}


def verify_model_costs(network: Network, x: np.ndarray, eps: float = 0.1, rho_mem: float = 0.25) -> Dict[str, Any]:
    """
    Compare the cost formulas with exact counts on an instantiated network.

    Args:
        network: Built network with heads
        x: Input batch used for FLOP and activation counting
        eps: FLOPs budget
        rho_mem: Memory target

    Returns:
        Dictionary with the report (including measured fields) and a rendered table
    """
    try:
        report = verify_against_model(network, x, eps=eps, rho_mem=rho_mem)
        return {"status": "success", "report": report.to_dict(), "table": render_table(report)}
    except Exception as e:
        return {"status": "error", "error_message": f"Error verifying costs: {str(e)}", "error_type": str(type(e).__name__)}

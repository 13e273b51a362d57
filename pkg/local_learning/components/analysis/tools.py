"""
Analysis Tools

Status-dictionary wrappers for similarity scores and exact counts.
"""

from typing import Any, Dict, List, Optional

import numpy as np

from ..blocks.network import Network
from .cka import linear_cka
from .counting import count_flops, count_params
from .probes import gradient_bias_probe


def similarity_score(X: Any, Y: Any) -> Dict[str, Any]:
    """
    Linear CKA between two feature matrices over the same examples.

    Args:
        X: Array-like [n x d1]
        Y: Array-like [n x d2]

    Returns:
        Dictionary with the score
    """
    try:
        return {"status": "success", "cka": linear_cka(np.asarray(X), np.asarray(Y))}
    except Exception as e:
        return {"status": "error", "error_message": f"Error computing CKA: {str(e)}", "error_type": str(type(e).__name__)}


def model_counts(network: Network, input_shape: Optional[List[int]] = None) -> Dict[str, Any]:
    """
    Exact parameter counts, and FLOP counts when an input batch shape is given.

    Args:
        network: Built network with heads
        input_shape: Batch shape including the batch axis

    Returns:
        Dictionary with per-block and per-head counts
    """
    try:
        params = count_params(network.part, network.heads)
        result: Dict[str, Any] = {
            "status": "success",
            "total_params": params.total,
            "block_params": params.block_params,
            "mirror_params": params.mirror_params,
            "bias_params": params.bias_params,
            "projection_params": params.projection_params,
        }
        if input_shape:
            flops = count_flops(network.part, tuple(input_shape), network.heads)
            result.update({
                "backbone_flops": flops.backbone,
                "head_flops": flops.head_overhead,
                "projection_flops": flops.projection_total,
                "flops_by_op": flops.by_op(),
            })
        return result
    except Exception as e:
        return {"status": "error", "error_message": f"Error counting model: {str(e)}", "error_type": str(type(e).__name__)}


def probe_gradients(network: Network, x: np.ndarray, y: np.ndarray) -> Dict[str, Any]:
    """
    Relative gap between local and end-to-end gradients per block.

    Args:
        network: Built network
        x: Input batch
        y: Labels of the batch

    Returns:
        Dictionary with one value per block
    """
    try:
        return {"status": "success", "bias": gradient_bias_probe(network, x, y)}
    except Exception as e:
        return {"status": "error", "error_message": f"Error probing gradients: {str(e)}", "error_type": str(type(e).__name__)}

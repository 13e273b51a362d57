"""
Tensor Tools

Status-dictionary wrapper for the finite-difference self-check of every op.
"""

from typing import Any, Dict

import numpy as np

from .gradcheck import gradient_check, random_cases


def check_gradients(seed: int = 0, instances: int = 10, tolerance: float = 1e-4) -> Dict[str, Any]:
    """
    Compare tape gradients with central differences on random small instances.

    Args:
        seed: Seed of the instance generator
        instances: Random instances per op
        tolerance: Largest acceptable relative error

    Returns:
        Dictionary with the worst relative error per op and an overall verdict
    """
    try:
        rng = np.random.default_rng(seed)
        worst: Dict[str, float] = {}
        for _ in range(instances):
            for name, fn, inputs in random_cases(rng):
                error = max(gradient_check(fn, inputs).values())
                worst[name] = max(worst.get(name, 0.0), error)
        return {"status": "success", "max_relative_error": worst, "passed": all(e < tolerance for e in worst.values())}
    except Exception as e:
        return {"status": "error", "error_message": f"Gradient check failed: {str(e)}", "error_type": str(type(e).__name__)}

"""
Pipeline Tools

Status-dictionary views of the pipeline schedule and throughput numbers.
"""

from typing import Any, Dict

from .schedule import tick_table
from .stats import ideal_busy_fraction


def schedule_table(K: int, batches: int) -> Dict[str, Any]:
    """
    Enumerate which slot every worker handles at every tick of one epoch.

    Args:
        K: Number of workers (blocks)
        batches: Number of data batches in the epoch

    Returns:
        Dictionary with the tick rows and the finishing tick of the last worker
    """
    try:
        if K < 1 or batches < 0:
            raise ValueError("K must be >= 1 and batches >= 0")
        rows = [{"tick": e.tick, "worker": e.worker, "slot": e.slot, "batch": e.batch} for e in tick_table(K, batches)]
        return {
            "status": "success",
            "ticks": batches + K,
            "rows": rows,
            "last_tick": max((r["tick"] for r in rows), default=None),
            "ideal_busy_frac": ideal_busy_fraction(batches, K) if batches else 0.0,
        }
    except Exception as e:
        return {"status": "error", "error_message": f"Error building schedule: {str(e)}", "error_type": str(type(e).__name__)}

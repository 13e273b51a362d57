"""
Trainer Tools

Status-dictionary helpers for inspecting learning-rate schedules and the
metrics files the trainers write.
"""

from typing import Any, Dict

import pandas as pd

from .loop import METRIC_COLUMNS
from .schedule import epoch_lr


def learning_rate_schedule(eta0: float, epochs: int, schedule: str = "cosine") -> Dict[str, Any]:
    """
    Per-epoch learning rates of a schedule.

    Args:
        eta0: Initial rate
        epochs: Number of epochs (the cosine horizon)
        schedule: "cosine" or "constant"

    Returns:
        Dictionary with one rate per epoch
    """
    try:
        return {"status": "success", "rates": [epoch_lr(schedule, t, epochs, eta0) for t in range(epochs)]}
    except Exception as e:
        return {"status": "error", "error_message": f"Error evaluating schedule: {str(e)}", "error_type": str(type(e).__name__)}


def read_metrics(path: str) -> Dict[str, Any]:
    """
    Load a metrics CSV written by a training run.

    Args:
        path: metrics.csv path

    Returns:
        Dictionary with the frame and the final-epoch rows
    """
    try:
        frame = pd.read_csv(path)
        missing = [c for c in METRIC_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"{path} lacks columns {missing}")
        last = frame[frame["epoch"] == frame["epoch"].max()] if len(frame) else frame
        return {"status": "success", "frame": frame, "final": last.to_dict(orient="records"), "epochs": int(frame["epoch"].nunique())}
    except Exception as e:
        return {"status": "error", "error_message": f"Error reading metrics {path}: {str(e)}", "error_type": str(type(e).__name__)}

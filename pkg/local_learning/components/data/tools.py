"""
Dataset Tools

Status-dictionary wrappers over the readers and the blob generator.
"""

from typing import Any, Dict, Optional

from ...config import DatasetSpec, build_config
from ...seeding import RandomStreams
from .idx import parse_idx
from .loader import load_split


def inspect_idx(path: str) -> Dict[str, Any]:
    """
    Parse one IDX file and describe it.

    Args:
        path: IDX file path

    Returns:
        Dictionary with the array shape and kind
    """
    try:
        array = parse_idx(path)
        return {
            "status": "success",
            "path": path,
            "kind": "labels" if array.ndim == 1 else "images",
            "shape": list(array.shape),
            "records": int(array.shape[0]),
        }
    except Exception as e:
        return {"status": "error", "error_message": f"Error reading {path}: {str(e)}", "error_type": str(type(e).__name__)}


def load_dataset(spec: Dict[str, Any], seed: int = 0, limit: Optional[int] = None) -> Dict[str, Any]:
    """
    Load or generate a dataset and summarize it.

    Args:
        spec: DatasetSpec fields
        seed: Seed of the data stream
        limit: Optional cap on reported sample labels

    Returns:
        Dictionary with record counts, input shape and class balance
    """
    try:
        dataset_spec = build_config(DatasetSpec, **spec)
        split = load_split(dataset_spec, RandomStreams(seed).generator("data"))
        counts = [int((split.train.y == c).sum()) for c in range(split.classes)]
        return {
            "status": "success",
            "train_records": len(split.train),
            "test_records": len(split.test),
            "input_shape": list(split.input_shape),
            "classes": split.classes,
            "train_class_counts": counts,
            "sample_labels": split.train.y[: limit or 10].tolist(),
            "split": split,
        }
    except Exception as e:
        return {"status": "error", "error_message": f"Error loading dataset: {str(e)}", "error_type": str(type(e).__name__)}

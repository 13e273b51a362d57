"""CSV datasets with header label,f0,f1,..."""

import numpy as np
import pandas as pd

from ...errors import FormatError, InputError


def read_csv_dataset(path: str):
    """Return (features [n x d] float64, labels [n] int64)."""
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    columns = list(frame.columns)
    expected = ["label"] + [f"f{i}" for i in range(len(columns) - 1)]
    if len(columns) < 2 or columns != expected:
        raise FormatError(f"{path}: header must be label,f0,f1,...; got {','.join(map(str, columns))}")
    labels = frame["label"].to_numpy()
    if not np.issubdtype(labels.dtype, np.integer):
        raise InputError(f"{path}: labels must be integers")
    features = frame[expected[1:]].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise InputError(f"{path}: features must be finite")
    return features, labels.astype(np.int64)


def write_csv_dataset(path: str, features: np.ndarray, labels: np.ndarray) -> None:
    frame = pd.DataFrame(features, columns=[f"f{i}" for i in range(features.shape[1])])
    frame.insert(0, "label", labels.astype(np.int64))
    frame.to_csv(path, index=False)

"""
Datasets

In-memory example arrays with integer labels, split into train and test,
plus the per-feature standardization fitted on the training split.
"""

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from ...errors import InputError


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    classes: int

    def __post_init__(self):
        if self.x.shape[0] != self.y.shape[0]:
            raise InputError(f"{self.x.shape[0]} examples but {self.y.shape[0]} labels")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.classes):
            raise InputError(f"labels must lie in [0, {self.classes})")
        if not np.all(np.isfinite(self.x)):
            raise InputError("features must be finite")

    def __len__(self) -> int:
        return int(self.x.shape[0])

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return tuple(self.x.shape[1:])

    def head(self, limit: Optional[int]) -> "Dataset":
        if limit is None or limit >= len(self):
            return self
        return Dataset(self.x[:limit], self.y[:limit], self.classes)

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Minibatches in a permuted order (or file order without an rng); the last may be short."""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            index = order[start : start + batch_size]
            yield self.x[index], self.y[index]


@dataclass
class DataSplit:
    train: Dataset
    test: Dataset

    @property
    def classes(self) -> int:
        return self.train.classes

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return self.train.input_shape


def standardize(split: DataSplit) -> DataSplit:
    """Per-feature standardization with training statistics; constant features keep unit scale."""
    mean = split.train.x.mean(axis=0)
    std = split.train.x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return DataSplit(
        train=Dataset((split.train.x - mean) / std, split.train.y, split.classes),
        test=Dataset((split.test.x - mean) / std, split.test.y, split.classes),
    )

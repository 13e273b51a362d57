"""
Synthetic Blobs

Gaussian clusters around seeded random centers. Centers are drawn by
rejection so every pair is at least 4 * noise apart; labels are balanced.
"""

import numpy as np

from ...config import DatasetSpec
from ...errors import ConfigurationError
from .dataset import DataSplit, Dataset

MAX_ATTEMPTS = 10000


def draw_centers(classes: int, dim: int, noise: float, rng: np.random.Generator) -> np.ndarray:
    separation = 4.0 * noise
    half_width = max(1.0, separation) * classes
    centers = []
    for _ in range(MAX_ATTEMPTS):
        candidate = rng.uniform(-half_width, half_width, size=dim)
        if all(np.linalg.norm(candidate - c) >= separation for c in centers):
            centers.append(candidate)
            if len(centers) == classes:
                return np.stack(centers)
    raise ConfigurationError(f"could not place {classes} centers {separation} apart in {dim} dimensions")


def gen_blobs(spec: DatasetSpec, rng: np.random.Generator) -> DataSplit:
    """Deterministic for a given generator state."""
    centers = draw_centers(spec.classes, spec.dim, spec.noise, rng)
    labels = rng.permutation(np.arange(spec.n) % spec.classes)
    points = centers[labels] + spec.noise * rng.standard_normal((spec.n, spec.dim))
    n_test = int(round(spec.n * spec.test_fraction))
    n_train = spec.n - n_test
    return DataSplit(
        train=Dataset(points[:n_train], labels[:n_train], spec.classes),
        test=Dataset(points[n_train:], labels[n_train:], spec.classes),
    )

"""Builds the train/test split a DatasetSpec describes."""

import logging

import numpy as np

from ...config import DatasetSpec
from ...errors import InputError
from .blobs import gen_blobs
from .csv_data import read_csv_dataset
from .dataset import DataSplit, Dataset, standardize
from .idx import parse_idx

logger = logging.getLogger(__name__)


def _idx_pair(images_path: str, labels_path: str, classes: int) -> Dataset:
    images = parse_idx(images_path)
    labels = parse_idx(labels_path)
    if images.ndim != 4:
        raise InputError(f"{images_path} holds labels, not images")
    if labels.ndim != 1:
        raise InputError(f"{labels_path} holds images, not labels")
    return Dataset(images, labels, classes)


def load_split(spec: DatasetSpec, rng: np.random.Generator) -> DataSplit:
    """Read or generate the data, apply the limits, then normalize."""
    if spec.format == "idx":
        split = DataSplit(
            train=_idx_pair(spec.train_images, spec.train_labels, spec.classes),
            test=_idx_pair(spec.test_images, spec.test_labels, spec.classes),
        )
    elif spec.format == "csv":
        split = DataSplit(
            train=Dataset(*read_csv_dataset(spec.train_csv), spec.classes),
            test=Dataset(*read_csv_dataset(spec.test_csv), spec.classes),
        )
    else:
        split = gen_blobs(spec, rng)
    split = DataSplit(train=split.train.head(spec.limit_train), test=split.test.head(spec.limit_test))
    if spec.normalization == "standardize":
        split = standardize(split)
    logger.info("Loaded %s data: %d train, %d test, input %s", spec.format, len(split.train),
                len(split.test), split.input_shape)
    return split

"""Shared fixtures: seeded streams, small datasets and network factories."""

from typing import Callable, Sequence

import numpy as np
import pytest

from local_learning.components.blocks.model_file import mlp_description
from local_learning.components.blocks.network import Network, build_network
from local_learning.components.data.dataset import Dataset
from local_learning.components.tensor import current_tape
from local_learning.config import CouplingConfig, TrainConfig
from local_learning.seeding import RandomStreams


@pytest.fixture(autouse=True)
def clean_tape():
    """Every test starts and ends with an empty tape on the main thread."""
    current_tape().clear()
    yield
    current_tape().clear()


@pytest.fixture
def streams() -> RandomStreams:
    return RandomStreams(0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def toy_data() -> Callable[..., Dataset]:
    """Factory for a random [n x dim] dataset with integer labels."""

    def make(n: int = 32, dim: int = 3, classes: int = 2, seed: int = 7) -> Dataset:
        rng = np.random.default_rng(seed)
        return Dataset(rng.standard_normal((n, dim)), rng.integers(0, classes, size=n), classes)

    return make


@pytest.fixture
def mlp_network(streams) -> Callable[..., Network]:
    """Factory for an MLP with one linear + relu pair per block and a linear last block."""

    def make(widths: Sequence[int], train: TrainConfig = None, coupling: CouplingConfig = None,
             seed: int = 0) -> Network:
        train = train or TrainConfig()
        if coupling is not None:
            train = train.model_copy(update={"coupling": coupling})
        local_streams = RandomStreams(seed)
        description = mlp_description(list(widths), K=len(widths) - 1)
        layers = description.build_layers(local_streams.generator("model-init"))
        return build_network(layers, description.K, widths[-1], train, local_streams, (widths[0],))

    return make


@pytest.fixture
def model_file(tmp_path) -> Callable[[str], str]:
    """Write model description text into the test directory and return its path."""

    def write(text: str, name: str = "model.txt") -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write

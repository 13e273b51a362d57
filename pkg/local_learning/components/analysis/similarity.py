"""Layer-wise representation similarity between two networks of the same architecture."""

from typing import List, Tuple

import numpy as np
import pandas as pd

from ..blocks.network import Network
from ..tensor import Tensor, current_tape
from .cka import linear_cka


def unit_features(network: Network, x: np.ndarray) -> List[Tuple[int, np.ndarray]]:
    """(layer index, flattened output) at the end of every activation unit."""
    tape = current_tape()
    tape.clear()
    part = network.part
    h = Tensor(x)
    features = []
    for index, layer in enumerate(part.layers):
        h = layer.forward(h)
        if part.ends_unit(index, within_block=False):
            features.append((index, h.data.reshape(h.shape[0], -1).copy()))
    tape.clear()
    return features


def layerwise_cka(local: Network, reference: Network, x: np.ndarray) -> pd.DataFrame:
    """CKA between matching layers of two networks over one evaluation batch, as a layer,cka frame."""
    rows = [
        {"layer": index, "cka": linear_cka(a, b)}
        for (index, a), (_, b) in zip(unit_features(local, x), unit_features(reference, x))
    ]
    return pd.DataFrame(rows, columns=["layer", "cka"])

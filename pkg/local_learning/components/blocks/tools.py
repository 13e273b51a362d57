"""
Model Tools

Status-dictionary wrappers for reading model files and describing the
partition and heads they produce.
"""

from typing import Any, Dict, List, Optional

from ...config import TrainConfig
from ...seeding import RandomStreams
from .model_file import read_model_file
from .network import build_network
from .partition import partition


def describe_model(path: str, classes: int, input_shape: Optional[List[int]] = None, seed: int = 0) -> Dict[str, Any]:
    """
    Read a model file and describe its blocks and heads.

    Args:
        path: Model description file
        classes: Number of output classes
        input_shape: Optional per-example input shape used to check layer shapes
        seed: Seed used to instantiate parameters

    Returns:
        Dictionary with block spans, parameter counts and head ratios
    """
    try:
        description = read_model_file(path)
        streams = RandomStreams(seed)
        layers = description.build_layers(streams.generator("model-init"))
        network = build_network(layers, description.K, classes, TrainConfig(seed=seed), streams,
                                tuple(input_shape) if input_shape else None)
        part = network.part
        return {
            "status": "success",
            "K": part.K,
            "layers": part.L,
            "block_sizes": part.sizes(),
            "blocks": part.describe(),
            "block_params": [sum(p.size for p in part.block_params(j)) for j in range(part.K)],
            "heads": [
                {"block": j, "mirror": head.mirror.describe(), "beta": head.beta(), "pooled": head.pooled}
                for j, head in enumerate(network.heads)
            ],
        }
    except Exception as e:
        return {"status": "error", "error_message": f"Error reading model {path}: {str(e)}", "error_type": str(type(e).__name__)}


def preview_partition(path: str, K: int) -> Dict[str, Any]:
    """
    Show how a model's layers would be split into K blocks.

    Args:
        path: Model description file
        K: Block count to try instead of the file's own

    Returns:
        Dictionary with the layer descriptions per block
    """
    try:
        layers = read_model_file(path).build_layers()
        part = partition(layers, K)
        starts = [part.first_layer(j).kind for j in range(1, K)]
        return {
            "status": "success",
            "K": K,
            "blocks": part.describe(),
            "heads_buildable": all(kind in ("linear", "conv2d") for kind in starts),
        }
    except Exception as e:
        return {"status": "error", "error_message": f"Error partitioning {path}: {str(e)}", "error_type": str(type(e).__name__)}

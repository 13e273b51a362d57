"""
Model Description Files

Line-oriented text, one directive per line:

    # comment (from '#' to end of line; blank lines are ignored)
    partition K
    linear IN OUT
    conv2d IN_CH OUT_CH KH KW STRIDE
    relu
    flatten
    mean_pool2d WINDOW

Tokens are separated by whitespace. Every argument is a positive decimal
integer. `partition` appears exactly once, anywhere in the file; layers keep
their file order.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ...errors import ConfigurationError
from .layers import Conv2d, Flatten, LayerSpec, Linear, MeanPool2d, ReLU

ARITY = {"linear": 2, "conv2d": 5, "relu": 0, "flatten": 0, "mean_pool2d": 1}


@dataclass
class ModelDescription:
    K: int
    entries: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.entries)

    def build_layers(self, rng: Optional[np.random.Generator] = None) -> List[LayerSpec]:
        """Instantiate the layers in order, drawing parameters from one generator."""
        rng = rng or np.random.default_rng(0)
        layers: List[LayerSpec] = []
        for kind, args in self.entries:
            if kind == "linear":
                layers.append(Linear(*args, rng=rng))
            elif kind == "conv2d":
                layers.append(Conv2d(*args, rng=rng))
            elif kind == "relu":
                layers.append(ReLU())
            elif kind == "flatten":
                layers.append(Flatten())
            else:
                layers.append(MeanPool2d(*args))
        return layers


def _parse_int(token: str, line_no: int) -> int:
    if not token.isdigit() or int(token) < 1:
        raise ConfigurationError(f"line {line_no}: expected a positive integer, got '{token}'")
    return int(token)


def parse_model_text(text: str) -> ModelDescription:
    K = None
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        kind, args = tokens[0], tokens[1:]
        if kind == "partition":
            if K is not None:
                raise ConfigurationError(f"line {line_no}: duplicate 'partition' directive")
            if len(args) != 1:
                raise ConfigurationError(f"line {line_no}: 'partition' takes exactly one integer")
            K = _parse_int(args[0], line_no)
            continue
        if kind not in ARITY:
            raise ConfigurationError(f"line {line_no}: unknown layer '{kind}'; expected one of {', '.join(ARITY)}")
        if len(args) != ARITY[kind]:
            raise ConfigurationError(f"line {line_no}: '{kind}' takes {ARITY[kind]} arguments, got {len(args)}")
        entries.append((kind, tuple(_parse_int(a, line_no) for a in args)))
    if K is None:
        raise ConfigurationError("model file has no 'partition K' directive")
    if not entries:
        raise ConfigurationError("model file declares no layers")
    if K > len(entries):
        raise ConfigurationError(f"partition {K} exceeds the {len(entries)} declared layers")
    return ModelDescription(K=K, entries=entries)


def read_model_file(path: str) -> ModelDescription:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read model file {path}: {e}") from e
    return parse_model_text(text)


def format_model(description: ModelDescription) -> str:
    lines = [f"partition {description.K}"]
    lines += [" ".join([kind, *map(str, args)]) for kind, args in description.entries]
    return "\n".join(lines) + "\n"


def write_model_file(description: ModelDescription, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_model(description))


def mlp_description(widths: List[int], K: int) -> ModelDescription:
    """linear/relu pairs through the given widths; the last linear has no relu."""
    entries = []
    for i, (a, b) in enumerate(zip(widths, widths[1:])):
        entries.append(("linear", (a, b)))
        if i < len(widths) - 2:
            entries.append(("relu", ()))
    return ModelDescription(K=K, entries=entries)

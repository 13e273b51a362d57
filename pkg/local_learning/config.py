"""
Run Configuration

Validated configuration models and the loader for flat key = value run files.
A run file is a TOML document without tables, so it is read with the toml
package; CLI flags override file values, which override the defaults here.
"""

import json
import os
from typing import Any, Dict, List, Literal, Optional

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError

SCALE_EPS = 1e-3
DIVERGENCE_THRESHOLD = 1e6


class CouplingConfig(BaseModel):
    """How a head's mirror follows the next block: EMA decay, mode and component toggles."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(0.999, gt=0.0, lt=1.0)
    mode: Literal["literal", "convex"] = "convex"
    use_ema: bool = True
    use_lb: bool = True
    use_scalable: bool = True


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    eta_l: float = Field(0.05, gt=0.0)
    eta_a: Optional[float] = Field(None, gt=0.0)
    epochs: int = Field(5, ge=0)
    batch_size: int = Field(64, ge=1)
    seed: int = Field(0, ge=0)
    optimizer: Literal["sgd_nesterov", "adam"] = "sgd_nesterov"
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(1e-4, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    schedule: Literal["cosine", "constant"] = "cosine"
    coupling: CouplingConfig = CouplingConfig()

    @property
    def aux_rate(self) -> float:
        """Auxiliary learning rate; defaults to the backbone rate."""
        return self.eta_a if self.eta_a is not None else self.eta_l


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    workers: int = Field(2, ge=1)
    queue_capacity: int = Field(2, ge=1)
    deterministic: bool = True


class DatasetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format: Literal["idx", "csv", "synthetic"] = "synthetic"
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    train_csv: Optional[str] = None
    test_csv: Optional[str] = None
    classes: int = Field(2, ge=2)
    dim: int = Field(2, ge=1)
    n: int = Field(1000, ge=2)
    noise: float = Field(0.5, ge=0.0)
    test_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    limit_train: Optional[int] = Field(None, ge=1)
    limit_test: Optional[int] = Field(None, ge=1)
    normalization: Literal["none", "standardize"] = "none"

    @model_validator(mode="after")
    def _check_paths(self) -> "DatasetSpec":
        required = {
            "idx": ("train_images", "train_labels", "test_images", "test_labels"),
            "csv": ("train_csv", "test_csv"),
            "synthetic": (),
        }[self.format]
        for key in required:
            path = getattr(self, key)
            if not path:
                raise ValueError(f"dataset format '{self.format}' needs '{key}'")
            if not os.path.exists(path):
                raise ValueError(f"{key} does not exist: {path}")
        return self


class RunConfig(BaseModel):
    """Everything one CLI run needs, as a flat mapping."""

    model_config = ConfigDict(extra="forbid")

    model: str
    mode: Literal["sequential", "pipeline", "e2e"] = "sequential"
    output_dir: str = "runs/latest"
    seed: int = Field(0, ge=0)
    timing: bool = False
    # training
    eta_l: float = Field(0.05, gt=0.0)
    eta_a: Optional[float] = Field(None, gt=0.0)
    epochs: int = Field(5, ge=0)
    batch_size: int = Field(64, ge=1)
    optimizer: Literal["sgd_nesterov", "adam"] = "sgd_nesterov"
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(1e-4, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    schedule: Literal["cosine", "constant"] = "cosine"
    # coupling
    alpha: float = Field(0.999, gt=0.0, lt=1.0)
    coupling_mode: Literal["literal", "convex"] = "convex"
    use_ema: bool = True
    use_lb: bool = True
    use_scalable: bool = True
    # pipeline
    queue_capacity: int = Field(2, ge=1)
    deterministic: bool = True
    # dataset
    dataset: Literal["idx", "csv", "synthetic"] = "synthetic"
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    train_csv: Optional[str] = None
    test_csv: Optional[str] = None
    classes: int = Field(2, ge=2)
    dim: int = Field(2, ge=1)
    n: int = Field(1000, ge=2)
    noise: float = Field(0.5, ge=0.0)
    test_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    limit_train: Optional[int] = Field(None, ge=1)
    limit_test: Optional[int] = Field(None, ge=1)
    normalization: Literal["none", "standardize"] = "none"
    # analysis
    eval_batch: int = Field(256, ge=2)
    ablation_seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])

    @field_validator("model")
    @classmethod
    def _model_exists(cls, value: str) -> str:
        if not os.path.exists(value):
            raise ValueError(f"model file does not exist: {value}")
        return value

    def coupling(self) -> CouplingConfig:
        return CouplingConfig(alpha=self.alpha, mode=self.coupling_mode, use_ema=self.use_ema,
                              use_lb=self.use_lb, use_scalable=self.use_scalable)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            eta_l=self.eta_l, eta_a=self.eta_a, epochs=self.epochs, batch_size=self.batch_size,
            seed=self.seed, optimizer=self.optimizer, momentum=self.momentum,
            weight_decay=self.weight_decay, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
            schedule=self.schedule, coupling=self.coupling(),
        )

    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            format=self.dataset, train_images=self.train_images, train_labels=self.train_labels,
            test_images=self.test_images, test_labels=self.test_labels, train_csv=self.train_csv,
            test_csv=self.test_csv, classes=self.classes, dim=self.dim, n=self.n, noise=self.noise,
            test_fraction=self.test_fraction, limit_train=self.limit_train, limit_test=self.limit_test,
            normalization=self.normalization,
        )

    def pipeline_config(self, workers: int) -> PipelineConfig:
        return PipelineConfig(workers=workers, queue_capacity=self.queue_capacity, deterministic=self.deterministic)


def read_flat_file(path: str) -> Dict[str, Any]:
    """Read a flat key = value file (or a JSON run summary) into a mapping."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file does not exist: {path}")
    try:
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
            data = data.get("config", data)
        else:
            data = toml.load(path)
    except (toml.TomlDecodeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot parse {path}: {e}") from e
    nested = [key for key, value in data.items() if isinstance(value, dict)]
    if nested:
        raise ConfigurationError(f"config must be flat key = value pairs; found tables {nested}")
    return data


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Defaults < file < overrides, validated into a RunConfig."""
    values: Dict[str, Any] = read_flat_file(path) if path else {}
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid run configuration: {e}") from e


def build_config(cls, **values):
    """Validate keyword values into a config model, raising ConfigurationError."""
    try:
        return cls(**values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid {cls.__name__}: {e}") from e

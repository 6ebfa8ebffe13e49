"""
Experiment Configuration - Validated settings for one runner invocation
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.experiments.state import ExperimentKind
from src.models.dnn import SideInfoMode
from src.models.vae import DrMode
from src.numerics.rng import MAX_SEED
from src.utils.config import Config
from src.utils.errors import ConfigError


class DatasetName(str, Enum):
    MNIST = "mnist"
    CIFAR10 = "cifar10"
    DIGITS = "digits"
    BLOBS = "blobs"


# Built-in per-kind defaults; YAML and flags override them
KIND_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.PRETRAIN_DBN: {
        "dataset": "digits", "layer_sizes": [64, 32, 16], "lr": 0.01, "k": 1, "batch_size": 10,
        "alpha": 50.0, "epochs": 200, "finetune_lr": 0.1, "finetune_epochs": 50,
    },
    ExperimentKind.TRAIN_DNN: {
        "dataset": "mnist", "layer_sizes": [30, 30, 30, 20, 20], "lr": 1.0, "alpha": 50.0,
        "decay": 0.9, "epochs": 200, "batch_size": 100, "global_pairs": 202_770,
        "binarize_threshold": None,
    },
    ExperimentKind.TRAIN_VAE: {
        "dataset": "mnist", "layer_sizes": [600], "latent_dim": 2, "lr": 0.05, "batch_size": 20,
        "epochs": 100, "alpha": 0.01, "dr_mode": "ce",
    },
    ExperimentKind.GRADCHECK: {"dataset": "blobs", "epochs": 1, "instances": 100},
    ExperimentKind.PAIRS_STATS: {"dataset": "blobs", "batch_size": 10, "n_classes": 10, "stat_batches": 10_000},
}


class ExperimentConfig(BaseModel):
    """Settings for one experiment; every count is positive and a seed is mandatory"""
    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    seed: int = Field(ge=0, le=MAX_SEED)
    dataset: DatasetName = DatasetName.DIGITS
    data_root: Optional[Path] = None
    output_dir: Path = Path("runs")

    layer_sizes: List[int] = Field(default_factory=lambda: [64, 32, 16])
    lr: float = Field(default=0.01, gt=0)
    alpha: float = Field(default=0.0, ge=0)
    decay: float = Field(default=1.0, gt=0, le=1)
    per_layer_scale: Optional[List[float]] = None
    norm_penalty: float = Field(default=0.0, ge=0)
    k: int = Field(default=1, ge=1)
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=10, ge=1)
    compare: bool = True

    train_subset: Optional[int] = Field(default=None, ge=1)
    test_subset: Optional[int] = Field(default=None, ge=1)
    binarize_threshold: Optional[float] = Field(default=0.5, ge=0, le=1)
    downsample: Optional[int] = Field(default=None, ge=1)

    # pretrain-dbn fine-tuning
    finetune_lr: float = Field(default=0.1, gt=0)
    finetune_epochs: int = Field(default=50, ge=1)

    # train-dnn side information
    side_info: SideInfoMode = SideInfoMode.GLOBAL
    global_pairs: int = Field(default=202_770, ge=0)
    init_std: float = Field(default=0.1, gt=0)

    # train-vae
    dr_mode: DrMode = DrMode.CE
    latent_dim: int = Field(default=2, ge=1)
    grid_steps: int = Field(default=20, ge=2)
    grid_range: Tuple[float, float] = (-6.0, 6.0)

    # gradcheck / pairs-stats
    instances: int = Field(default=100, ge=1)
    n_classes: int = Field(default=10, ge=1)
    stat_batches: int = Field(default=10_000, ge=1)

    @field_validator("layer_sizes")
    @classmethod
    def _positive_sizes(cls, sizes: List[int]) -> List[int]:
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("layer_sizes must be a nonempty list of positive sizes")
        return sizes

    @field_validator("per_layer_scale")
    @classmethod
    def _non_negative_scale(cls, scale: Optional[List[float]]) -> Optional[List[float]]:
        if scale is not None and any(s < 0 for s in scale):
            raise ValueError("per_layer_scale entries must be non-negative")
        return scale

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        lo, hi = self.grid_range
        if lo >= hi:
            raise ValueError(f"grid_range must be increasing, got {self.grid_range}")
        if self.per_layer_scale is not None and len(self.per_layer_scale) != len(self.layer_sizes):
            raise ValueError("per_layer_scale needs one entry per hidden layer")
        return self


def resolve_config(kind: ExperimentKind | str, config: Optional[Config] = None,
                   overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Build the configuration for one experiment

    Resolution order: built-in kind defaults < YAML ``defaults`` <
    YAML ``experiments.<kind>`` < overrides (None values are ignored).

    Args:
        kind: Experiment kind
        config: Loaded YAML configuration (default: config/config.yaml)
        overrides: Command-line values

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: Unknown kind, unknown key or invalid value
    """
    try:
        kind = ExperimentKind(kind)
    except ValueError as e:
        raise ConfigError(f"unknown experiment kind {kind!r}") from e
    config = config if config is not None else Config()

    settings: Dict[str, Any] = dict(KIND_DEFAULTS[kind])
    settings.update(config.get_experiment_section(kind.value))
    settings.update({key: value for key, value in (overrides or {}).items() if value is not None})
    settings["kind"] = kind

    if settings.get("data_root") is None:
        settings["data_root"] = config.get_data_root()
    if settings.get("output_dir") is None:
        settings["output_dir"] = config.get_output_root() / kind.value

    try:
        return ExperimentConfig.model_validate(settings)
    except ValidationError as e:
        raise ConfigError(f"invalid {kind.value} configuration:\n{e}") from e

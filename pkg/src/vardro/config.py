"""Experiment configuration with field-level validation.

Every field has a documented default except ``method``, ``dataset``, and
``seed``, which identify the run. Configs are plain JSON documents; see
``ExperimentConfig.model_json_schema()`` for the full surface.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

Method = Literal["erm", "kl_dro", "var_dro"]


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["linear", "mlp"] = "linear"
    hidden_dim: int = Field(default=16, ge=1)
    activation: Literal["tanh", "relu"] = "tanh"


class BlobsSpec(BaseModel):
    """Gaussian clusters, optionally with a fraction of shifted outliers."""

    model_config = ConfigDict(extra="forbid")

    generator: Literal["blobs"] = "blobs"
    n_classes: int = Field(default=2, ge=2)
    train_per_class: int = Field(default=100, ge=1)
    test_per_class: int = Field(default=200, ge=1)
    dim: int = Field(default=4, ge=1)
    separation: float = Field(default=6.0, gt=0)
    spread: float = Field(default=1.0, ge=0)
    outlier_fraction: float = Field(default=0.0, ge=0, lt=1)
    outlier_distance: float = Field(default=12.0, gt=0)

    @model_validator(mode="after")
    def _check_dims(self):
        if self.dim < self.n_classes:
            raise ValueError("dim must be >= n_classes for axis-aligned class means")
        return self


class SpuriousSpec(BaseModel):
    """Core-vs-spurious feature task; test split regenerates at rate 0.5."""

    model_config = ConfigDict(extra="forbid")

    generator: Literal["spurious"] = "spurious"
    n_train: int = Field(default=200, ge=2)
    n_test: int = Field(default=400, ge=2)
    agreement_rate: float = Field(default=0.95, gt=0.5, le=1.0)
    core_strength: float = Field(default=1.0, gt=0)
    spurious_strength: float = Field(default=3.0, ge=0)
    noise_dim: int = Field(default=2, ge=0)
    noise_scale: float = Field(default=1.0, ge=0)


DatasetSpec = Annotated[Union[BlobsSpec, SpuriousSpec], Field(discriminator="generator")]


class ScheduleSpec(BaseModel):
    """Warmup-then-linear-ramp cap. ``total_steps`` defaults to the run
    length in the chosen unit; ``warmup`` defaults to 10% of that."""

    model_config = ConfigDict(extra="forbid")

    eps_start: float = Field(default=0.05, gt=0)
    eps_end: float = Field(default=0.25, gt=0)
    warmup: Optional[int] = Field(default=None, ge=0)
    total_steps: Optional[int] = Field(default=None, ge=1)
    unit: Literal["epoch", "iteration"] = "epoch"

    @model_validator(mode="after")
    def _check_ramp(self):
        if self.eps_end < self.eps_start:
            raise ValueError("eps_end must be >= eps_start")
        if self.total_steps is not None and self.warmup is not None:
            if self.warmup >= self.total_steps:
                raise ValueError("warmup must be < total_steps")
        return self


class CorruptionSpec(BaseModel):
    """Post-training evaluation grid over corruption kinds and severities."""

    model_config = ConfigDict(extra="forbid")

    kinds: list[Literal["gaussian_noise", "feature_dropout", "affine_shift"]] = Field(
        default=["gaussian_noise", "feature_dropout", "affine_shift"], min_length=1
    )
    severities: list[int] = Field(default=[1, 2, 3, 4, 5], min_length=1)

    @model_validator(mode="after")
    def _check_severities(self):
        for s in self.severities:
            if not (1 <= s <= 5):
                raise ValueError("severities must lie in 1..5")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Method
    dataset: DatasetSpec
    seed: int = Field(ge=0)

    model: ModelSpec = Field(default_factory=ModelSpec)
    lr: float = Field(default=0.1, gt=0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=30, ge=1)
    ema_alpha: float = Field(default=0.05, gt=0, lt=1)
    eps_min: float = Field(default=0.01, gt=0)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    label_smoothing: float = Field(default=0.1, ge=0, lt=1)
    rho: float = Field(default=0.1, ge=0)
    momentum: float = Field(default=0.0, ge=0, lt=1)
    weight_decay: float = Field(default=0.0, ge=0)
    eval_at_epochs: list[int] = Field(default_factory=list)
    corruptions: Optional[CorruptionSpec] = None
    output_dir: str = "runs/run"
    # Diagnostic hook: bypass budget assignment with exact zeros so the
    # weighted path can be compared bit-for-bit against plain ERM.
    force_zero_budgets: bool = False

    @model_validator(mode="after")
    def _check_cross_fields(self):
        if self.eps_min > self.schedule.eps_start:
            raise ValueError("eps_min must not exceed schedule.eps_start")
        for e in self.eval_at_epochs:
            if not (1 <= e <= self.epochs):
                raise ValueError("eval_at_epochs entries must lie in 1..epochs")
        return self

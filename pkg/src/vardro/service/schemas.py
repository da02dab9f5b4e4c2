"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import DatasetSpec, ExperimentConfig, Method


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    losses: list[float] = Field(min_length=1)
    epsilons: list[float] = Field(min_length=1)


class SolveResponse(BaseModel):
    weights: list[float]
    objective: float


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig


class TrainResponse(BaseModel):
    summary: dict
    output_dir: str


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    methods: list[Method] = Field(min_length=1)
    seeds: list[int] = Field(min_length=1)
    output_dir: Optional[str] = None


class SweepResponse(BaseModel):
    summary: dict
    output_dir: str


class CorruptionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    severity: int


class EvalRequest(BaseModel):
    """Checkpoint may be inline or a server-side path; the dataset is
    regenerated from its spec and seed (test split conventions apply)."""

    model_config = ConfigDict(extra="forbid")

    checkpoint: Optional[dict] = None
    checkpoint_path: Optional[str] = None
    dataset: DatasetSpec
    seed: int = Field(default=0, ge=0)
    split: str = "test"
    corruption: Optional[CorruptionRequest] = None


class EvalResponse(BaseModel):
    metrics: dict


class HealthResponse(BaseModel):
    status: str
    version: str

"""FastAPI service wrapping the core package.

Endpoints mirror the CLI subcommands: ``/solve`` for the inner LP,
``/train`` and ``/sweep`` for experiments (results land on the server's
filesystem), ``/evaluate`` for checkpoint-by-dataset scoring. Errors carry
a structured ``detail`` with a ``kind`` the CLI maps onto exit codes:
``invalid_config``, ``divergence``, or ``io_failure``.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ExperimentConfig
from ..data import corrupt
from ..errors import (
    BisectionError,
    DivergenceError,
    InvalidBudgetError,
    NonFiniteLossError,
    OutputIoError,
)
from ..experiment import run_experiment, run_sweep
from ..models import load_checkpoint
from ..solver import robust_objective, water_fill
from ..training import build_datasets, evaluate
from .schemas import (
    EvalRequest,
    EvalResponse,
    HealthResponse,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    TrainRequest,
    TrainResponse,
)

app = FastAPI(title="vardro", version=__version__)


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"kind": "invalid_config", "message": message})


def _runtime_error(kind: str, message: str, **extra) -> HTTPException:
    return HTTPException(status_code=500, detail={"kind": kind, "message": message, **extra})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    try:
        weights = water_fill(req.losses, req.epsilons)
        objective = robust_objective(req.losses, weights)
    except (InvalidBudgetError, NonFiniteLossError, ValueError) as exc:
        raise _bad_request(str(exc)) from exc
    return SolveResponse(weights=[float(w) for w in weights], objective=objective)


@app.post("/train", response_model=TrainResponse)
def train_endpoint(req: TrainRequest) -> TrainResponse:
    try:
        summary = run_experiment(req.config)
    except DivergenceError as exc:
        raise _runtime_error("divergence", str(exc), epoch=exc.epoch, batch=exc.batch) from exc
    except BisectionError as exc:
        raise _runtime_error("divergence", str(exc)) from exc
    except OutputIoError as exc:
        raise _runtime_error("io_failure", str(exc)) from exc
    except ValueError as exc:
        raise _bad_request(str(exc)) from exc
    return TrainResponse(summary=summary, output_dir=summary["output_dir"])


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(req: SweepRequest) -> SweepResponse:
    try:
        summary = run_sweep(req.config, req.methods, req.seeds, output_dir=req.output_dir)
    except DivergenceError as exc:
        raise _runtime_error("divergence", str(exc), epoch=exc.epoch, batch=exc.batch) from exc
    except BisectionError as exc:
        raise _runtime_error("divergence", str(exc)) from exc
    except OutputIoError as exc:
        raise _runtime_error("io_failure", str(exc)) from exc
    except ValueError as exc:
        raise _bad_request(str(exc)) from exc
    return SweepResponse(summary=summary, output_dir=summary["output_dir"])


@app.post("/evaluate", response_model=EvalResponse)
def evaluate_endpoint(req: EvalRequest) -> EvalResponse:
    if (req.checkpoint is None) == (req.checkpoint_path is None):
        raise _bad_request("provide exactly one of checkpoint or checkpoint_path")
    try:
        if req.checkpoint is not None:
            arch, params = load_checkpoint(req.checkpoint)
        else:
            try:
                payload = json.loads(Path(req.checkpoint_path).read_text())
            except OSError as exc:
                raise _runtime_error("io_failure", f"cannot read {req.checkpoint_path}: {exc}") from exc
            arch, params = load_checkpoint(payload)
        probe = ExperimentConfig(method="erm", dataset=req.dataset, seed=req.seed)
        train_ds, test_ds = build_datasets(probe)
        dataset = train_ds if req.split == "train" else test_ds
        if req.corruption is not None:
            dataset = corrupt(dataset, req.corruption.kind, req.corruption.severity, seed=req.seed)
        record = evaluate(params, arch, dataset, split=req.split)
    except HTTPException:
        raise
    except (KeyError, ValueError) as exc:
        raise _bad_request(str(exc)) from exc
    return EvalResponse(metrics=record.to_json())

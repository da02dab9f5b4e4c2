"""Min-max training loop wiring the solver, tracker, schedule, and models.

Per batch: forward per-sample losses, update the EMA tracker, normalize the
variance snapshot, map it to budgets under the scheduled cap, pick weights
by method (uniform, global KL tilt, or water-filling), and apply the
weighted gradient step. Everything downstream of the seed is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from dataclasses import replace as dc_replace

import numpy as np

from .baselines import KlBudget, kl_dro_weights, uniform_weights
from .config import BlobsSpec, ExperimentConfig, SpuriousSpec
from .data import Dataset, TrainingView, gen_blobs, gen_spurious, mix_outliers
from .errors import DivergenceError, NonFiniteLossError
from .models import (
    Architecture,
    init_params,
    per_sample_gradients,
    per_sample_losses,
    predict,
    smooth_label_matrix,
    weighted_step,
)
from .schedule import RampSchedule
from .solver import box_bounds, robust_objective, water_fill
from .tracking import SampleStatsStore, assign_budgets, normalize_variances

# Fixed spawn order for the per-run random streams; changing it changes
# every seeded result, so treat it as part of the on-disk format.
_STREAMS = ("train_data", "test_data", "model_init", "shuffle", "outliers_train", "outliers_test")


def seed_streams(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return dict(zip(_STREAMS, children))


def build_datasets(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Train/test pair for the config's dataset spec, seeded from the run seed."""
    streams = seed_streams(config.seed)
    spec = config.dataset
    if isinstance(spec, BlobsSpec):
        train = gen_blobs(
            spec.train_per_class,
            n_classes=spec.n_classes,
            dim=spec.dim,
            separation=spec.separation,
            spread=spec.spread,
            seed=streams["train_data"],
        )
        test = gen_blobs(
            spec.test_per_class,
            n_classes=spec.n_classes,
            dim=spec.dim,
            separation=spec.separation,
            spread=spec.spread,
            seed=streams["test_data"],
        )
        if spec.outlier_fraction > 0.0:
            train = mix_outliers(
                train,
                spec.outlier_fraction,
                distance=spec.outlier_distance,
                jitter=spec.spread,
                seed=streams["outliers_train"],
            )
            test = mix_outliers(
                test,
                spec.outlier_fraction,
                distance=spec.outlier_distance,
                jitter=spec.spread,
                seed=streams["outliers_test"],
            )
        return train, test
    if isinstance(spec, SpuriousSpec):
        train = gen_spurious(
            spec.n_train,
            agreement_rate=spec.agreement_rate,
            core_strength=spec.core_strength,
            spurious_strength=spec.spurious_strength,
            noise_dim=spec.noise_dim,
            noise_scale=spec.noise_scale,
            seed=streams["train_data"],
        )
        test = gen_spurious(
            spec.n_test,
            agreement_rate=0.5,
            core_strength=spec.core_strength,
            spurious_strength=spec.spurious_strength,
            noise_dim=spec.noise_dim,
            noise_scale=spec.noise_scale,
            seed=streams["test_data"],
        )
        return train, test
    raise ValueError(f"unknown dataset spec {type(spec).__name__}")


def architecture_for(config: ExperimentConfig, dataset: Dataset) -> Architecture:
    spec = config.dataset
    n_classes = spec.n_classes if isinstance(spec, BlobsSpec) else 2
    if config.model.kind == "linear":
        return Architecture(input_dim=dataset.dim, n_classes=n_classes)
    return Architecture(
        input_dim=dataset.dim,
        n_classes=n_classes,
        hidden_dim=config.model.hidden_dim,
        activation=config.model.activation,
    )


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    split: str
    accuracy: float
    mean_loss: float
    worst_group_accuracy: float | None = None
    group_accuracies: dict = field(default_factory=dict)
    eps_mean: float = 0.0
    eps_max: float = 0.0
    upper_bound_frac: float = 0.0

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "split": self.split,
            "accuracy": self.accuracy,
            "mean_loss": self.mean_loss,
            "worst_group_accuracy": self.worst_group_accuracy,
            "group_accuracies": dict(sorted(self.group_accuracies.items())),
            "eps_mean": self.eps_mean,
            "eps_max": self.eps_max,
            "upper_bound_frac": self.upper_bound_frac,
        }


@dataclass(frozen=True)
class BatchTrace:
    """Per-batch diagnostics, collected only when requested by tests."""

    epoch: int
    batch: int
    mean_loss: float
    weighted_loss: float
    cap: float
    eps_min: float
    eps_max: float
    hit_upper: bool


@dataclass
class TrainResult:
    params: np.ndarray
    arch: Architecture
    records: list[MetricsRecord]
    store: SampleStatsStore | None = None
    trace: list[BatchTrace] | None = None


def evaluate(
    params: np.ndarray,
    arch: Architecture,
    dataset: Dataset,
    split: str = "test",
    epoch: int = 0,
) -> MetricsRecord:
    """Accuracy, mean unsmoothed cross-entropy, and per-group/worst-group
    accuracy when the dataset carries tags."""
    if dataset.n == 0:
        raise ValueError("cannot evaluate an empty dataset")
    preds = predict(params, arch, dataset.features)
    correct = preds == dataset.labels
    targets = smooth_label_matrix(dataset.labels, arch.n_classes, 0.0)
    losses = per_sample_losses(params, arch, dataset.features, targets)
    group_acc: dict[str, float] = {}
    worst: float | None = None
    if dataset.groups is not None:
        for tag in dataset.group_names():
            mask = dataset.groups == tag
            group_acc[tag] = float(correct[mask].mean())
        worst = min(group_acc.values())
    return MetricsRecord(
        epoch=epoch,
        split=split,
        accuracy=float(correct.mean()),
        mean_loss=float(losses.mean()),
        worst_group_accuracy=worst,
        group_accuracies=group_acc,
    )


def _batch_weights(
    config: ExperimentConfig,
    losses: np.ndarray,
    ids: np.ndarray,
    store: SampleStatsStore | None,
    cap: float,
):
    """Method dispatch; returns (weights, budgets or None)."""
    if config.method == "erm":
        return uniform_weights(losses.size), None
    if config.method == "kl_dro":
        return kl_dro_weights(losses, KlBudget(rho=config.rho)), None
    snapshot = store.observe_batch(ids, losses)
    normalized = normalize_variances(snapshot)
    budgets = assign_budgets(normalized, config.eps_min, cap)
    if config.force_zero_budgets:
        budgets = np.zeros_like(budgets)
    return water_fill(losses, budgets), budgets


def train(
    config: ExperimentConfig,
    train_ds: Dataset | None = None,
    test_ds: Dataset | None = None,
    collect_trace: bool = False,
) -> TrainResult:
    """Run one seeded experiment; returns final parameters plus per-epoch
    metrics (train split every epoch, test split at ``eval_at_epochs`` and
    at the end). Raises :class:`DivergenceError` with the epoch and batch
    index if a loss or update goes non-finite."""
    if train_ds is None or test_ds is None:
        built_train, built_test = build_datasets(config)
        train_ds = train_ds if train_ds is not None else built_train
        test_ds = test_ds if test_ds is not None else built_test

    view: TrainingView = train_ds.training_view()
    arch = architecture_for(config, train_ds)
    streams = seed_streams(config.seed)
    params = init_params(arch, streams["model_init"])
    shuffle_rng = np.random.default_rng(streams["shuffle"])

    n = view.features.shape[0]
    batch_size = min(config.batch_size, n)
    n_batches = (n + batch_size - 1) // batch_size
    per_epoch = config.schedule.unit == "epoch"
    default_total = config.epochs if per_epoch else config.epochs * n_batches
    total = config.schedule.total_steps or default_total
    warmup = config.schedule.warmup
    if warmup is None:
        warmup = int(0.1 * total)
    schedule = RampSchedule(
        eps_start=config.schedule.eps_start,
        eps_end=config.schedule.eps_end,
        warmup=warmup,
        total=total,
    )

    store = SampleStatsStore(alpha=config.ema_alpha) if config.method == "var_dro" else None
    velocity = np.zeros_like(params)
    records: list[MetricsRecord] = []
    trace: list[BatchTrace] = []
    step = 0

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        epoch_budgets: list[np.ndarray] = []
        epoch_upper_hits = 0
        for batch_idx in range(n_batches):
            rows = order[batch_idx * batch_size : (batch_idx + 1) * batch_size]
            x = view.features[rows]
            y = view.labels[rows]
            ids = view.ids[rows]
            targets = smooth_label_matrix(y, arch.n_classes, config.label_smoothing)
            # Runs longer than the configured ramp hold the cap at eps_end.
            t = min(epoch if per_epoch else step, schedule.total)
            cap = schedule.cap_at(t)
            try:
                losses = per_sample_losses(params, arch, x, targets)
                weights, budgets = _batch_weights(config, losses, ids, store, cap)
                grads = per_sample_gradients(params, arch, x, targets)
                if config.momentum == 0.0 and config.weight_decay == 0.0:
                    params = weighted_step(params, grads, weights, config.lr)
                else:
                    # Momentum/decay sit outside the plain weighted update.
                    direction = weights @ grads + config.weight_decay * params
                    velocity = config.momentum * velocity + direction
                    params = params - config.lr * velocity
                    if not np.all(np.isfinite(params)):
                        raise NonFiniteLossError("non-finite parameters after update")
            except NonFiniteLossError as exc:
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch + 1}, batch {batch_idx}: {exc}",
                    epoch=epoch + 1,
                    batch=batch_idx,
                ) from exc
            hit_upper = False
            if budgets is not None:
                epoch_budgets.append(budgets)
                box = box_bounds(budgets, budgets.size)
                hit_upper = bool(np.any(weights >= box.upper - 1e-12))
                epoch_upper_hits += int(hit_upper)
            if collect_trace:
                trace.append(
                    BatchTrace(
                        epoch=epoch + 1,
                        batch=batch_idx,
                        mean_loss=float(losses.mean()),
                        weighted_loss=robust_objective(losses, weights),
                        cap=cap,
                        eps_min=float(budgets.min()) if budgets is not None else 0.0,
                        eps_max=float(budgets.max()) if budgets is not None else 0.0,
                        hit_upper=hit_upper,
                    )
                )
            step += 1

        all_eps = np.concatenate(epoch_budgets) if epoch_budgets else np.zeros(1)
        train_record = evaluate(params, arch, train_ds, split="train", epoch=epoch + 1)
        records.append(
            dc_replace(
                train_record,
                eps_mean=float(all_eps.mean()),
                eps_max=float(all_eps.max()),
                upper_bound_frac=epoch_upper_hits / n_batches,
            )
        )
        if (epoch + 1) in config.eval_at_epochs:
            records.append(evaluate(params, arch, test_ds, split="test", epoch=epoch + 1))

    records.append(evaluate(params, arch, test_ds, split="test", epoch=config.epochs))
    return TrainResult(
        params=params,
        arch=arch,
        records=records,
        store=store,
        trace=trace if collect_trace else None,
    )

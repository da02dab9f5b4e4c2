"""Seeded synthetic datasets with shift and outlier structure.

Three families:

* ``gen_blobs``: isotropic Gaussian clusters, one per class, means placed on
  scaled coordinate axes, near-separable by construction.
* ``gen_spurious``: binary labels carried by a core feature plus a spurious
  feature that agrees with the label at a chosen rate; group tags record the
  (label, spurious sign) cell for evaluation only.
* ``corrupt`` / ``mix_outliers``: label-preserving test-time feature
  transforms, and replacement of a fraction of samples with far-away
  shifted clusters.

Group tags never reach the training loop: the trainer consumes a
:class:`TrainingView`, which carries only features, labels, and ids.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

CORRUPTION_KINDS = ("gaussian_noise", "feature_dropout", "affine_shift")


@dataclass(frozen=True)
class TrainingView:
    """What the optimizer is allowed to see: no group tags, by construction."""

    features: np.ndarray
    labels: np.ndarray
    ids: np.ndarray


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # n x d float64
    labels: np.ndarray  # n ints in [0, n_classes)
    ids: np.ndarray  # n stable nonnegative ints, follow their rows
    groups: np.ndarray | None = None  # n string tags, evaluation only

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.ids.shape != (n,):
            raise ValueError("features, labels, and ids must agree on length")
        if self.groups is not None and self.groups.shape != (n,):
            raise ValueError("group tags must be per-sample")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def training_view(self) -> TrainingView:
        return TrainingView(features=self.features, labels=self.labels, ids=self.ids)

    def group_names(self) -> list[str]:
        if self.groups is None:
            return []
        return sorted(set(self.groups.tolist()))


def gen_blobs(
    n_per_class: int,
    n_classes: int = 2,
    dim: int = 4,
    separation: float = 6.0,
    spread: float = 1.0,
    seed=0,
) -> Dataset:
    """Gaussian cluster per class, mean at ``separation`` along axis k."""
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if n_per_class < 1:
        raise ValueError("need at least one sample per class")
    if dim < n_classes:
        raise ValueError("blobs require dim >= n_classes (one axis per class mean)")
    if spread < 0.0:
        raise ValueError("spread must be nonnegative")
    rng = np.random.default_rng(seed)
    means = np.zeros((n_classes, dim))
    means[np.arange(n_classes), np.arange(n_classes)] = separation
    labels = np.repeat(np.arange(n_classes), n_per_class)
    features = means[labels] + spread * rng.standard_normal((labels.size, dim))
    return Dataset(
        features=features,
        labels=labels,
        ids=np.arange(labels.size),
        groups=None,
    )


def gen_spurious(
    n: int,
    agreement_rate: float,
    core_strength: float = 1.0,
    spurious_strength: float = 3.0,
    noise_dim: int = 2,
    noise_scale: float = 1.0,
    seed=0,
) -> Dataset:
    """Binary task whose label rides on feature 0 while feature 1 agrees
    with the label with probability ``agreement_rate``.

    Group tag = (label, spurious sign). A rate of 0.5 produces uncorrelated
    splits (the test-time convention); rates in (0.5, 1] produce the
    majority correlation used for training data.
    """
    if not (0.5 <= agreement_rate <= 1.0):
        raise ValueError("agreement_rate must lie in [0.5, 1]")
    if n < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    sign = 2.0 * labels - 1.0
    agree = rng.random(n) < agreement_rate
    spur_sign = np.where(agree, sign, -sign)
    cols = [
        core_strength * sign + noise_scale * rng.standard_normal(n),
        spurious_strength * spur_sign + noise_scale * rng.standard_normal(n),
    ]
    if noise_dim > 0:
        cols.append(noise_scale * rng.standard_normal((n, noise_dim)))
    features = np.column_stack(cols)
    groups = np.array(
        [f"y{y}_s{'p' if s > 0 else 'n'}" for y, s in zip(labels, spur_sign)]
    )
    return Dataset(features=features, labels=labels, ids=np.arange(n), groups=groups)


def corrupt(dataset: Dataset, kind: str, severity: int, seed=0) -> Dataset:
    """Label-preserving feature corruption, monotone in severity 1..5.

    Operates on a copy; the input dataset is never mutated. Magnitudes are
    scaled by the dataset's overall feature standard deviation so severities
    mean the same thing across generators.
    """
    if kind not in CORRUPTION_KINDS:
        raise ValueError(f"unknown corruption kind {kind!r}")
    if not isinstance(severity, (int, np.integer)) or not (1 <= severity <= 5):
        raise ValueError("severity must be an integer in 1..5")
    rng = np.random.default_rng([seed, CORRUPTION_KINDS.index(kind), severity])
    x = dataset.features.copy()
    scale = float(x.std())
    if kind == "gaussian_noise":
        x = x + 0.4 * severity * scale * rng.standard_normal(x.shape)
    elif kind == "feature_dropout":
        keep = rng.random(x.shape) >= 0.12 * severity
        x = x * keep
    else:  # affine_shift
        direction = rng.standard_normal(x.shape[1])
        direction /= np.linalg.norm(direction)
        x = x + 0.35 * severity * scale * direction
    return replace(dataset, features=x)


def mix_outliers(
    dataset: Dataset,
    fraction: float,
    distance: float = 12.0,
    jitter: float = 1.0,
    seed=0,
) -> Dataset:
    """Replace ``round(fraction * n)`` samples with far-away points.

    Each replaced sample keeps its label but moves to a shifted cluster at
    ``distance`` from its class mean, along the ray from the mean through
    the origin (a deterministic direction, so train and test outliers share
    structure). Replaced rows are tagged "outlier", the rest "inlier".
    """
    if not (0.0 <= fraction < 1.0):
        raise ValueError("fraction must lie in [0, 1)")
    if distance <= 0.0:
        raise ValueError("distance must be positive")
    n_out = int(round(fraction * dataset.n))
    if n_out == 0:
        return replace(dataset)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(dataset.n, size=n_out, replace=False)
    x = dataset.features.copy()
    centers = _outlier_centers(dataset, distance)
    tags = ["inlier"] * dataset.n
    for row in chosen:
        k = int(dataset.labels[row])
        x[row] = centers[k] + jitter * rng.standard_normal(dataset.dim)
        tags[row] = "outlier"
    return replace(dataset, features=x, groups=np.array(tags))


def _outlier_centers(dataset: Dataset, distance: float) -> np.ndarray:
    """Per-class outlier cluster centers at ``distance`` from the empirical
    class means, pointing back through the origin."""
    k = dataset.n_classes
    centers = np.zeros((k, dataset.dim))
    for c in range(k):
        mean = dataset.features[dataset.labels == c].mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 1e-12:
            direction = mean / norm
        else:
            direction = np.zeros(dataset.dim)
            direction[c % dataset.dim] = 1.0
        centers[c] = mean - distance * direction
    return centers

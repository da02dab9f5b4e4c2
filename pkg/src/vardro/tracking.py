"""Online per-sample loss statistics and budget assignment.

Each training example, keyed by a stable integer id, carries exponentially
smoothed estimates of its loss mean and variance:

    mu' = (1 - alpha) * mu + alpha * loss
    v'  = (1 - alpha) * v  + alpha * (loss - mu)^2

with the squared deviation measured against the pre-update mean. Variances
are min-max normalized within each batch and mapped affinely onto
[eps_min, eps_cap] to produce per-sample robustness budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBudgetError, NonFiniteLossError

DEFAULT_ALPHA = 0.05
DEFAULT_GUARD = 1e-8


@dataclass(frozen=True)
class SampleStats:
    """EMA loss mean/variance for one sample; ``observed`` is False until
    the first loss arrives."""

    mean: float = 0.0
    variance: float = 0.0
    observed: bool = False


def ema_update(stats: SampleStats, loss: float, alpha: float) -> SampleStats:
    """One EMA step. A fresh sample initializes to (mean=loss, variance=0),
    which avoids the bias a zero prior would leave in the mean and gives
    once-seen samples a zero variance."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    loss = float(loss)
    if not math.isfinite(loss):
        raise NonFiniteLossError("loss must be finite")
    if not stats.observed:
        return SampleStats(mean=loss, variance=0.0, observed=True)
    dev = loss - stats.mean
    # mu + alpha*dev is the same recursion as (1-alpha)*mu + alpha*loss but
    # holds the fixed point mu == loss exactly in float arithmetic.
    return SampleStats(
        mean=stats.mean + alpha * dev,
        variance=(1.0 - alpha) * stats.variance + alpha * dev * dev,
        observed=True,
    )


class SampleStatsStore:
    """Map from stable sample id to :class:`SampleStats`.

    Single-writer: one training loop mutates the store; snapshots returned
    by :meth:`observe_batch` are fresh arrays safe to share.
    """

    def __init__(self, alpha: float = DEFAULT_ALPHA):
        if not (0.0 < alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        self.alpha = float(alpha)
        self._stats: dict[int, SampleStats] = {}

    def __len__(self) -> int:
        return len(self._stats)

    def get(self, sample_id: int) -> SampleStats:
        return self._stats.get(int(sample_id), SampleStats())

    def observe_batch(self, ids, losses) -> np.ndarray:
        """Apply one EMA step per (id, loss) pair; returns the post-update
        variances in batch order. Duplicate ids within a batch are rejected
        because the update order would be ambiguous."""
        id_arr = np.asarray(ids)
        loss_arr = np.asarray(losses, dtype=float)
        if id_arr.ndim != 1 or id_arr.shape != loss_arr.shape:
            raise ValueError("ids and losses must be equal-length 1-d sequences")
        if not np.all(np.isfinite(loss_arr)):
            raise NonFiniteLossError("losses must all be finite")
        if not np.issubdtype(id_arr.dtype, np.integer) or np.any(id_arr < 0):
            raise ValueError("sample ids must be nonnegative integers")
        if len(np.unique(id_arr)) != id_arr.size:
            raise ValueError("duplicate sample id within one batch")

        out = np.empty(id_arr.size, dtype=float)
        for k in range(id_arr.size):
            i = int(id_arr[k])
            updated = ema_update(self._stats.get(i, SampleStats()), loss_arr[k], self.alpha)
            self._stats[i] = updated
            out[k] = updated.variance
        return out

    def to_json(self) -> dict:
        """Checkpoint form: {"alpha": x, "stats": [{"id", "mu", "v"}, ...]}."""
        return {
            "alpha": self.alpha,
            "stats": [
                {"id": i, "mu": s.mean, "v": s.variance}
                for i, s in sorted(self._stats.items())
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SampleStatsStore":
        store = cls(alpha=float(payload["alpha"]))
        for entry in payload["stats"]:
            store._stats[int(entry["id"])] = SampleStats(
                mean=float(entry["mu"]), variance=float(entry["v"]), observed=True
            )
        return store


def normalize_variances(variances, guard: float = DEFAULT_GUARD) -> np.ndarray:
    """Min-max normalization within a batch: (v - min) / (max - min + guard).

    The guard keeps the division finite when all variances coincide, so the
    output always lands in [0, 1).
    """
    v = np.asarray(variances, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("variances must be a nonempty 1-d sequence")
    if guard <= 0.0:
        raise ValueError("guard must be positive")
    if not np.all(np.isfinite(v)) or np.any(v < 0.0):
        raise ValueError("variances must be finite and nonnegative")
    lo = float(v.min())
    hi = float(v.max())
    return (v - lo) / (hi - lo + guard)


def assign_budgets(normalized, eps_min: float, eps_cap: float) -> np.ndarray:
    """Affine map eps_i = eps_min + (eps_cap - eps_min) * vbar_i.

    A strictly positive eps_min keeps every box nondegenerate; outputs lie
    in [eps_min, eps_cap].
    """
    if eps_min <= 0.0:
        raise InvalidBudgetError("eps_min must be > 0")
    if eps_cap < eps_min:
        raise InvalidBudgetError("eps_cap must be >= eps_min")
    vbar = np.asarray(normalized, dtype=float)
    if vbar.ndim != 1 or vbar.size == 0:
        raise ValueError("normalized variances must be a nonempty 1-d sequence")
    if np.any(vbar < 0.0) or np.any(vbar > 1.0):
        raise ValueError("normalized variances must lie in [0, 1]")
    return eps_min + (eps_cap - eps_min) * vbar

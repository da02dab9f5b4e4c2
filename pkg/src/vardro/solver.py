"""Exact inner maximization over the per-sample KL-box polytope.

For a mini-batch of size B with per-sample radii eps_i >= 0, the adversary
picks weights q on the probability simplex subject to per-coordinate boxes

    exp(-eps_i) / B  <=  q_i  <=  exp(eps_i) / B.

Maximizing sum_i q_i * loss_i over that polytope is a linear program whose
optimum keeps every coordinate at a bound except at most one pivot. The
greedy water-filling routine below is the exact solver used in training;
``lp_oracle`` is an exhaustive vertex enumeration kept for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBudgetError, NonFiniteLossError

# |sum(q) - 1| tolerance enforced on every returned weight vector.
SIMPLEX_TOL = 1e-9
# Slack allowed when checking a coordinate against its box bounds.
BOX_TOL = 1e-12
# Vertex enumeration is O(2^B * B); keep it test-sized.
ORACLE_MAX_SIZE = 12


def as_losses(values) -> np.ndarray:
    """Validate and return a 1-d float array of finite per-sample losses."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise NonFiniteLossError("losses must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteLossError("losses must all be finite")
    return arr


def as_budgets(values, batch_size: int | None = None) -> np.ndarray:
    """Validate per-sample radii: finite, nonnegative, optionally sized."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidBudgetError("budgets must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidBudgetError("budgets must all be finite")
    if np.any(arr < 0.0):
        raise InvalidBudgetError("budgets must be nonnegative")
    if batch_size is not None and arr.size != batch_size:
        raise InvalidBudgetError(
            f"budget length {arr.size} does not match batch size {batch_size}"
        )
    return arr


@dataclass(frozen=True)
class WeightBox:
    """Per-coordinate bounds around the batch base measure 1/B."""

    lower: np.ndarray
    upper: np.ndarray
    base: float

    @property
    def size(self) -> int:
        return int(self.lower.size)

    def contains(self, weights: np.ndarray, tol: float = BOX_TOL) -> bool:
        w = np.asarray(weights, dtype=float)
        return bool(
            w.shape == self.lower.shape
            and np.all(w >= self.lower - tol)
            and np.all(w <= self.upper + tol)
        )


def box_bounds(budgets, batch_size: int) -> WeightBox:
    """Box (a, b) with a_i = exp(-eps_i)/B and b_i = exp(eps_i)/B.

    Feasibility against the simplex holds by construction: a_i <= 1/B <= b_i,
    so sum(a) <= 1 <= sum(b).
    """
    if batch_size < 1:
        raise InvalidBudgetError("batch_size must be a positive integer")
    eps = as_budgets(budgets, batch_size)
    base = 1.0 / batch_size
    return WeightBox(lower=np.exp(-eps) * base, upper=np.exp(eps) * base, base=base)


def water_fill(losses, budgets) -> np.ndarray:
    """Exact maximizer of sum(q * losses) over the simplex-box polytope.

    Every weight starts at its lower bound; the leftover mass
    R = 1 - sum(lower) is poured into coordinates in descending-loss order
    (ties broken by ascending original index), raising each to its upper
    bound until the mass runs out. At most one coordinate, the last one
    filled, ends strictly inside its box. With all budgets zero the box
    collapses and the output is exactly uniform.
    """
    loss = as_losses(losses)
    box = box_bounds(as_budgets(budgets, loss.size), loss.size)

    q = box.lower.copy()
    residual = 1.0 - float(q.sum())
    pivot = -1
    if residual > 0.0:
        for i in np.argsort(-loss, kind="stable"):
            room = box.upper[i] - box.lower[i]
            delta = residual if room > residual else room
            if delta > 0.0:
                q[i] += delta
                residual -= delta
                pivot = int(i)
            if residual <= 0.0:
                break

    # Absorb float drift into the pivot so the simplex constraint stays tight
    # without renormalizing the coordinates that sit exactly on their bounds.
    drift = 1.0 - float(q.sum())
    if drift != 0.0 and pivot >= 0:
        q[pivot] = min(max(q[pivot] + drift, box.lower[pivot]), box.upper[pivot])
    if abs(float(q.sum()) - 1.0) > SIMPLEX_TOL:
        raise RuntimeError("water_fill internal error: weights left the simplex")
    return q


def robust_objective(losses, weights) -> float:
    """Weighted loss sum(q_i * loss_i) for a given weight vector."""
    loss = as_losses(losses)
    q = np.asarray(weights, dtype=float)
    if q.shape != loss.shape:
        raise ValueError(
            f"weights length {q.size} does not match losses length {loss.size}"
        )
    return float(np.dot(q, loss))


def lp_oracle(losses, box: WeightBox) -> np.ndarray:
    """Brute-force solver for the simplex-box LP, for verification only.

    Any vertex of the feasible polytope has at most one coordinate strictly
    between its bounds, so enumerating every subset of coordinates pinned at
    the upper bound together with one pivot coordinate absorbing the mass
    residual (the rest at the lower bound) visits every vertex; a pivot
    landing exactly on a bound covers the all-at-bounds assignments. The
    feasible candidate with maximal objective is returned.
    """
    loss = as_losses(losses)
    n = loss.size
    if n != box.size:
        raise ValueError(f"box size {box.size} does not match losses length {n}")
    if n > ORACLE_MAX_SIZE:
        raise ValueError(f"lp_oracle is capped at B <= {ORACLE_MAX_SIZE}, got {n}")

    a, b = box.lower, box.upper
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float)
    upper_sum = masks @ b
    lower_sum = (1.0 - masks) @ a
    value_at_bounds = masks @ (b * loss) + (1.0 - masks) @ (a * loss)

    # residual[s, j]: pivot value for subset s at upper bounds and pivot j,
    # everyone else at the lower bound.
    residual = 1.0 - upper_sum[:, None] - lower_sum[:, None] + a[None, :]
    feasible = (
        (masks == 0.0)
        & (residual >= a[None, :] - BOX_TOL)
        & (residual <= b[None, :] + BOX_TOL)
    )
    values = value_at_bounds[:, None] + (residual - a[None, :]) * loss[None, :]
    values = np.where(feasible, values, -np.inf)

    if not feasible.any():
        raise AssertionError("simplex-box polytope unexpectedly has no vertex")
    flat = int(np.argmax(values))
    subset, pivot = divmod(flat, n)
    q = a.copy()
    q[masks[subset].astype(bool)] = b[masks[subset].astype(bool)]
    q[pivot] = min(max(residual[subset, pivot], a[pivot]), b[pivot])
    return q

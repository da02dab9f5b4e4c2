"""Comparison weighters: uniform (ERM) and global-budget KL-DRO.

The KL-DRO adversary maximizes sum(q_i * loss_i) subject to
KL(q || uniform) <= rho. The optimum is an exponential tilt
q_i(lam) proportional to exp(loss_i / lam); KL(q(lam) || uniform) is
continuous and strictly decreasing in the temperature lam, so a monotone
bisection pins the binding constraint to tolerance. When rho exceeds the
largest reachable divergence log(B / #argmax), the constraint is slack and
the limit point splits all mass over the maximal-loss samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BisectionError
from .solver import as_losses


@dataclass(frozen=True)
class KlBudget:
    """Global divergence radius (nats) plus bisection controls."""

    rho: float
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.rho < 0.0:
            raise ValueError("rho must be nonnegative")
        if self.tol <= 0.0 or self.max_iter < 1:
            raise ValueError("need tol > 0 and max_iter >= 1")


def uniform_weights(batch_size: int) -> np.ndarray:
    """ERM weights q_i = 1/B."""
    if batch_size < 1:
        raise ValueError("batch_size must be a positive integer")
    return np.full(batch_size, 1.0 / batch_size)


def _tilted(losses: np.ndarray, lam: float) -> np.ndarray:
    z = losses / lam
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def _kl_to_uniform(q: np.ndarray) -> float:
    n = q.size
    terms = np.where(q > 0.0, q * np.log(np.maximum(q, 1e-300)), 0.0)
    return float(np.log(n) + terms.sum())


def kl_dro_weights(losses, budget: KlBudget) -> np.ndarray:
    """Worst-case weights under a single global KL budget.

    rho = 0 and constant losses both short-circuit to uniform. Otherwise
    bisection on the temperature drives KL(q || uniform) to rho within
    ``budget.tol``; failure to bracket or converge raises
    :class:`BisectionError` rather than returning a truncated answer.
    """
    loss = as_losses(losses)
    n = loss.size
    if budget.rho == 0.0 or n == 1:
        return uniform_weights(n)
    spread = float(loss.max() - loss.min())
    if spread == 0.0:
        return uniform_weights(n)

    # Largest reachable divergence: mass split over the argmax set.
    argmax = loss == loss.max()
    kl_sup = float(np.log(n / argmax.sum()))
    if budget.rho >= kl_sup - 1e-12:
        q = argmax.astype(float)
        return q / q.sum()

    # Bracket the binding temperature, extending toward the float floor for
    # near-tied losses where lam* can be many orders below the spread.
    lo, hi = 1e-6 * spread, 1e6 * spread
    lam_floor = 1e-306 * max(spread, 1.0)
    while _kl_to_uniform(_tilted(loss, lo)) < budget.rho:
        lo /= 10.0
        if lo < lam_floor:
            # Even the most concentrated representable tilt sits inside the
            # ball; it is feasible and within one ulp of the supremum.
            return _tilted(loss, lam_floor)
    for _ in range(60):
        if _kl_to_uniform(_tilted(loss, hi)) <= budget.rho:
            break
        hi *= 10.0
    else:
        raise BisectionError("could not bracket the KL constraint from above")

    # Bisect in log-temperature: same monotone bracket, but resolves binding
    # temperatures across the whole float exponent range.
    log_lo, log_hi = np.log(lo), np.log(hi)
    for _ in range(budget.max_iter):
        lam = float(np.exp(0.5 * (log_lo + log_hi)))
        q = _tilted(loss, lam)
        kl = _kl_to_uniform(q)
        if abs(kl - budget.rho) <= budget.tol:
            return q
        if kl > budget.rho:
            log_lo = np.log(lam)
        else:
            log_hi = np.log(lam)
    raise BisectionError(
        f"KL bisection did not reach tolerance {budget.tol} in {budget.max_iter} iterations"
    )

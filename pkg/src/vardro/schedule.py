"""Time-varying global cap on per-sample budgets: warmup then linear ramp."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RampSchedule:
    """Cap held at ``eps_start`` for ``warmup`` steps, then ramped linearly
    so that the cap reaches ``eps_end`` exactly at step ``total``.

    ``total`` counts epochs or iterations depending on how the caller steps
    the clock; the schedule itself is unit-agnostic.
    """

    eps_start: float
    eps_end: float
    warmup: int
    total: int

    def __post_init__(self):
        if not (0.0 < self.eps_start <= self.eps_end):
            raise ValueError("require 0 < eps_start <= eps_end")
        if not (0 <= self.warmup < self.total):
            raise ValueError("require 0 <= warmup < total")

    def cap_at(self, t: int) -> float:
        """Global cap at step ``t``; valid for 0 <= t <= total."""
        if t < 0 or t > self.total:
            raise ValueError(f"step {t} outside schedule range [0, {self.total}]")
        if t < self.warmup:
            return self.eps_start
        if t >= self.total:
            return self.eps_end
        frac = (t - self.warmup) / (self.total - self.warmup)
        cap = self.eps_start + frac * (self.eps_end - self.eps_start)
        # Clamp away the last ulp of float error so the cap never leaves
        # [eps_start, eps_end] on a dense grid.
        return min(max(cap, self.eps_start), self.eps_end)

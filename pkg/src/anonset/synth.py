"""Synthetic payment workload generation.

Each user sends repeatedly; gaps between that user's sends are Poisson
distributed with mean ``mean_gap`` ticks (the first send sits one gap
after tick 0).  Values are lognormal around a median of 84 whole units
with a wide spread, rounded half away from zero and clamped to >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PaymentTable, SimConfig


@dataclass(frozen=True)
class ValueModel:
    """Lognormal payment value distribution in whole currency units."""

    log_median: float = math.log(84.0)
    log_sigma: float = 2.4

    def sample_values(self, n: int, rng: np.random.Generator) -> np.ndarray:
        x = np.exp(self.log_median + self.log_sigma * rng.standard_normal(n))
        # round half away from zero, then clamp to the 1-unit minimum
        return np.maximum(np.floor(x + 0.5), 1.0).astype(np.int64)


def sample_value(model: ValueModel, rng: np.random.Generator) -> int:
    return int(model.sample_values(1, rng)[0])


@dataclass(frozen=True)
class SenderModel:
    """Per-user renewal process with Poisson inter-send gaps."""

    mean_gap: int

    def sample_gaps(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.poisson(self.mean_gap, n).astype(np.int64)


def generate_stream(
    config: SimConfig,
    horizon: int,
    rng: np.random.Generator | None = None,
    value_model: ValueModel | None = None,
) -> PaymentTable:
    """Generate all payments with time < horizon, sorted by (time, sender).

    Deterministic for a given rng state: every round draws one gap per
    user regardless of who is still active, and values are drawn only
    after the final (time, sender) order is fixed.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if value_model is None:
        value_model = ValueModel()

    users = config.users
    sender_model = SenderModel(config.mean_gap)
    user_ids = np.arange(users, dtype=np.int64)

    next_time = sender_model.sample_gaps(users, rng)
    times_parts: list[np.ndarray] = []
    senders_parts: list[np.ndarray] = []
    active = next_time < horizon
    while active.any():
        times_parts.append(next_time[active].copy())
        senders_parts.append(user_ids[active])
        next_time = next_time + np.where(active, sender_model.sample_gaps(users, rng), 0)
        active = next_time < horizon

    if times_parts:
        times = np.concatenate(times_parts)
        senders = np.concatenate(senders_parts)
    else:
        times = np.empty(0, dtype=np.int64)
        senders = np.empty(0, dtype=np.int64)

    order = np.lexsort((senders, times))
    times = times[order]
    senders = senders[order]
    values = value_model.sample_values(len(times), rng)

    return PaymentTable(
        ids=np.arange(len(times), dtype=np.int64),
        times=times,
        senders=senders,
        values=values,
        receivers=None,
        warmup_ticks=config.warmup_ticks,
    )

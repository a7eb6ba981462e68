"""Epoch-based sender anonymity metrics over a payment stream.

An epoch is a fixed window of epoch_len ticks; epoch index = time // epoch_len.
Within an epoch a payment's anonymity set is the set of users an observer
cannot distinguish the sender from:

  active        everyone who sent in the epoch
  active_value  everyone who sent the same (bucketed) value in the epoch

Two behavioural counter-strategies are measured as well: paying more so the
value matches someone else's (pay_more), and waiting for a later payment of
the same value from another sender (wait_time_to_match).

The per-Epoch functions are the readable reference path; ``batch_*``
equivalents work on whole columnar streams and are what the experiment
runner uses.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .buckets import BucketStrategy, IDENTITY
from .model import Payment, PaymentTable


@dataclass
class Epoch:
    index: int
    start: int
    length: int
    payments: list[Payment] = field(default_factory=list)


def partition_epochs(payments: Sequence[Payment], epoch_len: int) -> list[Epoch]:
    """Group payments into epochs of epoch_len ticks; empty epochs are omitted
    but indices keep their absolute position."""
    if epoch_len < 1:
        raise ValueError("epoch_len must be >= 1")
    by_index: dict[int, Epoch] = {}
    for p in payments:
        idx = p.time // epoch_len
        ep = by_index.get(idx)
        if ep is None:
            ep = Epoch(index=idx, start=idx * epoch_len, length=epoch_len)
            by_index[idx] = ep
        ep.payments.append(p)
    return [by_index[i] for i in sorted(by_index)]


def anon_active(epoch: Epoch) -> dict[int, int]:
    """payment id -> number of distinct senders in the epoch."""
    size = len({p.sender for p in epoch.payments})
    return {p.id: size for p in epoch.payments}


def anon_active_value(epoch: Epoch, strategy: BucketStrategy = IDENTITY) -> dict[int, int]:
    """payment id -> distinct senders of the same bucketed value in the epoch."""
    senders_of: dict[int, set[int]] = {}
    bucketed = {}
    for p in epoch.payments:
        b = strategy.apply(p.value)
        bucketed[p.id] = b
        senders_of.setdefault(b, set()).add(p.sender)
    return {p.id: len(senders_of[bucketed[p.id]]) for p in epoch.payments}


NO_MATCH = None


def pay_more(epoch: Epoch) -> dict[int, float | None]:
    """Relative cost of moving each payment up to a value someone else pays.

    0.0 when another sender already pays the same value; otherwise
    (v' - v) / v for the smallest epoch value v' > v paid by another
    sender; None when no such value exists.
    """
    senders_of: dict[int, set[int]] = {}
    for p in epoch.payments:
        senders_of.setdefault(p.value, set()).add(p.sender)
    values = sorted(senders_of)

    out: dict[int, float | None] = {}
    for p in epoch.payments:
        others = senders_of[p.value] - {p.sender}
        if others:
            out[p.id] = 0.0
            continue
        cost: float | None = NO_MATCH
        for i in range(bisect_right(values, p.value), len(values)):
            v2 = values[i]
            if senders_of[v2] != {p.sender}:
                cost = (v2 - p.value) / p.value
                break
        out[p.id] = cost
    return out


def wait_time_to_match(payments: Sequence[Payment], cap: int = 1200) -> dict[int, int]:
    """Ticks until a later payment of the same value from another sender.

    Same-tick payments count as wait 0; when nothing matches within cap
    ticks the cap itself is reported.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    rows = sorted(payments, key=lambda p: (p.time, p.sender))
    out: dict[int, int] = {}
    for i, p in enumerate(rows):
        wait = cap
        for q in rows[i + 1 :]:
            if q.time - p.time >= cap:
                break
            if q.value == p.value and q.sender != p.sender:
                wait = q.time - p.time
                break
        # a same-tick different-sender payment can sort before p
        for q in rows[:i]:
            if q.time == p.time and q.value == p.value and q.sender != p.sender:
                wait = 0
        out[p.id] = min(wait, cap)
    return out


# ----------------------------------------------------------------------
# batch (columnar) implementations

def epoch_of(times: np.ndarray, epoch_len: int) -> np.ndarray:
    if epoch_len < 1:
        raise ValueError("epoch_len must be >= 1")
    return times // epoch_len


@dataclass
class ActiveResult:
    per_payment: np.ndarray      # active set size, aligned with the input rows
    epochs: np.ndarray           # epoch indices present, ascending
    per_epoch: np.ndarray        # distinct senders per epoch, aligned with epochs


def batch_active(e: np.ndarray, senders: np.ndarray) -> ActiveResult:
    epochs, e_inv = np.unique(e, return_inverse=True)
    span = int(senders.max()) + 1 if len(senders) else 1
    pair = np.unique(e_inv.astype(np.int64) * span + senders)
    per_epoch = np.bincount(pair // span, minlength=len(epochs))
    return ActiveResult(per_epoch[e_inv], epochs, per_epoch)


@dataclass
class ValueClassResult:
    per_payment: np.ndarray      # distinct senders of the payment's value class
    class_sizes: np.ndarray      # one entry per (epoch, value class)
    class_epochs: np.ndarray     # owning epoch of each class
    epochs: np.ndarray
    deanon_per_epoch: np.ndarray  # payments with set size 1, per epoch


def batch_active_value(
    e: np.ndarray, senders: np.ndarray, bucketed: np.ndarray
) -> ValueClassResult:
    epochs, e_inv = np.unique(e, return_inverse=True)
    _, v_inv = np.unique(bucketed, return_inverse=True)
    n_vals = int(v_inv.max()) + 1 if len(v_inv) else 1
    cls_key = e_inv.astype(np.int64) * n_vals + v_inv
    cls_ids, cls_inv = np.unique(cls_key, return_inverse=True)

    span = int(senders.max()) + 1 if len(senders) else 1
    pair = np.unique(cls_inv.astype(np.int64) * span + senders)
    class_sizes = np.bincount(pair // span, minlength=len(cls_ids))

    per_payment = class_sizes[cls_inv]
    singles = per_payment == 1
    deanon = np.bincount(e_inv[singles], minlength=len(epochs))
    return ValueClassResult(
        per_payment=per_payment,
        class_sizes=class_sizes,
        class_epochs=epochs[cls_ids // n_vals],
        epochs=epochs,
        deanon_per_epoch=deanon,
    )


def batch_pay_more(
    e: np.ndarray, senders: np.ndarray, values: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised pay_more over many epochs at once.

    Returns (costs, no_match): costs aligned with rows, NaN where no match
    exists; no_match is the boolean mask of those rows.
    """
    n = len(values)
    costs = np.zeros(n, dtype=np.float64)
    no_match = np.zeros(n, dtype=bool)
    if n == 0:
        return costs, no_match

    epochs, e_inv = np.unique(e, return_inverse=True)
    _, v_inv = np.unique(values, return_inverse=True)
    n_vals = int(v_inv.max()) + 1
    cls_key = e_inv.astype(np.int64) * n_vals + v_inv
    cls_ids, cls_inv = np.unique(cls_key, return_inverse=True)

    span = int(senders.max()) + 1
    pair = np.unique(cls_inv.astype(np.int64) * span + senders)
    cls_sender_count = np.bincount(pair // span, minlength=len(cls_ids))
    # for single-sender classes, pair keys are unique per class so this
    # recovers the lone sender id
    lone_sender = np.zeros(len(cls_ids), dtype=np.int64)
    lone_sender[pair // span] = pair % span

    cls_epoch = (cls_ids // n_vals).astype(np.int64)
    cls_value = np.unique(values)[cls_ids % n_vals]
    # class table is sorted by (epoch, value) because cls_ids is sorted
    epoch_end = np.searchsorted(cls_epoch, np.arange(len(epochs)), side="right")

    shared = cls_sender_count[cls_inv] >= 2
    for i in np.flatnonzero(~shared):
        c = cls_inv[i]
        end = epoch_end[e_inv[i]]
        cost: float | None = None
        for j in range(c + 1, end):
            if cls_sender_count[j] >= 2 or lone_sender[j] != senders[i]:
                cost = (cls_value[j] - values[i]) / values[i]
                break
        if cost is None:
            no_match[i] = True
            costs[i] = np.nan
        else:
            costs[i] = cost
    return costs, no_match


def batch_wait_times(
    times: np.ndarray, senders: np.ndarray, values: np.ndarray, cap: int = 1200
) -> np.ndarray:
    """Vectorised wait_time_to_match over a whole stream."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    n = len(times)
    if n == 0:
        return np.empty(0, dtype=np.int64)

    order = np.lexsort((senders, times, values))
    v, t, s = values[order], times[order], senders[order]

    # group rows by value; within a group rows are (time, sender) sorted,
    # and consecutive equal senders form runs.  The first later payment by
    # another sender is the row right after my run.
    new_value = np.empty(n, dtype=bool)
    new_value[0] = True
    new_value[1:] = v[1:] != v[:-1]
    new_run = new_value.copy()
    new_run[1:] |= s[1:] != s[:-1]
    run_id = np.cumsum(new_run) - 1
    n_runs = int(run_id[-1]) + 1
    run_first = np.flatnonzero(new_run)
    run_last = np.zeros(n_runs, dtype=np.int64)
    run_last[run_id] = np.arange(n)
    value_group = np.cumsum(new_value) - 1

    w = np.full(n, cap, dtype=np.int64)
    j = run_last[run_id] + 1
    idx = np.flatnonzero(j < n)
    idx = idx[value_group[j[idx]] == value_group[idx]]
    w[idx] = np.minimum(t[j[idx]] - t[idx], cap)

    # same-tick payments by a lower-sorting sender land immediately before
    # my run; they count as wait 0
    prev = run_first[run_id] - 1
    idx = np.flatnonzero(prev >= 0)
    idx = idx[value_group[prev[idx]] == value_group[idx]]
    idx = idx[t[prev[idx]] == t[idx]]
    w[idx] = 0

    waits = np.empty(n, dtype=np.int64)
    waits[order] = w
    return waits


def deanon_per_epoch(e: np.ndarray, sizes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Epoch indices and the number of size-1 sets (payments) in each."""
    epochs, e_inv = np.unique(e, return_inverse=True)
    counts = np.bincount(e_inv[sizes == 1], minlength=len(epochs))
    return epochs, counts

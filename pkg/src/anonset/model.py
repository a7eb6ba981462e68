"""Core domain model: payments, run configuration and tick/wall-clock mapping.

Time is discrete.  A payment stream is a sequence of (time, sender,
receiver, value) tuples with whole-unit values; streams are kept columnar
(numpy arrays) because the interesting runs have millions of rows.
"""

from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

DAY_SECONDS = 86400.0


class DataError(Exception):
    """Malformed input data. Carries the offending row number when known."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


@dataclass(frozen=True)
class Payment:
    """One payment. ``receiver`` may be None for generated streams."""

    id: int
    time: int
    sender: int
    receiver: int | None
    value: int

    def __post_init__(self):
        if self.value < 1:
            raise ValueError(f"payment {self.id}: value must be >= 1, got {self.value}")
        if self.time < 0:
            raise ValueError(f"payment {self.id}: negative time {self.time}")
        if self.receiver is not None and self.receiver == self.sender:
            raise ValueError(f"payment {self.id}: sender == receiver ({self.sender})")


@dataclass
class SimConfig:
    """Parameters of a synthetic workload run.

    ``mean_gap`` is the mean number of ticks between two sends of the same
    user (10 = high usage frequency, 50 = normal, 100 = low).  ``warmup_ticks``
    defaults to max(10 * mean_gap, 500); payments before it are generated but
    excluded from measurement.
    """

    users: int
    mean_gap: int
    epoch_len: int = 10
    reps: int = 1
    warmup_ticks: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.mean_gap < 1:
            raise ValueError("mean_gap must be >= 1")
        if self.epoch_len < 1:
            raise ValueError("epoch_len must be >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.warmup_ticks is None:
            self.warmup_ticks = max(10 * self.mean_gap, 500)
        if self.warmup_ticks < 0:
            raise ValueError("warmup_ticks must be >= 0")

    @property
    def payments_per_tick(self) -> float:
        # renewal rate: each user sends once per mean_gap ticks on average
        return self.users / self.mean_gap


def seconds_per_tick(config: SimConfig, payments_per_day: float) -> float:
    """Wall-clock seconds represented by one tick when the simulated
    population is matched to a network processing ``payments_per_day``."""
    if payments_per_day <= 0:
        raise ValueError("payments_per_day must be > 0")
    ticks_per_day = payments_per_day / config.payments_per_tick
    return DAY_SECONDS / ticks_per_day


@dataclass(frozen=True)
class TimeMapping:
    """Anchors simulated ticks to a real network's daily payment volume."""

    payments_per_day: float

    def seconds_per_tick(self, config: SimConfig) -> float:
        return seconds_per_tick(config, self.payments_per_day)

    def minutes(self, config: SimConfig, ticks: float) -> float:
        return ticks * self.seconds_per_tick(config) / 60.0


# ----------------------------------------------------------------------
# columnar payment streams

CSV_HEADER = ["id", "time", "sender", "receiver", "value"]
NO_RECEIVER = -1


@dataclass
class PaymentTable:
    """Columnar payment stream, sorted by (time, sender).

    ``receivers`` uses -1 where no receiver exists (generated workloads).
    ``warmup_ticks`` marks the measurement boundary; rows with
    time < warmup_ticks are warm-up state only.
    """

    ids: np.ndarray
    times: np.ndarray
    senders: np.ndarray
    values: np.ndarray
    receivers: np.ndarray | None = None
    warmup_ticks: int = 0

    def __post_init__(self):
        n = len(self.ids)
        for name in ("times", "senders", "values"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has wrong length")
        if self.receivers is not None and len(self.receivers) != n:
            raise ValueError("column receivers has wrong length")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def measured_mask(self) -> np.ndarray:
        return self.times >= self.warmup_ticks

    def measured(self) -> "PaymentTable":
        """Measurement slice: warm-up rows dropped."""
        m = self.measured_mask
        return PaymentTable(
            ids=self.ids[m],
            times=self.times[m],
            senders=self.senders[m],
            values=self.values[m],
            receivers=None if self.receivers is None else self.receivers[m],
            warmup_ticks=self.warmup_ticks,
        )

    def validate(self) -> None:
        if self.n and int(self.values.min()) < 1:
            raise ValueError("values must be >= 1")
        if self.n and int(self.times.min()) < 0:
            raise ValueError("times must be >= 0")
        order = np.lexsort((self.senders, self.times))
        if not np.array_equal(order, np.arange(self.n)):
            raise ValueError("table must be sorted by (time, sender)")

    def iter_payments(self) -> Iterator[Payment]:
        rcv = self.receivers
        for i in range(self.n):
            r = None if rcv is None or rcv[i] == NO_RECEIVER else int(rcv[i])
            yield Payment(
                id=int(self.ids[i]),
                time=int(self.times[i]),
                sender=int(self.senders[i]),
                receiver=r,
                value=int(self.values[i]),
            )

    @classmethod
    def from_payments(cls, payments: Iterable[Payment], warmup_ticks: int = 0) -> "PaymentTable":
        rows = sorted(payments, key=lambda p: (p.time, p.sender))
        ids = np.array([p.id for p in rows], dtype=np.int64)
        times = np.array([p.time for p in rows], dtype=np.int64)
        senders = np.array([p.sender for p in rows], dtype=np.int64)
        values = np.array([p.value for p in rows], dtype=np.int64)
        if any(p.receiver is not None for p in rows):
            receivers = np.array(
                [NO_RECEIVER if p.receiver is None else p.receiver for p in rows], dtype=np.int64
            )
        else:
            receivers = None
        return cls(ids, times, senders, values, receivers, warmup_ticks)

    # ------------------------------------------------------------------
    # CSV round trip.  Plain text or gzip, decided by the .gz suffix.

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(CSV_HEADER)
        rcv = self.receivers
        for i in range(self.n):
            r = "" if rcv is None or rcv[i] == NO_RECEIVER else int(rcv[i])
            w.writerow([int(self.ids[i]), int(self.times[i]), int(self.senders[i]), r, int(self.values[i])])
        data = buf.getvalue().encode()
        if path.suffix == ".gz":
            # mtime and embedded name pinned so equal tables give equal bytes
            with open(path, "wb") as fh:
                with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
                    gz.write(data)
        else:
            path.write_bytes(data)

    @classmethod
    def from_csv(cls, path: str | Path, warmup_ticks: int = 0) -> "PaymentTable":
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "rt", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise DataError(f"{path}: expected header {','.join(CSV_HEADER)}", row=1)
            ids, times, senders, values, receivers = [], [], [], [], []
            any_receiver = False
            for rownum, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise DataError(f"{path}: expected 5 fields, got {len(row)}", row=rownum)
                try:
                    ids.append(int(row[0]))
                    times.append(int(row[1]))
                    senders.append(int(row[2]))
                    if row[3] == "":
                        receivers.append(NO_RECEIVER)
                    else:
                        receivers.append(int(row[3]))
                        any_receiver = True
                    values.append(int(row[4]))
                except ValueError as exc:
                    raise DataError(f"{path}: {exc}", row=rownum) from exc
        table = cls(
            ids=np.array(ids, dtype=np.int64),
            times=np.array(times, dtype=np.int64),
            senders=np.array(senders, dtype=np.int64),
            values=np.array(values, dtype=np.int64),
            receivers=np.array(receivers, dtype=np.int64) if any_receiver else None,
            warmup_ticks=warmup_ticks,
        )
        if table.n and int(table.values.min()) < 1:
            raise DataError(f"{path}: values must be >= 1")
        return table

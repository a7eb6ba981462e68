"""Distribution summaries: quartiles, box-plot series and report writers.

Quantiles use linear interpolation at position (n - 1) * p over the sorted
sample, matching numpy's default.  Distributions can carry integer weights,
which behave exactly like repeating each sample weight-many times; samples
from all repetitions of a run are pooled into one distribution before
quartiles are taken.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

REPORT_SCHEMA = "anonset-report/1"


def quartiles(sample: Sequence[float] | np.ndarray) -> tuple[float, float, float]:
    """(q25, q50, q75) of a non-empty sample."""
    arr = np.asarray(sample, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("quartiles of an empty sample")
    q = np.percentile(arr, [25, 50, 75])
    return float(q[0]), float(q[1]), float(q[2])


def weighted_quantiles(
    values: np.ndarray, weights: np.ndarray, probs: Sequence[float]
) -> np.ndarray:
    """Quantiles of the sample where values[i] occurs weights[i] times.

    Equivalent to np.percentile(np.repeat(values, weights), ...) without
    materialising the expansion.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.int64)
    if values.size == 0 or int(weights.sum()) == 0:
        raise ValueError("quantiles of an empty sample")
    if np.any(weights < 0):
        raise ValueError("negative weights")
    order = np.argsort(values, kind="stable")
    values = values[order]
    weights = weights[order]
    keep = weights > 0
    values, weights = values[keep], weights[keep]
    cum = np.cumsum(weights)
    total = int(cum[-1])

    out = np.empty(len(probs), dtype=np.float64)
    for j, p in enumerate(probs):
        pos = (total - 1) * float(p)
        lo = int(np.floor(pos))
        hi = min(lo + 1, total - 1)
        frac = pos - lo
        # element k (0-based) of the expanded sample lives at the first
        # index whose cumulative weight exceeds k
        v_lo = values[np.searchsorted(cum, lo, side="right")]
        v_hi = values[np.searchsorted(cum, hi, side="right")]
        out[j] = v_lo + frac * (v_hi - v_lo)
    return out


@dataclass
class Distribution:
    """Sorted sample with integer weights (1 = plain sample)."""

    values: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_samples(cls, sample: Sequence[float] | np.ndarray) -> "Distribution":
        arr = np.sort(np.asarray(sample, dtype=np.float64))
        return cls(arr, np.ones(len(arr), dtype=np.int64))

    @classmethod
    def from_counts(cls, values: np.ndarray, counts: np.ndarray) -> "Distribution":
        values = np.asarray(values, dtype=np.float64)
        counts = np.asarray(counts, dtype=np.int64)
        order = np.argsort(values, kind="stable")
        return cls(values[order], counts[order])

    @property
    def n(self) -> int:
        return int(self.weights.sum())

    def quantile(self, p: float) -> float:
        return float(weighted_quantiles(self.values, self.weights, [p])[0])

    def quartiles(self) -> tuple[float, float, float]:
        q = weighted_quantiles(self.values, self.weights, [0.25, 0.5, 0.75])
        return float(q[0]), float(q[1]), float(q[2])

    def mean(self) -> float:
        if self.n == 0:
            raise ValueError("mean of an empty distribution")
        return float(np.dot(self.values, self.weights) / self.n)

    def min(self) -> float:
        return float(self.values[0])

    def max(self) -> float:
        return float(self.values[-1])

    def boxplot_stats(self) -> dict:
        """Box with whiskers at the last sample within 1.5 IQR of the box."""
        q25, q50, q75 = self.quartiles()
        iqr = q75 - q25
        lo_fence = q25 - 1.5 * iqr
        hi_fence = q75 + 1.5 * iqr
        inside = (self.values >= lo_fence) & (self.values <= hi_fence)
        if inside.any():
            whisker_lo = float(self.values[inside][0])
            whisker_hi = float(self.values[inside][-1])
        else:  # degenerate: everything is an outlier of itself, box only
            whisker_lo, whisker_hi = q25, q75
        outliers = int(self.weights[~inside].sum())
        return {
            "q25": q25,
            "q50": q50,
            "q75": q75,
            "whisker_lo": whisker_lo,
            "whisker_hi": whisker_hi,
            "outlier_count": outliers,
        }


@dataclass
class SummaryRow:
    """One config x metric line of a results table."""

    config: str
    metric: str
    n: int
    q25: float
    q50: float
    q75: float
    mean: float
    deanon_count: float | None = None


@dataclass
class SizeRecord:
    """Per-payment anonymity set size, tagged for grouping.

    ``group`` identifies the anonymity set the payment belongs to (its
    epoch for sender-activity sets, its epoch and value class for
    value-conditioned sets); summaries count each group once.
    """

    config: str
    metric: str
    epoch: int
    payment_id: int
    set_size: int
    group: tuple = ()


def summarize(records: Iterable[SizeRecord], sample_per: str = "group") -> list[SummaryRow]:
    """Aggregate records into per-(config, metric) summary rows.

    ``sample_per`` is "group" (one quartile sample per anonymity set,
    the semantics behind the headline tables) or "payment" (every record
    is a sample).  The deanonymized count is always the mean number of
    payments per epoch whose set size is 1.
    """
    if sample_per not in ("group", "payment"):
        raise ValueError("sample_per must be 'group' or 'payment'")
    by_key: dict[tuple[str, str], list[SizeRecord]] = {}
    for rec in records:
        by_key.setdefault((rec.config, rec.metric), []).append(rec)

    rows = []
    for (config, metric), recs in sorted(by_key.items()):
        if sample_per == "group":
            seen: dict[tuple, int] = {}
            for r in recs:
                seen[(r.epoch,) + tuple(r.group)] = r.set_size
            sample = np.array(list(seen.values()), dtype=np.float64)
        else:
            sample = np.array([r.set_size for r in recs], dtype=np.float64)
        dist = Distribution.from_samples(sample)
        epochs = sorted({r.epoch for r in recs})
        singles = sum(1 for r in recs if r.set_size == 1)
        q25, q50, q75 = dist.quartiles()
        rows.append(
            SummaryRow(
                config=config,
                metric=metric,
                n=dist.n,
                q25=q25,
                q50=q50,
                q75=q75,
                mean=dist.mean(),
                deanon_count=singles / len(epochs) if epochs else None,
            )
        )
    return rows


# ----------------------------------------------------------------------
# delimited / JSON writers

def write_summary_csv(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "metric", "n", "q25", "q50", "q75", "mean", "deanon_count"])
        for r in rows:
            w.writerow(
                [
                    r.config,
                    r.metric,
                    r.n,
                    _fmt(r.q25),
                    _fmt(r.q50),
                    _fmt(r.q75),
                    _fmt(r.mean),
                    "" if r.deanon_count is None else _fmt(r.deanon_count),
                ]
            )


def write_boxplot_series_csv(path: str | Path, series: Sequence[tuple[str, Distribution]]) -> None:
    """Box-plot series: one row per labelled distribution."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "q25", "q50", "q75", "whisker_lo", "whisker_hi", "outlier_count"])
        for label, dist in series:
            s = dist.boxplot_stats()
            w.writerow(
                [
                    label,
                    _fmt(s["q25"]),
                    _fmt(s["q50"]),
                    _fmt(s["q75"]),
                    _fmt(s["whisker_lo"]),
                    _fmt(s["whisker_hi"]),
                    s["outlier_count"],
                ]
            )


def write_report_json(path: str | Path, payload: dict) -> None:
    body = {"schema": REPORT_SCHEMA}
    body.update(payload)
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    # integers stay integers in the CSV; everything else keeps full precision
    if float(x) == int(x):
        return str(int(x))
    return repr(float(x))

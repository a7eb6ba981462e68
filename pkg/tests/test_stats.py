import csv

import numpy as np
import pytest

from anonset.stats import (
    Distribution,
    SizeRecord,
    SummaryRow,
    quartiles,
    summarize,
    weighted_quantiles,
    write_boxplot_series_csv,
    write_report_json,
    write_summary_csv,
)


def test_quartiles_match_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        sample = rng.normal(0, 10, rng.integers(1, 200))
        q25, q50, q75 = quartiles(sample)
        want = np.percentile(sample, [25, 50, 75])
        assert (q25, q50, q75) == pytest.approx(tuple(want))


def test_quartiles_empty_raises():
    with pytest.raises(ValueError):
        quartiles([])


def test_weighted_quantiles_equal_expansion():
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = rng.integers(1, 12)
        values = rng.integers(-5, 50, k).astype(float)
        weights = rng.integers(0, 6, k)
        if weights.sum() == 0:
            weights[0] = 1
        probs = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0]
        got = weighted_quantiles(values, weights, probs)
        want = np.percentile(np.repeat(values, weights), np.array(probs) * 100)
        assert got == pytest.approx(tuple(want))


def test_weighted_quantiles_rejects_bad_input():
    with pytest.raises(ValueError):
        weighted_quantiles(np.array([]), np.array([]), [0.5])
    with pytest.raises(ValueError):
        weighted_quantiles(np.array([1.0]), np.array([-1]), [0.5])


def test_distribution_from_counts_equals_expansion():
    values = np.array([3.0, 1.0, 2.0])
    counts = np.array([2, 5, 1])
    dist = Distribution.from_counts(values, counts)
    expanded = Distribution.from_samples(np.repeat(values, counts))
    assert dist.n == 8
    assert dist.quartiles() == pytest.approx(expanded.quartiles())
    assert dist.mean() == pytest.approx(expanded.mean())
    assert dist.min() == 1.0
    assert dist.max() == 3.0


def test_boxplot_stats_hand_example():
    dist = Distribution.from_samples([1, 2, 3, 4, 100])
    s = dist.boxplot_stats()
    assert (s["q25"], s["q50"], s["q75"]) == (2, 3, 4)
    # fences at 2 - 3 = -1 and 4 + 3 = 7
    assert s["whisker_lo"] == 1
    assert s["whisker_hi"] == 4
    assert s["outlier_count"] == 1


def test_boxplot_stats_no_outliers():
    s = Distribution.from_samples([5, 5, 5, 5]).boxplot_stats()
    assert s["whisker_lo"] == 5
    assert s["whisker_hi"] == 5
    assert s["outlier_count"] == 0


def _records():
    # one epoch with two payments in the same set, one lone payment later
    return [
        SizeRecord("c", "active", epoch=0, payment_id=0, set_size=2),
        SizeRecord("c", "active", epoch=0, payment_id=1, set_size=2),
        SizeRecord("c", "active", epoch=1, payment_id=2, set_size=1),
    ]


def test_summarize_samples_each_group_once():
    rows = summarize(_records(), sample_per="group")
    assert len(rows) == 1
    r = rows[0]
    # two epochs, one sample each: {2, 1}
    assert r.n == 2
    assert r.q50 == 1.5
    assert r.mean == 1.5
    # one size-1 payment over two epochs
    assert r.deanon_count == 0.5


def test_summarize_per_payment():
    rows = summarize(_records(), sample_per="payment")
    assert rows[0].n == 3
    assert rows[0].q50 == 2
    with pytest.raises(ValueError):
        summarize(_records(), sample_per="bogus")


def test_summarize_value_groups_stay_separate():
    recs = [
        SizeRecord("c", "m", epoch=0, payment_id=0, set_size=3, group=(10,)),
        SizeRecord("c", "m", epoch=0, payment_id=1, set_size=3, group=(10,)),
        SizeRecord("c", "m", epoch=0, payment_id=2, set_size=1, group=(20,)),
    ]
    rows = summarize(recs)
    # (epoch 0, value 10) and (epoch 0, value 20) are distinct samples
    assert rows[0].n == 2
    assert rows[0].deanon_count == 1.0


def test_write_summary_csv_formats_integers(tmp_path):
    rows = [SummaryRow("cfg", "active", 4, 1.0, 2.5, 7.0, 3.25, deanon_count=None)]
    path = tmp_path / "summary.csv"
    write_summary_csv(path, rows)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["config", "metric", "n", "q25", "q50", "q75", "mean", "deanon_count"]
    assert got[1] == ["cfg", "active", "4", "1", "2.5", "7", "3.25", ""]


def test_write_boxplot_series_csv(tmp_path):
    series = [("active", Distribution.from_samples([1, 2, 3, 4, 100]))]
    path = tmp_path / "box.csv"
    write_boxplot_series_csv(path, series)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[1] == ["active", "2", "3", "4", "1", "4", "1"]


def test_write_report_json_schema(tmp_path):
    import json

    path = tmp_path / "report.json"
    write_report_json(path, {"rows": []})
    body = json.loads(path.read_text())
    assert body["schema"] == "anonset-report/1"
    assert body["rows"] == []

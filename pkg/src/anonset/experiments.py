"""Repetition runners tying generation, epoch metrics and summaries together.

A run is ``reps`` independent repetitions of the same configuration with
seeds derived from one base seed.  Samples are pooled across repetitions:
sender-activity sets contribute one sample per epoch, value-conditioned
sets one sample per (epoch, value class), and the deanonymized count is
the mean number of size-1 payments per epoch.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .buckets import BucketStrategy
from .epochs import (
    batch_active,
    batch_active_value,
    batch_pay_more,
    batch_wait_times,
    epoch_of,
)
from .model import PaymentTable, SimConfig
from .stats import Distribution, SummaryRow
from .synth import generate_stream


@dataclass
class StrategyResult:
    strategy: BucketStrategy
    class_sizes: np.ndarray        # pooled, one per (epoch, value class)
    deanon_per_epoch: np.ndarray   # pooled over reps

    def distribution(self) -> Distribution:
        return Distribution.from_samples(self.class_sizes)

    @property
    def deanon_mean(self) -> float:
        return float(self.deanon_per_epoch.mean())


@dataclass
class PayMoreResult:
    positive_costs: np.ndarray
    zero_count: int
    no_match_count: int

    @property
    def total(self) -> int:
        return len(self.positive_costs) + self.zero_count + self.no_match_count


@dataclass
class EpochExperimentResult:
    config: SimConfig
    epochs_measured: int
    payments_measured: int
    active_per_epoch: np.ndarray
    strategies: dict[str, StrategyResult]
    pay_more: PayMoreResult | None = None

    def active_distribution(self) -> Distribution:
        return Distribution.from_samples(self.active_per_epoch)

    def summary_rows(self, label: str) -> list[SummaryRow]:
        rows = []
        all_dist = Distribution.from_samples(
            np.full(len(self.active_per_epoch), self.config.users, dtype=np.int64)
        )
        q25, q50, q75 = all_dist.quartiles()
        rows.append(SummaryRow(label, "all", all_dist.n, q25, q50, q75, all_dist.mean()))
        act = self.active_distribution()
        q25, q50, q75 = act.quartiles()
        rows.append(SummaryRow(label, "active", act.n, q25, q50, q75, act.mean()))
        for token, res in self.strategies.items():
            dist = res.distribution()
            q25, q50, q75 = dist.quartiles()
            rows.append(
                SummaryRow(
                    label,
                    f"active_value[{token}]",
                    dist.n,
                    q25,
                    q50,
                    q75,
                    dist.mean(),
                    deanon_count=res.deanon_mean,
                )
            )
        return rows


def _rep_seeds(seed: int, reps: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(reps)]


def _run_one_rep(args) -> dict:
    config, horizon, rep_seed, strategy_tokens, want_pay_more, pay_more_epochs = args
    from .buckets import parse_strategy  # local import keeps workers cheap

    rng = np.random.default_rng(rep_seed)
    table = generate_stream(config, horizon, rng=rng).measured()
    e = epoch_of(table.times, config.epoch_len)

    out: dict = {"payments": table.n}
    act = batch_active(e, table.senders)
    out["active_per_epoch"] = act.per_epoch
    out["epochs"] = len(act.epochs)

    per_strategy = {}
    for token in strategy_tokens:
        strat = parse_strategy(token)
        res = batch_active_value(e, table.senders, strat.apply(table.values))
        per_strategy[token] = (res.class_sizes, res.deanon_per_epoch)
    out["strategies"] = per_strategy

    if want_pay_more:
        epochs_present = np.unique(e)
        keep = np.isin(e, epochs_present[:pay_more_epochs])
        costs, no_match = batch_pay_more(e[keep], table.senders[keep], table.values[keep])
        pos = costs[(~no_match) & (costs > 0)]
        out["pay_more"] = (pos, int(((~no_match) & (costs == 0)).sum()), int(no_match.sum()))
    return out


def run_epoch_experiment(
    config: SimConfig,
    strategies: list[BucketStrategy],
    epochs_per_rep: int = 12,
    pay_more_epochs: int = 0,
    workers: int = 1,
) -> EpochExperimentResult:
    """Run ``config.reps`` repetitions and pool the epoch metrics."""
    horizon = config.warmup_ticks + epochs_per_rep * config.epoch_len
    tokens = [s.token for s in strategies]
    seeds = np.random.SeedSequence(config.seed).spawn(config.reps)
    jobs = [
        (config, horizon, seeds[r], tokens, pay_more_epochs > 0, pay_more_epochs)
        for r in range(config.reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_rep, jobs))
    else:
        results = [_run_one_rep(j) for j in jobs]

    active = np.concatenate([r["active_per_epoch"] for r in results])
    strategy_results = {}
    for strat in strategies:
        token = strat.token
        sizes = np.concatenate([r["strategies"][token][0] for r in results])
        deanon = np.concatenate([r["strategies"][token][1] for r in results])
        strategy_results[token] = StrategyResult(strat, sizes, deanon)

    pay_more = None
    if pay_more_epochs > 0:
        pos = np.concatenate([r["pay_more"][0] for r in results])
        zero = sum(r["pay_more"][1] for r in results)
        nomatch = sum(r["pay_more"][2] for r in results)
        pay_more = PayMoreResult(pos, zero, nomatch)

    return EpochExperimentResult(
        config=config,
        epochs_measured=sum(r["epochs"] for r in results),
        payments_measured=sum(r["payments"] for r in results),
        active_per_epoch=active,
        strategies=strategy_results,
        pay_more=pay_more,
    )


def run_wait_experiment(
    users: int, mean_gap: int, n_payments: int, cap: int = 1200, seed: int = 0
) -> np.ndarray:
    """Waiting times until a same-value payment by another sender.

    Generates roughly ``n_payments`` (horizon sized from the expected rate)
    and returns the capped waits of the measured slice.
    """
    config = SimConfig(users=users, mean_gap=mean_gap, seed=seed)
    horizon = config.warmup_ticks + int(np.ceil(n_payments / config.payments_per_tick))
    table = generate_stream(config, horizon).measured()
    return batch_wait_times(table.times, table.senders, table.values, cap=cap)

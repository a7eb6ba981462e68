"""Command line interface.

    anonset generate     synthesise a payment stream CSV
    anonset epoch-anon   epoch anonymity report (generated or given stream)
    anonset ripple       ingest/route/anon/cover/sweep pipeline for dumps
    anonset rerun        re-execute a run manifest and verify outputs

Report commands write delimited data plus JSON, render matching PNG
figures next to them, and leave a manifest that reproduces the run.
Exit codes: 0 success, 2 usage error, 3 data/artifact error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .buckets import BucketStrategy, parse_strategy
from .epochs import (
    batch_active,
    batch_active_value,
    batch_pay_more,
    batch_wait_times,
    epoch_of,
)
from .experiments import run_epoch_experiment
from .manifest import (
    MANIFEST_NAME,
    build_manifest,
    load_manifest,
    verify_outputs,
    write_manifest,
)
from .model import DataError, PaymentTable, SimConfig, seconds_per_tick
from .paths import (
    RoutedPayment,
    Router,
    build_mixing,
    honest_cover,
    hop_time_sweep,
    path_anon_max,
    path_anon_min,
)
from .ripple import ChannelGraph, IngestConfig, ingest
from .stats import (
    Distribution,
    SummaryRow,
    write_boxplot_series_csv,
    write_report_json,
    write_summary_csv,
)
from .synth import generate_stream


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# helpers

def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ANONSET_OUTDIR")
    if not out:
        raise UsageError("--out is required (or set ANONSET_OUTDIR)")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise DataError(f"{path} not found; run `anonset {stage}` first")
    return path


def _finish_manifest(args, out_dir: Path, command: str, config: dict, inputs, outputs, seed=None):
    manifest = build_manifest(
        command=command,
        argv=getattr(args, "_argv", []),
        config=config,
        inputs=[p for p in inputs if Path(p).exists()],
        outputs=outputs,
        seed=seed,
    )
    write_manifest(out_dir / MANIFEST_NAME, manifest)


def _summary_from_sizes(label: str, metric: str, sizes: np.ndarray, deanon=None) -> SummaryRow:
    dist = Distribution.from_samples(sizes)
    q25, q50, q75 = dist.quartiles()
    return SummaryRow(label, metric, dist.n, q25, q50, q75, dist.mean(), deanon_count=deanon)


def _row_dict(r: SummaryRow) -> dict:
    return {
        "config": r.config,
        "metric": r.metric,
        "n": r.n,
        "q25": r.q25,
        "q50": r.q50,
        "q75": r.q75,
        "mean": r.mean,
        "deanon_count": r.deanon_count,
    }


# ----------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    config = SimConfig(
        users=args.users,
        mean_gap=args.mean_gap,
        seed=args.seed,
        warmup_ticks=args.warmup_ticks,
    )
    horizon = args.horizon if args.horizon is not None else config.warmup_ticks + 2000
    table = generate_stream(config, horizon)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out)
    manifest = build_manifest(
        command="generate",
        argv=args._argv,
        config={
            "users": config.users,
            "mean_gap": config.mean_gap,
            "warmup_ticks": config.warmup_ticks,
            "horizon": horizon,
        },
        inputs=[],
        outputs=[out],
        seed=config.seed,
    )
    write_manifest(out.with_name(out.name + ".manifest.json"), manifest)
    print(f"wrote {table.n} payments to {out}")
    return 0


# ----------------------------------------------------------------------
# epoch-anon

def _write_records_csv(path: Path, ids: np.ndarray, metrics: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["payment_id", "metric", "set_size"])
        for metric, sizes in metrics.items():
            for pid, size in zip(ids, sizes):
                w.writerow([int(pid), metric, int(size)])


def _pay_more_outputs(out_dir, positive, zero_count, no_match_count, render):
    path_csv = out_dir / "pay_more.csv"
    if len(positive):
        lo = np.floor(np.log10(positive.min()))
        hi = np.ceil(np.log10(positive.max())) + 1e-9
        edges = np.logspace(lo, max(hi, lo + 1), int(10 * (max(hi, lo + 1) - lo)) + 1)
    else:
        edges = np.array([1e-4, 1.0])
    counts, edges = np.histogram(positive, bins=edges)
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    summary = {
        "positive": int(len(positive)),
        "zero": int(zero_count),
        "no_match": int(no_match_count),
    }
    if len(positive):
        q = np.percentile(positive, [25, 50, 75])
        summary.update(
            {
                "q25": float(q[0]),
                "q50": float(q[1]),
                "q75": float(q[2]),
                "max": float(positive.max()),
                "below_half": float((positive < 0.5).mean()),
            }
        )
    outputs = [path_csv]
    if render and len(positive):
        from . import figures

        png = out_dir / "pay_more.png"
        figures.save_count_hist(
            png, edges, counts, "pay-more relative cost", "relative cost", log_x=True
        )
        outputs.append(png)
    return summary, outputs


def _wait_outputs(out_dir, waits, cap, render):
    path_csv = out_dir / "wait.csv"
    vals, counts = np.unique(waits, return_counts=True)
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wait_ticks", "count"])
        for v, c in zip(vals, counts):
            w.writerow([int(v), int(c)])
    q = np.percentile(waits, [25, 50, 75]) if len(waits) else [0, 0, 0]
    summary = {
        "n": int(len(waits)),
        "cap": int(cap),
        "capped_fraction": float((waits == cap).mean()) if len(waits) else 0.0,
        "q25": float(q[0]),
        "q50": float(q[1]),
        "q75": float(q[2]),
    }
    outputs = [path_csv]
    if render and len(waits):
        from . import figures

        edges = np.arange(0, cap + 2)
        hist = np.bincount(waits, minlength=cap + 1)
        figures.save_count_hist(
            out_dir / "wait.png", edges, hist, "waiting time to matching value", "ticks"
        )
        outputs.append(out_dir / "wait.png")
    return summary, outputs


def cmd_epoch_anon(args) -> int:
    strategy = _parse_strategy_arg(args.strategy)
    out_dir = _out_dir(args)
    render = args.figures
    label = args.label
    outputs = []
    inputs = []
    rows: list[SummaryRow] = []
    report: dict = {"epoch_ticks": args.epoch_ticks}
    series: list[tuple[str, Distribution]] = []

    if args.infile and (args.users or args.reps > 1):
        raise UsageError("--in cannot be combined with --users/--reps")

    if args.infile:
        inputs.append(args.infile)
        table = PaymentTable.from_csv(args.infile).measured()
        label = label or Path(args.infile).stem
        if table.n == 0:
            # empty stream: empty report, success
            write_summary_csv(out_dir / "summary.csv", [])
            write_boxplot_series_csv(out_dir / "boxplot.csv", [])
            report["rows"] = []
            report["payments"] = 0
            write_report_json(out_dir / "report.json", report)
            outputs = [out_dir / "summary.csv", out_dir / "boxplot.csv", out_dir / "report.json"]
            _finish_manifest(args, out_dir, "epoch-anon", _epoch_config(args), inputs, outputs)
            print("empty input stream; empty report written")
            return 0
        e = epoch_of(table.times, args.epoch_ticks)
        users = args.users or len(np.unique(table.senders))
        act = batch_active(e, table.senders)
        val = batch_active_value(e, table.senders, strategy.apply(table.values))
        rows.append(
            _summary_from_sizes(label, "all", np.full(len(act.epochs), users, dtype=np.int64))
        )
        rows.append(_summary_from_sizes(label, "active", act.per_epoch))
        rows.append(
            _summary_from_sizes(
                label,
                f"active_value[{strategy.token}]",
                val.class_sizes,
                deanon=float(val.deanon_per_epoch.mean()),
            )
        )
        series = [
            (r.metric, d)
            for r, d in zip(
                rows,
                [
                    Distribution.from_samples(np.full(len(act.epochs), users)),
                    Distribution.from_samples(act.per_epoch),
                    Distribution.from_samples(val.class_sizes),
                ],
            )
        ]
        if args.records:
            rec_path = out_dir / "records.csv"
            _write_records_csv(
                rec_path,
                table.ids,
                {
                    "all": np.full(table.n, users, dtype=np.int64),
                    "active": act.per_payment,
                    f"active_value[{strategy.token}]": val.per_payment,
                },
            )
            outputs.append(rec_path)
        report["payments"] = int(table.n)
        if args.pay_more:
            costs, no_match = batch_pay_more(e, table.senders, table.values)
            pos = costs[(~no_match) & (costs > 0)]
            pm_summary, pm_outputs = _pay_more_outputs(
                out_dir, pos, int(((~no_match) & (costs == 0)).sum()), int(no_match.sum()), render
            )
            report["pay_more"] = pm_summary
            outputs.extend(pm_outputs)
        if args.wait_cap:
            waits = batch_wait_times(table.times, table.senders, table.values, cap=args.wait_cap)
            w_summary, w_outputs = _wait_outputs(out_dir, waits, args.wait_cap, render)
            report["wait"] = w_summary
            outputs.extend(w_outputs)
    else:
        if not args.users or not args.mean_gap:
            raise UsageError("either --in or both --users and --lambda are required")
        if args.records:
            raise UsageError("--records needs a single input stream (--in)")
        config = SimConfig(
            users=args.users,
            mean_gap=args.mean_gap,
            epoch_len=args.epoch_ticks,
            reps=args.reps,
            warmup_ticks=args.warmup_ticks,
            seed=args.seed,
        )
        label = label or f"users={config.users},gap={config.mean_gap},epoch={config.epoch_len}"
        result = run_epoch_experiment(
            config,
            [strategy],
            epochs_per_rep=args.epochs_per_rep,
            pay_more_epochs=args.pay_more_epochs if args.pay_more else 0,
            workers=args.workers,
        )
        rows = result.summary_rows(label)
        series = [
            ("all", Distribution.from_samples(np.full(result.epochs_measured, config.users))),
            ("active", result.active_distribution()),
            (
                f"active_value[{strategy.token}]",
                result.strategies[strategy.token].distribution(),
            ),
        ]
        report["payments"] = result.payments_measured
        report["epochs"] = result.epochs_measured
        if result.pay_more is not None:
            pm = result.pay_more
            pm_summary, pm_outputs = _pay_more_outputs(
                out_dir, pm.positive_costs, pm.zero_count, pm.no_match_count, render
            )
            report["pay_more"] = pm_summary
            outputs.extend(pm_outputs)
        if args.wait_cap:
            stream_cfg = SimConfig(
                users=config.users,
                mean_gap=config.mean_gap,
                warmup_ticks=config.warmup_ticks,
                seed=config.seed,
            )
            horizon = config.warmup_ticks + args.epochs_per_rep * config.epoch_len
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
            stream = generate_stream(stream_cfg, horizon, rng=rng).measured()
            waits = batch_wait_times(stream.times, stream.senders, stream.values, args.wait_cap)
            w_summary, w_outputs = _wait_outputs(out_dir, waits, args.wait_cap, render)
            report["wait"] = w_summary
            outputs.extend(w_outputs)

    if args.payments_per_day and args.users and args.mean_gap:
        cfg_for_map = SimConfig(users=args.users, mean_gap=args.mean_gap)
        spt = seconds_per_tick(cfg_for_map, args.payments_per_day)
        report["seconds_per_tick"] = spt
        report["epoch_minutes"] = args.epoch_ticks * spt / 60.0

    report["rows"] = [_row_dict(r) for r in rows]
    fmt = args.format
    if fmt in ("csv", "both"):
        write_summary_csv(out_dir / "summary.csv", rows)
        write_boxplot_series_csv(out_dir / "boxplot.csv", series)
        outputs = [out_dir / "summary.csv", out_dir / "boxplot.csv"] + outputs
    if fmt in ("json", "both"):
        write_report_json(out_dir / "report.json", report)
        outputs.append(out_dir / "report.json")
    if render and series:
        from . import figures

        png = out_dir / "boxplot.png"
        figures.save_boxplot(
            png,
            [name for name, _ in series],
            [d.boxplot_stats() for _, d in series],
            title=label or "epoch anonymity",
        )
        outputs.append(png)

    _finish_manifest(
        args, out_dir, "epoch-anon", _epoch_config(args), inputs, outputs, seed=args.seed
    )
    for r in rows:
        deanon = "" if r.deanon_count is None else f"  deanon/epoch={r.deanon_count:.6g}"
        print(
            f"{r.metric:26s} n={r.n:<9d} q25={r.q25:<10.6g} q50={r.q50:<10.6g} "
            f"q75={r.q75:<10.6g}{deanon}"
        )
    return 0


def _epoch_config(args) -> dict:
    return {
        "infile": args.infile,
        "users": args.users,
        "mean_gap": args.mean_gap,
        "epoch_ticks": args.epoch_ticks,
        "strategy": args.strategy,
        "reps": args.reps,
        "epochs_per_rep": args.epochs_per_rep,
        "warmup_ticks": args.warmup_ticks,
        "pay_more": args.pay_more,
        "wait_cap": args.wait_cap,
        "format": args.format,
    }


def _parse_strategy_arg(token: str) -> BucketStrategy:
    try:
        return parse_strategy(token)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ----------------------------------------------------------------------
# ripple pipeline

def _write_graph_csv(path: Path, graph: ChannelGraph) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "capacity"])
        for (u, v), cap in sorted(graph.caps.items()):
            w.writerow([u, v, cap])


def _read_graph_csv(path: Path) -> ChannelGraph:
    graph = ChannelGraph()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                graph.set_capacity(int(row[0]), int(row[1]), int(row[2]))
    return graph


def _write_updates_csv(path: Path, updates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tick", "u", "v", "capacity"])
        for tick, u, v, cap in updates:
            w.writerow([tick, u, v, cap])


def _read_updates_csv(path: Path) -> list[tuple[int, int, int, int]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                out.append((int(row[0]), int(row[1]), int(row[2]), int(row[3])))
    return out


def cmd_ripple_ingest(args) -> int:
    out_dir = _out_dir(args)
    window = None
    if args.window_start is not None or args.window_end is not None:
        if args.window_start is None or args.window_end is None:
            raise UsageError("--window-start and --window-end must be given together")
        window = (args.window_start, args.window_end)
    config = IngestConfig(time_scale=args.time_scale, window=window, currency=args.currency)
    result = ingest(args.payments, args.graph, config)

    payments_out = out_dir / "payments.csv"
    result.table.to_csv(payments_out)
    graph_out = out_dir / "graph_initial.csv"
    _write_graph_csv(graph_out, result.graph)
    updates_out = out_dir / "updates.csv"
    _write_updates_csv(updates_out, result.updates)
    idmap_out = out_dir / "idmap.json"
    result.id_map.to_json(idmap_out)
    stats_out = out_dir / "ingest.json"
    write_report_json(stats_out, {"stats": result.stats})

    outputs = [payments_out, graph_out, updates_out, idmap_out, stats_out]
    _finish_manifest(
        args,
        out_dir,
        "ripple-ingest",
        {
            "payments": args.payments,
            "graph": args.graph,
            "time_scale": args.time_scale,
            "window": list(window) if window else None,
            "currency": args.currency,
        },
        [args.payments, args.graph],
        outputs,
    )
    print(json.dumps(result.stats, indent=2, sort_keys=True))
    return 0


def _load_staged_table(work: Path) -> PaymentTable:
    return PaymentTable.from_csv(_require(work / "payments.csv", "ripple ingest"))


def _load_routed(work: Path) -> list[RoutedPayment]:
    table = _load_staged_table(work)
    routes_path = _require(work / "routes.csv", "ripple route")
    by_id = {p.id: p for p in table.iter_payments()}
    routed = []
    with open(routes_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if not row:
                continue
            pid = int(row[0])
            path = tuple(int(x) for x in row[1].split("|"))
            routed.append(RoutedPayment(by_id[pid], path))
    return routed


def cmd_ripple_route(args) -> int:
    work = Path(args.dir)
    out_dir = work if args.out is None else _out_dir(args)
    table = _load_staged_table(work)
    graph = _read_graph_csv(_require(work / "graph_initial.csv", "ripple ingest"))
    updates = _read_updates_csv(_require(work / "updates.csv", "ripple ingest"))

    router = Router(graph, updates)
    routed, failures = router.route_all(table.iter_payments())

    routes_out = out_dir / "routes.csv"
    with open(routes_out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["payment_id", "path"])
        for rp in routed:
            w.writerow([rp.payment.id, "|".join(str(n) for n in rp.path)])
    fail_out = out_dir / "route_failures.csv"
    with open(fail_out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["payment_id", "reason"])
        for f in failures:
            w.writerow([f.payment.id, f.reason])

    hops = np.array([len(rp.intermediates) for rp in routed], dtype=np.int64)
    stats = {
        "routed": len(routed),
        "failed": len(failures),
        "multi_hop": int((hops > 0).sum()),
        "mean_intermediates": float(hops.mean()) if len(hops) else None,
        "max_intermediates": int(hops.max()) if len(hops) else None,
    }
    stats_out = out_dir / "route_stats.json"
    write_report_json(stats_out, {"stats": stats})

    _finish_manifest(
        args,
        out_dir,
        "ripple-route",
        {"dir": str(work)},
        [work / "payments.csv", work / "graph_initial.csv", work / "updates.csv"],
        [routes_out, fail_out, stats_out],
    )
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_ripple_anon(args) -> int:
    work = Path(args.dir)
    out_dir = work if args.out is None else _out_dir(args)
    strategy = _parse_strategy_arg(args.strategy)
    routed = _load_routed(work)
    table = _load_staged_table(work)
    render = args.figures

    label = "ripple"
    rows: list[SummaryRow] = []
    series: list[tuple[str, Distribution]] = []

    # epoch metrics over the whole stream
    e = epoch_of(table.times, args.epoch_ticks)
    users = len(np.unique(table.senders))
    act = batch_active(e, table.senders)
    val = batch_active_value(e, table.senders, strategy.apply(table.values))
    rows.append(_summary_from_sizes(label, "all", np.full(len(act.epochs), users, dtype=np.int64)))
    rows.append(_summary_from_sizes(label, "active", act.per_epoch))
    rows.append(
        _summary_from_sizes(
            label,
            f"active_value[{strategy.token}]",
            val.class_sizes,
            deanon=float(val.deanon_per_epoch.mean()),
        )
    )
    series.extend(
        [
            ("all", Distribution.from_samples(np.full(len(act.epochs), users))),
            ("active", Distribution.from_samples(act.per_epoch)),
            (f"active_value[{strategy.token}]", Distribution.from_samples(val.class_sizes)),
        ]
    )

    # path metrics over the routed subset
    events = build_mixing(routed, args.hop_ticks)
    values = strategy.apply(np.array([rp.payment.value for rp in routed], dtype=np.int64))
    metric_sizes: dict[str, np.ndarray] = {
        "path_max": path_anon_max(routed, events),
        "path_min": path_anon_min(routed, events, args.hop_ticks)[0],
        f"path_max_value[{strategy.token}]": path_anon_max(routed, events, values=values),
        f"path_min_value[{strategy.token}]": path_anon_min(
            routed, events, args.hop_ticks, values=values
        )[0],
    }
    if args.allow_loops:
        metric_sizes["path_max_loops"] = path_anon_max(routed, events, allow_loops=True)
    for name, sizes in metric_sizes.items():
        rows.append(_summary_from_sizes(label, name, sizes, deanon=float((sizes == 1).sum())))
        series.append((name, Distribution.from_samples(sizes)))

    summary_out = out_dir / "path_summary.csv"
    write_summary_csv(summary_out, rows)
    box_out = out_dir / "boxplot.csv"
    write_boxplot_series_csv(box_out, series)
    report_out = out_dir / "path_report.json"
    write_report_json(
        report_out,
        {
            "hop_ticks": args.hop_ticks,
            "epoch_ticks": args.epoch_ticks,
            "strategy": strategy.token,
            "routed": len(routed),
            "mixing_events": len(events),
            "rows": [_row_dict(r) for r in rows],
        },
    )
    outputs = [summary_out, box_out, report_out]
    if render:
        from . import figures

        png = out_dir / "boxplot.png"
        figures.save_boxplot(
            png,
            [name for name, _ in series],
            [d.boxplot_stats() for _, d in series],
            title=f"anonymity sets (hop={args.hop_ticks}, epoch={args.epoch_ticks})",
        )
        outputs.append(png)
    _finish_manifest(
        args,
        out_dir,
        "ripple-anon",
        {
            "dir": str(work),
            "hop_ticks": args.hop_ticks,
            "epoch_ticks": args.epoch_ticks,
            "strategy": strategy.token,
            "allow_loops": args.allow_loops,
        },
        [work / "payments.csv", work / "routes.csv"],
        outputs,
    )
    for r in rows:
        print(f"{r.metric:30s} q25={r.q25:<10.6g} q50={r.q50:<10.6g} q75={r.q75:<10.6g}")
    return 0


def cmd_ripple_cover(args) -> int:
    work = Path(args.dir)
    out_dir = work if args.out is None else _out_dir(args)
    routed = _load_routed(work)
    events = build_mixing(routed, args.hop_ticks)
    modes = ["any_intermediate", "mixing_only"] if args.mode == "both" else [args.mode]

    payload: dict = {"hop_ticks": args.hop_ticks, "modes": {}}
    curves = {}
    for mode in modes:
        res = honest_cover(routed, events, args.hop_ticks, mode=mode)
        gains = []
        seen: set[int] = set()
        coverage_sets = _coverage_sets(routed, events, args.hop_ticks, mode)
        for node in res.nodes:
            newly = coverage_sets.get(node, set()) - seen
            gains.append(len(newly))
            seen |= newly
        payload["modes"][mode] = {
            "nodes": res.nodes,
            "cover_size": len(res.nodes),
            "multi_hop": res.multi_hop,
            "covered": res.covered,
            "uncovered": len(res.uncovered),
            "witness_count": res.witness_count,
            "gains": gains,
        }
        curves[mode] = (gains, res.multi_hop)

    cover_out = out_dir / "cover.json"
    write_report_json(cover_out, payload)
    outputs = [cover_out]
    if args.figures:
        from . import figures

        for mode, (gains, total) in curves.items():
            png = out_dir / f"cover_{mode}.png"
            figures.save_cover_curve(png, gains, total, f"greedy honest cover ({mode})")
            outputs.append(png)
    _finish_manifest(
        args,
        out_dir,
        "ripple-cover",
        {"dir": str(work), "hop_ticks": args.hop_ticks, "mode": args.mode},
        [work / "payments.csv", work / "routes.csv"],
        outputs,
    )
    print(json.dumps(payload["modes"], indent=2, sort_keys=True, default=str))
    return 0


def _coverage_sets(routed, events, hop_time, mode):
    event_keys = {(ev.node, ev.slot) for ev in events}
    coverage: dict[int, set[int]] = {}
    for idx, rp in enumerate(routed):
        base = rp.start_slot(hop_time)
        for i, node in enumerate(rp.intermediates, start=1):
            if mode == "mixing_only" and (node, base + i) not in event_keys:
                continue
            coverage.setdefault(node, set()).add(idx)
    return coverage


def cmd_ripple_sweep(args) -> int:
    work = Path(args.dir)
    out_dir = work if args.out is None else _out_dir(args)
    strategy = _parse_strategy_arg(args.strategy)
    try:
        hop_times = [int(x) for x in args.hop_ticks.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --hop-ticks list {args.hop_ticks!r}") from None
    if not hop_times:
        raise UsageError("--hop-ticks must list at least one value")
    routed = _load_routed(work)

    payload = hop_time_sweep(routed, hop_times, strategy, allow_loops_also=args.allow_loops)
    sweep_json = out_dir / "sweep.json"
    write_report_json(sweep_json, payload)
    sweep_csv = out_dir / "sweep.csv"
    with open(sweep_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hop_ticks", "metric", "n", "q25", "q50", "q75", "mean", "deanonymized"])
        for h in hop_times:
            for metric, s in sorted(payload["metrics"][str(h)].items()):
                w.writerow(
                    [h, metric, s["n"], s["q25"], s["q50"], s["q75"], s["mean"], s["deanonymized"]]
                )
    outputs = [sweep_json, sweep_csv]
    if args.figures:
        from . import figures

        metric_names = sorted(next(iter(payload["metrics"].values())).keys())
        series = {
            name: {
                q: [payload["metrics"][str(h)][name][q] for h in hop_times]
                for q in ("q25", "q50", "q75")
            }
            for name in metric_names
        }
        png = out_dir / "sweep.png"
        figures.save_sweep(png, hop_times, series, f"hop time sweep ({strategy.token})")
        outputs.append(png)
    _finish_manifest(
        args,
        out_dir,
        "ripple-sweep",
        {
            "dir": str(work),
            "hop_ticks": hop_times,
            "strategy": strategy.token,
            "allow_loops": args.allow_loops,
        },
        [work / "payments.csv", work / "routes.csv"],
        outputs,
    )
    print(f"sweep over hop times {hop_times} written to {sweep_json}")
    return 0


# ----------------------------------------------------------------------
# rerun

def cmd_rerun(args) -> int:
    # keep the original digests: the re-run rewrites the manifest itself
    manifest = load_manifest(args.manifest)
    argv = manifest.get("argv")
    if not argv:
        raise DataError(f"{args.manifest}: manifest has no recorded argv")
    code = main(argv)
    if code != 0:
        return code
    bad = verify_outputs(manifest)
    if bad:
        print("outputs differ from manifest:", *bad, sep="\n  ", file=sys.stderr)
        return 1
    print(f"re-ran `{manifest['command']}`; all {len(manifest['outputs'])} outputs identical")
    return 0


# ----------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonset",
        description="Sender anonymity set simulation and analysis for credit-network payments",
    )
    parser.add_argument("--version", action="version", version=f"anonset {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="generate a synthetic payment stream CSV")
    g.add_argument("--users", type=int, required=True)
    g.add_argument("--lambda", dest="mean_gap", type=int, required=True,
                   help="mean ticks between sends per user (10=high, 50=normal, 100=low)")
    g.add_argument("--horizon", type=int, default=None, help="ticks to simulate")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--warmup-ticks", type=int, default=None)
    g.add_argument("--out", required=True, help="output CSV path (.gz for gzip)")
    g.set_defaults(func=cmd_generate)

    ea = sub.add_parser("epoch-anon", help="epoch anonymity report")
    ea.add_argument("--in", dest="infile", default=None, help="payment stream CSV to analyse")
    ea.add_argument("--users", type=int, default=None)
    ea.add_argument("--lambda", dest="mean_gap", type=int, default=None)
    ea.add_argument("--epoch-ticks", type=int, default=10)
    ea.add_argument("--strategy", default="none",
                    help="none | fixed:K | scaled-cheap | scaled-exp")
    ea.add_argument("--reps", type=int, default=1)
    ea.add_argument("--epochs-per-rep", type=int, default=200)
    ea.add_argument("--warmup-ticks", type=int, default=None)
    ea.add_argument("--seed", type=int, default=0)
    ea.add_argument("--label", default=None)
    ea.add_argument("--pay-more", action="store_true", help="also report pay-more costs")
    ea.add_argument("--pay-more-epochs", type=int, default=2,
                    help="epochs per repetition fed to pay-more")
    ea.add_argument("--wait-cap", type=int, default=0,
                    help="also report waiting times, capped at this many ticks")
    ea.add_argument("--records", action="store_true",
                    help="write per-payment records CSV (single stream only)")
    ea.add_argument("--workers", type=int, default=1)
    ea.add_argument("--format", choices=["csv", "json", "both"], default="both")
    ea.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    ea.add_argument("--payments-per-day", type=float, default=None,
                    help="real-network anchor for minute labels in the report")
    ea.add_argument("--out", default=None, help="output directory (or ANONSET_OUTDIR)")
    ea.set_defaults(func=cmd_epoch_anon)

    r = sub.add_parser("ripple", help="transaction dump pipeline")
    rsub = r.add_subparsers(dest="ripple_cmd", required=True)

    ri = rsub.add_parser("ingest", help="parse and discretise dump + capacity updates")
    ri.add_argument("--payments", required=True, help="CSV time,sender,receiver,value[,currency]")
    ri.add_argument("--graph", required=True, help="CSV time,src,dst,capacity")
    ri.add_argument("--time-scale", type=int, default=1000)
    ri.add_argument("--window-start", type=int, default=None)
    ri.add_argument("--window-end", type=int, default=None)
    ri.add_argument("--currency", default=None)
    ri.add_argument("--out", default=None)
    ri.set_defaults(func=cmd_ripple_ingest)

    rr = rsub.add_parser("route", help="route payments over the credit graph")
    rr.add_argument("--dir", required=True, help="ingest output directory")
    rr.add_argument("--out", default=None, help="defaults to --dir")
    rr.set_defaults(func=cmd_ripple_route)

    ra = rsub.add_parser("anon", help="epoch + path anonymity report")
    ra.add_argument("--dir", required=True)
    ra.add_argument("--hop-ticks", type=int, default=1)
    ra.add_argument("--epoch-ticks", type=int, default=10)
    ra.add_argument("--strategy", default="none")
    ra.add_argument("--allow-loops", action="store_true")
    ra.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    ra.add_argument("--out", default=None)
    ra.set_defaults(func=cmd_ripple_anon)

    rc = rsub.add_parser("cover", help="greedy honest-node cover")
    rc.add_argument("--dir", required=True)
    rc.add_argument("--hop-ticks", type=int, default=1)
    rc.add_argument("--mode", choices=["any_intermediate", "mixing_only", "both"],
                    default="both")
    rc.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    rc.add_argument("--out", default=None)
    rc.set_defaults(func=cmd_ripple_cover)

    rs = rsub.add_parser("sweep", help="path anonymity vs hop time")
    rs.add_argument("--dir", required=True)
    rs.add_argument("--hop-ticks", default="1,2,4,8",
                    help="comma list, multiples of the smallest")
    rs.add_argument("--strategy", default="none")
    rs.add_argument("--allow-loops", action="store_true")
    rs.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    rs.add_argument("--out", default=None)
    rs.set_defaults(func=cmd_ripple_sweep)

    rn = sub.add_parser("rerun", help="re-execute a manifest and verify outputs")
    rn.add_argument("manifest")
    rn.set_defaults(func=cmd_rerun)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad parameter values caught by the library (users < 1, k < 1, ...)
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        row = f" (row {exc.row})" if exc.row is not None else ""
        print(f"data error: {exc}{row}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

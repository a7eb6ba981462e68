"""Ingest of credit-network transaction dumps into simulation inputs.

Two delimited inputs: a payment log (time,sender,receiver,value[,currency])
and a stream of directed channel capacity updates (time,src,dst,capacity).
Raw timestamps are divided by ``time_scale`` (1000 by default, squeezing the
recorded span into a denser simulated one) and floored to ticks.  Node names
are opaque strings; they are mapped to dense integer ids and the mapping is
persisted so later stages stay joinable.
"""

from __future__ import annotations

import csv
import json
import logging
from bisect import insort
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DataError, PaymentTable

log = logging.getLogger(__name__)


class ChannelGraph:
    """Directed credit graph: (u, v) -> spendable capacity in whole units.

    Capacities are integers so that conservation checks are exact.
    Adjacency is undirected (an edge in either direction links both nodes)
    and neighbour lists are kept sorted for deterministic traversal.
    """

    def __init__(self, edges=()):
        self.caps: dict[tuple[int, int], int] = {}
        self.adj: dict[int, list[int]] = {}
        self.nodes: set[int] = set()
        for u, v, c in edges:
            self.set_capacity(u, v, c)

    def add_node(self, u: int) -> None:
        if u not in self.nodes:
            self.nodes.add(u)
            self.adj[u] = []

    def _link(self, u: int, v: int) -> None:
        self.add_node(u)
        self.add_node(v)
        insort(self.adj[u], v)
        insort(self.adj[v], u)

    def capacity(self, u: int, v: int) -> int:
        return self.caps.get((u, v), 0)

    def set_capacity(self, u: int, v: int, c: int) -> None:
        if u == v:
            raise ValueError("self edge")
        if c < 0:
            raise ValueError("negative capacity")
        if (u, v) not in self.caps and (v, u) not in self.caps:
            self._link(u, v)
        self.caps[(u, v)] = int(c)

    def add_capacity(self, u: int, v: int, delta: int) -> None:
        self.set_capacity(u, v, self.capacity(u, v) + delta)

    def neighbours(self, u: int) -> list[int]:
        return self.adj.get(u, [])

    def pair_sum(self, u: int, v: int) -> int:
        return self.capacity(u, v) + self.capacity(v, u)

    def edge_pairs(self) -> set[tuple[int, int]]:
        return {(min(u, v), max(u, v)) for (u, v) in self.caps}

    def copy(self) -> "ChannelGraph":
        g = ChannelGraph()
        g.caps = dict(self.caps)
        g.adj = {u: list(vs) for u, vs in self.adj.items()}
        g.nodes = set(self.nodes)
        return g


@dataclass
class IngestConfig:
    time_scale: int = 1000
    window: tuple[int, int] | None = None   # [start, end) in raw time units
    currency: str | None = None             # None = keep the most common one

    def __post_init__(self):
        if self.time_scale < 1:
            raise ValueError("time_scale must be >= 1")
        if self.window is not None and self.window[0] >= self.window[1]:
            raise ValueError("window start must be < end")


@dataclass
class IdMap:
    """Stable opaque-name -> dense-int mapping, in order of first appearance."""

    names: dict[str, int] = field(default_factory=dict)

    def get(self, name: str) -> int:
        idx = self.names.get(name)
        if idx is None:
            idx = len(self.names)
            self.names[name] = idx
        return idx

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.names, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "IdMap":
        return cls(names=json.loads(Path(path).read_text()))


@dataclass
class IngestResult:
    table: PaymentTable
    graph: ChannelGraph                      # state at window start
    updates: list[tuple[int, int, int, int]]  # (tick, u, v, capacity) inside window
    id_map: IdMap
    stats: dict


def _round_value(x: float) -> int:
    # round half away from zero, clamp to the 1-unit minimum
    return max(int(np.floor(x + 0.5)), 1)


def ingest(payments_path: str | Path, graph_path: str | Path, config: IngestConfig) -> IngestResult:
    """Parse, filter and discretise a transaction dump plus capacity updates."""
    id_map = IdMap()
    rows = []
    currencies: dict[str, int] = {}
    dropped_self = 0
    with open(payments_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{payments_path}: empty file", row=1)
        cols = [c.strip().lower() for c in header]
        if cols[:4] != ["time", "sender", "receiver", "value"]:
            raise DataError(
                f"{payments_path}: expected header time,sender,receiver,value[,currency]", row=1
            )
        has_currency = len(cols) > 4 and cols[4] == "currency"
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 4:
                raise DataError(f"{payments_path}: expected >= 4 fields", row=rownum)
            try:
                raw_time = int(row[0])
                value = float(row[3])
            except ValueError as exc:
                raise DataError(f"{payments_path}: {exc}", row=rownum) from exc
            if value <= 0:
                raise DataError(f"{payments_path}: non-positive value {row[3]}", row=rownum)
            sender, receiver = row[1].strip(), row[2].strip()
            if not sender or not receiver:
                raise DataError(f"{payments_path}: missing node name", row=rownum)
            cur = row[4].strip() if has_currency and len(row) > 4 else ""
            rows.append((raw_time, sender, receiver, value, cur))
            if cur:
                currencies[cur] = currencies.get(cur, 0) + 1

    window = config.window
    if window is not None:
        rows = [r for r in rows if window[0] <= r[0] < window[1]]

    primary = config.currency
    if primary is None and currencies:
        primary = max(sorted(currencies), key=lambda c: currencies[c])
    dropped_currency = 0
    kept = []
    for raw_time, sender, receiver, value, cur in rows:
        if cur and primary is not None and cur != primary:
            dropped_currency += 1
            continue
        if sender == receiver:
            dropped_self += 1
            continue
        kept.append((raw_time, sender, receiver, value))
    if dropped_currency:
        log.warning("dropped %d payments not in primary unit %s", dropped_currency, primary)
    if dropped_self:
        log.warning("dropped %d self-payments", dropped_self)

    kept.sort(key=lambda r: r[0])
    times = np.array([r[0] // config.time_scale for r in kept], dtype=np.int64)
    senders = np.array([id_map.get(r[1]) for r in kept], dtype=np.int64)
    receivers = np.array([id_map.get(r[2]) for r in kept], dtype=np.int64)
    values = np.array([_round_value(r[3]) for r in kept], dtype=np.int64)
    order = np.lexsort((senders, times))
    table = PaymentTable(
        ids=np.arange(len(kept), dtype=np.int64),
        times=times[order],
        senders=senders[order],
        values=values[order],
        receivers=receivers[order],
        warmup_ticks=0,
    )

    graph, updates, last_update_raw = _ingest_graph(graph_path, config, id_map)

    if kept and last_update_raw is not None and kept[-1][0] > last_update_raw:
        log.warning(
            "payments extend %d raw units past the last capacity update; "
            "carrying last known capacities",
            kept[-1][0] - last_update_raw,
        )

    stats = {
        "payments": len(kept),
        "dropped_self": dropped_self,
        "dropped_currency": dropped_currency,
        "primary_currency": primary,
        "nodes": len(id_map.names),
        "graph_edges": len(graph.edge_pairs()),
        "updates_in_window": len(updates),
    }
    if kept:
        span_raw = max(kept[-1][0] - kept[0][0], 1) if window is None else window[1] - window[0]
        sim_minutes = span_raw / config.time_scale / 60.0
        stats["payments_per_sim_minute"] = len(kept) / sim_minutes if sim_minutes > 0 else None
    return IngestResult(table=table, graph=graph, updates=updates, id_map=id_map, stats=stats)


def _ingest_graph(graph_path, config: IngestConfig, id_map: IdMap):
    """Replay updates before the window into an initial graph; keep the rest."""
    entries = []
    with open(graph_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{graph_path}: empty file", row=1)
        if [c.strip().lower() for c in header] != ["time", "src", "dst", "capacity"]:
            raise DataError(f"{graph_path}: expected header time,src,dst,capacity", row=1)
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{graph_path}: expected 4 fields", row=rownum)
            try:
                raw_time = int(row[0])
                cap = float(row[3])
            except ValueError as exc:
                raise DataError(f"{graph_path}: {exc}", row=rownum) from exc
            if cap < 0:
                raise DataError(f"{graph_path}: negative capacity", row=rownum)
            src, dst = row[1].strip(), row[2].strip()
            if not src or not dst or src == dst:
                raise DataError(f"{graph_path}: bad edge {src!r}->{dst!r}", row=rownum)
            entries.append((raw_time, src, dst, _round_value(cap) if cap > 0 else 0))

    entries.sort(key=lambda r: r[0])
    window = config.window
    graph = ChannelGraph()
    updates = []
    last_raw = None
    for raw_time, src, dst, cap in entries:
        u, v = id_map.get(src), id_map.get(dst)
        if window is not None and raw_time >= window[1]:
            continue
        last_raw = raw_time
        if window is not None and raw_time < window[0]:
            # replay pre-window history into the initial graph state
            graph.set_capacity(u, v, cap)
        else:
            updates.append((raw_time // config.time_scale, u, v, cap))
    if window is not None and not updates:
        log.warning("no capacity updates inside the window; capacities frozen at window start")
    return graph, updates, last_raw

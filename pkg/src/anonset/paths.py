"""Capacity-constrained routing and path-based sender anonymity.

Payments route along the hop-count-shortest path whose every directed edge
has capacity >= value (lexicographically smallest path on ties).  Settled
payments shift credit: each traversed edge loses the value, the reverse
edge gains it.

Anonymity side: time is cut into hop slots of ``hop_time`` ticks.  A payment
starting in slot s occupies its i-th intermediate node during slot s + i;
payments meeting at the same (node, slot) are mixed there.  An observer can
follow chains of mixing events, but only along splices that do not revisit
a node (unless loops are allowed).  From the mixing relation we compute, per
payment, the largest plausible sender set (transitive closure) and the
smallest one (the weakest single mixing point on its path, whose node is the
witness an attacker would compromise first).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Payment
from .ripple import ChannelGraph
from .buckets import BucketStrategy
from .stats import Distribution


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


# ----------------------------------------------------------------------
# routing

@dataclass(frozen=True)
class RoutedPayment:
    """A payment together with the node sequence it settled along."""

    payment: Payment
    path: tuple[int, ...]

    def __post_init__(self):
        if len(self.path) < 2:
            raise ValueError("path needs at least sender and receiver")
        if self.path[0] != self.payment.sender:
            raise ValueError("path must start at the sender")
        if self.payment.receiver is not None and self.path[-1] != self.payment.receiver:
            raise ValueError("path must end at the receiver")
        if len(set(self.path)) != len(self.path):
            raise ValueError("path revisits a node")

    @property
    def intermediates(self) -> tuple[int, ...]:
        return self.path[1:-1]

    def start_slot(self, hop_time: int) -> int:
        return self.payment.time // hop_time

    def slot_at(self, i: int, hop_time: int) -> int:
        """Slot during which the i-th intermediate (1-based) is occupied."""
        if not 1 <= i <= len(self.intermediates):
            raise ValueError(f"no intermediate {i}")
        return self.start_slot(hop_time) + i


@dataclass(frozen=True)
class RouteFailure:
    payment: Payment
    reason: str


class Router:
    """Routes a time-ordered payment sequence over a mutating credit graph.

    ``updates`` are (tick, u, v, capacity) records applied before any
    payment with time >= tick is routed.
    """

    def __init__(self, graph: ChannelGraph, updates: Sequence[tuple[int, int, int, int]] = ()):
        self.graph = graph
        self.updates = sorted(updates, key=lambda r: (r[0], r[1], r[2]))
        self._next_update = 0

    def _apply_updates(self, now: int) -> None:
        while self._next_update < len(self.updates) and self.updates[self._next_update][0] <= now:
            _, u, v, cap = self.updates[self._next_update]
            self.graph.set_capacity(u, v, cap)
            self._next_update += 1

    def route(self, payment: Payment) -> RoutedPayment | RouteFailure:
        self._apply_updates(payment.time)
        g = self.graph
        if payment.receiver is None:
            return RouteFailure(payment, "no receiver")
        if payment.sender not in g.nodes:
            return RouteFailure(payment, "unknown sender")
        if payment.receiver not in g.nodes:
            return RouteFailure(payment, "unknown receiver")

        path = shortest_feasible_path(g, payment.sender, payment.receiver, payment.value)
        if path is None:
            return RouteFailure(payment, "no path with sufficient capacity")
        for a, b in zip(path, path[1:]):
            g.add_capacity(a, b, -payment.value)
            g.add_capacity(b, a, payment.value)
        return RoutedPayment(payment, path)

    def route_all(self, payments) -> tuple[list[RoutedPayment], list[RouteFailure]]:
        routed, failed = [], []
        for p in payments:
            res = self.route(p)
            (routed if isinstance(res, RoutedPayment) else failed).append(res)
        return routed, failed


def shortest_feasible_path(
    graph: ChannelGraph, src: int, dst: int, value: int
) -> tuple[int, ...] | None:
    """Hop-count-shortest path with capacity >= value on every edge,
    lexicographically smallest among equals."""
    if src == dst:
        raise ValueError("src == dst")
    # distance-to-destination via reverse BFS over feasible edges
    dist = {dst: 0}
    frontier = [dst]
    while frontier:
        nxt = []
        for x in frontier:
            d = dist[x] + 1
            for u in graph.neighbours(x):
                if u not in dist and graph.capacity(u, x) >= value:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    if src not in dist:
        return None
    # walk forward, always taking the smallest node id that stays on a
    # shortest path; neighbour lists are sorted so the first hit wins
    path = [src]
    cur = src
    while cur != dst:
        want = dist[cur] - 1
        step = None
        for v in graph.neighbours(cur):
            if dist.get(v) == want and graph.capacity(cur, v) >= value:
                step = v
                break
        path.append(step)
        cur = step
    return tuple(path)


# ----------------------------------------------------------------------
# mixing events and anonymity sets

@dataclass(frozen=True)
class MixingEvent:
    """Two or more payments sharing an intermediate node in one hop slot."""

    node: int
    slot: int
    members: tuple[int, ...]   # indices into the routed sequence


def build_mixing(routed: Sequence[RoutedPayment], hop_time: int) -> list[MixingEvent]:
    if hop_time < 1:
        raise ValueError("hop_time must be >= 1")
    occupancy: dict[tuple[int, int], list[int]] = {}
    for idx, rp in enumerate(routed):
        base = rp.start_slot(hop_time)
        for i, node in enumerate(rp.intermediates, start=1):
            occupancy.setdefault((node, base + i), []).append(idx)
    return [
        MixingEvent(node=node, slot=slot, members=tuple(members))
        for (node, slot), members in sorted(occupancy.items())
        if len(members) >= 2
    ]


def splice_loop_free(candidate: RoutedPayment, target: RoutedPayment, node: int) -> bool:
    """Whether candidate's path up to ``node`` continued by target's path
    from ``node`` visits no node twice."""
    try:
        ci = candidate.path.index(node)
        ti = target.path.index(node)
    except ValueError:
        raise ValueError(f"node {node} is not on both paths") from None
    spliced = candidate.path[: ci + 1] + target.path[ti + 1 :]
    return len(set(spliced)) == len(spliced)


def _mixes(p: RoutedPayment, q: RoutedPayment, node: int, allow_loops: bool) -> bool:
    return allow_loops or (splice_loop_free(p, q, node) and splice_loop_free(q, p, node))


def path_anon_max(
    routed: Sequence[RoutedPayment],
    events: Sequence[MixingEvent],
    allow_loops: bool = False,
    values: np.ndarray | None = None,
) -> np.ndarray:
    """Largest plausible sender set per payment: distinct senders in the
    payment's connected component under the mixing relation.

    ``values`` (bucketed, aligned with routed) restricts mixing to payments
    of equal observed value.
    """
    uf = UnionFind(len(routed))
    for ev in events:
        m = ev.members
        for a in range(len(m)):
            for b in range(a + 1, len(m)):
                i, j = m[a], m[b]
                if values is not None and values[i] != values[j]:
                    continue
                if uf.find(i) == uf.find(j):
                    continue
                if _mixes(routed[i], routed[j], ev.node, allow_loops):
                    uf.union(i, j)
    senders_of_root: dict[int, set[int]] = {}
    for idx, rp in enumerate(routed):
        senders_of_root.setdefault(uf.find(idx), set()).add(rp.payment.sender)
    return np.array([len(senders_of_root[uf.find(i)]) for i in range(len(routed))], dtype=np.int64)


def path_anon_min(
    routed: Sequence[RoutedPayment],
    events: Sequence[MixingEvent],
    hop_time: int,
    values: np.ndarray | None = None,
) -> tuple[np.ndarray, list[int | None]]:
    """Smallest sender set per payment and the witness node realising it.

    For every intermediate of the payment, the local set is the senders
    mixed with it there (loop-free splices both ways, same bucketed value
    when ``values`` is given) plus the payment's own sender; the minimum
    over intermediates is what a single honest-node compromise exposes.
    Ties pick the earliest node on the path.  Payments without
    intermediates report size 1 and no witness.  ``hop_time`` must match
    the one the events were built with.
    """
    event_map = {(ev.node, ev.slot): ev.members for ev in events}
    sizes = np.ones(len(routed), dtype=np.int64)
    witnesses: list[int | None] = [None] * len(routed)
    for idx, rp in enumerate(routed):
        inter = rp.intermediates
        if not inter:
            continue
        base = rp.start_slot(hop_time)
        best_size = None
        best_node = None
        for i, node in enumerate(inter, start=1):
            members = event_map.get((node, base + i), ())
            local = {rp.payment.sender}
            for j in members:
                if j == idx:
                    continue
                q = routed[j]
                if values is not None and values[j] != values[idx]:
                    continue
                if _mixes(rp, q, node, allow_loops=False):
                    local.add(q.payment.sender)
            if best_size is None or len(local) < best_size:
                best_size = len(local)
                best_node = node
        sizes[idx] = best_size
        witnesses[idx] = best_node
    return sizes, witnesses


@dataclass
class CoverResult:
    """Greedy honest-node cover of the multi-hop payments."""

    nodes: list[int]             # picked in order
    covered: int                 # payments covered by the picked nodes
    multi_hop: int               # payments that needed covering
    uncovered: list[int]         # routed indices no eligible node covers
    witness_count: int           # distinct worst-case witnesses (lower bound)


def honest_cover(
    routed: Sequence[RoutedPayment],
    events: Sequence[MixingEvent],
    hop_time: int,
    mode: str = "any_intermediate",
) -> CoverResult:
    """Smallest honest-node set (greedy) observing every multi-hop payment.

    mode "any_intermediate": any intermediate observes its payments.
    mode "mixing_only": a node observes a payment only where that payment
    actually meets another one (a mixing event it belongs to).
    """
    if mode not in ("any_intermediate", "mixing_only"):
        raise ValueError(f"unknown cover mode {mode!r}")
    event_keys = {(ev.node, ev.slot) for ev in events}

    coverage: dict[int, set[int]] = {}
    multi = []
    for idx, rp in enumerate(routed):
        inter = rp.intermediates
        if not inter:
            continue
        multi.append(idx)
        base = rp.start_slot(hop_time)
        for i, node in enumerate(inter, start=1):
            if mode == "mixing_only" and (node, base + i) not in event_keys:
                continue
            coverage.setdefault(node, set()).add(idx)

    uncovered = set(multi)
    picked: list[int] = []
    covered = 0
    while uncovered:
        best_node = None
        best_gain = 0
        for node in sorted(coverage):
            gain = len(coverage[node] & uncovered)
            if gain > best_gain:
                best_node, best_gain = node, gain
        if best_node is None:
            break  # mixing_only can leave unmixed payments unobservable
        picked.append(best_node)
        newly = coverage[best_node] & uncovered
        covered += len(newly)
        uncovered -= newly

    _, witnesses = path_anon_min(routed, events, hop_time)
    distinct_witnesses = {w for w in witnesses if w is not None}
    return CoverResult(
        nodes=picked,
        covered=covered,
        multi_hop=len(multi),
        uncovered=sorted(uncovered),
        witness_count=len(distinct_witnesses),
    )


def hop_time_sweep(
    routed: Sequence[RoutedPayment],
    hop_times: Sequence[int],
    strategy: BucketStrategy,
    allow_loops_also: bool = False,
) -> dict:
    """Path anonymity metrics per hop time, plain and value-intersected.

    Hop times should be multiples of the smallest so slot boundaries nest.
    Returns a JSON-ready dict: per hop time, per metric, the quartiles and
    the number of fully deanonymized payments (set size 1).
    """
    if not hop_times or any(h < 1 for h in hop_times):
        raise ValueError("hop_times must be positive")
    values = strategy.apply(np.array([rp.payment.value for rp in routed], dtype=np.int64))
    out: dict = {"strategy": strategy.token, "hop_times": list(hop_times), "metrics": {}}
    per_hop: dict[int, dict] = {}
    for h in hop_times:
        events = build_mixing(routed, h)
        metrics: dict[str, np.ndarray] = {}
        metrics["path_max"] = path_anon_max(routed, events)
        metrics["path_min"] = path_anon_min(routed, events, h)[0]
        metrics["path_max_value"] = path_anon_max(routed, events, values=values)
        metrics["path_min_value"] = path_anon_min(routed, events, h, values=values)[0]
        if allow_loops_also:
            metrics["path_max_loops"] = path_anon_max(routed, events, allow_loops=True)
        per_hop[h] = {
            name: _metric_summary(sizes) for name, sizes in metrics.items()
        }
    out["metrics"] = {str(h): per_hop[h] for h in hop_times}
    return out


def _metric_summary(sizes: np.ndarray) -> dict:
    dist = Distribution.from_samples(sizes)
    q25, q50, q75 = dist.quartiles()
    return {
        "n": int(len(sizes)),
        "q25": q25,
        "q50": q50,
        "q75": q75,
        "mean": dist.mean(),
        "deanonymized": int((sizes == 1).sum()),
    }

import numpy as np
import pytest

from anonset.buckets import IDENTITY, SCALED_EXPENSIVE
from anonset.model import Payment
from anonset.paths import (
    MixingEvent,
    RouteFailure,
    RoutedPayment,
    Router,
    UnionFind,
    build_mixing,
    honest_cover,
    hop_time_sweep,
    path_anon_max,
    path_anon_min,
    shortest_feasible_path,
    splice_loop_free,
)
from anonset.ripple import ChannelGraph

from .bruteforce import (
    brute_path_max,
    brute_path_min,
    brute_shortest_path,
    random_graph_instance,
    random_routed_instance,
)


def test_union_find():
    uf = UnionFind(5)
    uf.union(0, 1)
    uf.union(3, 4)
    assert uf.find(0) == uf.find(1)
    assert uf.find(0) != uf.find(3)
    uf.union(1, 4)
    assert uf.find(0) == uf.find(3)
    assert uf.find(2) not in {uf.find(0)}


def _pay(pid, time, sender, receiver, value=10):
    return Payment(id=pid, time=time, sender=sender, receiver=receiver, value=value)


def test_routed_payment_validation():
    rp = RoutedPayment(_pay(0, 7, 1, 2), (1, 5, 2))
    assert rp.intermediates == (5,)
    assert rp.start_slot(3) == 2
    assert rp.slot_at(1, 3) == 3
    with pytest.raises(ValueError):
        rp.slot_at(2, 3)
    with pytest.raises(ValueError):
        RoutedPayment(_pay(0, 0, 1, 2), (1,))
    with pytest.raises(ValueError):
        RoutedPayment(_pay(0, 0, 1, 2), (3, 2))
    with pytest.raises(ValueError):
        RoutedPayment(_pay(0, 0, 1, 2), (1, 3))
    with pytest.raises(ValueError):
        RoutedPayment(_pay(0, 0, 1, 2), (1, 5, 5, 2))


def _line_graph(cap=10):
    return ChannelGraph([(0, 1, cap), (1, 2, cap), (2, 3, cap)])


def test_shortest_path_line():
    g = _line_graph()
    assert shortest_feasible_path(g, 0, 3, 10) == (0, 1, 2, 3)
    assert shortest_feasible_path(g, 0, 3, 11) is None
    with pytest.raises(ValueError):
        shortest_feasible_path(g, 2, 2, 1)


def test_shortest_path_prefers_fewer_hops_then_lexicographic():
    g = ChannelGraph([(0, 1, 10), (1, 3, 10), (0, 2, 10), (2, 3, 10)])
    assert shortest_feasible_path(g, 0, 3, 10) == (0, 1, 3)
    g.set_capacity(0, 3, 5)
    assert shortest_feasible_path(g, 0, 3, 5) == (0, 3)
    assert shortest_feasible_path(g, 0, 3, 6) == (0, 1, 3)


def test_router_depletes_and_credits_capacity():
    g = ChannelGraph([(0, 1, 10)])
    router = Router(g)
    first = router.route(_pay(0, 0, 0, 1, 6))
    assert isinstance(first, RoutedPayment)
    assert g.capacity(0, 1) == 4
    assert g.capacity(1, 0) == 6
    second = router.route(_pay(1, 1, 0, 1, 6))
    assert isinstance(second, RouteFailure)
    assert second.reason == "no path with sufficient capacity"
    # the reverse direction earned credit and can pay it back
    back = router.route(_pay(2, 2, 1, 0, 6))
    assert isinstance(back, RoutedPayment)
    assert g.capacity(0, 1) == 10


def test_router_failure_reasons():
    g = ChannelGraph([(0, 1, 10)])
    router = Router(g)
    assert router.route(_pay(0, 0, 0, None, 5)).reason == "no receiver"
    assert router.route(_pay(1, 0, 7, 1, 5)).reason == "unknown sender"
    assert router.route(_pay(2, 0, 0, 7, 5)).reason == "unknown receiver"


def test_router_applies_updates_by_tick():
    g = ChannelGraph([(0, 1, 1)])
    router = Router(g, updates=[(5, 0, 1, 100)])
    early = router.route(_pay(0, 4, 0, 1, 50))
    assert isinstance(early, RouteFailure)
    late = router.route(_pay(1, 5, 0, 1, 50))
    assert isinstance(late, RoutedPayment)


def test_route_all_splits_outcomes():
    g = ChannelGraph([(0, 1, 10)])
    routed, failed = Router(g).route_all(
        [_pay(0, 0, 0, 1, 6), _pay(1, 1, 0, 1, 6)]
    )
    assert len(routed) == 1 and len(failed) == 1


def test_routing_matches_brute_enumeration_and_conserves_credit():
    rng = np.random.default_rng(200)
    for _ in range(100):
        n, caps = random_graph_instance(rng)
        g = ChannelGraph([(u, v, c) for (u, v), c in caps.items()])
        pairs = g.edge_pairs()
        before = {pq: g.pair_sum(*pq) for pq in pairs}
        shadow = dict(caps)
        router = Router(g)
        for t in range(int(rng.integers(1, 10))):
            src, dst = rng.choice(n, size=2, replace=False)
            p = _pay(t, t, int(src), int(dst), int(rng.integers(1, 15)))
            if p.sender not in g.nodes or p.receiver not in g.nodes:
                continue
            want = brute_shortest_path(shadow, n, p.sender, p.receiver, p.value)
            got = router.route(p)
            if want is None:
                assert isinstance(got, RouteFailure)
            else:
                assert isinstance(got, RoutedPayment)
                assert got.path == want
                for a, b in zip(want, want[1:]):
                    shadow[(a, b)] = shadow.get((a, b), 0) - p.value
                    shadow[(b, a)] = shadow.get((b, a), 0) + p.value
        after = {pq: g.pair_sum(*pq) for pq in pairs}
        assert after == before


def test_build_mixing_slot_boundaries():
    hop = 4
    a = RoutedPayment(_pay(0, 0, 0, 1), (0, 9, 1))
    b = RoutedPayment(_pay(1, hop - 1, 2, 3), (2, 9, 3))
    c = RoutedPayment(_pay(2, hop, 4, 5), (4, 9, 5))
    events = build_mixing([a, b, c], hop)
    assert events == [MixingEvent(node=9, slot=1, members=(0, 1))]
    with pytest.raises(ValueError):
        build_mixing([a], 0)


def test_build_mixing_uses_hop_index_offsets():
    # second intermediate of a occupies slot start+2 and meets b there
    a = RoutedPayment(_pay(0, 0, 0, 3), (0, 8, 9, 3))
    b = RoutedPayment(_pay(1, 1, 2, 4), (2, 9, 4))
    events = build_mixing([a, b], 1)
    assert events == [MixingEvent(node=9, slot=2, members=(0, 1))]


def test_splice_loop_free():
    a = RoutedPayment(_pay(0, 0, 0, 1), (0, 5, 1))
    b = RoutedPayment(_pay(1, 0, 2, 3), (2, 5, 3))
    assert splice_loop_free(a, b, 5)
    assert splice_loop_free(b, a, 5)
    # b ends where a starts: sending a along b's tail revisits nothing,
    # but sending b along a's tail hits node 1 twice
    c = RoutedPayment(_pay(2, 0, 1, 2), (1, 5, 2))
    assert splice_loop_free(a, c, 5)
    assert not splice_loop_free(c, a, 5)
    with pytest.raises(ValueError):
        splice_loop_free(a, b, 7)


def test_path_anon_hand_example():
    a = RoutedPayment(_pay(0, 0, 0, 1), (0, 9, 1))
    b = RoutedPayment(_pay(1, 0, 2, 3), (2, 9, 3))
    direct = RoutedPayment(_pay(2, 0, 4, 5), (4, 5))
    routed = [a, b, direct]
    events = build_mixing(routed, 1)
    assert path_anon_max(routed, events).tolist() == [2, 2, 1]
    sizes, witnesses = path_anon_min(routed, events, 1)
    assert sizes.tolist() == [2, 2, 1]
    assert witnesses == [9, 9, None]


def test_path_anon_loop_free_blocks_splice():
    a = RoutedPayment(_pay(0, 0, 0, 1), (0, 5, 1))
    c = RoutedPayment(_pay(1, 0, 1, 2), (1, 5, 2))
    routed = [a, c]
    events = build_mixing(routed, 1)
    assert path_anon_max(routed, events).tolist() == [1, 1]
    assert path_anon_max(routed, events, allow_loops=True).tolist() == [2, 2]
    sizes, _ = path_anon_min(routed, events, 1)
    assert sizes.tolist() == [1, 1]


def test_path_anon_value_filter():
    a = RoutedPayment(_pay(0, 0, 0, 1, value=10), (0, 9, 1))
    b = RoutedPayment(_pay(1, 0, 2, 3, value=20), (2, 9, 3))
    routed = [a, b]
    events = build_mixing(routed, 1)
    values = np.array([10, 20])
    assert path_anon_max(routed, events, values=values).tolist() == [1, 1]
    assert path_anon_min(routed, events, 1, values=values)[0].tolist() == [1, 1]
    same = np.array([10, 10])
    assert path_anon_max(routed, events, values=same).tolist() == [2, 2]


def test_path_metrics_match_brute_on_random_instances():
    rng = np.random.default_rng(201)
    for _ in range(100):
        routed = random_routed_instance(rng)
        hop = int(rng.integers(1, 4))
        events = build_mixing(routed, hop)
        values = SCALED_EXPENSIVE.apply(
            np.array([rp.payment.value for rp in routed], dtype=np.int64)
        )
        assert path_anon_max(routed, events).tolist() == brute_path_max(routed, hop)
        assert path_anon_max(routed, events, allow_loops=True).tolist() == brute_path_max(
            routed, hop, allow_loops=True
        )
        assert path_anon_min(routed, events, hop)[0].tolist() == brute_path_min(routed, hop)
        assert path_anon_max(routed, events, values=values).tolist() == brute_path_max(
            routed, hop, values=values
        )
        assert path_anon_min(routed, events, hop, values=values)[0].tolist() == brute_path_min(
            routed, hop, values=values
        )


def test_path_min_never_exceeds_max_and_loops_never_shrink():
    rng = np.random.default_rng(202)
    for _ in range(60):
        routed = random_routed_instance(rng)
        hop = int(rng.integers(1, 4))
        events = build_mixing(routed, hop)
        mx = path_anon_max(routed, events)
        mn = path_anon_min(routed, events, hop)[0]
        loops = path_anon_max(routed, events, allow_loops=True)
        assert np.all(mn <= mx)
        assert np.all(loops >= mx)
        assert np.all(mn >= 1)


def test_honest_cover_star():
    routed = [
        RoutedPayment(_pay(i, i, 10 + i, 20 + i), (10 + i, 0, 20 + i)) for i in range(4)
    ]
    events = build_mixing(routed, 1)
    res = honest_cover(routed, events, 1)
    assert res.nodes == [0]
    assert res.covered == 4
    assert res.multi_hop == 4
    assert res.uncovered == []


def test_honest_cover_mixing_only_leaves_unmixed():
    mixed_a = RoutedPayment(_pay(0, 0, 1, 2), (1, 0, 2))
    mixed_b = RoutedPayment(_pay(1, 0, 3, 4), (3, 0, 4))
    lone = RoutedPayment(_pay(2, 50, 5, 6), (5, 7, 6))
    routed = [mixed_a, mixed_b, lone]
    events = build_mixing(routed, 1)
    res = honest_cover(routed, events, 1, mode="mixing_only")
    assert res.nodes == [0]
    assert res.uncovered == [2]
    full = honest_cover(routed, events, 1, mode="any_intermediate")
    assert full.uncovered == []
    assert set(full.nodes) == {0, 7}
    with pytest.raises(ValueError):
        honest_cover(routed, events, 1, mode="nope")


def test_honest_cover_greedy_tie_prefers_smaller_node():
    left = [RoutedPayment(_pay(i, 0, 10 + i, 30 + i), (10 + i, 4, 30 + i)) for i in range(2)]
    right = [RoutedPayment(_pay(9 + i, 0, 50 + i, 70 + i), (50 + i, 2, 70 + i)) for i in range(2)]
    routed = left + right
    res = honest_cover(routed, build_mixing(routed, 1), 1)
    assert res.nodes == [2, 4]


def _single_intermediate_fixture(rng, n=60):
    hubs = [0, 1, 2]
    routed = []
    for i in range(n):
        hub = hubs[int(rng.integers(len(hubs)))]
        p = _pay(i, int(rng.integers(0, 24)), 100 + i, 200 + i, int(rng.choice([10, 20])))
        routed.append(RoutedPayment(p, (p.sender, hub, p.receiver)))
    return routed


def test_nested_hop_times_only_grow_sets():
    # doubling the hop time merges slots, so per-payment sizes cannot drop
    rng = np.random.default_rng(203)
    routed = _single_intermediate_fixture(rng)
    prev_max = None
    prev_min = None
    for hop in (1, 2, 4, 8):
        events = build_mixing(routed, hop)
        mx = path_anon_max(routed, events)
        mn = path_anon_min(routed, events, hop)[0]
        if prev_max is not None:
            assert np.all(mx >= prev_max)
            assert np.all(mn >= prev_min)
        prev_max, prev_min = mx, mn


def test_single_intermediate_min_equals_max():
    # with one intermediate per payment a component is exactly one event
    rng = np.random.default_rng(204)
    routed = _single_intermediate_fixture(rng)
    events = build_mixing(routed, 2)
    mx = path_anon_max(routed, events)
    mn = path_anon_min(routed, events, 2)[0]
    assert np.array_equal(mx, mn)


def test_hop_time_sweep_structure():
    rng = np.random.default_rng(205)
    routed = _single_intermediate_fixture(rng)
    payload = hop_time_sweep(routed, [1, 2, 4], IDENTITY, allow_loops_also=True)
    assert payload["strategy"] == "none"
    assert payload["hop_times"] == [1, 2, 4]
    for h in ("1", "2", "4"):
        metrics = payload["metrics"][h]
        assert set(metrics) == {
            "path_max",
            "path_min",
            "path_max_value",
            "path_min_value",
            "path_max_loops",
        }
        for s in metrics.values():
            assert s["n"] == len(routed)
            assert s["q25"] <= s["q50"] <= s["q75"]
    medians = [payload["metrics"][h]["path_max"]["q50"] for h in ("1", "2", "4")]
    assert medians == sorted(medians)
    with pytest.raises(ValueError):
        hop_time_sweep(routed, [], IDENTITY)
    with pytest.raises(ValueError):
        hop_time_sweep(routed, [0], IDENTITY)

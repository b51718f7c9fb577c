import itertools
import random
from fractions import Fraction

import pytest

from conftest import mk, mk_instance, random_agreeable
from oracles import brute_force_opt, oracle_oblivious

from pktsched.model import InvariantError, follows_priority_order, order_key, precedes
from pktsched.offline import (
    build_graph,
    conforming_clairvoyant,
    oblivious_schedule,
    opt_schedule,
    select_earliest_heaviest,
)


def fig_packets():
    windows = [(2, 3), (2, 4), (3, 7), (4, 7), (6, 7)]
    return [mk(f"j{i+1}", r, d, 1, i) for i, (r, d) in enumerate(windows)]


class TestGraph:
    def test_window_edges(self):
        graph = build_graph(fig_packets(), 2, 6)
        by_id = {p.id: steps for p, steps in graph.edges.items()}
        assert by_id == {
            "j1": (2,),
            "j2": (2, 3),
            "j3": (3, 4, 5, 6),
            "j4": (4, 5, 6),
            "j5": (6,),
        }

    def test_single_packet_single_edge(self):
        p = mk("a", 1, 2, 1)
        graph = build_graph([p], 1, 1)
        assert graph.edges[p] == (1,)
        assert graph.edge_weight(p, 1) == 1

    def test_unreleased_packet_is_isolated(self):
        p = mk("a", 5, 7, 1)
        graph = build_graph([p], 1, 3)
        assert graph.edges[p] == ()
        with pytest.raises(KeyError):
            graph.edge_weight(p, 2)

    def test_rejects_empty_range(self):
        with pytest.raises(ValueError):
            build_graph([], 3, 2)


class TestOptSchedule:
    def test_window_example_all_scheduled(self):
        sched, value = opt_schedule(fig_packets(), 2)
        assert value == 5
        assert len(sched) == 5
        assert value == brute_force_opt(fig_packets(), 2)

    def test_one_slot_heavier_wins(self):
        a, b = mk("a", 1, 2, 1, 0), mk("b", 1, 2, 9, 1)
        sched, value = opt_schedule([a, b], 1)
        assert value == 9
        assert sched.at(1) == b

    def test_three_packet_instance(self):
        inst = mk_instance(("a", 1, 2, 1), ("b", 1, 3, 2), ("c", 2, 3, 2))
        _, value = opt_schedule(inst.packets, 1)
        assert value == 4
        assert value == brute_force_opt(inst.packets, 1)

    def test_empty(self):
        sched, value = opt_schedule([], 1)
        assert value == 0 and not sched

    def test_value_invariant_under_input_order(self):
        rng = random.Random(17)
        inst = random_agreeable(rng)
        packets = list(inst.packets)
        _, reference = opt_schedule(packets, 1)
        for _ in range(5):
            rng.shuffle(packets)
            _, value = opt_schedule(packets, 1)
            assert value == reference

    def test_matches_brute_force_on_random_instances(self):
        rng = random.Random(99)
        for _ in range(150):
            rows = []
            for i in range(rng.randint(0, 7)):
                r = rng.randint(1, 4)
                rows.append(
                    (f"p{i}", r, r + rng.randint(1, 3), Fraction(rng.randint(1, 9), rng.randint(1, 3)))
                )
            rows.sort(key=lambda row: row[1])
            inst = mk_instance(*rows)
            _, value = opt_schedule(inst.packets, 1)
            assert value == brute_force_opt(inst.packets, 1)

    def test_respects_release_times(self):
        # the far packet cannot fill the early slot
        a, b = mk("a", 1, 2, 1, 0), mk("b", 3, 4, 5, 1)
        _, value = opt_schedule([a, b], 1)
        assert value == 6

    def test_large_deadline_does_not_blow_up(self):
        a = mk("a", 1, 10**6, 1, 0)
        sched, value = opt_schedule([a], 1)
        assert value == 1 and sched.at(1) == a


class TestObliviousSchedule:
    def test_dominated_light_tight_packet(self):
        a, b, c = mk("a", 1, 2, 3, 0), mk("b", 1, 2, 5, 1), mk("c", 1, 3, 4, 2)
        ob = oblivious_schedule({a, b, c}, 1)
        assert ob.schedule.sequence() == (b, c)
        assert ob.earliest == b and ob.heaviest == b
        assert ob.dominated == {a}

    def test_both_fit(self):
        a, b = mk("a", 1, 2, 1, 0), mk("b", 1, 3, 3, 1)
        ob = oblivious_schedule({a, b}, 1)
        assert ob.schedule.sequence() == (a, b)
        assert ob.earliest == a and ob.heaviest == b
        assert ob.dominated == frozenset()

    def test_singleton(self):
        x = mk("x", 1, 5, 2)
        ob = oblivious_schedule({x}, 1)
        assert ob.schedule.sequence() == (x,)
        assert ob.earliest == ob.heaviest == x

    def test_rejects_empty_or_stale(self):
        with pytest.raises(ValueError):
            oblivious_schedule([], 1)
        with pytest.raises(ValueError, match="not pending"):
            oblivious_schedule({mk("a", 1, 2, 1)}, 2)

    def test_exhaustive_small_sets_match_enumeration_oracle(self):
        # every pending multiset of up to 6 packets over this kind grid
        kinds = [(d, w) for d in (2, 3, 4) for w in (1, 2)]
        for size in range(1, 7):
            for combo in itertools.combinations_with_replacement(kinds, size):
                pending = [mk(f"p{i}", 1, d, w, i) for i, (d, w) in enumerate(combo)]
                ob = oblivious_schedule(pending, 1)
                seq, e, h, dom = oracle_oblivious(pending, 1)
                assert ob.schedule.sequence() == seq
                assert ob.earliest == e and ob.heaviest == h and ob.dominated == dom
                _, value = opt_schedule(pending, 1)
                assert ob.schedule.weight == value

    def test_matches_matching_value_on_random_sets(self):
        rng = random.Random(4)
        for _ in range(200):
            step = rng.randint(1, 3)
            pending = [
                mk(
                    f"p{i}",
                    rng.randint(1, step),
                    step + rng.randint(1, 4),
                    Fraction(rng.randint(1, 9), rng.randint(1, 3)),
                    i,
                )
                for i in range(rng.randint(1, 7))
            ]
            ob = oblivious_schedule(pending, step)
            _, value = opt_schedule(pending, step)
            assert ob.schedule.weight == value
            assert follows_priority_order(ob.schedule, step)


class TestSelectEarliestHeaviest:
    def test_unique_heaviest(self):
        a, b = mk("a", 1, 2, 1, 0), mk("b", 1, 3, 3, 1)
        sched = oblivious_schedule({a, b}, 1).schedule
        assert select_earliest_heaviest(sched) == (a, b)

    def test_weight_tie_takes_order_minimal(self):
        a, b = mk("a", 1, 2, 3, 0), mk("b", 1, 3, 3, 1)
        sched = oblivious_schedule({a, b}, 1).schedule
        assert select_earliest_heaviest(sched) == (a, a)

    def test_singleton(self):
        x = mk("x", 1, 4, 1)
        sched = oblivious_schedule({x}, 2).schedule
        assert select_earliest_heaviest(sched) == (x, x)

    def test_empty_raises(self):
        from pktsched.model import EMPTY_SCHEDULE

        with pytest.raises(ValueError):
            select_earliest_heaviest(EMPTY_SCHEDULE)


class TestConformingClairvoyant:
    def test_no_future_keeps_pending_plan(self):
        a, b = mk("a", 1, 2, 1, 0), mk("b", 1, 3, 3, 1)
        ob = oblivious_schedule({a, b}, 1)
        conf = conforming_clairvoyant([a, b], [], 1, ob)
        assert conf.slots == ((1, a), (2, b))

    def test_future_displaces_light_packet(self):
        a, b = mk("a", 1, 2, 1, 0), mk("b", 1, 3, 3, 1)
        c = mk("c", 2, 3, 3, 2)
        ob = oblivious_schedule({a, b}, 1)
        conf = conforming_clairvoyant([a, b], [c], 1, ob)
        assert conf.slots == ((1, b), (2, c))
        # the only order-earlier oblivious member weighs strictly less
        assert a.weight < b.weight

    def test_singleton(self):
        x = mk("x", 1, 4, 2)
        ob = oblivious_schedule({x}, 2)
        conf = conforming_clairvoyant([x], [], 2, ob)
        assert conf.slots == ((2, x),)

    def test_rejects_non_agreeable_universe(self):
        a = mk("a", 1, 5, 1, 0)
        late = mk("b", 2, 3, 1, 1)
        ob = oblivious_schedule({a}, 1)
        with pytest.raises(ValueError, match="agreeable"):
            conforming_clairvoyant([a], [late], 1, ob)

    def test_conformance_clauses_on_random_instances(self):
        rng = random.Random(31)
        checked = 0
        for _ in range(120):
            inst = random_agreeable(rng)
            if not len(inst):
                continue
            arrivals = inst.arrivals_by_step
            pending = frozenset()
            for step in range(inst.first_release, inst.horizon + 1):
                pending = frozenset(
                    p for p in pending if p.deadline > step
                ) | frozenset(arrivals.get(step, ()))
                if not pending:
                    continue
                ob = oblivious_schedule(pending, step)
                future = [p for p in inst.packets if p.release > step]
                conf = conforming_clairvoyant(pending, future, step, ob)
                checked += 1
                # optimal over pending plus future
                _, best = opt_schedule(list(pending) + future, step)
                assert conf.weight == best
                # deadline-first order
                assert follows_priority_order(conf, step)
                # pending part inside the oblivious schedule
                assert all(
                    p in ob.schedule.packets
                    for p in conf.packets
                    if p.release <= step
                )
                # first-packet clause
                first = conf.at(step)
                assert first is not None
                assert all(
                    p.weight < first.weight
                    for p in ob.schedule.packets
                    if p != first and precedes(p, first)
                )
                # consume the earliest packet to vary the pending sets
                pending = pending - {min(pending, key=order_key)}
        assert checked > 150

    def test_displaced_earliest_with_middle_first_packet(self):
        # future arrival pushes the earliest packet out of the optimum and
        # the conforming schedule starts with a packet strictly between the
        # earliest and the heaviest; the heaviest must still be frontable
        e = mk("e", 1, 2, 1, 0)
        j = mk("j", 1, 3, 2, 1)
        h = mk("h", 1, 4, 3, 2)
        x = mk("x", 2, 4, 10, 3)
        ob = oblivious_schedule({e, j, h}, 1)
        assert ob.schedule.sequence() == (e, j, h)
        conf = conforming_clairvoyant([e, j, h], [x], 1, ob)
        assert conf.slots == ((1, j), (2, x), (3, h))
        assert ob.earliest not in conf.packets
        assert conf.at(1) not in (ob.earliest, ob.heaviest)
        # moving the heaviest to the front keeps feasibility: h@1, j@2, x@3
        assert h.deadline > 1 and j.deadline > 2 and x.deadline > 3

    def test_corrupted_oblivious_is_rejected(self):
        # dropping a packet from the oblivious schedule breaks the repair
        a, b = mk("a", 1, 3, 1, 0), mk("b", 1, 3, 1, 1)
        ob = oblivious_schedule({a, b}, 1)
        from pktsched.offline import ObliviousSchedule
        from pktsched.model import Schedule

        crippled = ObliviousSchedule(
            Schedule(((1, a),)), 1, a, a, frozenset({b})
        )
        with pytest.raises(InvariantError):
            conforming_clairvoyant([a, b], [], 1, crippled)

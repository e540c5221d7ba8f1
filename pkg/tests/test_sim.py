import json

import numpy as np
import pytest

from clique_apsp.errors import QuotaExceeded
from clique_apsp.graph import gen_graph
from clique_apsp.hopset import build_hopset
from clique_apsp.oracles import exact_apsp
from clique_apsp.sim import (Inbox, MessageBatch, RoundLedger, absorb, broadcast, charge, route_loads,
                             route_validated, run_parallel)


def all_to_all(n, words=1):
    s, d = np.nonzero(~np.eye(n, dtype=bool))
    return MessageBatch(n, s, d, np.ones((len(s), words)))


def test_all_to_all_one_round():
    led = RoundLedger(8)
    inbox = route_validated(led, all_to_all(8))
    assert led.total_rounds == 1
    assert len(inbox) == 56
    src, _ = inbox.for_node(3)
    assert sorted(src.tolist()) == [0, 1, 2, 4, 5, 6, 7]


def test_hotspot_raises():
    n = 8
    led = RoundLedger(n, quota_c=4)
    words = int(2 * n * 4)
    batch = MessageBatch(n, np.zeros(words, dtype=int) + 1, np.zeros(words, dtype=int), np.ones((words, 1)))
    with pytest.raises(QuotaExceeded, match="node 1 receives"):
        route_validated(led, batch)
    assert led.total_rounds == 0


def test_sender_may_exceed_with_source_words():
    n = 4
    batch = MessageBatch(n, [0] * 30, [1, 2, 3] * 10, np.ones((30, 1)))
    with pytest.raises(QuotaExceeded):
        route_validated(RoundLedger(n, quota_c=4), batch)
    led = RoundLedger(n, quota_c=4)
    route_validated(led, batch, source_words=[4, 0, 0, 0])
    assert led.entries[0].max_sent == 30


def test_delivery_is_exact_and_ordered():
    b = MessageBatch.from_list(3, [(1, 2, [7, 8]), (3, 2, [9]), (1, 2, [1])])
    assert b.lengths.tolist() == [2, 1, 1]
    inbox = Inbox(b)
    src, pay = inbox.for_node(1)
    assert src.tolist() == [0, 2, 0]
    assert pay[:, 0].tolist() == [7, 9, 1]
    assert b.received_words().tolist() == [0, 4, 0]


def test_batch_validation():
    with pytest.raises(ValueError):
        MessageBatch(3, [0], [3])
    empty = MessageBatch(3, [], [], np.zeros((0, 1)))
    assert len(empty) == 0


@pytest.mark.parametrize("n,words,B,rounds", [
    (256, 256, 1, 1),
    (256, 256 * 8 ** 2, 1, 64),
    (256, 256 * 8 ** 2, 8 ** 3, 1),
    (10, 0, 1, 1),
    (10, 11, 1, 2),
])
def test_broadcast_rule(n, words, B, rounds):
    led = RoundLedger(n, B)
    assert broadcast(led, words) == rounds
    assert led.total_rounds == rounds


def test_charge_orders_entries():
    led = RoundLedger(4)
    charge(led, "mst", 1)
    charge(led, "other", 2)
    assert [e.primitive for e in led.entries] == ["mst", "other"]
    assert led.total_rounds == 3


def test_for_model():
    assert RoundLedger.for_model(256, 1).bandwidth_B == 1
    assert RoundLedger.for_model(256, 4).bandwidth_B == 8 ** 3


def test_parallel_charges_max_and_checks_bandwidth():
    parent = RoundLedger(16, 4, quota_c=4)
    subs = []
    for r in (3, 5, 2):
        s = RoundLedger(16, 4)
        s.charge("x", r)
        subs.append(s)
    assert run_parallel(parent, subs) == 5
    assert parent.total_rounds == 5
    too_many = [RoundLedger(16, 4) for _ in range(5)]
    with pytest.raises(QuotaExceeded):
        run_parallel(parent, too_many)


def test_absorb_and_stages():
    sub = RoundLedger(4)
    with sub.stage("inner"):
        sub.charge("a", 2)
    led = RoundLedger(8)
    with led.stage("outer"):
        absorb(led, sub, "sim")
    assert led.entries[0].primitive == "sim.a"
    assert led.entries[0].stage == "outer/inner"
    assert led.stage_totals() == {"outer": 2}


def test_route_loads_validates():
    led = RoundLedger(4)
    route_loads(led, [1, 2, 3, 4], [4, 3, 2, 1], name="x")
    with pytest.raises(QuotaExceeded):
        route_loads(led, [0, 0, 0, 0], [0, 17, 0, 0])


def test_hopset_collection_load_within_two_n():
    g = gen_graph("erdos_renyi:64:0.1:w=1-20", 4)
    led = RoundLedger(64, quota_c=2)
    build_hopset(g, exact_apsp(g), led)
    collect = [e for e in led.entries if e.primitive == "hopset.collect"][0]
    assert collect.max_received <= 2 * 64


def test_json_export():
    led = RoundLedger(4)
    led.charge("a", 1, 3, 4)
    d = json.loads(led.to_json())
    assert d["entries"][0] == {"primitive": "a", "rounds": 1, "max_sent": 3, "max_received": 4}
    assert d["total_rounds"] == 1

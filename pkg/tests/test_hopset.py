import math

import numpy as np
import pytest

from clique_apsp.audit import underweight_fault
from clique_apsp.errors import PreconditionViolated
from clique_apsp.graph import Graph, gen_graph
from clique_apsp.hopset import (Hopset, approx_knearest_sets, beta_for, build_hopset, ell_radii,
                                top_out_edges, verify_hopset)
from clique_apsp.oracles import DistanceEstimate, exact_apsp, hhop_dense, knearest_oracle
from clique_apsp.primitives import logn_apsp
from clique_apsp.sim import RoundLedger
from clique_apsp.tropical import INF


def empty_hopset(n):
    z = np.zeros(0, dtype=np.int64)
    return Hopset(n, z, z, z, n - 1)


def test_beta_formula():
    assert beta_for(1, 1) == 3
    assert beta_for(1, math.e) == 2 * (1 + 1) + 1
    assert beta_for(2, 10) == 2 * (math.ceil(2 * math.log(10)) + 1) + 1


def test_approx_sets_path_and_scaling():
    d = exact_apsp(gen_graph("path:4", 0))
    assert approx_knearest_sets(d, 2).sets()[0] == {1, 2}
    doubled = DistanceEstimate(np.minimum(d.values * 2, INF), 2)
    assert approx_knearest_sets(doubled, 2).sets() == approx_knearest_sets(d, 2).sets()


def test_top_out_edges_tie_break():
    g = Graph.from_edges(4, [(1, 4, 1), (1, 3, 1), (1, 2, 2)])
    s, d, w = top_out_edges(g, 2)
    sel = s == 0
    assert d[sel].tolist() == [2, 3]


def test_path_hand_trace():
    g = gen_graph("path:4", 0)
    led = RoundLedger(4)
    h = build_hopset(g, exact_apsp(g), led)
    assert (1, 3, 2) in h.edges
    assert all(w == exact_apsp(g)(u, v) for u, v, w in h.edges)
    assert led.total_rounds == 3


def test_unit_clique_beta_3():
    g = gen_graph("clique:16", 0)
    h = build_hopset(g, exact_apsp(g), RoundLedger(16))
    assert len(h) == 0
    assert verify_hopset(g, h, 4, 3) == (True, None)


def test_empty_hopset_full_hops():
    g = gen_graph("erdos_renyi:20:0.2:w=1-9", 1)
    assert verify_hopset(g, empty_hopset(20), 20, 19)[0]


def test_underweight_fault_detected():
    g = gen_graph("erdos_renyi:32:0.2:w=1-9", 2)
    h = build_hopset(g, exact_apsp(g), RoundLedger(32))
    ok, pair = verify_hopset(g, underweight_fault(g, h), h.k, h.beta_bound)
    assert not ok and isinstance(pair, tuple) and len(pair) == 2


def test_rejects_zero_weights():
    g = Graph.from_edges(3, [(1, 2, 0), (2, 3, 1)])
    with pytest.raises(PreconditionViolated):
        build_hopset(g, exact_apsp(g), RoundLedger(3))


@pytest.mark.parametrize("seed", range(5))
def test_logn_delta_er64(seed):
    g = gen_graph("erdos_renyi:64:0.1:w=1-30", seed)
    led = RoundLedger(64)
    d = logn_apsp(g, 1.0, seed, led)
    d = DistanceEstimate(np.minimum(d.values, d.values.T), d.claimed_factor)
    h = build_hopset(g, d, led)
    assert verify_hopset(g, h, 8, h.beta_bound) == (True, None)


def test_shortcuts_are_real_paths_and_directed():
    g = gen_graph("random_geometric:48:0.3:w=1-20", 3)
    d = exact_apsp(g).values
    h = build_hopset(g, exact_apsp(g), RoundLedger(48))
    assert np.all(h.w >= d[h.src, h.dst])
    assert Graph.from_text(h.to_text()).directed


def test_exact_inside_shrunk_ball_and_containment():
    # with a sound a-bounded estimate, B_{(l(v)-1)/a}(v) lies inside the candidate set
    for seed in range(4):
        g = gen_graph("erdos_renyi:32:0.15:w=1-9", seed)
        d = exact_apsp(g).values
        a = 4
        delta = DistanceEstimate(np.minimum(d * a, INF), a)
        s = math.isqrt(32)
        near = approx_knearest_sets(delta, s)
        radii = ell_radii(g, s).values
        for v in range(32):
            ball = set(np.flatnonzero(d[v] <= (radii[v] - 1) / a).tolist())
            assert ball <= set(near.cols[v][near.cols[v] >= 0].tolist())
        h = build_hopset(g, delta, RoundLedger(32), a=a)
        hb = hhop_dense(h.union(g), h.beta_bound)
        for v in range(32):
            inside = d[v] <= radii[v]
            assert np.array_equal(hb[v, inside], d[v, inside])


class TestEllRadii:
    def test_unit_clique(self):
        assert np.all(ell_radii(gen_graph("clique:8", 0), 8).values == 1)

    def test_path9(self):
        r = ell_radii(gen_graph("path:9", 0), 3)
        assert r[5] == 1 and r[1] == 2 and r[9] == 2

    def test_claim_random(self):
        g = gen_graph("erdos_renyi:32:0.2:w=1-9", 6)
        assert ell_radii(g, 5).claim_holds(exact_apsp(g).values)

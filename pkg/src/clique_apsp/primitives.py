"""Shared subroutines: zero-weight compression, spanners, hitting sets, sparse products."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import DEFAULT, Config
from .errors import DensityViolation, SizeViolation
from .graph import Graph, rng_for
from .oracles import DistanceEstimate, exact_apsp
from .sim import MessageBatch, RoundLedger, broadcast, route_validated
from .tropical import INF, TropicalMatrix


# zero-weight compression ----------------------------------------------

@dataclass(frozen=True, eq=False)
class ZeroCompression:
    quotient: Graph
    leader_of: np.ndarray   # 0-based leader index of every node
    leaders: np.ndarray     # sorted leader indices; quotient node i+1 is leaders[i]

    def position(self) -> np.ndarray:
        """Quotient index (0-based) of every original node."""
        return np.searchsorted(self.leaders, self.leader_of)

    def component_of(self, s: int) -> list:
        """Members (1-based IDs) of the component led by node ID ``s``."""
        return [int(v) + 1 for v in np.flatnonzero(self.leader_of == s - 1)]


def compress_zero(g: Graph, ledger: RoundLedger) -> ZeroCompression:
    """Collapse zero-distance components to their minimum-ID leader.

    Each node tells every neighbouring component's leader the lightest edge
    it has into that component; leaders keep the minimum per component.
    """
    if g.directed:
        raise ValueError("zero compression expects an undirected graph")
    n = g.n
    z = g.w == 0
    adj = csr_matrix((np.ones(int(z.sum())), (g.src[z], g.dst[z])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    lead = np.full(labels.max() + 1, n, dtype=np.int64)
    np.minimum.at(lead, labels, np.arange(n))
    leader_of = lead[labels]
    ledger.charge("compress_zero.mst", 1)

    s, t, w = g.arcs()
    cross = (w > 0) & (leader_of[s] != leader_of[t])
    v, tl, sl, w = s[cross], leader_of[t[cross]], leader_of[s[cross]], w[cross]
    # one message per (sender, target leader): the lightest such edge
    key = v * n + tl
    order = np.lexsort((w, key))
    key, sl, w = key[order], sl[order], w[order]
    first = np.r_[True, key[1:] != key[:-1]] if len(key) else np.zeros(0, dtype=bool)
    batch = MessageBatch(n, key[first] // n, key[first] % n, np.stack([sl[first], w[first]], axis=1))
    inbox = route_validated(ledger, batch, name="compress_zero.collect")

    leaders = np.unique(leader_of)
    pos = np.searchsorted(leaders, np.arange(n))
    qs, qt, qw = pos[inbox.payload[:, 0]], pos[inbox.dst], inbox.payload[:, 1]
    quotient = Graph.merged(len(leaders), qs, qt, qw, weight_bound=None)
    return ZeroCompression(quotient, leader_of, leaders)


def lift_compressed(delta_q: DistanceEstimate, zc: ZeroCompression, ledger: RoundLedger) -> DistanceEstimate:
    """eta(v, u) = delta(leader(v), leader(u))."""
    p = zc.position()
    sizes = np.bincount(p, minlength=len(zc.leaders))
    ledger.charge("lift_compressed", 1, int(sizes.max() * len(zc.leaders)), len(zc.leaders))
    return DistanceEstimate(delta_q.values[np.ix_(p, p)], delta_q.claimed_factor)


# spanners ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpannerResult:
    graph: Graph
    stretch_k: int
    variant: str = "plain"
    eps: float = 0.0

    @property
    def edges(self) -> list:
        return self.graph.edges

    @property
    def stretch(self) -> float:
        base = 2 * self.stretch_k - 1
        return base * (1 + self.eps) if self.variant == "eps" else float(base)


def _lightest_per_group(a, c, rank):
    """Index of the lightest half-edge for every (a, c) group, plus group ids."""
    order = np.lexsort((rank, c, a))
    a_s, c_s = a[order], c[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = (a_s[1:] != a_s[:-1]) | (c_s[1:] != c_s[:-1])
    gid = np.empty(len(order), dtype=np.int64)
    gid[order] = np.cumsum(first) - 1
    return order[first], gid


def baswana_sen(n: int, u, v, w, k: int, seed: int) -> np.ndarray:
    """Boolean mask of the edges kept by the Baswana-Sen (2k-1)-spanner.

    Ties between equal weights are broken by edge index, which makes every
    comparison strict as the construction requires.
    """
    m = len(u)
    keep = np.zeros(m, dtype=bool)
    if m == 0:
        return keep
    rank = np.empty(m, dtype=np.int64)
    rank[np.lexsort((np.arange(m), w))] = np.arange(m)
    ha, hb = np.concatenate([u, v]), np.concatenate([v, u])
    he = np.concatenate([np.arange(m), np.arange(m)])
    alive = np.ones(m, dtype=bool)
    cluster = np.arange(n, dtype=np.int64)
    p = n ** (-1.0 / k)

    for it in range(k - 1):
        sampled = rng_for(seed, "spanner.sample", it).random(n) < p
        act = alive[he] & (cluster[ha] >= 0) & (cluster[hb] >= 0)
        act &= ~sampled[np.maximum(cluster[ha], 0)]
        a, e = ha[act], he[act]
        cb = cluster[hb[act]]
        newc = cluster.copy()
        # processed vertices: clustered but outside every sampled cluster
        proc = (cluster >= 0) & ~sampled[np.maximum(cluster, 0)]
        newc[proc] = -1
        if len(a):
            heads, gid = _lightest_per_group(a, cb, rank[e])
            ga, gc, ge = a[heads], cb[heads], e[heads]
            gr = rank[ge]
            gs = sampled[gc]
            big = np.iinfo(np.int64).max
            best = np.full(n, big, dtype=np.int64)
            np.minimum.at(best, ga[gs], gr[gs])
            has = best[ga] < big
            isbest = gs & (gr == best[ga])
            add = ~has | isbest | (gr < best[ga])
            keep[ge[add]] = True
            alive[e[add[gid]]] = False
            newc[ga[isbest]] = gc[isbest]
        cluster = newc
        cu, cv = cluster[u], cluster[v]
        alive &= ~((cu >= 0) & (cu == cv))
        alive &= (cu >= 0) & (cv >= 0)

    act = alive[he] & (cluster[hb] >= 0)
    if act.any():
        a, e = ha[act], he[act]
        heads, _ = _lightest_per_group(a, cluster[hb[act]], rank[e])
        keep[e[heads]] = True
    return keep


def spanner(g: Graph, k: int, variant: str = "plain", seed: int = 0,
            ledger: RoundLedger | None = None, eps: float = 0.0, rounds: int = 2) -> SpannerResult:
    """(2k-1)-spanner via Baswana-Sen clustering; charged ``rounds`` rounds."""
    if g.directed:
        raise ValueError("spanners are defined for undirected graphs")
    if k < 1:
        raise ValueError("k must be at least 1")
    if variant not in ("plain", "eps"):
        raise ValueError(f"unknown spanner variant {variant!r}")
    keep = np.ones(g.m, dtype=bool) if k == 1 else baswana_sen(g.n, g.src, g.dst, g.w, k, seed)
    sub = Graph(g.n, g.src[keep], g.dst[keep], g.w[keep], weight_bound=None)
    if ledger is not None:
        ledger.charge("spanner", rounds, 0, 0)
    return SpannerResult(sub, k, variant, eps if variant == "eps" else 0.0)


def spanner_apsp(gs: Graph, b: int, eps: float, seed: int, ledger: RoundLedger,
                 cfg: Config = DEFAULT) -> DistanceEstimate:
    """Broadcast a (2b-1)-spanner of ``gs`` and solve APSP on it locally."""
    sp = spanner(gs, b, "eps" if eps > 0 else "plain", seed, ledger, eps)
    m = sp.graph.m
    if m > cfg.bcast_c * ledger.n:
        raise SizeViolation(f"spanner has {m} edges, broadcast budget {cfg.bcast_c:g}*n = "
                            f"{cfg.bcast_c * ledger.n:g}")
    broadcast(ledger, m, "spanner_apsp.broadcast")
    d = exact_apsp(sp.graph)
    return DistanceEstimate(d.values, (1 + eps) * (2 * b - 1))


def brute_force_apsp(g: Graph, ledger: RoundLedger, name: str = "brute_force.broadcast") -> DistanceEstimate:
    """Broadcast every edge and solve exactly."""
    broadcast(ledger, g.m, name)
    return exact_apsp(g)


def logn_apsp(g: Graph, alpha: float, seed: int, ledger: RoundLedger,
              cfg: Config = DEFAULT) -> DistanceEstimate:
    """(alpha log2 n)-approximation from a broadcast spanner with b = floor(alpha log2 n / 3)."""
    L = math.log2(g.n) if g.n > 1 else 0.0
    if alpha * L < 3:
        return brute_force_apsp(g, ledger, "logn_apsp.brute_force")
    b = int(math.floor(alpha * L / 3))
    return spanner_apsp(g, b, cfg.bootstrap_eps, seed, ledger, cfg)


# hitting sets -----------------------------------------------------------

def hitting_set(candidate_sets: np.ndarray, k: int, seed: int, ledger: RoundLedger | None = None,
                reps: int | None = None) -> np.ndarray:
    """Sorted 0-based indices of a set meeting every candidate row.

    ``candidate_sets`` is (n, width) with -1 padding; each row's first entry
    is its nearest candidate and joins S when the sample misses the row.
    """
    sets = np.asarray(candidate_sets, dtype=np.int64)
    n = sets.shape[0]
    if reps is None:
        reps = max(1, math.ceil(2 * math.log2(n))) if n > 1 else 1
    prob = min(1.0, math.log(k) / k) if k > 1 else 0.0
    valid = sets >= 0
    safe = np.where(valid, sets, 0)
    best = None
    for r in range(reps):
        s = rng_for(seed, "hitting_set", r).random(n) < prob
        hit = (s[safe] & valid).any(axis=1)
        miss = np.flatnonzero(~hit & valid[:, 0])
        s[sets[miss, 0]] = True
        if best is None or s.sum() < best.sum():
            best = s
    if ledger is not None:
        # one round to announce membership bits of all repetitions, one to agree on the smallest
        ledger.charge("hitting_set", 2, reps, reps * n)
    return np.flatnonzero(best)


# sparse distance products ---------------------------------------------

def minplus_rounds(n: int, rho_s, rho_t, rho_st) -> int:
    """ceil((rho_S rho_T rho_ST)^(1/3) / n^(2/3)) + 1."""
    x = float(rho_s) * float(rho_t) * float(rho_st)
    if x <= 0:
        return 1
    return math.ceil((x / n**2) ** (1.0 / 3.0) - 1e-9) + 1


def charge_minplus(ledger: RoundLedger, rho_s, rho_t, rho_st, name: str = "sparse_minplus_mul") -> int:
    r = minplus_rounds(ledger.n, rho_s, rho_t, rho_st)
    ledger.charge(name, r)
    return r


def sparse_minplus_mul(s: TropicalMatrix, t: TropicalMatrix, rho_st_bound, ledger: RoundLedger,
                       name: str = "sparse_minplus_mul") -> TropicalMatrix:
    """Exact distance product, charged by the density formula."""
    prod = s.star(t)
    if prod.rho > rho_st_bound:
        raise DensityViolation(f"{name}: product density {float(prod.rho):.3f} exceeds bound "
                               f"{float(rho_st_bound):.3f}")
    charge_minplus(ledger, s.rho, t.rho, rho_st_bound, name)
    return prod

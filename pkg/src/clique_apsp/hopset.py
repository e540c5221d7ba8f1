"""k-nearest hopsets built from an approximate distance estimate.

Every node v picks the s = floor(sqrt(n)) nodes with smallest estimate,
collects their s lightest outgoing edges, runs a shortest-path search over
what it received plus its own edges, and adds a shortcut to every node it
reached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Config
from .errors import PreconditionViolated
from .graph import Graph
from .oracles import DistanceEstimate, exact_apsp, hhop_dense, knearest_oracle
from .sim import MessageBatch, RoundLedger, route_validated
from .tropical import INF, RowLists, topk_dense


@dataclass(frozen=True, eq=False)
class Hopset:
    n: int
    src: np.ndarray
    dst: np.ndarray
    w: np.ndarray
    beta_bound: int
    k: int = 0

    @property
    def edges(self) -> list:
        return [(int(u) + 1, int(v) + 1, int(w)) for u, v, w in zip(self.src, self.dst, self.w)]

    def __len__(self):
        return len(self.w)

    def union(self, g: Graph) -> Graph:
        """Directed view of G with the shortcuts added (parallel arcs keep the minimum)."""
        s, d, w = g.arcs()
        return Graph.merged(g.n, np.concatenate([s, self.src]), np.concatenate([d, self.dst]),
                            np.concatenate([w, self.w]), directed=True, weight_bound=None)

    def union_undirected(self, g: Graph) -> Graph:
        s, d, w = g.arcs()
        return Graph.merged(g.n, np.concatenate([s, self.src]), np.concatenate([d, self.dst]),
                            np.concatenate([w, self.w]), directed=False, weight_bound=None)

    def to_text(self) -> str:
        return Graph(self.n, self.src, self.dst, self.w, True, weight_bound=None).to_text()


def beta_for(a: float, d: float) -> int:
    """2 * (ceil(a ln d) + 1) + 1 hops."""
    t = math.ceil(a * math.log(d) - 1e-12) if d > 1 else 0
    return 2 * (max(t, 0) + 1) + 1


def approx_knearest_sets(delta: DistanceEstimate, k: int) -> RowLists:
    """Per node, the k nodes with smallest (estimate, ID)."""
    return RowLists(*topk_dense(delta.values, min(k, delta.n)))


def top_out_edges(g: Graph, s: int):
    """Each node's ``s`` lightest outgoing arcs, ties by neighbour ID."""
    src, dst, w = g.arcs()
    order = np.lexsort((dst, w, src))
    src, dst, w = src[order], dst[order], w[order]
    start = np.searchsorted(src, np.arange(g.n))
    rank = np.arange(len(src)) - start[src]
    sel = rank < s
    return src[sel], dst[sel], w[sel]


def build_hopset(g: Graph, delta: DistanceEstimate, ledger: RoundLedger, a: float | None = None,
                 k: int | None = None, d_bound: int | None = None, cfg: Config = DEFAULT) -> Hopset:
    """k-nearest hopset from a sound estimate with factor ``a`` (k defaults to floor(sqrt n))."""
    if g.m and g.w.min() <= 0:
        raise PreconditionViolated("hopsets need positive weights; compress zero weights first")
    n = g.n
    a = delta.claimed_factor if a is None else a
    s = k if k is not None else max(1, math.isqrt(n))
    near = approx_knearest_sets(delta, s)

    # Step 2: v asks every u in its candidate set; u answers with its s lightest arcs
    rv, _, _ = near.triplets()
    ru = near.cols[near.mask]
    ask = ru != rv
    req_v, req_u = rv[ask], ru[ask]
    route_validated(ledger, MessageBatch(n, req_v, req_u, np.zeros((len(req_v), 1))),
                    cfg.hopset_quota, "hopset.request")
    ts, td, tw = top_out_edges(g, s)
    cnt = np.bincount(ts, minlength=n)
    start = np.concatenate([[0], np.cumsum(cnt)[:-1]])
    per = cnt[req_u]
    total = int(per.sum())
    idx = np.repeat(start[req_u] - (np.cumsum(per) - per), per) + np.arange(total)
    batch = MessageBatch(n, np.repeat(req_u, per), np.repeat(req_v, per),
                         np.stack([td[idx], tw[idx]], axis=1))
    inbox = route_validated(ledger, batch, cfg.hopset_quota, "hopset.collect",
                            source_words=2 * cnt)

    # Step 3: every v searches the subgraph it knows: received arcs plus its own arcs
    gs, gd, gw = g.arcs()
    owner = np.concatenate([inbox.dst, gs])
    tail = np.concatenate([inbox.src, gs])
    head = np.concatenate([inbox.payload[:, 0], gd])
    wt = np.concatenate([inbox.payload[:, 1], gw])
    dist = _local_shortest_paths(n, owner, tail, head, wt)

    # Step 4: shortcut (v, u, d'(v, u)) unless G already has an arc that short
    direct = g.dense_adjacency()
    v, u = np.nonzero((dist < INF) & (dist < direct))
    hw = dist[v, u]
    route_validated(ledger, MessageBatch(n, v, u, hw[:, None]), name="hopset.report")
    if d_bound is None:
        d_bound = delta.max_finite()
    return Hopset(n, v, u, hw, beta_for(a, max(d_bound, 1)), s)


def _local_shortest_paths(n, owner, tail, head, wt):
    """dist[v, x] = shortest v -> x distance using only arcs owned by v."""
    dist = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    if len(owner) == 0:
        return dist
    # dedupe (owner, tail, head) keeping the lightest
    key = (owner * n + tail) * n + head
    order = np.lexsort((wt, key))
    key, wt = key[order], wt[order]
    first = np.r_[True, key[1:] != key[:-1]]
    key, wt = key[first], wt[first]
    owner, rest = key // (n * n), key % (n * n)
    tail, head = rest // n, rest % n
    flat_t = owner * n + tail
    flat_h = owner * n + head
    order = np.argsort(flat_h, kind="stable")
    flat_t, flat_h, wt = flat_t[order], flat_h[order], wt[order]
    starts = np.flatnonzero(np.r_[True, flat_h[1:] != flat_h[:-1]])
    heads = flat_h[starts]
    d = dist.reshape(-1)
    while True:
        cand = np.minimum(d[flat_t] + wt, INF)
        best = np.minimum.reduceat(cand, starts)
        improve = best < d[heads]
        if not improve.any():
            break
        d[heads[improve]] = best[improve]
    return dist


def verify_hopset(g: Graph, h: Hopset, k: int, beta: int):
    """(ok, counterexample) for distance preservation and beta-hop exactness on N_k.

    The counterexample is a 1-based pair (u, v) or None.
    """
    gh = h.union(g)
    d = exact_apsp(g).values
    dh = exact_apsp(gh).values
    bad = np.argwhere(dh != d)
    if len(bad):
        u, v = bad[0]
        return False, (int(u) + 1, int(v) + 1)
    near = knearest_oracle(g, k)
    hb = hhop_dense(gh, beta)
    r, c, _ = near.triplets()
    wrong = np.flatnonzero(hb[r, c] != d[r, c])
    if len(wrong):
        i = wrong[0]
        return False, (int(r[i]) + 1, int(c[i]) + 1)
    return True, None


@dataclass(frozen=True, eq=False)
class EllRadii:
    values: np.ndarray   # values[v-1] = max distance inside N_k(v)
    k: int

    def __getitem__(self, v: int) -> int:
        return int(self.values[v - 1])

    def claim_holds(self, dist: np.ndarray) -> bool:
        """l(v) - l(u) <= d(v, u) for all pairs."""
        diff = self.values[:, None] - self.values[None, :]
        return bool(np.all(diff <= dist))


def ell_radii(g: Graph, k: int) -> EllRadii:
    near = knearest_oracle(g, k)
    vals = np.where(near.mask, near.vals, 0).max(axis=1)
    return EllRadii(vals, k)

"""Filtered min-plus exponentiation: k nearest nodes within h^i hops.

One iteration splits the concatenated k-lists of all nodes into p
contiguous bins, hands every h-combination of bins to one node, and lets
that node answer ≤h-hop queries from the owners of its first bin.

Two execution paths produce identical output. The faithful path
materializes every message and runs each combination node's search on
exactly what it received. The fast path computes the same filtered power
by hop-by-hop expansion with re-filtering, which the filter-commutation
property makes exact, and validates the same traffic from counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import DEFAULT, Config
from .errors import PreconditionViolated
from .sim import MessageBatch, RoundLedger, broadcast, route_loads, route_validated
from .tropical import INF, RowLists, TropicalMatrix, topk_dense, topk_sparse


class FilteredMatrix(RowLists):
    """At most k finite entries per row, the k smallest by (value, column)."""

    @property
    def base(self) -> TropicalMatrix:
        return self.to_matrix()


def filter_rows(a, k: int) -> FilteredMatrix:
    if k < 1:
        raise ValueError("k must be at least 1")
    if isinstance(a, RowLists):
        r, c, v = a.triplets()
        n = a.n
    else:
        r, c, v, n = a.rows, a.cols, a.vals, a.n
    return FilteredMatrix(*topk_sparse(n, min(k, n), r, c, v))


@dataclass(frozen=True, eq=False)
class BinLayout:
    n: int
    k: int
    h: int
    p: int
    bounds: np.ndarray   # bin j covers slots [bounds[j], bounds[j+1]) of M
    combos: np.ndarray   # (count, h): row r is the h-combination assigned to node r+1

    @property
    def bin_size(self) -> float:
        return self.n * self.k / self.p if self.p else math.inf

    def degenerate(self) -> bool:
        return self.p < self.h or self.bin_size <= self.k

    def bin_of_slot(self, slots):
        return np.searchsorted(self.bounds, slots, side="right") - 1


def bin_count(n: int, h: int) -> int:
    """p = floor(n^(1/h) * h / 4)."""
    return int(math.floor(n ** (1.0 / h) * h / 4 + 1e-9))


def build_layout(n: int, k: int, h: int) -> BinLayout:
    p = bin_count(n, h)
    T = n * k
    bounds = (np.arange(p + 1, dtype=np.int64) * T) // max(p, 1)
    if p >= h:
        rows = [(i1, *rest) for i1 in range(p)
                for rest in combinations([j for j in range(p) if j != i1], h - 1)]
        combos = np.array(rows, dtype=np.int64).reshape(-1, h)
    else:
        combos = np.zeros((0, h), dtype=np.int64)
    if len(combos) > n:
        raise PreconditionViolated(f"{len(combos)} h-combinations exceed n={n}")
    return BinLayout(n, k, h, p, bounds, combos)


def _check_input(a, k, h, cfg):
    if h < 1:
        raise ValueError("h must be at least 1")
    n = a.n
    if k > cfg.c_k * n ** (1.0 / h) + 1e-9:
        raise PreconditionViolated(f"k={k} exceeds c_k*n^(1/h) = {cfg.c_k * n ** (1.0 / h):.3f}")
    r, c, v = a.triplets() if isinstance(a, RowLists) else (a.rows, a.cols, a.vals)
    diag = r == c
    if np.count_nonzero(diag & (v == 0)) != n:
        raise PreconditionViolated("input needs an explicit zero diagonal")
    if np.any(v[~diag] <= 0):
        raise PreconditionViolated("off-diagonal weights must be positive")


def expand(cur: RowLists, step: RowLists, k: int, chunk_elems: int = 1 << 22) -> FilteredMatrix:
    """filter(cur * step) with both operands given as k-lists.

    Candidates of a block of rows are folded into a dense scratch block by
    minimum, then the k smallest per row are selected.
    """
    n = cur.n
    kc, ks = cur.k, step.k
    rows_per = max(1, min(chunk_elems // max(1, kc * ks), chunk_elems // n))
    out_c = np.full((n, k), -1, dtype=np.int64)
    out_v = np.full((n, k), INF, dtype=np.int64)
    for lo in range(0, n, rows_per):
        hi = min(n, lo + rows_per)
        cc, cv = cur.cols[lo:hi], cur.vals[lo:hi]
        safe = np.where(cc >= 0, cc, 0)
        nc = step.cols[safe]                       # (m, kc, ks)
        nv = np.minimum(cv[:, :, None] + step.vals[safe], INF)
        ok = (nc >= 0) & (cc >= 0)[:, :, None] & (nv < INF)
        r = np.broadcast_to(np.arange(hi - lo)[:, None, None], nc.shape)
        scratch = np.full((hi - lo, n), INF, dtype=np.int64)
        np.minimum.at(scratch, (r[ok], nc[ok]), nv[ok])
        out_c[lo:hi], out_v[lo:hi] = topk_dense(scratch, k)
    return FilteredMatrix(out_c, out_v)


def _fast_power(a1: FilteredMatrix, h: int, k: int) -> FilteredMatrix:
    cur = a1
    for _ in range(h - 1):
        cur = expand(cur, a1, k)
    return cur


def _owner_slots(a1: FilteredMatrix):
    """Global slot indices of all finite entries (owner u occupies u*k .. u*k+k-1)."""
    u, e = np.nonzero(a1.mask)
    return u * a1.k + e, u, e


def _gather(groups_of, sizes, starts):
    """Concatenate ranges [starts[g], starts[g]+sizes[g]) for g in ``groups_of``."""
    per = sizes[groups_of]
    total = int(per.sum())
    idx = np.repeat(starts[groups_of] - (np.cumsum(per) - per), per) + np.arange(total)
    return idx, per


def knearest_one_iter(a, h: int, k: int, ledger: RoundLedger, mode: str = "auto",
                      cfg: Config = DEFAULT) -> FilteredMatrix:
    """Filter of A^h: per row the k smallest ≤h-hop distances, ties by ID."""
    _check_input(a, k, h, cfg)
    n = a.n
    k = min(k, n)
    a1 = filter_rows(a, k)
    if h == 1:
        return a1
    lay = build_layout(n, k, h)
    counts = a1.counts()
    if lay.degenerate():
        broadcast(ledger, int(2 * counts.sum()), "knearest.broadcast_lists")
        return _fast_power(a1, h, k)

    slots, owner, _ = _owner_slots(a1)
    slot_bin = lay.bin_of_slot(slots)
    order = np.argsort(slot_bin, kind="stable")
    slots_by_bin, owner_by_bin = slots[order], owner[order]
    bin_sizes = np.bincount(slot_bin, minlength=lay.p)
    bin_start = np.concatenate([[0], np.cumsum(bin_sizes)[:-1]])
    C = len(lay.combos)

    # Step 2: owners and combination nodes exchange list positions (2 words each way)
    route_loads(ledger, np.full(n, 2 * (n - 1)), np.full(n, 2 * (n - 1)), name="knearest.bounds")

    # Step 3: every combination node receives the slots of its h bins
    flat_bins = lay.combos.reshape(-1)
    combo_of = np.repeat(np.arange(C), h)
    recv3 = np.zeros(n, dtype=np.int64)
    recv3[:C] = 2 * np.bincount(combo_of, weights=bin_sizes[flat_bins], minlength=C).astype(np.int64)
    bin_use = np.bincount(flat_bins, minlength=lay.p)
    sent3 = 2 * np.bincount(owner, weights=bin_use[slot_bin], minlength=n).astype(np.int64)
    q3 = cfg.step3_quota * cfg.c_k

    # Step 4: owner u queries every combination whose first bin holds part of M_(u)
    lo_bin = np.full(n, lay.p, dtype=np.int64)
    hi_bin = np.full(n, -1, dtype=np.int64)
    np.minimum.at(lo_bin, owner, slot_bin)
    np.maximum.at(hi_bin, owner, slot_bin)
    per_first = np.bincount(lay.combos[:, 0], minlength=lay.p)   # combinations per first bin
    has = hi_bin >= 0
    n_query = np.where(has, per_first[np.minimum(lo_bin, lay.p - 1)], 0)
    n_query += np.where(has & (hi_bin > lo_bin), per_first[np.maximum(hi_bin, 0)], 0)

    n_msgs = int(recv3.sum()) // 2
    faithful = mode == "faithful" or (mode == "auto" and n_msgs <= cfg.faithful_max_messages)
    if mode not in ("auto", "faithful", "fast"):
        raise ValueError(f"unknown mode {mode!r}")

    if not faithful:
        route_loads(ledger, sent3, recv3, q3, "knearest.collect", source_words=2 * counts)
        # owners with a slot in bin j query all combinations with first bin j
        owners_in_bin = np.zeros(lay.p, dtype=np.int64)
        np.add.at(owners_in_bin, lo_bin[has], 1)
        straddle = has & (hi_bin > lo_bin)
        np.add.at(owners_in_bin, hi_bin[straddle], 1)
        recv_req = np.zeros(n, dtype=np.int64)
        recv_req[:C] = owners_in_bin[lay.combos[:, 0]]
        route_loads(ledger, n_query, recv_req, name="knearest.request")
        recv_rep = 2 * k * n_query
        sent_rep = np.zeros(n, dtype=np.int64)
        sent_rep[:C] = 2 * k * recv_req[:C]
        route_loads(ledger, sent_rep, recv_rep, cfg.step4_quota, "knearest.reply")
        return _fast_power(a1, h, k)

    # ---- faithful execution ----
    idx, per = _gather(flat_bins, bin_sizes, bin_start)
    msg_slot = slots_by_bin[idx]
    msg_owner = owner_by_bin[idx]
    msg_dst = np.repeat(combo_of, per)
    mu, me = msg_slot // k, msg_slot % k
    batch = MessageBatch(n, msg_owner, msg_dst, np.stack([a1.cols[mu, me], a1.vals[mu, me]], axis=1))
    inbox = route_validated(ledger, batch, q3, "knearest.collect", source_words=2 * counts)

    # sources of combination c: owners with a slot in its first bin
    fb = lay.combos[:, 0]
    idx1, per1 = _gather(fb, bin_sizes, bin_start)
    pair_c = np.repeat(np.arange(C), per1)
    pair_u = owner_by_bin[idx1]
    key = np.unique(pair_c * n + pair_u)
    q_c, q_u = key // n, key % n
    route_validated(ledger, MessageBatch(n, q_u, q_c, np.zeros((len(q_u), 1))),
                    name="knearest.request")

    # each combination node: ≤h-hop search from each of its sources over its own edges
    e_c, e_t = inbox.dst, inbox.src
    e_h, e_w = inbox.payload[:, 0], inbox.payload[:, 1]
    ek = e_c * n + e_t
    o = np.argsort(ek, kind="stable")
    ek, e_h, e_w = ek[o], e_h[o], e_w[o]
    uniq, first = np.unique(ek, return_index=True)
    ecount = np.diff(np.r_[first, len(ek)])
    f_c, f_u, f_x = q_c, q_u, q_u
    f_d = np.zeros(len(q_c), dtype=np.int64)
    for _ in range(h):
        fk = f_c * n + f_x
        pos = np.searchsorted(uniq, fk)
        pos_ok = pos < len(uniq)
        hit = np.zeros(len(fk), dtype=bool)
        hit[pos_ok] = uniq[pos[pos_ok]] == fk[pos_ok]
        cnt = np.zeros(len(fk), dtype=np.int64)
        cnt[hit] = ecount[pos[hit]]
        start = np.zeros(len(fk), dtype=np.int64)
        start[hit] = first[pos[hit]]
        j, per_f = _gather(np.arange(len(fk)), cnt, start)
        src_i = np.repeat(np.arange(len(fk)), per_f)
        nc = np.concatenate([f_c, f_c[src_i]])
        nu = np.concatenate([f_u, f_u[src_i]])
        nx = np.concatenate([f_x, e_h[j]])
        nd = np.concatenate([f_d, np.minimum(f_d[src_i] + e_w[j], INF)])
        kk = (nc * n + nu) * n + nx
        ordr = np.lexsort((nd, kk))
        kk, nd = kk[ordr], nd[ordr]
        keep = np.r_[True, kk[1:] != kk[:-1]]
        kk, nd = kk[keep], nd[keep]
        f_c, rest = kk // (n * n), kk % (n * n)
        f_u, f_x, f_d = rest // n, rest % n, nd

    # reply: k nearest found for (c, u), then u merges its replies
    pair_id = np.searchsorted(key, f_c * n + f_u)
    rc, rv = topk_sparse(len(key), k, pair_id, f_x, f_d)
    pr, pj = np.nonzero(rc >= 0)
    rep = MessageBatch(n, q_c[pr], q_u[pr], np.stack([rc[pr, pj], rv[pr, pj]], axis=1))
    got = route_validated(ledger, rep, cfg.step4_quota, "knearest.reply")
    return FilteredMatrix(*topk_sparse(n, k, got.dst, got.payload[:, 0], got.payload[:, 1]))


def knearest_iter(a, h: int, k: int, i: int, ledger: RoundLedger, mode: str = "auto",
                  cfg: Config = DEFAULT) -> FilteredMatrix:
    """Filter of A^(h^i) by i successive one-iteration steps."""
    if i < 1:
        raise ValueError("i must be at least 1")
    cur = a
    for _ in range(i):
        cur = knearest_one_iter(cur, h, k, ledger, mode, cfg)
    return cur


def iterations_for(h: int, hops: int) -> int:
    """Smallest i >= 1 with h^i >= hops."""
    i, reach = 1, h
    while reach < hops:
        i, reach = i + 1, reach * h
    return i

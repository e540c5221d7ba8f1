"""Exact shortest-path oracles and the estimate types they produce."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph import Graph
from .tropical import INF, RowLists, TropicalMatrix, topk_dense


@dataclass(frozen=True, eq=False)
class DistanceEstimate:
    """Full pairwise estimate. ``values[u-1, v-1]`` is the estimate for IDs u, v."""

    values: np.ndarray
    claimed_factor: float = 1.0
    kind: str = "full"

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __call__(self, u: int, v: int) -> int:
        return int(self.values[u - 1, v - 1])

    def max_finite(self) -> int:
        fin = self.values[self.values < INF]
        return int(fin.max()) if fin.size else 0

    def symmetrized(self) -> "DistanceEstimate":
        return DistanceEstimate(np.minimum(self.values, self.values.T), self.claimed_factor)


class KNearestResult(RowLists):
    """Per-node lists of (node, distance) sorted by (distance, ID)."""


class PartialEstimate(RowLists):
    """Estimate known only on per-node candidate sets Ñ_k(u).

    Reading a pair outside the candidate sets raises ``KeyError``.
    """

    __slots__ = ("claimed_factor",)
    kind = "partial"

    def __init__(self, cols, vals, claimed_factor=1.0):
        super().__init__(cols, vals)
        self.claimed_factor = float(claimed_factor)

    def lookup(self, u: int, v: int) -> int:
        """Estimate for 0-based indices u, v with v in Ñ(u)."""
        hit = np.nonzero(self.cols[u] == v)[0]
        if len(hit) == 0:
            raise KeyError(f"node {v + 1} is not in the candidate set of node {u + 1}")
        return int(self.vals[u, hit[0]])

    def __call__(self, u: int, v: int) -> int:
        return self.lookup(u - 1, v - 1)

    @classmethod
    def from_rowlists(cls, rl: RowLists, claimed_factor=1.0) -> "PartialEstimate":
        return cls(rl.cols, rl.vals, claimed_factor)


def _scipy_apsp(g: Graph) -> np.ndarray:
    if g.m == 0:
        out = np.full((g.n, g.n), INF, dtype=np.int64)
        np.fill_diagonal(out, 0)
        return out
    d = dijkstra(g.csr(), directed=True)
    out = np.full(d.shape, INF, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = np.rint(d[fin]).astype(np.int64)
    return out


def exact_apsp(g: Graph) -> DistanceEstimate:
    """All-pairs distances by Dijkstra from every source."""
    return DistanceEstimate(_scipy_apsp(g), 1.0)


def floyd_warshall(g: Graph) -> np.ndarray:
    """Independent O(n^3) recomputation used to cross-check ``exact_apsp``."""
    d = g.dense_adjacency()
    for k in range(g.n):
        np.minimum(d, np.minimum(d[:, k:k + 1] + d[k:k + 1, :], INF), out=d)
    return d


def hhop_dense(g: Graph, h: int) -> np.ndarray:
    """Distances over paths with at most ``h`` arcs (Bellman-Ford, Jacobi order)."""
    if h < 1:
        raise ValueError("h must be positive")
    n = g.n
    d = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(d, 0)
    s, t, w = g.arcs()
    if len(s) == 0:
        return d
    order = np.argsort(t, kind="stable")
    s, t, w = s[order], t[order], w[order]
    starts = np.flatnonzero(np.r_[True, t[1:] != t[:-1]])
    heads = t[starts]
    for _ in range(h):
        cand = np.minimum(d[:, s] + w, INF)
        best = np.minimum.reduceat(cand, starts, axis=1)
        new = d.copy()
        new[:, heads] = np.minimum(new[:, heads], best)
        if np.array_equal(new, d):
            break
        d = new
    return d


def hhop_distances(g: Graph, h: int) -> TropicalMatrix:
    return TropicalMatrix.from_dense(hhop_dense(g, h))


def knearest_oracle(g: Graph, k: int, h: int | None = None) -> KNearestResult:
    """Exact N_k(v), or N_k^h(v) when ``h`` is given, by sorting full rows.

    Lists are truncated to reachable nodes, so a node with fewer than k
    reachable nodes gets a shorter list.
    """
    if not 1 <= k <= g.n:
        raise ValueError("need 1 <= k <= n")
    d = exact_apsp(g).values if h is None else hhop_dense(g, h)
    return KNearestResult(*topk_dense(d, k))


def max_ratio(est: np.ndarray, exact: np.ndarray) -> tuple[float, int]:
    """(max est/d over pairs with 0 < d < INF, number of unsound pairs)."""
    unsound = int(np.count_nonzero(est < exact))
    fin = (exact > 0) & (exact < INF)
    zero_bad = int(np.count_nonzero((exact == 0) & (est != 0)))
    if not fin.any():
        return 1.0, unsound
    ratio = float(np.max(np.where(est[fin] >= INF, np.inf, est[fin] / exact[fin])))
    return max(ratio, 1.0 if zero_bad == 0 else np.inf), unsound

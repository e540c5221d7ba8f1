"""Skeleton graphs over a hitting set, and lifting their APSP back to G.

Every node u picks a center c(u) in S ∩ Ñ(u). Two centers are joined when
some u, t, v has t ∈ Ñ(u), v = t or {t, v} ∈ E, c(u) = s_a and c(v) = s_b;
the weight is δ(c(u), u) + δ(u, t) + w_tv + δ(v, c(v)). The minimum over all
witnesses is the distance product X ⋆ Y of two sparse matrices that the
nodes assemble in two routing rounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import DEFAULT, Config
from .errors import DensityViolation, PreconditionViolated
from .graph import Graph
from .oracles import DistanceEstimate, PartialEstimate
from .primitives import charge_minplus, hitting_set, sparse_minplus_mul
from .sim import MessageBatch, RoundLedger, route_validated
from .tropical import INF, TropicalMatrix


@dataclass(frozen=True, eq=False)
class SkeletonGraph:
    nodes: np.ndarray    # sorted 0-based members of S; skeleton node i+1 is nodes[i]
    center: np.ndarray   # 0-based center of every node of G
    radius: np.ndarray   # δ(u, c(u))
    graph: Graph         # over len(nodes) nodes
    k: int
    a: float = 1.0

    @property
    def size(self) -> int:
        return len(self.nodes)

    def center_of(self, u: int) -> int:
        """Center (1-based ID in G) of node ID ``u``."""
        return int(self.center[u - 1]) + 1

    def export_text(self) -> str:
        lines = ["# skeleton nodes: " + " ".join(str(int(s) + 1) for s in self.nodes),
                 "# centers: " + " ".join(str(int(c) + 1) for c in self.center)]
        return "\n".join(lines) + "\n" + self.graph.to_text()


def _centers(delta: PartialEstimate, in_s: np.ndarray):
    """First S member of every (value, ID)-sorted candidate row."""
    cols = delta.cols
    hit = (cols >= 0) & in_s[np.where(cols >= 0, cols, 0)]
    if not hit.any(axis=1).all():
        u = int(np.flatnonzero(~hit.any(axis=1))[0])
        raise PreconditionViolated(f"node {u + 1} has no center in its candidate set")
    j = hit.argmax(axis=1)
    rows = np.arange(len(cols))
    return cols[rows, j], delta.vals[rows, j]


def build_skeleton(g: Graph, delta: PartialEstimate, k: int, a: float | None, seed: int,
                   ledger: RoundLedger, forced_S=None, cfg: Config = DEFAULT) -> SkeletonGraph:
    """Skeleton over a hitting set of the candidate sets; ``forced_S`` takes 1-based IDs."""
    n = g.n
    a = delta.claimed_factor if a is None else a
    if forced_S is None:
        S = hitting_set(delta.cols, k, seed, ledger)
    else:
        S = np.unique(np.asarray(forced_S, dtype=np.int64) - 1)
        ledger.charge("hitting_set", 2, 0, 0)
    in_s = np.zeros(n, dtype=bool)
    in_s[S] = True
    center, r = _centers(delta, in_s)

    # Route 1: x-messages u -> t in Ñ(u) and y-messages v -> neighbour t, both to t
    ru, ct = np.nonzero(delta.mask)
    t = delta.cols[ru, ct]
    other = t != ru
    xu, xt = ru[other], t[other]
    xval = np.minimum(r[xu] + delta.vals[xu, ct[other]], INF)
    s_arc, d_arc, w_arc = g.arcs()
    yval = np.minimum(w_arc + r[s_arc], INF)
    src = np.concatenate([xu, s_arc])
    dst = np.concatenate([xt, d_arc])
    kind = np.concatenate([center[xu], center[s_arc] + n])   # code >= n marks a y-value
    val = np.concatenate([xval, yval])
    inbox = route_validated(ledger, MessageBatch(n, src, dst, np.stack([kind, val], axis=1)),
                            name="skeleton.aggregate")

    # every t folds its x/y values per center (order-independent minima), self terms included
    tt = np.concatenate([inbox.dst, np.arange(n), np.arange(n)])
    kk = np.concatenate([inbox.payload[:, 0], center, center + n])
    vv = np.concatenate([inbox.payload[:, 1], r, r])
    is_y = kk >= n
    X = TropicalMatrix(n, kk[~is_y], tt[~is_y], vv[~is_y])          # rows s_a, cols t
    Y = TropicalMatrix(n, tt[is_y], kk[is_y] - n, vv[is_y])         # rows t, cols s_b

    # Route 2: t hands x(s, t) and y(t, s) to s, which now holds row s of X and column s of Y
    route_validated(ledger, MessageBatch(n, np.concatenate([X.cols, Y.rows]),
                                         np.concatenate([X.rows, Y.cols]),
                                         np.stack([np.r_[np.zeros(X.nnz, dtype=np.int64),
                                                         np.ones(Y.nnz, dtype=np.int64)],
                                                   np.r_[X.vals, Y.vals]], axis=1)),
                    name="skeleton.distribute")
    if X.rho > k:
        raise DensityViolation(f"skeleton X density {float(X.rho):.3f} exceeds k={k}")
    if Y.rho > len(S):
        raise DensityViolation(f"skeleton Y density {float(Y.rho):.3f} exceeds |S|={len(S)}")
    prod = sparse_minplus_mul(X, Y, Fraction(len(S) ** 2, n), ledger, "skeleton.product")

    off = prod.rows != prod.cols
    pos = np.searchsorted(S, np.arange(n))
    gs = Graph.merged(len(S), pos[prod.rows[off]], pos[prod.cols[off]], prod.vals[off],
                      directed=False, weight_bound=None)
    return SkeletonGraph(S, center, r, gs, k, float(a))


def lift_skeleton_apsp(delta_gs: DistanceEstimate, sk: SkeletonGraph, delta: PartialEstimate,
                       ledger: RoundLedger) -> DistanceEstimate:
    """η(u, v) = δ(u, c(u)) + δ_GS(c(u), c(v)) + δ(c(v), v), with δ itself on local pairs."""
    n = len(sk.center)
    pc = np.searchsorted(sk.nodes, sk.center)
    D = delta_gs.values
    eta = np.minimum(D[np.ix_(pc, pc)] + sk.radius[:, None], INF)
    eta = np.minimum(eta + sk.radius[None, :], INF)

    ru, ct = np.nonzero(delta.mask)
    tv = delta.cols[ru, ct]
    dv = delta.vals[ru, ct]
    local = np.full((n, n), INF, dtype=np.int64)
    local[ru, tv] = dv
    local = np.minimum(local, local.T)
    known = np.zeros((n, n), dtype=bool)
    known[ru, tv] = True
    known |= known.T
    eta[known] = local[known]
    np.fill_diagonal(eta, 0)

    N = max(sk.size, 1)
    # B = D A then A^T B, where A holds one center entry per node
    charge_minplus(ledger, N * N / n, 1, N, "lift_skeleton.product_1")
    charge_minplus(ledger, 1, N, n, "lift_skeleton.product_2")
    return DistanceEstimate(eta, 7 * delta_gs.claimed_factor * sk.a ** 2)

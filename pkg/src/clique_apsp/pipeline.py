"""End-to-end approximate APSP pipelines built from the simulator primitives.

``full_apsp`` runs the standard-bandwidth algorithm: exact k-nearest lists
with k = log^4 n, a skeleton over O(n / log^3 n) nodes, and the
large-bandwidth algorithm simulated on that skeleton. The large-bandwidth
algorithm scales weights into low-diameter graphs and solves each with
``small_diameter_apsp``, which in turn repeats ``reduce_approximation``.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Config
from .errors import IndexOutOfFamily, PreconditionViolated
from .graph import Graph
from .hopset import build_hopset
from .knearest import iterations_for, knearest_iter
from .oracles import DistanceEstimate, PartialEstimate, exact_apsp
from .primitives import brute_force_apsp, compress_zero, lift_compressed, logn_apsp, spanner_apsp
from .sim import RoundLedger, absorb, run_parallel
from .skeleton import build_skeleton, lift_skeleton_apsp
from .tropical import INF, topk_dense


def sub_seed(seed: int, tag: str) -> int:
    """Independent seed for one stage, derived from the run seed."""
    return (int(seed) * 1_000_003 + zlib.crc32(tag.encode())) % 2**63


def _log2(n: int) -> float:
    return math.log2(max(n, 2))


def lll(n: int) -> int:
    """ceil(log2 log2 log2 max(n, 16))."""
    return math.ceil(math.log2(math.log2(math.log2(max(n, 16)))) - 1e-12)


def _note(info, key, value):
    if info is not None:
        info.setdefault(key, []).append(value)


def _sym(values: np.ndarray) -> np.ndarray:
    return np.minimum(values, values.T)


# --- approximation-factor reduction ---------------------------------------

def reduction_params(n: int, a: float) -> dict:
    """Integer parameters of one reduction step for an a-approximation."""
    h = max(2, int(math.floor(0.5 * a ** 0.25)))
    k = min(int(math.floor(n ** (1.0 / h) + 1e-9)),
            math.ceil(n ** (2.0 * a ** -0.25) - 1e-9),
            math.isqrt(n))
    b = max(1, int(math.floor(math.sqrt(a) + 0.5)))
    return {"h": h, "k": max(1, k), "b": b}


def _exact_near(g_union: Graph, k: int, beta: int, ledger: RoundLedger, h: int, mode: str,
                cfg: Config) -> PartialEstimate:
    """Exact distances to the k nearest nodes via filtered exponentiation over G ∪ H."""
    i = iterations_for(h, min(beta, k)) if k > 1 else 1
    near = knearest_iter(g_union.adjacency(), h, k, i, ledger, mode, cfg)
    return PartialEstimate(near.cols, near.vals, 1.0)


def reduce_approximation(g: Graph, delta: DistanceEstimate, a: float | None, seed: int,
                         ledger: RoundLedger, cfg: Config = DEFAULT, knn_mode: str = "auto",
                         info: dict | None = None) -> DistanceEstimate:
    """From an a-approximation to a 15*sqrt(a)-approximation in constant rounds."""
    a = delta.claimed_factor if a is None else float(a)
    n = g.n
    if n < cfg.brute_force_n:
        return brute_force_apsp(g, ledger, "reduce.brute_force")
    d_max = max(delta.max_finite(), 2)
    if math.log2(d_max) > max(a, 2.0) ** cfg.reduce_diameter_exponent:
        raise PreconditionViolated(f"log2 of diameter bound {d_max} exceeds "
                                   f"max(a, 2)^{cfg.reduce_diameter_exponent}")
    p = reduction_params(n, a)
    with ledger.stage("reduce"):
        hs = build_hopset(g, delta, ledger, a=a, cfg=cfg)
        near = _exact_near(hs.union(g), p["k"], hs.beta_bound, ledger, p["h"], knn_mode, cfg)
        sk = build_skeleton(g, near, p["k"], 1.0, sub_seed(seed, "reduce.hitting"), ledger, cfg=cfg)
        N = sk.size
        if N > n ** (1.0 - 1.0 / p["b"]) or p["b"] == 1:
            dgs = brute_force_apsp(sk.graph, ledger, "reduce.skeleton_broadcast")
            path = "broadcast"
        else:
            dgs = spanner_apsp(sk.graph, p["b"], cfg.reduce_eps, sub_seed(seed, "reduce.spanner"),
                               ledger, cfg)
            path = "spanner"
        eta = lift_skeleton_apsp(dgs, sk, near, ledger)
    _note(info, "reduce", {"n": n, "a": a, **p, "beta": hs.beta_bound, "hopset_edges": len(hs),
                           "skeleton_nodes": N, "skeleton_apsp": path,
                           "claimed_factor": eta.claimed_factor})
    return DistanceEstimate(_sym(eta.values), eta.claimed_factor)


# --- small-diameter APSP ----------------------------------------------------

def _direct(g, delta, a, mode, seed, ledger, cfg, knn_mode, info):
    """Hopset, exact sqrt(n)-nearest lists, skeleton, and a broadcast finish."""
    n = g.n
    k = max(1, math.isqrt(n))
    with ledger.stage("direct"):
        hs = build_hopset(g, delta, ledger, a=a, cfg=cfg)
        near = _exact_near(hs.union(g), k, hs.beta_bound, ledger, 2, knn_mode, cfg)
        sk = build_skeleton(g, near, k, 1.0, sub_seed(seed, "direct.hitting"), ledger, cfg=cfg)
        if mode == "log3":
            dgs = brute_force_apsp(sk.graph, ledger, "direct.skeleton_broadcast")
        else:
            dgs = spanner_apsp(sk.graph, 2, 0.0, sub_seed(seed, "direct.spanner"), ledger, cfg)
        eta = lift_skeleton_apsp(dgs, sk, near, ledger)
    _note(info, "direct", {"n": n, "a": a, "k": k, "beta": hs.beta_bound,
                           "skeleton_nodes": sk.size, "claimed_factor": eta.claimed_factor})
    return eta


def small_diameter_apsp(g: Graph, mode: str = "standard", seed: int = 0,
                        ledger: RoundLedger | None = None, cfg: Config = DEFAULT,
                        truncate_t: int | None = None, diameter_bound: int | None = None,
                        knn_mode: str = "auto", info: dict | None = None) -> DistanceEstimate:
    """21-approximation (standard) or 7-approximation (log3 bandwidth) for polylog diameter.

    With ``truncate_t`` the direct finish is skipped and exactly that many
    reductions run, the result being the elementwise minimum of all rounds.
    """
    if mode not in ("standard", "log3"):
        raise ValueError(f"unknown bandwidth mode {mode!r}")
    n = g.n
    if ledger is None:
        ledger = RoundLedger.for_model(n, 3 if mode == "log3" else 1, cfg.quota_c)
    if n < cfg.brute_force_n:
        return brute_force_apsp(g, ledger, "small_diameter.brute_force")
    L = _log2(n)
    with ledger.stage("bootstrap"):
        cur = logn_apsp(g, cfg.alpha, sub_seed(seed, "bootstrap"), ledger, cfg)
    cur = DistanceEstimate(_sym(cur.values), cur.claimed_factor)
    a = cur.claimed_factor
    limit = max(2.0, L) ** cfg.diameter_exponent
    if diameter_bound is None and cur.max_finite() / a > limit:
        raise PreconditionViolated(f"diameter exceeds max(2, log2 n)^{cfg.diameter_exponent}")

    if truncate_t is not None:
        for it in range(truncate_t):
            eta = reduce_approximation(g, cur, a, sub_seed(seed, f"reduce.{it}"), ledger, cfg,
                                       knn_mode, info)
            a = min(a, eta.claimed_factor)
            cur = DistanceEstimate(np.minimum(cur.values, eta.values), a)
        return cur

    cap = lll(n) + 2
    it = 0
    while it < cap and a > math.ceil(math.log2(L)) and 15 * math.sqrt(a) < a:
        eta = reduce_approximation(g, cur, a, sub_seed(seed, f"reduce.{it}"), ledger, cfg,
                                   knn_mode, info)
        a = eta.claimed_factor
        cur = DistanceEstimate(np.minimum(cur.values, eta.values), a)
        it += 1
    _note(info, "reduce_iterations", it)
    eta = _direct(g, cur, a, mode, seed, ledger, cfg, knn_mode, info)
    return DistanceEstimate(_sym(np.minimum(cur.values, eta.values)), min(a, eta.claimed_factor))


# --- weight scaling -----------------------------------------------------------

def round_up_weights(w, x: int) -> np.ndarray:
    """Every weight rounded up to the next multiple of x."""
    w = np.asarray(w, dtype=np.int64)
    return -(-w // x) * x


@dataclass(frozen=True, eq=False)
class ScaledGraphFamily:
    graphs: list
    B_eps: int
    h: int
    eps: float

    @property
    def cap(self) -> int:
        return self.B_eps * self.h * self.h

    @property
    def m(self) -> int:
        return len(self.graphs) - 1

    def scale(self, i: int) -> int:
        return 1 << i

    def index_for(self, delta_values):
        """i with 2^(i-1) cap <= delta < 2^i cap (i = 0 below cap)."""
        q = np.asarray(delta_values, dtype=np.int64) // self.cap
        out = np.zeros(q.shape, dtype=np.int64)
        while np.any(q > 0):        # integer bit length of q
            out += q > 0
            q = q >> 1
        return out


def scale_weights(g: Graph, h: int, eps: float, ledger: RoundLedger | None = None,
                  delta_max: int | None = None) -> ScaledGraphFamily:
    """Low-diameter graphs G_0..G_m; G_i is complete with weights min(ceil(w / 2^i), cap).

    Pairs without an edge get the cap, so each G_i has diameter at most
    cap = ceil(2 / eps) * h^2. Zero rounds: every node knows its own edges.
    """
    if g.m and g.w.min() <= 0:
        raise PreconditionViolated("weight scaling needs positive weights")
    B = math.ceil(2.0 / eps - 1e-12)
    cap = B * h * h
    fam0 = ScaledGraphFamily([], B, h, eps)
    top = max(int(delta_max if delta_max is not None else exact_apsp(g).max_finite()), 1)
    m = int(fam0.index_for(np.array([top]))[0])
    n = g.n
    iu, ju = np.triu_indices(n, 1)
    full = np.full((n, n), cap, dtype=np.int64)
    graphs = []
    s, t, w = (g.src, g.dst, g.w)
    for i in range(m + 1):
        x = 1 << i
        wi = np.minimum(-(-w // x), cap)
        mat = full.copy()
        np.minimum.at(mat, (np.minimum(s, t), np.maximum(s, t)), wi)
        graphs.append(Graph(n, iu, ju, mat[iu, ju], weight_bound=None))
    if ledger is not None:
        ledger.charge("scale_weights", 0)
    return ScaledGraphFamily(graphs, B, h, eps)


def combine_scaled(family: ScaledGraphFamily, inner: list, delta: DistanceEstimate,
                   ledger: RoundLedger | None = None) -> DistanceEstimate:
    """eta(u, v) = 2^i * delta_Gi(u, v) for the i selected by delta(u, v)."""
    if len(inner) != len(family.graphs):
        raise ValueError("one inner estimate per scaled graph is required")
    dv = delta.values
    idx = family.index_for(np.where(dv < INF, dv, 0))
    if idx.max(initial=0) > family.m:
        u, v = np.unravel_index(int(np.argmax(idx)), idx.shape)
        raise IndexOutOfFamily(f"pair ({u + 1}, {v + 1}) selects G_{int(idx[u, v])}, "
                               f"family ends at G_{family.m}")
    stack = np.stack([e.values for e in inner])
    picked = np.take_along_axis(stack, idx[None], axis=0)[0]
    eta = np.where(picked < INF, np.minimum(picked << idx, INF), INF)
    eta[dv >= INF] = INF
    np.fill_diagonal(eta, 0)
    if ledger is not None:
        ledger.charge("combine_scaled", 0)
    l = max(e.claimed_factor for e in inner)
    return DistanceEstimate(eta, (1 + family.eps) * l)


# --- large bandwidth ---------------------------------------------------------

def large_bw_apsp(g: Graph, eps: float = 0.1, seed: int = 0, ledger: RoundLedger | None = None,
                  cfg: Config = DEFAULT, truncate_t: int | None = None, knn_mode: str = "auto",
                  info: dict | None = None) -> DistanceEstimate:
    """(7^3 + eps)-approximation for bandwidth log^4 n (B = log^3 n words)."""
    n = g.n
    if ledger is None:
        ledger = RoundLedger.for_model(n, 4, cfg.quota_c)
    if n < cfg.brute_force_n:
        return brute_force_apsp(g, ledger, "large_bw.brute_force")
    eps1 = math.sqrt(1 + eps) - 1
    with ledger.stage("bootstrap"):
        d0 = logn_apsp(g, cfg.alpha, sub_seed(seed, "lb.bootstrap"), ledger, cfg)
    d0 = DistanceEstimate(_sym(d0.values), d0.claimed_factor)
    a0 = d0.claimed_factor
    with ledger.stage("hopset"):
        hs = build_hopset(g, d0, ledger, a=a0, cfg=cfg)
    h = max(hs.beta_bound, math.ceil(a0))
    fam = scale_weights(hs.union_undirected(g), h, eps1, ledger, delta_max=d0.max_finite())

    inner_B = ledger.bandwidth_B ** (2.0 / 3.0)
    subs, inner = [], []
    for i, gi in enumerate(fam.graphs):
        sub = RoundLedger(n, inner_B, ledger.quota_c)
        est = small_diameter_apsp(gi, "log3", sub_seed(seed, f"lb.scale.{i}"), sub, cfg,
                                  truncate_t=truncate_t, diameter_bound=fam.cap,
                                  knn_mode=knn_mode, info=info)
        subs.append(sub)
        inner.append(est)
    with ledger.stage("scaled"):
        run_parallel(ledger, subs, "large_bw.scaled_instances")
    eta1 = combine_scaled(fam, inner, d0, ledger)
    a = eta1.claimed_factor

    s = max(1, math.isqrt(n))
    cols, vals = topk_dense(eta1.values, s)
    near = PartialEstimate(cols, vals, a)
    with ledger.stage("skeleton"):
        sk = build_skeleton(g, near, s, a, sub_seed(seed, "lb.hitting"), ledger, cfg=cfg)
        dgs = brute_force_apsp(sk.graph, ledger, "large_bw.skeleton_broadcast")
        eta = lift_skeleton_apsp(dgs, sk, near, ledger)
    _note(info, "large_bw", {"n": n, "a0": a0, "beta": hs.beta_bound, "h": h,
                             "scaled_graphs": len(fam.graphs), "cap": fam.cap,
                             "inner_factor": max(e.claimed_factor for e in inner),
                             "skeleton_nodes": sk.size, "claimed_factor": eta.claimed_factor})
    out = np.minimum(_sym(eta.values), d0.values)
    return DistanceEstimate(out, min(a0, eta.claimed_factor))


# --- standard bandwidth ------------------------------------------------------

def full_params(n: int, cfg: Config = DEFAULT) -> dict:
    L = _log2(n)
    h = max(2, int(math.floor(L / (4 * math.log2(L)))))
    k = max(1, min(math.ceil(L ** 4), int(math.floor(cfg.c_k * n ** (1.0 / h) + 1e-9))))
    return {"h": h, "k": k, "i": iterations_for(h, k) if k > 1 else 1}


def _core(g: Graph, eps, seed, ledger, cfg, truncate_t, knn_mode, info):
    n = g.n
    if n < cfg.brute_force_n:
        return brute_force_apsp(g, ledger, "full.brute_force")
    p = full_params(n, cfg)
    with ledger.stage("knearest"):
        near = knearest_iter(g.adjacency(), p["h"], p["k"], p["i"], ledger, knn_mode, cfg)
    near = PartialEstimate(near.cols, near.vals, 1.0)
    with ledger.stage("skeleton"):
        sk = build_skeleton(g, near, p["k"], 1.0, sub_seed(seed, "full.hitting"), ledger, cfg=cfg)
    N = sk.size
    L = _log2(n)
    sub = RoundLedger(N, L ** 3, ledger.quota_c)
    dgs = large_bw_apsp(sk.graph, eps, sub_seed(seed, "full.large_bw"), sub, cfg, truncate_t,
                        knn_mode, info)
    with ledger.stage("skeleton_apsp"):
        absorb(ledger, sub, "skeleton_apsp")
    with ledger.stage("lift"):
        eta = lift_skeleton_apsp(dgs, sk, near, ledger)
    if info is not None:
        info["full"] = {"n": n, **p, "skeleton_nodes": N,
                        "simulation_funding_ratio": N * L ** 3 / (cfg.quota_c * n),
                        "skeleton_factor": dgs.claimed_factor,
                        "claimed_factor": eta.claimed_factor}
    return DistanceEstimate(_sym(eta.values), eta.claimed_factor)


def full_apsp(g: Graph, eps: float = 0.1, seed: int = 0, ledger: RoundLedger | None = None,
              cfg: Config = DEFAULT, knn_mode: str = "auto", info: dict | None = None,
              _truncate_t: int | None = None) -> DistanceEstimate:
    """(7^4 + eps)-approximation in the standard model; zero weights are compressed first."""
    if g.directed:
        raise ValueError("full_apsp expects an undirected graph")
    if ledger is None:
        ledger = RoundLedger(g.n, 1, cfg.quota_c)
    with ledger.stage("compress"):
        zc = compress_zero(g, ledger)
    q = zc.quotient
    if q.n == g.n:
        core = _core(q, eps, seed, ledger, cfg, _truncate_t, knn_mode, info)
    else:
        # the leaders simulate the smaller clique over the original links
        sub = RoundLedger(q.n, ledger.bandwidth_B, ledger.quota_c)
        core = _core(q, eps, seed, sub, cfg, _truncate_t, knn_mode, info)
        absorb(ledger, sub, "quotient")
    with ledger.stage("compress"):
        out = lift_compressed(core, zc, ledger)
    return out


def truncated_apsp(g: Graph, t: int, eps: float = 0.1, seed: int = 0,
                   ledger: RoundLedger | None = None, cfg: Config = DEFAULT,
                   knn_mode: str = "auto", info: dict | None = None) -> DistanceEstimate:
    """O(log^(2^-t) n)-approximation; each inner small-diameter run does t+1 reductions."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if t >= lll(g.n) + 2:
        return full_apsp(g, eps, seed, ledger, cfg, knn_mode, info)
    return full_apsp(g, eps, seed, ledger, cfg, knn_mode, info, _truncate_t=t + 1)


# --- one-call driver -----------------------------------------------------------

MODES = ("full", "truncated", "small_diameter", "reduce", "large_bw")


@dataclass
class PipelineReport:
    estimate: DistanceEstimate
    ledger: RoundLedger
    params: dict
    info: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.ledger.total_rounds


def run_pipeline(g: Graph, mode: str = "full", t: int = 1, eps: float = 0.1, seed: int = 0,
                 bandwidth_exp: int | None = None, cfg: Config = DEFAULT,
                 knn_mode: str = "auto") -> PipelineReport:
    """Run one pipeline on ``g`` with a fresh ledger."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    default_exp = {"large_bw": 4}.get(mode, 1)
    c = default_exp if bandwidth_exp is None else bandwidth_exp
    ledger = RoundLedger.for_model(g.n, c, cfg.quota_c)
    info: dict = {}
    if mode == "full":
        est = full_apsp(g, eps, seed, ledger, cfg, knn_mode, info)
    elif mode == "truncated":
        est = truncated_apsp(g, t, eps, seed, ledger, cfg, knn_mode, info)
    elif mode == "small_diameter":
        est = small_diameter_apsp(g, "log3" if c >= 3 else "standard", seed, ledger, cfg,
                                  knn_mode=knn_mode, info=info)
    elif mode == "large_bw":
        est = large_bw_apsp(g, eps, seed, ledger, cfg, knn_mode=knn_mode, info=info)
    else:
        d0 = logn_apsp(g, cfg.alpha, sub_seed(seed, "bootstrap"), ledger, cfg)
        d0 = DistanceEstimate(_sym(d0.values), d0.claimed_factor)
        est = reduce_approximation(g, d0, None, seed, ledger, cfg, knn_mode, info)
    params = {"n": g.n, "m": g.m, "mode": mode, "t": t if mode == "truncated" else None,
              "eps": eps, "seed": seed, "bandwidth_exp": c, "bandwidth_B": ledger.bandwidth_B,
              "knn_mode": knn_mode, "config": cfg.to_dict()}
    return PipelineReport(est, ledger, params, info)

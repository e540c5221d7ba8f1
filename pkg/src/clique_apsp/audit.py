"""Invariant suites run by ``clique-apsp audit``; each returns a SuiteResult."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph, gen_graph, rng_for
from .hopset import Hopset, build_hopset, verify_hopset
from .knearest import filter_rows
from .oracles import DistanceEstimate, PartialEstimate, exact_apsp, hhop_dense, knearest_oracle, max_ratio
from .pipeline import combine_scaled, round_up_weights, scale_weights
from .primitives import logn_apsp
from .sim import RoundLedger
from .skeleton import build_skeleton, lift_skeleton_apsp
from .tropical import INF, TropicalMatrix, minplus_power


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    cases: int
    failures: int = 0
    detail: dict = field(default_factory=dict)
    counterexample: object = None

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" counterexample={self.counterexample}" if self.counterexample is not None else ""
        return f"[{tag}] {self.suite}: {self.cases} cases, {self.failures} failures{extra}"


def random_matrix(n: int, seed: int, p: float = 0.3, wmax: int = 20) -> TropicalMatrix:
    """Random directed adjacency with zero diagonal and positive off-diagonal weights."""
    rng = rng_for(seed, "audit.matrix", n)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    r, c = np.nonzero(mask)
    w = rng.integers(1, wmax + 1, len(r))
    d = np.arange(n)
    return TropicalMatrix(n, np.r_[r, d], np.r_[c, d], np.r_[w, np.zeros(n, dtype=np.int64)])


def suite_filter(n: int = 32, i_max: int = 4, cases: int = 50, seed: int = 1) -> SuiteResult:
    """filter(filter(A)^i) == filter(A^i) entrywise."""
    fails, first = 0, None
    total = 0
    for c in range(cases):
        nn = 4 + (c * 7) % (n - 3) if n > 4 else n
        a = random_matrix(nn, seed * 100_003 + c)
        k = 1 + c % 6
        fa = filter_rows(a, k).base
        for i in range(1, i_max + 1):
            total += 1
            if filter_rows(minplus_power(fa, i), k) != filter_rows(minplus_power(a, i), k):
                fails += 1
                first = first or {"n": nn, "k": k, "i": i, "case": c}
    return SuiteResult("filter", fails == 0, total, fails, {"n_max": n, "i_max": i_max}, first)


def underweight_fault(g: Graph, h: Hopset) -> Hopset:
    """Copy of ``h`` plus one shortcut lighter than the true distance."""
    d = exact_apsp(g).values
    u, v = np.argwhere((d >= 2) & (d < INF))[0]
    return Hopset(h.n, np.r_[h.src, u], np.r_[h.dst, v], np.r_[h.w, d[u, v] - 1], h.beta_bound, h.k)


def suite_hopset(cases: int = 20, n: int = 64, seed: int = 1, fault: bool = False) -> SuiteResult:
    fails, first = 0, None
    total = 0
    for c in range(cases):
        g = gen_graph(f"erdos_renyi:{n}:{min(1.0, 6 / n)}:w=1-50", seed * 1000 + c)
        for kind in ("exact", "logn"):
            led = RoundLedger(n)
            delta = exact_apsp(g) if kind == "exact" else logn_apsp(g, 1.0, c, led)
            delta = DistanceEstimate(np.minimum(delta.values, delta.values.T), delta.claimed_factor)
            h = build_hopset(g, delta, led)
            if fault:
                h = underweight_fault(g, h)
            ok, pair = verify_hopset(g, h, h.k, h.beta_bound)
            total += 1
            if not ok:
                fails += 1
                first = first or pair
    return SuiteResult("hopset", fails == 0, total, fails, {"n": n, "fault": fault}, first)


def suite_skeleton(cases: int = 10, n: int = 64, k: int = 8, seed: int = 1) -> SuiteResult:
    """Exact lists with l = 1 stay within 7; doubled lists stay within 28."""
    fails, worst = 0, {1: 0.0, 2: 0.0}
    total = 0
    first = None
    for c in range(cases):
        g = gen_graph(f"erdos_renyi:{n}:{min(1.0, 8 / n)}:w=1-30", seed * 1000 + c)
        d = exact_apsp(g).values
        near = knearest_oracle(g, k)
        for a in (1, 2):
            pe = PartialEstimate(near.cols, np.where(near.mask, near.vals * a, INF), a)
            led = RoundLedger(n)
            sk = build_skeleton(g, pe, k, a, seed * 1000 + c, led)
            eta = lift_skeleton_apsp(exact_apsp(sk.graph), sk, pe, led)
            r, unsound = max_ratio(eta.values, d)
            worst[a] = max(worst[a], r)
            total += 1
            if unsound or r > 7 * a * a:
                fails += 1
                first = first or {"case": c, "a": a, "ratio": r, "unsound": unsound}
    return SuiteResult("skeleton", fails == 0, total, fails,
                       {"max_ratio_a1": worst[1], "max_ratio_a2": worst[2]}, first)


def suite_scaling(cases: int = 5, n: int = 48, seed: int = 1) -> SuiteResult:
    fails, first, total = 0, None, 0
    illustration = int(round_up_weights([3, 1, 203, 7], 10).sum())
    if illustration != 240:
        fails, first = 1, {"illustration": illustration}
    for c in range(cases):
        g = gen_graph(f"erdos_renyi:{n}:{min(1.0, 6 / n)}:w=1-{n ** 2}", seed * 1000 + c)
        ex = exact_apsp(g)
        for eps in (0.1, 0.5, 1.0):
            h = 4
            fam = scale_weights(g, h, eps, delta_max=ex.max_finite())
            inner = [exact_apsp(gi) for gi in fam.graphs]
            eta = combine_scaled(fam, inner, ex).values
            short = hhop_dense(g, h) == ex.values
            fin = ex.values < INF
            ok = np.all(eta[fin] >= ex.values[fin])
            pos = short & fin & (ex.values > 0)
            ok &= np.all(eta[pos] < (1 + eps) * ex.values[pos])
            total += 1
            if not ok:
                fails += 1
                first = first or {"case": c, "eps": eps}
    return SuiteResult("scaling", fails == 0, total, fails, {"illustration_length": illustration}, first)


SUITES = {"filter": suite_filter, "hopset": suite_hopset, "skeleton": suite_skeleton,
          "scaling": suite_scaling}


def run_suites(names=None, seed: int = 1, n: int | None = None, i: int | None = None,
               fault: bool = False) -> list:
    names = list(SUITES) if not names else names
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        kw: dict = {"seed": seed}
        if name == "filter":
            kw.update({k: v for k, v in (("n", n), ("i_max", i)) if v is not None})
        elif name == "hopset":
            kw["fault"] = fault
            if n is not None:
                kw["n"] = n
        elif n is not None:
            kw["n"] = n
        out.append(SUITES[name](**kw))
    return out

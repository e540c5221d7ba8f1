"""Weighted graphs, the edge-list text format, and seeded generators.

Node IDs are 1..n in every public interface (edge tuples, text files).
Internally edges live in 0-based numpy arrays so that node ``i`` sits at
row ``i - 1`` of every distance matrix.
"""
from __future__ import annotations

import math
import re
import zlib

import numpy as np

from .tropical import INF, TropicalMatrix


def rng_for(seed: int, tag: str, *keys: int) -> np.random.Generator:
    """Generator keyed by (seed, tag, keys), independent of call order.

    Node-local draws use one vector per (seed, tag, keys) where node ``i``
    reads position ``i``; Philox is counter based, so that value depends only
    on the key and the position.
    """
    entropy = [int(seed) % 2**64, zlib.crc32(tag.encode()), *[int(k) % 2**64 for k in keys]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


class Graph:
    """Simple weighted graph with nonnegative integer weights.

    ``weight_bound`` defaults to ``n ** weight_exponent``; pass
    ``weight_bound=None`` to disable the check (derived graphs such as
    skeletons carry distances of a larger host graph).
    """

    __slots__ = ("n", "src", "dst", "w", "directed", "_arcs")

    def __init__(self, n, src, dst, w, directed=False, *, weight_exponent=3,
                 weight_bound="auto", validate=True):
        self.n = int(n)
        self.src = np.asarray(src, dtype=np.int64).reshape(-1)
        self.dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        self.w = np.asarray(w, dtype=np.int64).reshape(-1)
        self.directed = bool(directed)
        self._arcs = None
        if validate:
            if weight_bound == "auto":
                weight_bound = self.n ** weight_exponent
            self._validate(weight_bound)
        for a in (self.src, self.dst, self.w):
            a.setflags(write=False)

    def _validate(self, bound):
        n = self.n
        if n < 1:
            raise ValueError("a graph needs at least one node")
        if not (len(self.src) == len(self.dst) == len(self.w)):
            raise ValueError("edge arrays differ in length")
        if len(self.src):
            if self.src.min() < 0 or self.dst.min() < 0 or max(self.src.max(), self.dst.max()) >= n:
                raise ValueError("node ID out of range 1..n")
            if np.any(self.src == self.dst):
                raise ValueError("self-loops are not allowed")
            if self.w.min() < 0:
                raise ValueError("weights must be nonnegative")
            if bound is not None and self.w.max() > bound:
                raise ValueError(f"weight {int(self.w.max())} exceeds bound {bound}")
            key = self._pair_keys()
            if len(np.unique(key)) != len(key):
                raise ValueError("parallel edges are not allowed")

    def _pair_keys(self):
        if self.directed:
            return self.src * self.n + self.dst
        lo, hi = np.minimum(self.src, self.dst), np.maximum(self.src, self.dst)
        return lo * self.n + hi

    # construction -----------------------------------------------------
    @classmethod
    def from_edges(cls, n, edges, directed=False, **kw) -> "Graph":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 3)
        return cls(n, e[:, 0] - 1, e[:, 1] - 1, e[:, 2], directed, **kw)

    @classmethod
    def merged(cls, n, src, dst, w, directed=False, **kw) -> "Graph":
        """Graph from arcs that may repeat; parallel arcs keep the minimum weight."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.asarray(w, dtype=np.int64)
        keep = src != dst
        src, dst, w = src[keep], dst[keep], w[keep]
        if not directed:
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        key = src * n + dst
        order = np.lexsort((w, key))
        key, w = key[order], w[order]
        first = np.ones(len(key), dtype=bool)
        first[1:] = key[1:] != key[:-1]
        key, w = key[first], w[first]
        return cls(n, key // n, key % n, w, directed, **kw)

    # views ------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.w)

    @property
    def edges(self) -> list:
        return [(int(u) + 1, int(v) + 1, int(w)) for u, v, w in zip(self.src, self.dst, self.w)]

    @property
    def max_weight(self) -> int:
        return int(self.w.max()) if self.m else 0

    def arcs(self):
        """Directed arcs (src, dst, w); undirected edges appear in both directions."""
        if self._arcs is None:
            if self.directed:
                a = (self.src, self.dst, self.w)
            else:
                a = (np.concatenate([self.src, self.dst]), np.concatenate([self.dst, self.src]),
                     np.concatenate([self.w, self.w]))
            for x in a:
                x.setflags(write=False)
            self._arcs = a
        return self._arcs

    def csr(self):
        from scipy.sparse import csr_matrix
        s, d, w = self.arcs()
        return csr_matrix((w.astype(np.float64), (s, d)), shape=(self.n, self.n))

    def adjacency(self) -> TropicalMatrix:
        """Weighted adjacency with an explicit zero diagonal."""
        s, d, w = self.arcs()
        i = np.arange(self.n)
        return TropicalMatrix(self.n, np.concatenate([s, i]), np.concatenate([d, i]),
                              np.concatenate([w, np.zeros(self.n, dtype=np.int64)]))

    def dense_adjacency(self) -> np.ndarray:
        out = np.full((self.n, self.n), INF, dtype=np.int64)
        s, d, w = self.arcs()
        out[s, d] = w
        np.fill_diagonal(out, 0)
        return out

    def canonical(self):
        """Edges sorted by (u, v), with u < v for undirected graphs."""
        s, d = self.src, self.dst
        if not self.directed:
            s, d = np.minimum(s, d), np.maximum(s, d)
        order = np.lexsort((d, s))
        return s[order], d[order], self.w[order]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if (self.n, self.directed, self.m) != (other.n, other.directed, other.m):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.canonical(), other.canonical()))

    def __hash__(self):
        return hash((self.n, self.directed, self.m))

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, m={self.m}, {kind})"

    # text format ------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"# n={self.n} directed={int(self.directed)}"]
        lines += [f"{u} {v} {w}" for u, v, w in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **kw) -> "Graph":
        lines = text.splitlines()
        if not lines:
            raise ValueError("empty edge list")
        mt = re.fullmatch(r"#\s*n=(\d+)\s+directed=([01])\s*", lines[0])
        if not mt:
            raise ValueError(f"bad header line: {lines[0]!r}")
        n, directed = int(mt.group(1)), mt.group(2) == "1"
        edges = []
        for ln in lines[1:]:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"bad edge line: {ln!r}")
            edges.append(tuple(int(p) for p in parts))
        return cls.from_edges(n, edges, directed, **kw)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path, **kw) -> "Graph":
        with open(path) as fh:
            return cls.from_text(fh.read(), **kw)


# generators -----------------------------------------------------------

_ALIASES = {"er": "erdos_renyi", "gnp": "erdos_renyi", "rgg": "random_geometric",
            "geo": "random_geometric", "complete": "clique"}
_FAMILIES = ("path", "star", "grid", "clique", "erdos_renyi", "random_geometric")


def parse_spec(spec: str) -> dict:
    """Parse ``family:n[:param][:w=lo-hi]``, e.g. ``er:64:0.2:w=1-100``."""
    parts = [p.strip() for p in spec.split(":") if p.strip()]
    if len(parts) < 2:
        raise ValueError(f"generator spec needs a family and a size: {spec!r}")
    family = _ALIASES.get(parts[0].lower(), parts[0].lower())
    if family not in _FAMILIES:
        raise ValueError(f"unknown graph family {parts[0]!r}")
    out = {"family": family, "param": None, "w": (1, 1)}
    size = parts[1]
    if family == "grid" and "x" in size:
        r, c = (int(x) for x in size.split("x"))
        out["shape"], out["n"] = (r, c), r * c
    else:
        out["n"] = int(size)
        if family == "grid":
            side = math.isqrt(out["n"])
            if side * side != out["n"]:
                raise ValueError("grid:n needs a perfect square, or use grid:RxC")
            out["shape"] = (side, side)
    for p in parts[2:]:
        if p.startswith("w="):
            lo, _, hi = p[2:].partition("-")
            out["w"] = (int(lo), int(hi or lo))
        else:
            out["param"] = float(p)
    if out["n"] < 1:
        raise ValueError("n must be positive")
    lo, hi = out["w"]
    if lo < 0 or hi < lo:
        raise ValueError(f"bad weight range {lo}-{hi}")
    if family == "erdos_renyi":
        out["param"] = 0.5 if out["param"] is None else out["param"]
        if not 0.0 <= out["param"] <= 1.0:
            raise ValueError("edge probability must lie in [0, 1]")
    if family == "random_geometric":
        out["param"] = 0.2 if out["param"] is None else out["param"]
        if out["param"] <= 0:
            raise ValueError("radius must be positive")
    return out


def gen_graph(spec: str, seed: int = 0, weight_exponent: int = 3) -> Graph:
    """Deterministic graph for a descriptor such as ``path:8`` or ``er:64:0.2:w=1-50``."""
    p = parse_spec(spec)
    n, fam = p["n"], p["family"]
    if fam == "path":
        u = np.arange(n - 1)
        v = u + 1
    elif fam == "star":
        v = np.arange(1, n)
        u = np.zeros(n - 1, dtype=np.int64)
    elif fam == "clique":
        u, v = np.triu_indices(n, 1)
    elif fam == "grid":
        r, c = p["shape"]
        idx = np.arange(n).reshape(r, c)
        u = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
        v = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    elif fam == "erdos_renyi":
        iu, iv = np.triu_indices(n, 1)
        keep = rng_for(seed, "gen.erdos_renyi", n).random(len(iu)) < p["param"]
        u, v = iu[keep], iv[keep]
    else:
        pts = rng_for(seed, "gen.random_geometric", n).random((n, 2))
        iu, iv = np.triu_indices(n, 1)
        dist = np.hypot(*(pts[iu] - pts[iv]).T)
        keep = dist <= p["param"]
        u, v = iu[keep], iv[keep]
    lo, hi = p["w"]
    if lo == hi:
        w = np.full(len(u), lo, dtype=np.int64)
    else:
        w = rng_for(seed, "gen.weights", n).integers(lo, hi + 1, size=len(u))
    return Graph(n, u, v, w, weight_exponent=weight_exponent)

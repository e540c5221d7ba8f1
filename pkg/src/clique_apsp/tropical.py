"""Min-plus matrices and per-row k-smallest lists.

Distances are int64 throughout. ``INF`` is far above any real distance
(n * n^3 stays below 2^52 for every n this package targets) and leaves
room to add up to seven saturated terms without overflowing int64.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

INF = np.int64(2**60)


def sat_add(*terms):
    """Elementwise sum clipped at INF. Every term must already be <= INF."""
    out = np.asarray(terms[0], dtype=np.int64)
    for t in terms[1:]:
        out = out + np.asarray(t, dtype=np.int64)
    return np.minimum(out, INF)


def _min_by_key(keys, vals):
    """Unique keys (ascending) with the minimum value seen for each."""
    if len(keys) == 0:
        return keys[:0], vals[:0]
    order = np.lexsort((vals, keys))
    k, v = keys[order], vals[order]
    first = np.ones(len(k), dtype=bool)
    first[1:] = k[1:] != k[:-1]
    return k[first], v[first]


class TropicalMatrix:
    """Square matrix over (min, +), stored as sorted finite triplets.

    Absent entries are infinite. Rows and columns are 0-based indices; node
    ID ``i + 1`` owns row ``i``.
    """

    __slots__ = ("n", "rows", "cols", "vals")

    def __init__(self, n: int, rows, cols, vals, *, reduce: bool = True):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.int64)
        keep = vals < INF
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if reduce:
            key, vals = _min_by_key(rows * n + cols, vals)
            rows, cols = key // n, key % n
        self.n = int(n)
        self.rows, self.cols, self.vals = rows, cols, vals
        for a in (self.rows, self.cols, self.vals):
            a.setflags(write=False)

    # construction -----------------------------------------------------
    @classmethod
    def from_dense(cls, arr) -> "TropicalMatrix":
        arr = np.asarray(arr, dtype=np.int64)
        r, c = np.nonzero(arr < INF)
        return cls(arr.shape[0], r, c, arr[r, c], reduce=False)

    @classmethod
    def identity(cls, n: int) -> "TropicalMatrix":
        i = np.arange(n)
        return cls(n, i, i, np.zeros(n, dtype=np.int64), reduce=False)

    def to_dense(self) -> np.ndarray:
        out = np.full((self.n, self.n), INF, dtype=np.int64)
        out[self.rows, self.cols] = self.vals
        return out

    # inspection -------------------------------------------------------
    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def rho(self) -> Fraction:
        """Finite entries per row, averaged, as an exact fraction."""
        return Fraction(self.nnz, self.n) if self.n else Fraction(0)

    @property
    def entries(self) -> dict:
        return {(int(r), int(c)): int(v) for r, c, v in zip(self.rows, self.cols, self.vals)}

    def __getitem__(self, rc):
        r, c = rc
        lo, hi = np.searchsorted(self.rows, [r, r + 1])
        j = lo + np.searchsorted(self.cols[lo:hi], c)
        if j < hi and self.cols[j] == c:
            return int(self.vals[j])
        return int(INF)

    def row_counts(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.n)

    def has_zero_diagonal(self) -> bool:
        d = self.rows == self.cols
        return bool(d.sum() == self.n and np.all(self.vals[d] == 0))

    def __eq__(self, other):
        if not isinstance(other, TropicalMatrix):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.rows, other.rows)
                and np.array_equal(self.cols, other.cols)
                and np.array_equal(self.vals, other.vals))

    def __repr__(self):
        return f"TropicalMatrix(n={self.n}, nnz={self.nnz})"

    # algebra ----------------------------------------------------------
    def star(self, other: "TropicalMatrix") -> "TropicalMatrix":
        """Distance product: (A*B)[i,j] = min_k A[i,k] + B[k,j]."""
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        n = self.n
        indptr = np.searchsorted(other.rows, np.arange(n + 1))
        counts = indptr[1:] - indptr[:-1]
        per = counts[self.cols]
        total = int(per.sum())
        if total == 0:
            return TropicalMatrix(n, [], [], [])
        base = np.repeat(indptr[self.cols] - (np.cumsum(per) - per), per)
        idx = base + np.arange(total)
        i = np.repeat(self.rows, per)
        v = np.repeat(self.vals, per) + other.vals[idx]
        return TropicalMatrix(n, i, other.cols[idx], np.minimum(v, INF))

    __matmul__ = star


def minplus_power(a: TropicalMatrix, h: int) -> TropicalMatrix:
    """h-fold distance product of ``a`` with itself."""
    if h < 1:
        raise ValueError("h must be positive")
    out = a
    for _ in range(h - 1):
        out = out.star(a)
    return out


class RowLists:
    """Per-row lists of at most ``k`` (column, value) pairs sorted by (value, column).

    ``cols`` holds -1 and ``vals`` holds INF in unused slots.
    """

    __slots__ = ("n", "k", "cols", "vals")

    def __init__(self, cols, vals):
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=np.int64)
        self.n, self.k = self.cols.shape

    @property
    def mask(self) -> np.ndarray:
        return self.cols >= 0

    def counts(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def triplets(self):
        r, j = np.nonzero(self.mask)
        return r, self.cols[r, j], self.vals[r, j]

    def to_matrix(self) -> TropicalMatrix:
        r, c, v = self.triplets()
        return TropicalMatrix(self.n, r, c, v)

    def row(self, u: int) -> list:
        """Row of node ID ``u`` as (node ID, value) pairs, IDs 1-based."""
        m = self.cols[u - 1] >= 0
        return [(int(c) + 1, int(v)) for c, v in zip(self.cols[u - 1][m], self.vals[u - 1][m])]

    def as_lists(self) -> dict:
        return {u: self.row(u) for u in range(1, self.n + 1)}

    def sets(self) -> list:
        """Member IDs (1-based) of every row, row ``u`` at position ``u - 1``."""
        return [frozenset((self.cols[u][self.cols[u] >= 0] + 1).tolist()) for u in range(self.n)]

    def __eq__(self, other):
        if not isinstance(other, RowLists):
            return NotImplemented
        ka, kb = self.counts(), other.counts()
        if self.n != other.n or not np.array_equal(ka, kb):
            return False
        w = int(ka.max()) if self.n else 0
        return (np.array_equal(self.cols[:, :w], other.cols[:, :w])
                and np.array_equal(self.vals[:, :w], other.vals[:, :w]))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, k={self.k})"


def topk_sparse(n: int, k: int, rows, cols, vals):
    """k smallest (value, column) per row from unsorted triplets.

    Duplicate (row, column) pairs are reduced to their minimum first.
    Returns dense ``(cols, vals)`` arrays of shape (n, k).
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.int64)
    keep = vals < INF
    width = max(n, int(cols.max()) + 1 if len(cols) else 1)
    key, vals = _min_by_key(rows[keep] * width + cols[keep], vals[keep])
    rows, cols = key // width, key % width
    order = np.lexsort((cols, vals, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    start = np.searchsorted(rows, np.arange(n))
    rank = np.arange(len(rows)) - start[rows]
    sel = rank < k
    out_c = np.full((n, k), -1, dtype=np.int64)
    out_v = np.full((n, k), INF, dtype=np.int64)
    out_c[rows[sel], rank[sel]] = cols[sel]
    out_v[rows[sel], rank[sel]] = vals[sel]
    return out_c, out_v


def topk_dense(values: np.ndarray, k: int):
    """k smallest finite entries per row of a dense matrix, ties by column."""
    n = values.shape[0]
    k = min(k, values.shape[1])
    if k <= 0:
        return np.full((n, 0), -1, dtype=np.int64), np.full((n, 0), INF, dtype=np.int64)
    thr = np.partition(values, k - 1, axis=1)[:, k - 1]
    r, c = np.nonzero(values <= thr[:, None])
    return topk_sparse(n, k, r, c, values[r, c])

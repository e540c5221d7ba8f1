"""Calibration constants shared by the simulator and the pipeline.

None of these numbers are fixed by the underlying analysis, which only
states asymptotic bounds. They are collected here so that every report can
embed the exact values a run used.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Config:
    quota_c: float = 4.0            # default routing quota, words per node = quota_c * n * B
    c_sp: float = 8.0               # spanner size constant: |E| <= c_sp * k * n^(1+1/k)
    c_k: float = 1.0                # k <= c_k * n^(1/h) for filtered exponentiation
    alpha: float = 1.0              # factor multiplier of the (alpha log n) bootstrap
    bootstrap_eps: float = 0.1      # epsilon of the bootstrap spanner estimate
    reduce_eps: float = 1.0 / 14    # spanner epsilon inside the factor reduction
    bcast_c: float = 64.0           # spanner broadcast budget: |E| <= bcast_c * n words
    weight_exponent: int = 3        # Graph weights are bounded by n^weight_exponent
    diameter_exponent: int = 10     # small-diameter APSP requires d <= max(2, log2 n)^this
    reduce_diameter_exponent: int = 6  # reduction requires log2 d <= max(2, a)^this
    hopset_quota: float = 2.0       # declared quota of the hopset collection routes
    step3_quota: float = 16.0       # declared quota of the bin-collection route (units of c_k)
    step4_quota: float = 16.0       # declared quota of the k-nearest reply route
    brute_force_n: int = 16         # below this many nodes, solve by broadcasting the graph
    faithful_max_messages: int = 250_000  # larger instances use the equivalent fast path

    def with_(self, **kw) -> "Config":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = Config()

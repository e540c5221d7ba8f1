"""Round accounting for the Congested-Clique[B] model.

Every primitive appends one entry to a ``RoundLedger``. Routing primitives
check per-node word loads against a declared quota before charging their
constant number of rounds; a violation raises ``QuotaExceeded`` instead of
being charged as extra rounds.
"""
from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import QuotaExceeded


@dataclass
class LedgerEntry:
    primitive: str
    rounds: int
    max_sent: int = 0
    max_received: int = 0
    quota: float | None = None
    stage: str = ""
    children: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"primitive": self.primitive, "rounds": self.rounds,
             "max_sent": self.max_sent, "max_received": self.max_received}
        if self.quota is not None:
            d["quota"] = self.quota
        if self.stage:
            d["stage"] = self.stage
        if self.children:
            d["children"] = self.children
        return d


class RoundLedger:
    """Charged rounds per primitive plus per-node load maxima.

    ``bandwidth_B`` is the number of ceil(log2 n)-bit words a node may put
    on one link per round: 1 for the standard model, (log2 n)^(c-1) for
    Congested-Clique[log^c n].
    """

    def __init__(self, n: int, bandwidth_B: float = 1, quota_c: float = 4.0):
        self.n = int(n)
        self.bandwidth_B = bandwidth_B
        self.quota_c = quota_c
        self.entries: list[LedgerEntry] = []
        self._stage: list[str] = []

    @classmethod
    def for_model(cls, n: int, log_exponent: int = 1, quota_c: float = 4.0,
                  log_n: float | None = None) -> "RoundLedger":
        """Ledger for Congested-Clique[log^c n]; ``log_n`` overrides log2 n."""
        ln = math.log2(max(n, 2)) if log_n is None else log_n
        return cls(n, ln ** (log_exponent - 1), quota_c)

    @property
    def total_rounds(self) -> int:
        return sum(e.rounds for e in self.entries)

    @contextmanager
    def stage(self, name: str):
        self._stage.append(name)
        try:
            yield self
        finally:
            self._stage.pop()

    @property
    def current_stage(self) -> str:
        return "/".join(self._stage)

    def charge(self, primitive: str, rounds: int, max_sent: int = 0, max_received: int = 0,
               quota: float | None = None, children=None) -> LedgerEntry:
        if rounds < 0:
            raise ValueError("rounds must be nonnegative")
        e = LedgerEntry(primitive, int(rounds), int(max_sent), int(max_received), quota,
                        self.current_stage, list(children or []))
        self.entries.append(e)
        return e

    def limit(self, quota_c: float | None = None) -> float:
        q = self.quota_c if quota_c is None else quota_c
        return q * self.n * self.bandwidth_B

    def stage_totals(self) -> dict:
        out: dict[str, int] = {}
        for e in self.entries:
            top = e.stage.split("/")[0] if e.stage else "(top)"
            out[top] = out.get(top, 0) + e.rounds
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "bandwidth_B": self.bandwidth_B, "quota_c": self.quota_c,
                "entries": [e.to_dict() for e in self.entries],
                "total_rounds": self.total_rounds,
                "stage_totals": self.stage_totals()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __repr__(self):
        return f"RoundLedger(n={self.n}, B={self.bandwidth_B}, entries={len(self.entries)}, rounds={self.total_rounds})"


class MessageBatch:
    """Messages (src, dst, payload words); node indices are 0-based.

    ``payload`` is a 2-D int64 array padded to a common width; ``lengths``
    records the true number of words of every message.
    """

    __slots__ = ("n", "src", "dst", "payload", "lengths")

    def __init__(self, n, src, dst, payload=None, lengths=None):
        self.n = int(n)
        self.src = np.asarray(src, dtype=np.int64).reshape(-1)
        self.dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        m = len(self.src)
        if payload is None:
            payload = np.zeros((m, 0), dtype=np.int64)
        payload = np.asarray(payload, dtype=np.int64)
        width = payload.shape[1] if payload.ndim == 2 else (payload.size // m if m else 0)
        self.payload = payload.reshape(m, width)
        width = self.payload.shape[1]
        self.lengths = (np.full(m, width, dtype=np.int64) if lengths is None
                        else np.asarray(lengths, dtype=np.int64))
        if len(self.dst) != m or len(self.lengths) != m:
            raise ValueError("message arrays differ in length")
        if m and (min(self.src.min(), self.dst.min()) < 0 or max(self.src.max(), self.dst.max()) >= self.n):
            raise ValueError("message endpoint out of range")
        if m and (self.lengths.min() < 0 or self.lengths.max() > width):
            raise ValueError("payload length does not fit the payload array")

    @classmethod
    def from_list(cls, n, messages) -> "MessageBatch":
        """From (src ID, dst ID, [words]) tuples with 1-based IDs."""
        messages = list(messages)
        width = max((len(p) for _, _, p in messages), default=0)
        pay = np.zeros((len(messages), width), dtype=np.int64)
        for i, (_, _, p) in enumerate(messages):
            pay[i, :len(p)] = p
        return cls(n, [s - 1 for s, _, _ in messages], [d - 1 for _, d, _ in messages], pay,
                   [len(p) for _, _, p in messages])

    def __len__(self):
        return len(self.src)

    def sent_words(self) -> np.ndarray:
        return np.bincount(self.src, weights=self.lengths, minlength=self.n).astype(np.int64)

    def received_words(self) -> np.ndarray:
        return np.bincount(self.dst, weights=self.lengths, minlength=self.n).astype(np.int64)


class Inbox:
    """Delivered messages grouped by destination, in send order within each group."""

    __slots__ = ("n", "src", "dst", "payload", "lengths", "offsets")

    def __init__(self, batch: MessageBatch):
        order = np.argsort(batch.dst, kind="stable")
        self.n = batch.n
        self.src = batch.src[order]
        self.dst = batch.dst[order]
        self.payload = batch.payload[order]
        self.lengths = batch.lengths[order]
        self.offsets = np.searchsorted(self.dst, np.arange(self.n + 1))

    def for_node(self, v: int):
        """(src, payload) of messages delivered to 0-based node ``v``."""
        lo, hi = self.offsets[v], self.offsets[v + 1]
        return self.src[lo:hi], self.payload[lo:hi]

    def __len__(self):
        return len(self.src)


def _check(ledger, name, sent, recv, quota_c, source_words):
    limit = ledger.limit(quota_c)
    ms = int(sent.max()) if len(sent) else 0
    mr = int(recv.max()) if len(recv) else 0
    if mr > limit:
        v = int(np.argmax(recv))
        raise QuotaExceeded(f"{name}: node {v + 1} receives {mr} words, quota {limit:g}")
    if source_words is None:
        if ms > limit:
            v = int(np.argmax(sent))
            raise QuotaExceeded(f"{name}: node {v + 1} sends {ms} words, quota {limit:g}")
    else:
        src_max = int(np.max(source_words)) if len(source_words) else 0
        if src_max > limit:
            raise QuotaExceeded(f"{name}: source data of {src_max} words exceeds quota {limit:g}")
    return ms, mr


def route_validated(ledger: RoundLedger, batch: MessageBatch, quota_c: float | None = None,
                    name: str = "route", source_words=None) -> Inbox:
    """Deliver ``batch`` in one charged round after checking per-node loads.

    Senders may exceed the quota only when ``source_words`` shows that the
    data they replicate fits it (the improved routing regime).
    """
    if batch.n != ledger.n:
        raise ValueError("batch and ledger disagree on n")
    sent, recv = batch.sent_words(), batch.received_words()
    ms, mr = _check(ledger, name, sent, recv, quota_c, source_words)
    ledger.charge(name, 1, ms, mr, ledger.quota_c if quota_c is None else quota_c)
    return Inbox(batch)


def route_loads(ledger: RoundLedger, sent, received, quota_c: float | None = None,
                name: str = "route", source_words=None) -> None:
    """Charge one routing round from per-node word counts alone.

    Used where the receivers' computation is carried out by an equivalent
    centralized routine, so only the traffic shape has to be validated.
    """
    sent = np.asarray(sent, dtype=np.int64)
    received = np.asarray(received, dtype=np.int64)
    ms, mr = _check(ledger, name, sent, received, quota_c, source_words)
    ledger.charge(name, 1, ms, mr, ledger.quota_c if quota_c is None else quota_c)


def broadcast(ledger: RoundLedger, payload_words: int, name: str = "broadcast") -> int:
    """Charge max(1, ceil(words / (n * B))) rounds and return the charge."""
    cap = ledger.n * ledger.bandwidth_B
    rounds = max(1, math.ceil(payload_words / cap - 1e-9))
    ledger.charge(name, rounds, payload_words, payload_words)
    return rounds


def charge(ledger: RoundLedger, primitive: str, rounds: int) -> None:
    ledger.charge(primitive, rounds)


def run_parallel(ledger: RoundLedger, subs: list, name: str = "parallel") -> int:
    """Charge the maximum of independent sub-ledgers run side by side.

    The instances share each link, so the sum of their bandwidths must fit
    within quota_c times the parent bandwidth.
    """
    if not subs:
        return 0
    need = sum(s.bandwidth_B for s in subs)
    if need > ledger.quota_c * ledger.bandwidth_B * (1 + 1e-9):
        raise QuotaExceeded(f"{name}: {len(subs)} instances need bandwidth {need:g}, "
                            f"limit {ledger.quota_c * ledger.bandwidth_B:g}")
    rounds = max(s.total_rounds for s in subs)
    ms = max((e.max_sent for s in subs for e in s.entries), default=0)
    mr = max((e.max_received for s in subs for e in s.entries), default=0)
    ledger.charge(name, rounds, ms, mr,
                  children=[{"instance": i, "rounds": s.total_rounds, "entries": len(s.entries)}
                            for i, s in enumerate(subs)])
    return rounds


def absorb(ledger: RoundLedger, sub: RoundLedger, prefix: str) -> None:
    """Append a simulated sub-run's entries one-for-one (sequential composition)."""
    for e in sub.entries:
        stage = f"{ledger.current_stage}/{e.stage}".strip("/") if e.stage else ledger.current_stage
        ledger.entries.append(LedgerEntry(f"{prefix}.{e.primitive}", e.rounds, e.max_sent,
                                          e.max_received, e.quota, stage, e.children))

"""Feedback loop that turns a family of selection functions into bits.

``build`` runs the general (cutoff) construction, ``build_finite`` the
simpler parity construction over all caring indices of a finite family,
and ``stream`` yields the general construction one stage at a time.
"""

from __future__ import annotations

import enum
from array import array
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import ActiveSet, CountLedger, StageRecord, ThresholdRule
from .selection import Always, Family, PrefixState

__all__ = [
    "TraceRetention",
    "RunConfig",
    "Trace",
    "BuildResult",
    "Engine",
    "build",
    "build_finite",
    "stream",
]


class TraceRetention(enum.Enum):
    NONE = "none"
    FULL = "full"


@dataclass
class RunConfig:
    family: Family
    length: int
    rule: ThresholdRule
    trace_retention: TraceRetention = TraceRetention.NONE

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"length must be >= 0, got {self.length}")
        if not isinstance(self.family.spec(1), Always):
            raise ValueError("f1 must be always()")


class Trace:
    """Columnar per-stage record of a run.

    Active sets are interned: ``set_ids[n-1]`` indexes ``sets``.  Use
    ``trace[n]`` (1-based) or iteration to get :class:`StageRecord` views.
    """

    def __init__(self, bits, cutoffs, witnesses, set_ids, sets):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.cutoffs = np.asarray(cutoffs, dtype=np.int64)
        self.witnesses = np.asarray(witnesses, dtype=np.int64)
        self.set_ids = np.asarray(set_ids, dtype=np.int64)
        self.sets: list[ActiveSet] = list(sets)

    @classmethod
    def from_records(cls, records) -> "Trace":
        ids: dict[ActiveSet, int] = {}
        sets, bits, cut, wit, sid = [], [], [], [], []
        for r in records:
            k = ids.get(r.active)
            if k is None:
                k = ids[r.active] = len(sets)
                sets.append(r.active)
            bits.append(r.bit)
            cut.append(r.cutoff)
            wit.append(r.witness)
            sid.append(k)
        return cls(bits, cut, wit, sid, sets)

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, n: int) -> StageRecord:
        if not 1 <= n <= len(self):
            raise IndexError(n)
        k = n - 1
        return StageRecord(n, int(self.cutoffs[k]), self.sets[self.set_ids[k]],
                           int(self.witnesses[k]), int(self.bits[k]))

    def __iter__(self) -> Iterator[StageRecord]:
        for n in range(1, len(self) + 1):
            yield self[n]

    def active_mask(self, ell: int) -> np.ndarray:
        """Boolean per stage: is ``ell`` in A*(n)?"""
        member = np.fromiter((ell in s for s in self.sets), dtype=bool, count=len(self.sets))
        return member[self.set_ids] if len(self) else np.zeros(0, dtype=bool)


@dataclass
class BuildResult:
    bits: np.ndarray
    trace: Trace | None = None

    def text(self) -> str:
        return self.bits.astype(np.uint8).tobytes().translate(bytes.maketrans(b"\x00\x01", b"01")).decode()


class Engine:
    """Incremental state of the general construction."""

    def __init__(self, family: Family, rule: ThresholdRule):
        self.family = family
        self.rule = rule
        self.prefix = PrefixState()
        self.counts = CountLedger()
        self.parity: dict[ActiveSet, int] = {}
        self.stage = 0
        self.size = float("inf") if family.tail is not None else len(family)

    def step(self) -> StageRecord:
        family, state, ledger, rule = self.family, self.prefix, self.counts, self.rule
        size = self.size
        memo: dict[int, bool] = {}

        def cares(j: int) -> bool:
            v = memo.get(j)
            if v is None:
                # a finite family has no member with index > size
                v = memo[j] = j <= size and family.cares_on(j, state)
            return v

        if not cares(1):
            raise ValueError("f1 must care about every prefix")
        # cutoff search; only indices <= the returned level are queried
        i = ledger.floor
        while True:
            lst = ledger.open_at(i, rule)
            if lst:
                if lst[0] == 1:
                    witness = 1
                    break
                witness = next((j for j in lst if cares(j)), 0)
                if witness:
                    break
            i += 1
        active = tuple(j for j in range(1, i + 1) if cares(j))
        prior = self.parity.get(active, 0)
        self.parity[active] = prior + 1
        ledger.add(active, i, rule)
        bit = prior & 1
        state.push(bit)
        self.stage += 1
        return StageRecord(self.stage, i, active, witness, bit)


def stream(config: RunConfig) -> Iterator[tuple[int, StageRecord]]:
    """Yield ``(bit, record)`` for stages 1..length (forever if length is None)."""
    eng = Engine(config.family, config.rule)
    n = config.length
    while n is None or eng.stage < n:
        rec = eng.step()
        yield rec.bit, rec


def build(config: RunConfig) -> BuildResult:
    """Construct q(1..N).  With FULL retention also return the stage trace."""
    keep = config.trace_retention is TraceRetention.FULL
    bits = array("B")
    cut, wit, sid = array("l"), array("l"), array("l")
    ids: dict[ActiveSet, int] = {}
    if config.family.probe is not None:
        # instrumented families go through the reference stepper
        eng = Engine(config.family, config.rule)
        for _ in range(config.length):
            rec = eng.step()
            bits.append(rec.bit)
            if keep:
                cut.append(rec.cutoff)
                wit.append(rec.witness)
                sid.append(ids.setdefault(rec.active, len(ids)))
    else:
        _fast_run(config, bits, cut, wit, sid, ids, keep)
    out = np.frombuffer(bits, dtype=np.uint8).copy() if bits else np.zeros(0, dtype=np.uint8)
    trace = Trace(out, cut, wit, sid, list(ids)) if keep else None
    return BuildResult(out, trace)


def _fast_run(config, bits, cut, wit, sid, ids, keep):
    # Same stage rule as Engine.step, inlined: per-stage decisions are
    # cached in `dec` (index -> bool), filled lazily up to the cutoff.
    family, rule = config.family, config.rule
    size = len(family) if family.is_finite else None
    preds = family._preds
    state = PrefixState()
    push = state.push
    ledger = CountLedger()
    open_at, add = ledger.open_at, ledger.add
    parity: dict[ActiveSet, int] = {}
    for _ in range(config.length):
        dec = [None, True]
        i = ledger.floor
        witness = 0
        while True:
            lst = open_at(i, rule)
            if lst:
                if lst[0] == 1:
                    witness = 1
                    break
                for j in lst:
                    while len(dec) <= j:
                        k = len(dec)
                        if size is not None and k > size:
                            dec.append(False)
                        else:
                            if k > len(preds):
                                family.predicate(k)
                            dec.append(preds[k - 1](state))
                    if dec[j]:
                        witness = j
                        break
                if witness:
                    break
            i += 1
        while len(dec) <= i:
            k = len(dec)
            if size is not None and k > size:
                dec.append(False)
            else:
                if k > len(preds):
                    family.predicate(k)
                dec.append(preds[k - 1](state))
        active = tuple([j for j in range(1, i + 1) if dec[j]])
        prior = parity.get(active, 0)
        parity[active] = prior + 1
        add(active, i, rule)
        bit = prior & 1
        push(bit)
        bits.append(bit)
        if keep:
            cut.append(i)
            wit.append(witness)
            k = ids.get(active)
            if k is None:
                k = ids[active] = len(ids)
            sid.append(k)


def build_finite(family: Family, length: int) -> np.ndarray:
    """Parity construction over the full caring set C(n) of a finite family."""
    if not family.is_finite:
        raise ValueError("finite construction requires a finite family")
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    if not isinstance(family.spec(1), Always):
        raise ValueError("f1 must be always()")
    k = len(family)
    state = PrefixState()
    seen: dict[tuple, int] = {}
    bits = array("B")
    for _ in range(length):
        caring = tuple(j for j in range(1, k + 1) if family.cares_on(j, state))
        prior = seen.get(caring, 0)
        seen[caring] = prior + 1
        bit = prior & 1
        state.push(bit)
        bits.append(bit)
    return np.frombuffer(bits, dtype=np.uint8).copy() if bits else np.zeros(0, dtype=np.uint8)

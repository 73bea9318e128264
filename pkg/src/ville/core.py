"""Stage rule of the combinatorial construction.

At stage n the caring indices A(n) are cut down to the active set
A*(n) = {j in A(n) : j <= I(n)}, where the cutoff I(n) is the least level i
at which some caring j <= i has been active at level i at most capacity(i)
times so far.  The emitted bit is the number of earlier stages with the
same active set, mod 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

__all__ = [
    "ThresholdError",
    "ThresholdRule",
    "ActiveSet",
    "CountLedger",
    "ParityLedger",
    "StageRecord",
    "ConstructionState",
    "compute_cutoff",
    "compute_active_set",
    "parity_bit",
    "apply_stage",
]

ActiveSet = tuple  # strictly increasing tuple of indices, always starting with 1
Cares = Callable[[int], bool]


class ThresholdError(ValueError):
    """Invalid threshold rule, or a table capacity that fails capacity(i) > 2**i."""


class ThresholdRule:
    """Per-level occurrence budget: ``r**i`` or an explicit table ``h(i)``."""

    def __init__(self, base: int | None = None, table: Sequence[int] | None = None):
        if (base is None) == (table is None):
            raise ThresholdError("give exactly one of base or table")
        if base is not None:
            if isinstance(base, bool) or not isinstance(base, int):
                raise ThresholdError(f"base must be an integer, got {base!r}")
            if base <= 2:
                raise ThresholdError(
                    f"exponential base r={base} is invalid: the construction requires r > 2")
            self.base = base
            self.table = None
        else:
            table = tuple(int(h) for h in table)
            if not table:
                raise ThresholdError("capacity table is empty")
            for i, h in enumerate(table, 1):
                if h < 1:
                    raise ThresholdError(f"capacity h({i}) = {h} must be >= 1")
                if i > 1 and h <= table[i - 2]:
                    raise ThresholdError(
                        f"capacities must be strictly increasing: h({i}) = {h} <= h({i - 1})")
            self.base = None
            self.table = table
        self._cache: dict[int, int] = {}

    @classmethod
    def exp(cls, base: int) -> "ThresholdRule":
        return cls(base=base)

    @classmethod
    def from_table(cls, table: Sequence[int]) -> "ThresholdRule":
        return cls(table=table)

    def capacity(self, i: int) -> int:
        """capacity(i), checked against capacity(i) > 2**i on first use."""
        c = self._cache.get(i)
        if c is not None:
            return c
        if i < 1:
            raise ThresholdError(f"levels start at 1, got {i}")
        if self.base is not None:
            c = self.base ** i
        else:
            if i > len(self.table):
                raise ThresholdError(
                    f"capacity table exhausted: level {i} needed, table has {len(self.table)}")
            c = self.table[i - 1]
            if c <= 2 ** i:
                raise ThresholdError(
                    f"capacity h({i}) = {c} must exceed 2**{i} = {2 ** i}")
        self._cache[i] = c
        return c

    def exponent(self) -> float | None:
        """Fluctuation exponent ln 2 / ln r for exponential rules."""
        if self.base is None:
            return None
        from math import log
        return log(2) / log(self.base)

    def spec_string(self) -> str:
        return f"exp:{self.base}" if self.base is not None else "table"

    def __repr__(self):
        if self.base is not None:
            return f"ThresholdRule.exp({self.base})"
        return f"ThresholdRule.from_table({list(self.table)!r})"


class CountLedger:
    """Sparse counts (j, i) -> #{m : j in A*(m) and I(m) = i}.

    Besides the counts, each visited level keeps the indices j <= i that are
    still under capacity there, and ``floor`` is the lowest level that has
    any.  A ledger must be used with a single threshold rule.
    """

    def __init__(self, counts: dict[tuple[int, int], int] | None = None):
        self.counts: dict[tuple[int, int], int] = {}
        self._open: dict[int, list[int]] = {}
        self.floor = 1
        if counts:
            for key, c in counts.items():
                if c < 0:
                    raise ValueError(f"negative count for {key}")
                if c:
                    self.counts[key] = c

    def count(self, j: int, i: int) -> int:
        return self.counts.get((j, i), 0)

    def open_at(self, i: int, rule: ThresholdRule) -> list[int]:
        """Indices j <= i with count(j, i) <= capacity(i), ascending."""
        lst = self._open.get(i)
        if lst is None:
            cap = rule.capacity(i)
            get = self.counts.get
            lst = [j for j in range(1, i + 1) if get((j, i), 0) <= cap]
            self._open[i] = lst
        return lst

    def add(self, active: ActiveSet, i: int, rule: ThresholdRule) -> None:
        cap = rule.capacity(i)
        counts = self.counts
        lst = None
        for j in active:
            c = counts.get((j, i), 0) + 1
            counts[(j, i)] = c
            if c == cap + 1:
                if lst is None:
                    lst = self.open_at(i, rule)
                lst.remove(j)
        if lst is not None and not lst and i == self.floor:
            while not self.open_at(self.floor, rule):
                self.floor += 1

    def level_totals(self) -> dict[int, int]:
        """#{m : I(m) = i} per level (index 1 is in every active set)."""
        return {i: c for (j, i), c in self.counts.items() if j == 1}


class ParityLedger(dict):
    """Active set -> number of earlier stages with that exact set."""

    def seen(self, active: ActiveSet) -> int:
        return self.get(active, 0)


@dataclass(frozen=True)
class StageRecord:
    n: int
    cutoff: int
    active: ActiveSet
    witness: int
    bit: int


def compute_cutoff(ledger: CountLedger, cares: Cares, rule: ThresholdRule) -> tuple[int, int]:
    """Least level i with a caring j <= i still under capacity there.

    Returns ``(cutoff, witness)`` with the least such j as witness.  Only
    indices j <= cutoff are passed to ``cares``.
    """
    if not cares(1):
        raise ValueError("index 1 must care about every prefix")
    i = ledger.floor
    while True:
        lst = ledger.open_at(i, rule)
        if lst:
            if lst[0] == 1:
                return i, 1
            for j in lst:
                if cares(j):
                    return i, j
        i += 1


def compute_active_set(cares: Cares, cutoff: int) -> ActiveSet:
    active = tuple(j for j in range(1, cutoff + 1) if cares(j))
    if not active or active[0] != 1:
        raise ValueError("index 1 must care about every prefix")
    return active


def parity_bit(parity: ParityLedger, active: ActiveSet) -> int:
    return parity.get(active, 0) & 1


class ConstructionState:
    """Ledgers plus stage counter for one run (single owner, serial)."""

    def __init__(self, rule: ThresholdRule):
        self.rule = rule
        self.counts = CountLedger()
        self.parity = ParityLedger()
        self.stage = 0

    def apply(self, cares: Cares) -> StageRecord:
        return apply_stage(self, cares)


def apply_stage(state: ConstructionState, cares: Cares) -> StageRecord:
    """Run one stage: cutoff, active set, bit; then update both ledgers."""
    memo: dict[int, bool] = {}

    def cached(j):
        v = memo.get(j)
        if v is None:
            v = memo[j] = bool(cares(j))
        return v

    cutoff, witness = compute_cutoff(state.counts, cached, state.rule)
    active = compute_active_set(cached, cutoff)
    prior = state.parity.get(active, 0)
    state.parity[active] = prior + 1
    state.counts.add(active, cutoff, state.rule)
    state.stage += 1
    return StageRecord(state.stage, cutoff, active, witness, prior & 1)

"""Statistics and verifiers over finished runs.

Fluctuations are carried as ``two_delta = 2*S - m`` (an integer) so every
bound check stays in exact integer arithmetic.  Checks return a
:class:`CheckResult`; they never raise on a violated property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import StageRecord, ThresholdRule
from .driver import Trace
from .selection import Family, care_mask

__all__ = [
    "PASS", "FAIL", "INCONCLUSIVE", "INFO",
    "CheckResult",
    "SelectionTrace",
    "Block",
    "ZetaBlocks",
    "ConvergenceReport",
    "FluctuationStats",
    "running_sums",
    "select",
    "verify_half_bound",
    "verify_alternation",
    "verify_cutoff_budget",
    "verify_finite_bound",
    "verify_selection_consistency",
    "zeta_blocks",
    "verify_block_facts",
    "deficit_bounds",
    "convergence_report",
    "fluctuation_report",
    "lil_curve",
    "dyadic_checkpoints",
]

PASS, FAIL, INCONCLUSIVE, INFO = "pass", "fail", "inconclusive", "info"


@dataclass
class CheckResult:
    name: str
    status: str
    message: str = ""
    details: dict = field(default_factory=dict)
    hard: bool = True

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"{self.name:<14} {self.status.upper():<13} {self.message}"


def _bits(q) -> np.ndarray:
    if isinstance(q, str):
        return np.frombuffer(q.encode(), dtype=np.uint8) - ord("0")
    return np.asarray(q, dtype=np.uint8)


def running_sums(q) -> tuple[np.ndarray, np.ndarray]:
    """``S[n-1] = S(q[n])`` for n = 1..N+1, and ``two_delta[m] = 2*S - m``."""
    b = _bits(q)
    S = np.zeros(len(b) + 1, dtype=np.int64)
    np.cumsum(b, out=S[1:])
    return S, 2 * S - np.arange(len(b) + 1)


def dyadic_checkpoints(m_max: int, start: int = 1) -> list[int]:
    out, m = [], 1
    while m <= m_max:
        if m >= start:
            out.append(m)
        m *= 2
    return out


@dataclass
class SelectionTrace:
    """Subsequence of q selected by f_ell, with running sum and fluctuation."""

    ell: int
    length: int
    positions: np.ndarray  # 1-based stages n_1 < n_2 < ...
    bits: np.ndarray

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def sums(self) -> np.ndarray:
        """S_ell(m) for m = 0..count."""
        S = np.zeros(self.count + 1, dtype=np.int64)
        np.cumsum(self.bits, out=S[1:])
        return S

    @property
    def two_delta(self) -> np.ndarray:
        """2*delta_ell(m) = 2*S_ell(m) - m for m = 0..count."""
        return 2 * self.sums - np.arange(self.count + 1)

    @property
    def finite_care(self) -> bool:
        # heuristic: nothing selected in the second half of the run
        return self.count == 0 or 2 * int(self.positions[-1]) <= self.length


def select(q, family: Family, ell: int, length: int | None = None) -> SelectionTrace:
    """Re-evaluate f_ell on every prefix of q and collect what it selects."""
    b = _bits(q)
    if length is not None:
        b = b[:length]
    mask = care_mask(family.spec(ell), b)
    pos = np.flatnonzero(mask) + 1
    return SelectionTrace(ell, len(b), pos, b[pos - 1])


def verify_half_bound(q) -> CheckResult:
    """Every prefix q[n] has no more 1s than 0s (so S(q[n])/n <= 1/2)."""
    S, _ = running_sums(q)
    k = np.arange(len(S))
    bad = np.flatnonzero(2 * S > k)
    if len(bad):
        n = int(bad[0]) + 1
        return CheckResult("half", FAIL, f"q[{n}] has more ones than zeros",
                           {"first_violation": n, "ones": int(S[bad[0]])})
    return CheckResult("half", PASS, f"#1 <= #0 in every prefix, n <= {len(S)}",
                       {"min_two_delta": int((2 * S - k).min())})


def _as_trace(trace) -> Trace:
    if isinstance(trace, Trace):
        return trace
    return Trace.from_records(list(trace))


def verify_alternation(trace: Trace | Iterable[StageRecord]) -> CheckResult:
    """Bits emitted at successive occurrences of each active set are 0,1,0,1,..."""
    tr = _as_trace(trace)
    if len(tr) == 0:
        return CheckResult("alternation", PASS, "empty trace")
    order = np.argsort(tr.set_ids, kind="stable")
    ids = tr.set_ids[order]
    starts = np.r_[0, np.flatnonzero(np.diff(ids)) + 1]
    group_start = np.repeat(starts, np.diff(np.r_[starts, len(ids)]))
    rank = np.arange(len(ids)) - group_start
    bad = np.flatnonzero(tr.bits[order] != rank % 2)
    if len(bad):
        n = int(order[bad].min()) + 1
        return CheckResult("alternation", FAIL, f"parity broken at stage {n}",
                           {"first_violation": n, "active": list(tr.sets[tr.set_ids[n - 1]])})
    return CheckResult("alternation", PASS, f"{len(tr.sets)} distinct active sets alternate",
                       {"distinct_sets": len(tr.sets)})


def verify_cutoff_budget(trace, rule: ThresholdRule) -> CheckResult:
    """#{n : I(n) = i} <= i * (capacity(i) + 1) for every observed level i."""
    cut = trace.cutoffs if isinstance(trace, Trace) else (
        np.asarray([r.cutoff for r in trace]) if not isinstance(trace, np.ndarray) else trace)
    levels, counts = np.unique(np.asarray(cut, dtype=np.int64), return_counts=True)
    per = {}
    failed = []
    for i, c in zip(levels.tolist(), counts.tolist()):
        budget = i * (rule.capacity(i) + 1)
        per[i] = {"count": c, "budget": budget}
        if c > budget:
            failed.append(i)
    if failed:
        return CheckResult("budget", FAIL, f"levels over budget: {failed}", {"levels": per})
    return CheckResult("budget", PASS, f"{len(per)} levels within i*(capacity(i)+1)",
                       {"levels": per})


def verify_finite_bound(q, family: Family) -> CheckResult:
    """0 <= m/2 - S_f(m) <= 2**k for every f in a k-element family and every m."""
    if not family.is_finite:
        return CheckResult("finite-bound", FAIL, "check requires a finite family")
    k = len(family)
    b = _bits(q)
    details = {}
    for ell in range(1, k + 1):
        tr = select(b, family, ell)
        deficit = -tr.two_delta  # = 2*(m/2 - S)
        lo, hi = int(deficit.min()), int(deficit.max())
        details[ell] = {"selected": tr.count, "max_deficit_x2": hi}
        if lo < 0 or hi > 2 ** (k + 1):
            m = int(np.flatnonzero((deficit < 0) | (deficit > 2 ** (k + 1)))[0])
            return CheckResult("finite-bound", FAIL,
                               f"f{ell} violates the bound at m = {m}", details)
    return CheckResult("finite-bound", PASS, f"0 <= m/2 - S_f <= 2^{k} for all f", details)


def verify_selection_consistency(trace: Trace, family: Family, ell: int) -> CheckResult:
    """Caring stages with cutoff >= ell are exactly the stages with ell in A*(n)."""
    tr = select(trace.bits, family, ell)
    from_family = np.zeros(len(trace), dtype=bool)
    from_family[tr.positions - 1] = True
    from_family &= trace.cutoffs >= ell
    from_trace = trace.active_mask(ell)
    bad = np.flatnonzero(from_family != from_trace)
    if len(bad):
        return CheckResult("consistency", FAIL, f"f{ell}: mismatch at stage {int(bad[0]) + 1}")
    return CheckResult("consistency", PASS, f"f{ell}: {int(from_trace.sum())} active stages agree")


@dataclass
class Block:
    level: int
    start: int  # offset into the selected subsequence (0-based)
    end: int
    occurrences: int  # entries equal to level
    distinct_sets: int
    max_level: int
    n0: int
    n1: int
    complete: bool

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass
class ZetaBlocks:
    """Cutoffs along f_ell's selected stages, cut into blocks alpha(k), alpha(k+1), ...

    ``level`` is the least k >= ell such that every entry from the first
    occurrence of k onward is >= ell; ``head`` is that first occurrence
    (the number of selected stages before the tail).  Both are computed
    from a finite run and may move if the run is extended.
    """

    ell: int
    zeta: np.ndarray
    set_ids: np.ndarray
    bits: np.ndarray
    level: int | None = None
    head: int | None = None
    blocks: list[Block] = field(default_factory=list)
    provisional: bool = True

    @classmethod
    def from_arrays(cls, ell, zeta, set_ids, bits) -> "ZetaBlocks":
        zeta = np.asarray(zeta, dtype=np.int64)
        set_ids = np.asarray(set_ids, dtype=np.int64)
        bits = np.asarray(bits, dtype=np.uint8)
        zb = cls(ell, zeta, set_ids, bits)
        if len(zeta) == 0:
            return zb
        low = np.flatnonzero(zeta < ell)
        last_low = int(low[-1]) if len(low) else -1
        values, first = np.unique(zeta, return_index=True)
        cand = [(int(v), int(f)) for v, f in zip(values, first) if v >= ell and f > last_low]
        if not cand:
            return zb
        k, head = min(cand)
        zb.level, zb.head = k, head
        firsts = dict(zip(values.tolist(), first.tolist()))
        v, start = k, head
        while start < len(zeta):
            nxt = firsts.get(v + 1)
            if nxt is not None and nxt < start:
                break  # first occurrences out of order; verify_block_facts reports it
            end = nxt if nxt is not None else len(zeta)
            seg = slice(start, end)
            ones = int(bits[seg].sum())
            zb.blocks.append(Block(
                level=v, start=start, end=end,
                occurrences=int(np.count_nonzero(zeta[seg] == v)),
                distinct_sets=len(np.unique(set_ids[seg])),
                max_level=int(zeta[seg].max()),
                n0=(end - start) - ones, n1=ones,
                complete=nxt is not None))
            v, start = v + 1, end
        return zb

    @property
    def tail_length(self) -> int:
        return 0 if self.head is None else len(self.zeta) - self.head

    def R(self) -> np.ndarray:
        """N1(j) / (N0(j) + N1(j)) over the tail, j = 1..tail_length."""
        if self.head is None:
            return np.zeros(0)
        t = self.bits[self.head:].astype(np.int64)
        return np.cumsum(t) / np.arange(1, len(t) + 1)


def zeta_blocks(trace: Trace, sel: SelectionTrace) -> ZetaBlocks:
    idx = sel.positions - 1
    return ZetaBlocks.from_arrays(sel.ell, trace.cutoffs[idx], trace.set_ids[idx],
                                  trace.bits[idx])


def verify_block_facts(zb: ZetaBlocks, rule: ThresholdRule) -> CheckResult:
    """Each completed block alpha(k) holds >= capacity(k) entries equal to k,
    no entry above k, and at most 2**k distinct active sets."""
    done = [b for b in zb.blocks if b.complete]
    if zb.level is None or not done:
        return CheckResult("blocks", INCONCLUSIVE, f"f{zb.ell}: no completed block",
                           {"ell": zb.ell})
    covered = sum(b.length for b in zb.blocks)
    if covered != zb.tail_length:
        return CheckResult("blocks", FAIL,
                           f"f{zb.ell}: cutoff values first appear out of order")
    rows = []
    for b in done:
        cap = rule.capacity(b.level)
        rows.append({"level": b.level, "length": b.length, "occurrences": b.occurrences,
                     "capacity": cap, "distinct_sets": b.distinct_sets})
        if b.occurrences < cap or b.max_level > b.level or b.distinct_sets > 2 ** b.level:
            return CheckResult("blocks", FAIL, f"f{zb.ell}: block alpha({b.level}) violates "
                               f"occurrences >= {cap} / sets <= {2 ** b.level}",
                               {"ell": zb.ell, "blocks": rows})
    return CheckResult("blocks", PASS,
                       f"f{zb.ell}: {len(done)} completed blocks from level {zb.level}",
                       {"ell": zb.ell, "level": zb.level, "head": zb.head, "blocks": rows})


def deficit_bounds(zb: ZetaBlocks) -> CheckResult:
    """Along the tail: N0 <= N1 + sum of 2**(k+i) over blocks so far, and N1 <= N0 + p."""
    if zb.level is None or zb.tail_length == 0:
        return CheckResult("deficit", INCONCLUSIVE, f"f{zb.ell}: no stabilized tail",
                           {"ell": zb.ell})
    t = zb.bits[zb.head:].astype(np.int64)
    n1 = np.cumsum(t)
    n0 = np.arange(1, len(t) + 1) - n1
    p = zb.head
    # block offset of each tail element; blocks cover the tail when well formed
    offs = np.zeros(len(t), dtype=np.int64)
    for m, b in enumerate(zb.blocks):
        offs[b.start - p:b.end - p] = m
    if zb.blocks and zb.blocks[-1].end - p < len(t):
        offs[zb.blocks[-1].end - p:] = len(zb.blocks)
    # sum_{i=0}^{m} 2^(k+i) = 2^k (2^(m+1) - 1)
    zero_budget = (2 ** zb.level) * (2 ** (offs + 1) - 1)
    bad0 = np.flatnonzero(n0 > n1 + zero_budget)
    bad1 = np.flatnonzero(n1 > n0 + p)
    details = {"ell": zb.ell, "level": zb.level, "head": p,
               "max_excess_zeros": int((n0 - n1).max()),
               "max_excess_ones": int((n1 - n0).max())}
    if len(bad0):
        j = int(bad0[0]) + 1
        return CheckResult("deficit", FAIL, f"f{zb.ell}: too many unmatched zeros at j = {j}",
                           details)
    if len(bad1):
        j = int(bad1[0]) + 1
        return CheckResult("deficit", FAIL, f"f{zb.ell}: N1 > N0 + p at j = {j}", details)
    return CheckResult("deficit", PASS, f"f{zb.ell}: both deficit bounds hold (p = {p})",
                       details)


@dataclass
class ConvergenceReport:
    ell: int
    checkpoints: list[int]
    deviations: list[float]  # |S(m)/m - 1/2| at each checkpoint
    envelope: list[float]  # max deviation over m in [c, 2c)
    exempt: bool

    @property
    def final_deviation(self) -> float | None:
        return self.deviations[-1] if self.deviations else None

    def envelope_ok(self, start: int = 2 ** 10, factor: float = 2.0) -> bool:
        """Window maxima never grow by more than ``factor`` from ``start`` on."""
        env = [e for c, e in zip(self.checkpoints, self.envelope) if c >= start]
        return all(b <= factor * a for a, b in zip(env, env[1:]))


def convergence_report(sel: SelectionTrace) -> ConvergenceReport:
    two_delta = sel.two_delta
    m = np.arange(len(two_delta))
    dev = np.zeros(len(two_delta))
    dev[1:] = np.abs(two_delta[1:]) / (2.0 * m[1:])
    cps = dyadic_checkpoints(sel.count)
    env = [float(dev[c:min(2 * c, sel.count + 1)].max()) for c in cps]
    return ConvergenceReport(sel.ell, cps, [float(dev[c]) for c in cps], env, sel.finite_care)


@dataclass
class FluctuationStats:
    ell: int
    count: int
    max_two_delta: int
    argmax: int  # selected-prefix length m
    min_two_delta: int
    argmin: int
    checkpoints: list[int]
    envelope: list[int]  # -min_{m' <= m} 2*delta at each checkpoint
    exponent: float | None  # least-squares log-log slope of the envelope
    constant: float | None  # exp(intercept) of that fit, in delta units
    target_exponent: float | None
    sup_constant: float | None  # max_m -delta(m) / m**target

    @property
    def max_delta(self) -> float:
        return self.max_two_delta / 2

    @property
    def min_delta(self) -> float:
        return self.min_two_delta / 2


def fluctuation_report(sel: SelectionTrace, rule: ThresholdRule | None = None,
                       fit_from: int = 1) -> FluctuationStats:
    """Extrema of delta_ell and the growth exponent of its negative envelope."""
    td = sel.two_delta
    running_min = np.minimum.accumulate(td)
    cps = dyadic_checkpoints(sel.count)
    env = [int(-running_min[c]) for c in cps]
    xs = [c for c, e in zip(cps, env) if e > 0 and c >= fit_from]
    ys = [e / 2 for c, e in zip(cps, env) if e > 0 and c >= fit_from]
    exponent = constant = None
    if len(xs) >= 3:
        slope, icpt = np.polyfit(np.log(xs), np.log(ys), 1)
        exponent, constant = float(slope), float(math.exp(icpt))
    target = rule.exponent() if rule is not None else None
    sup_c = None
    if target is not None and sel.count:
        m = np.arange(1, sel.count + 1)
        sup_c = float(np.max(-td[1:] / 2 / m ** target).clip(min=0))
    return FluctuationStats(
        ell=sel.ell, count=sel.count,
        max_two_delta=int(td.max()), argmax=int(td.argmax()),
        min_two_delta=int(td.min()), argmin=int(td.argmin()),
        checkpoints=cps, envelope=env, exponent=exponent, constant=constant,
        target_exponent=target, sup_constant=sup_c)


def lil_curve(n, eps: float = 0.0):
    """(1 - eps) * sqrt(n ln ln n) / sqrt(2); the iterated-logarithm scale."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 3):
        raise ValueError("lil_curve needs n >= 3 so that ln ln n > 0")
    if not 0 <= eps <= 1:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    out = (1 - eps) * np.sqrt(n_arr * np.log(np.log(n_arr))) / math.sqrt(2)
    return float(out) if out.ndim == 0 else out

"""Selection functions, a small built-in catalog, and countable families.

A selection function maps a finite bit string (the prefix seen so far) to
``Decision.CARE`` or ``Decision.DONT_CARE``.  Families are 1-indexed and
always start with the always-care function.

Prefixes may be given as ``str`` of ``'0'``/``'1'`` characters or as any
sequence of 0/1 integers.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

__all__ = [
    "Decision",
    "SelectionSpec",
    "Always",
    "LastBit",
    "ContainsOne",
    "Suffix",
    "Periodic",
    "ZerosRun",
    "MajorityOnes",
    "evaluate",
    "care_mask",
    "PrefixState",
    "Family",
    "UndefinedIndexError",
    "FamilyConfigError",
    "suffix_binary",
    "tail_spec",
    "parse_spec",
    "parse_family",
    "load_family",
    "BUILTIN_FAMILIES",
    "builtin_family",
    "resolve_family",
    "CATALOG",
]

Prefix = Union[str, Sequence[int]]


class Decision(enum.Enum):
    CARE = "care"
    DONT_CARE = "don't care"

    @classmethod
    def of(cls, flag: bool) -> "Decision":
        return cls.CARE if flag else cls.DONT_CARE

    def __bool__(self) -> bool:
        return self is Decision.CARE


class UndefinedIndexError(IndexError):
    """Raised when a finite family is queried beyond its last index."""


class FamilyConfigError(ValueError):
    """Bad family description (config file line, unknown name, bad args)."""


def _as_str(prefix: Prefix) -> str:
    if isinstance(prefix, str):
        if prefix.strip("01"):
            raise ValueError(f"prefix must contain only '0'/'1': {prefix!r}")
        return prefix
    out = []
    for b in prefix:
        b = int(b)
        if b not in (0, 1):
            raise ValueError(f"prefix bits must be 0 or 1, got {b}")
        out.append("1" if b else "0")
    return "".join(out)


class PrefixState:
    """Incrementally maintained view of the prefix q[n] used by the driver.

    Keeps the bits plus the counters the catalog needs so that every
    predicate runs in O(1) (suffix checks in O(len(pattern))).
    """

    __slots__ = ("bits", "n", "ones", "zeros_run")

    def __init__(self) -> None:
        self.bits = bytearray()
        self.n = 0
        self.ones = 0
        self.zeros_run = 0

    def push(self, bit: int) -> None:
        self.bits.append(bit)
        self.n += 1
        if bit:
            self.ones += 1
            self.zeros_run = 0
        else:
            self.zeros_run += 1

    @classmethod
    def from_prefix(cls, prefix: Prefix) -> "PrefixState":
        st = cls()
        for ch in _as_str(prefix):
            st.push(1 if ch == "1" else 0)
        return st


class SelectionSpec:
    """Base class of catalog entries.  Subclasses are frozen dataclasses."""

    name: str = ""

    def cares(self, prefix: str) -> bool:
        """Reference semantics on a ``'0'/'1'`` string."""
        raise NotImplementedError

    def predicate(self) -> Callable[[PrefixState], bool]:
        """Fast predicate over a :class:`PrefixState`."""
        raise NotImplementedError

    def mask(self, bits: np.ndarray) -> np.ndarray:
        """Vectorised care mask: entry ``n-1`` is the decision on ``q[n]``."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


def _prefix_ones(bits: np.ndarray) -> np.ndarray:
    # ones[n-1] = number of ones among the first n-1 bits
    c = np.zeros(len(bits), dtype=np.int64)
    if len(bits) > 1:
        np.cumsum(bits[:-1], out=c[1:])
    return c


@dataclass(frozen=True)
class Always(SelectionSpec):
    name = "always"

    def cares(self, prefix):
        return True

    def predicate(self):
        return lambda s: True

    def mask(self, bits):
        return np.ones(len(bits), dtype=bool)

    def describe(self):
        return "always()"


@dataclass(frozen=True)
class LastBit(SelectionSpec):
    bit: int
    name = "last_bit"

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise FamilyConfigError(f"last_bit expects 0 or 1, got {self.bit!r}")

    def cares(self, prefix):
        return bool(prefix) and prefix[-1] == str(self.bit)

    def predicate(self):
        b = self.bit
        return lambda s: s.n > 0 and s.bits[-1] == b

    def mask(self, bits):
        m = np.zeros(len(bits), dtype=bool)
        m[1:] = bits[:-1] == self.bit
        return m

    def describe(self):
        return f"last_bit({self.bit})"


@dataclass(frozen=True)
class ContainsOne(SelectionSpec):
    name = "contains_one"

    def cares(self, prefix):
        return "1" in prefix

    def predicate(self):
        return lambda s: s.ones > 0

    def mask(self, bits):
        return _prefix_ones(bits) > 0

    def describe(self):
        return "contains_one()"


@dataclass(frozen=True)
class Suffix(SelectionSpec):
    pattern: str
    name = "suffix"

    def __post_init__(self):
        if not self.pattern or self.pattern.strip("01"):
            raise FamilyConfigError(
                f"suffix pattern must be a nonempty bit string, got {self.pattern!r}")

    def cares(self, prefix):
        return prefix.endswith(self.pattern)

    def predicate(self):
        pat = bytes(1 if c == "1" else 0 for c in self.pattern)
        k = len(pat)
        return lambda s: s.n >= k and s.bits[-k:] == pat

    def mask(self, bits):
        k = len(self.pattern)
        m = np.zeros(len(bits), dtype=bool)
        if len(bits) <= k:
            return m
        ok = np.ones(len(bits) - k, dtype=bool)
        for t, c in enumerate(self.pattern):
            # position p = n-1 needs bits[p-k+t] == c for p in [k, len)
            ok &= bits[t:len(bits) - k + t] == int(c)
        m[k:] = ok
        return m

    def describe(self):
        return f"suffix({self.pattern})"


@dataclass(frozen=True)
class Periodic(SelectionSpec):
    modulus: int
    residue: int
    name = "periodic"

    def __post_init__(self):
        if self.modulus < 1 or not 0 <= self.residue < self.modulus:
            raise FamilyConfigError(
                f"periodic needs modulus >= 1 and 0 <= residue < modulus, "
                f"got ({self.modulus}, {self.residue})")

    def cares(self, prefix):
        return len(prefix) % self.modulus == self.residue

    def predicate(self):
        k, r = self.modulus, self.residue
        return lambda s: s.n % k == r

    def mask(self, bits):
        return np.arange(len(bits)) % self.modulus == self.residue

    def describe(self):
        return f"periodic({self.modulus},{self.residue})"


@dataclass(frozen=True)
class ZerosRun(SelectionSpec):
    k: int
    name = "zeros_run"

    def __post_init__(self):
        if self.k < 1:
            raise FamilyConfigError(f"zeros_run needs k >= 1, got {self.k}")

    def cares(self, prefix):
        return len(prefix) >= self.k and prefix.endswith("0" * self.k)

    def predicate(self):
        k = self.k
        return lambda s: s.zeros_run >= k

    def mask(self, bits):
        n = len(bits)
        m = np.zeros(n, dtype=bool)
        if n <= self.k:
            return m
        z = (bits == 0).astype(np.int64)
        win = np.convolve(z, np.ones(self.k, dtype=np.int64), mode="valid")
        # win[t] = zeros among bits[t:t+k]; position p = t + k
        m[self.k:] = win[: n - self.k] == self.k
        return m

    def describe(self):
        return f"zeros_run({self.k})"


@dataclass(frozen=True)
class MajorityOnes(SelectionSpec):
    name = "majority_ones"

    def cares(self, prefix):
        ones = prefix.count("1")
        return ones > len(prefix) - ones

    def predicate(self):
        return lambda s: 2 * s.ones > s.n

    def mask(self, bits):
        return 2 * _prefix_ones(bits) > np.arange(len(bits))

    def describe(self):
        return "majority_ones()"


CATALOG = [
    ("always", "always()", "cares about every prefix"),
    ("last_bit", "last_bit(b)", "cares iff the prefix is nonempty and ends in bit b"),
    ("contains_one", "contains_one()", "cares iff a 1 appears somewhere in the prefix"),
    ("suffix", "suffix(p)", "cares iff the prefix ends with the nonempty bit string p"),
    ("periodic", "periodic(k,r)", "cares iff the prefix length is congruent to r mod k"),
    ("zeros_run", "zeros_run(k)", "cares iff the prefix ends with at least k zeros"),
    ("majority_ones", "majority_ones()", "cares iff the prefix has more 1s than 0s"),
]


def evaluate(spec: SelectionSpec, prefix: Prefix) -> Decision:
    """Decision of ``spec`` on a finite prefix.  Pure."""
    return Decision.of(spec.cares(_as_str(prefix)))


def care_mask(spec: SelectionSpec, bits) -> np.ndarray:
    """Boolean array whose entry ``n-1`` says whether ``spec`` cares about q[n]."""
    return spec.mask(np.asarray(bits, dtype=np.uint8))


def suffix_binary(m: int) -> Suffix:
    """Tail generator: index m selects after the binary digits of m."""
    if m < 1:
        raise ValueError(f"index must be positive, got {m}")
    return Suffix(format(m, "b"))


tail_spec = suffix_binary

TAIL_GENERATORS = {"suffix_binary": suffix_binary}


class Family:
    """Ordered countable family f_1, f_2, ... of selection functions.

    ``explicit`` gives f_1..f_k; ``tail`` (if present) supplies f_m for
    every m > k and is called lazily, once per index.  ``probe``, when
    given, is called with the index on every decision query.
    """

    def __init__(self, explicit: Sequence[SelectionSpec],
                 tail: Callable[[int], SelectionSpec] | None = None,
                 name: str | None = None,
                 probe: Callable[[int], None] | None = None):
        explicit = tuple(explicit)
        if not explicit or not isinstance(explicit[0], Always):
            raise FamilyConfigError("f1 must be always()")
        self.explicit = explicit
        self.tail = tail
        self.name = name
        self.probe = probe
        self._specs: list[SelectionSpec] = list(explicit)
        self._preds: list[Callable[[PrefixState], bool]] = [s.predicate() for s in explicit]

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def __len__(self) -> int:
        if self.tail is not None:
            raise TypeError("infinite family has no length")
        return len(self.explicit)

    def _extend_to(self, index: int) -> None:
        if index < 1:
            raise UndefinedIndexError(f"family indices start at 1, got {index}")
        if index <= len(self._specs):
            return
        if self.tail is None:
            raise UndefinedIndexError(
                f"undefined index {index}: finite family has {len(self._specs)} functions")
        while len(self._specs) < index:
            spec = self.tail(len(self._specs) + 1)
            self._specs.append(spec)
            self._preds.append(spec.predicate())

    def spec(self, index: int) -> SelectionSpec:
        self._extend_to(index)
        return self._specs[index - 1]

    def predicate(self, index: int) -> Callable[[PrefixState], bool]:
        self._extend_to(index)
        return self._preds[index - 1]

    def decide(self, index: int, prefix: Prefix) -> Decision:
        if self.probe is not None:
            self.probe(index)
        return evaluate(self.spec(index), prefix)

    def cares_on(self, index: int, state: PrefixState) -> bool:
        """Fast path used by the driver."""
        if self.probe is not None:
            self.probe(index)
        if index > len(self._preds):
            self._extend_to(index)
        return self._preds[index - 1](state)

    def with_probe(self, probe: Callable[[int], None] | None) -> "Family":
        return Family(self.explicit, self.tail, self.name, probe)

    def describe(self) -> list[str]:
        lines = [f"f{i} = {s.describe()}" for i, s in enumerate(self.explicit, 1)]
        if self.tail is not None:
            tname = next((k for k, v in TAIL_GENERATORS.items() if v is self.tail),
                         getattr(self.tail, "__name__", "custom"))
            lines.append(f"rest = {tname}")
        return lines

    def __repr__(self):
        return f"Family({'; '.join(self.describe())})"


def family_decide(family: Family, index: int, prefix: Prefix) -> Decision:
    return family.decide(index, prefix)


__all__.append("family_decide")

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def parse_spec(text: str) -> SelectionSpec:
    """Parse ``name(args)`` into a catalog entry, e.g. ``periodic(3,0)``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise FamilyConfigError(f"cannot parse selection function {text!r}")
    name, argstr = m.group(1), m.group(2)
    args = [a.strip() for a in argstr.split(",")] if argstr else []

    def ints(count):
        if len(args) != count:
            raise FamilyConfigError(f"{name} takes {count} argument(s), got {len(args)}")
        try:
            return [int(a) for a in args]
        except ValueError:
            raise FamilyConfigError(f"{name} expects integer arguments, got {argstr!r}") from None

    if name == "always":
        ints(0)
        return Always()
    if name == "last_bit":
        return LastBit(*ints(1))
    if name == "contains_one":
        ints(0)
        return ContainsOne()
    if name == "suffix":
        if len(args) != 1:
            raise FamilyConfigError("suffix takes exactly one bit-string argument")
        return Suffix(args[0])
    if name == "periodic":
        return Periodic(*ints(2))
    if name == "zeros_run":
        return ZerosRun(*ints(1))
    if name == "majority_ones":
        ints(0)
        return MajorityOnes()
    raise FamilyConfigError(f"unknown selection function {name!r}")


_LINE_RE = re.compile(r"^\s*(f(\d+)|rest)\s*=\s*(.+?)\s*$")


def parse_family(text: str, name: str | None = None) -> Family:
    """Parse the plain-text family format.

    One ``f<k> = <name>(<args>)`` per line, indices 1..k in order, an
    optional final ``rest = suffix_binary``; ``#`` starts a comment line.
    """
    specs: list[SelectionSpec] = []
    tail = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if tail is not None:
            raise FamilyConfigError(f"line {lineno}: nothing may follow the rest = line")
        m = _LINE_RE.match(line)
        if not m:
            raise FamilyConfigError(f"line {lineno}: expected 'f<k> = name(args)', got {raw!r}")
        if m.group(1) == "rest":
            gen = m.group(3)
            if gen not in TAIL_GENERATORS:
                raise FamilyConfigError(f"line {lineno}: unknown tail generator {gen!r}")
            tail = TAIL_GENERATORS[gen]
            continue
        k = int(m.group(2))
        if k != len(specs) + 1:
            raise FamilyConfigError(
                f"line {lineno}: expected f{len(specs) + 1}, got f{k}")
        try:
            spec = parse_spec(m.group(3))
        except FamilyConfigError as e:
            raise FamilyConfigError(f"line {lineno}: {e}") from None
        if k == 1 and not isinstance(spec, Always):
            raise FamilyConfigError(f"line {lineno}: f1 must be always()")
        specs.append(spec)
    if not specs:
        raise FamilyConfigError("family defines no functions")
    return Family(specs, tail, name=name)


def load_family(path) -> Family:
    path = Path(path)
    return parse_family(path.read_text(), name=path.stem)


BUILTIN_FAMILIES = {
    "always-only": "f1 = always",
    "two-fn": "f1 = always\nf2 = last_bit(1)",
    "mixed-5": ("f1 = always\nf2 = last_bit(1)\nf3 = contains_one\n"
                "f4 = periodic(3,0)\nf5 = suffix(01)"),
    "infinite": ("f1 = always\nf2 = last_bit(1)\nf3 = contains_one\n"
                 "f4 = periodic(3,0)\nf5 = suffix(01)\nrest = suffix_binary"),
}


def builtin_family(name: str) -> Family:
    try:
        text = BUILTIN_FAMILIES[name]
    except KeyError:
        raise FamilyConfigError(
            f"unknown builtin family {name!r}; choose from {', '.join(BUILTIN_FAMILIES)}") from None
    return parse_family(text, name=name)


def resolve_family(name_or_path: str) -> Family:
    """Builtin name, or path to a family config file."""
    if name_or_path in BUILTIN_FAMILIES:
        return builtin_family(name_or_path)
    p = Path(name_or_path)
    if not p.is_file():
        raise FamilyConfigError(f"no builtin family or file named {name_or_path!r}")
    return load_family(p)


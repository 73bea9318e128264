"""Bit-by-bit construction of Ville's counterexample sequence.

Given a countable family of selection functions (f_1 always cares), the
construction emits a binary sequence whose every prefix has no more ones
than zeros, while each selection that cares infinitely often sees ones at
limiting frequency 1/2.
"""

from .core import (CountLedger, ParityLedger, StageRecord, ThresholdError, ThresholdRule,
                   apply_stage, compute_active_set, compute_cutoff, parity_bit,
                   ConstructionState)
from .driver import (BuildResult, Engine, RunConfig, Trace, TraceRetention, build,
                     build_finite, stream)
from .selection import (Always, ContainsOne, Decision, Family, FamilyConfigError, LastBit,
                        MajorityOnes, Periodic, Suffix, UndefinedIndexError, ZerosRun,
                        builtin_family, evaluate, family_decide, load_family, parse_family,
                        resolve_family, suffix_binary, tail_spec)

__version__ = "0.1.0"

"""Quadratic reference implementation of the construction.

Every count is recomputed by scanning the whole stage history, and every
decision is made by the string-level ``evaluate`` on the full prefix.
Nothing here shares state or code paths with ``ville.core``/``ville.driver``.
"""

import numpy as np

from ville.selection import Decision, evaluate


def naive_records(family, length, capacity, size=None):
    """Return a list of (cutoff, active, witness, bit) for stages 1..length.

    ``capacity`` is a plain function i -> budget; ``size`` is the number of
    functions in a finite family (None for infinite).
    """
    cutoffs = np.zeros(length, dtype=np.int64)
    masks = np.zeros(length, dtype=np.int64)  # bitmask of A*(m); cutoffs stay < 63 here
    prefix = ""
    out = []
    for n in range(length):
        hist_cut = cutoffs[:n]
        hist_mask = masks[:n]

        memo = {}

        def cares(j):
            if size is not None and j > size:
                return False
            if j not in memo:
                memo[j] = evaluate(family.spec(j), prefix) is Decision.CARE
            return memo[j]

        i = 1
        witness = None
        while witness is None:
            at_level = hist_mask[hist_cut == i]
            for j in range(1, i + 1):
                if cares(j) and np.count_nonzero((at_level >> (j - 1)) & 1) <= capacity(i):
                    witness = j
                    break
            else:
                i += 1
        active = tuple(j for j in range(1, i + 1) if cares(j))
        mask = sum(1 << (j - 1) for j in active)
        if i >= 63:
            raise OverflowError("cutoff too large for the int64 oracle")
        bit = int(np.count_nonzero(hist_mask == mask) % 2)
        cutoffs[n] = i
        masks[n] = mask
        out.append((i, active, witness, bit))
        prefix += str(bit)
    return out


def naive_finite(family, length):
    """Finite construction: parity of the full caring set, by rescanning."""
    k = len(family)
    history = []
    prefix = ""
    for _ in range(length):
        c = frozenset(j for j in range(1, k + 1)
                      if evaluate(family.spec(j), prefix) is Decision.CARE)
        bit = sum(1 for h in history if h == c) % 2
        history.append(c)
        prefix += str(bit)
    return prefix

"""
Cutoff levels, blocks and deficit bounds
========================================

Along the stages a selection cares about, the cutoff levels form blocks
alpha(k), alpha(k+1), ...  Each completed block is long (at least
capacity(k) entries at level k) yet uses few distinct active sets (at most
2^k), which is what keeps the unmatched zeros rare.
"""

from ville import RunConfig, ThresholdRule, TraceRetention, build, builtin_family
from ville.analysis import (deficit_bounds, select, verify_block_facts,
                            verify_cutoff_budget, zeta_blocks)

family = builtin_family("infinite")
rule = ThresholdRule.exp(3)
res = build(RunConfig(family, 2 ** 17, rule, TraceRetention.FULL))

print(verify_cutoff_budget(res.trace, rule).line())

for ell in (1, 2, 5):
    zb = zeta_blocks(res.trace, select(res.bits, family, ell))
    print(f"\nf{ell}: tail starts at level {zb.level} after a head of {zb.head} stages")
    print(" level  length  at-level  sets   N0     N1")
    for b in zb.blocks:
        flag = "" if b.complete else "  (open)"
        print(f" {b.level:>5} {b.length:>7} {b.occurrences:>9} {b.distinct_sets:>5} "
              f"{b.n0:>6} {b.n1:>6}{flag}")
    print(verify_block_facts(zb, rule).line())
    print(deficit_bounds(zb).line())

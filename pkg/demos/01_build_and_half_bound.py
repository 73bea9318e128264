"""
Building the sequence and its half bound
========================================

Build the first bits for a two-function family and watch the running
count of ones never overtake the zeros.
"""

from ville import RunConfig, ThresholdRule, TraceRetention, build, builtin_family
from ville.analysis import running_sums, verify_half_bound

family = builtin_family("two-fn")  # f1 = always, f2 = last_bit(1)
res = build(RunConfig(family, 20, ThresholdRule.exp(3), TraceRetention.FULL))
print("q =", res.text())

# Each stage: the cutoff I(n), the active set A*(n), and the emitted bit.
for rec in list(res.trace)[:8]:
    print(f"n={rec.n:<3} I={rec.cutoff}  A*={set(rec.active)!s:<8} bit={rec.bit}")

# S(q[n]) counts ones before stage n; 2*S - (n-1) is #1 - #0 in q[n].
S, two_delta = running_sums(res.bits)
print("#1 - #0 along the prefix:", two_delta.tolist())
print(verify_half_bound(res.bits).line())

###############################################################################
# A longer run of the infinite family behaves the same way.
big = build(RunConfig(builtin_family("infinite"), 2 ** 18, ThresholdRule.exp(3)))
print(verify_half_bound(big.bits).line())

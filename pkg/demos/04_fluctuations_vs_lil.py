"""
Fluctuations against the iterated-logarithm scale
=================================================

delta_1(n) = S(n) - n/2 is never positive.  Its negative envelope grows
no faster than n^(ln 2 / ln r) for capacity r^i; fair coin tossing would
swing on the sqrt(n ln ln n) scale instead.
"""

from ville import RunConfig, ThresholdRule, build, builtin_family
from ville.analysis import fluctuation_report, lil_curve, select

family = builtin_family("infinite")
N = 2 ** 18

for r in (3, 4, 8):
    rule = ThresholdRule.exp(r)
    bits = build(RunConfig(family, N, rule)).bits
    fr = fluctuation_report(select(bits, family, 1), rule)
    print(f"r={r}: max delta = {fr.max_delta}, min delta = {fr.min_delta}, "
          f"fitted slope {fr.exponent:.3f} (target ln2/ln{r} = {fr.target_exponent:.3f})")

print("\n       n   -min delta (r=3)   LIL scale")
bits = build(RunConfig(family, N, ThresholdRule.exp(3))).bits
fr = fluctuation_report(select(bits, family, 1), ThresholdRule.exp(3))
for m, env in zip(fr.checkpoints, fr.envelope):
    if m >= 16:
        print(f"{m:>8} {env / 2:>18} {lil_curve(m, 0.0):>11.1f}")

###############################################################################
# A faster-growing capacity table flattens the envelope further.
table = ThresholdRule.from_table([4 ** (i * i) for i in range(1, 6)])
bits = build(RunConfig(family, N, table)).bits
print("\ncapacity 4^(i^2): min delta =", fluctuation_report(select(bits, family, 1)).min_delta)

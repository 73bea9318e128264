"""
Every selection sees frequency one half
=======================================

Each function of the infinite family that keeps caring selects a
subsequence whose frequency of ones tends to 1/2, even though the whole
sequence never has more ones than zeros.
"""

from ville import RunConfig, ThresholdRule, build, builtin_family
from ville.analysis import convergence_report, select

family = builtin_family("infinite")
N = 2 ** 18
bits = build(RunConfig(family, N, ThresholdRule.exp(3))).bits

for ell in range(1, 8):
    tr = select(bits, family, ell)
    cr = convergence_report(tr)
    tail = ", ".join(f"{d:.1e}" for d in cr.deviations[-4:])
    print(f"f{ell} = {family.spec(ell).describe():<14} selected {tr.count:>7}  "
          f"|S/m - 1/2| at last checkpoints: {tail}")

###############################################################################
# A function that never cares is exempt: majority_ones would need a prefix
# with more ones than zeros, which the construction never produces.
from ville import Always, Family, MajorityOnes

fam = Family([Always(), MajorityOnes()])
q = build(RunConfig(fam, 10_000, ThresholdRule.exp(3))).bits
print("majority_ones selects", select(q, fam, 2).count, "bits")

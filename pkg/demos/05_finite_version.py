"""
The finite construction
=======================

For a finite family the cutoff is unnecessary: the bit is the parity of
earlier occurrences of the full caring set, and every selection stays
within 2^k of balance.
"""

from ville import build_finite, parse_family
from ville.analysis import select, verify_finite_bound

family = parse_family("""
f1 = always
f2 = last_bit(1)
f3 = zeros_run(2)
""")
bits = build_finite(family, 50_000)
print("first bits:", "".join(map(str, bits[:40])))

for ell in range(1, 4):
    tr = select(bits, family, ell)
    print(f"f{ell}: selected {tr.count}, max m/2 - S_f = {-tr.two_delta.min() / 2} "
          f"(bound {2 ** 3})")
print(verify_finite_bound(bits, family).line())

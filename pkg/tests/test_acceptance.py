"""Exit criteria, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
Large runs (N = 2^20, 2^22) are shared through session fixtures.
"""

import contextlib
import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, BUILTINS, GOLDEN
from naive import naive_records
from ville import analysis as A
from ville.core import ThresholdRule
from ville.driver import Engine, RunConfig, TraceRetention, build, build_finite
from ville.selection import Always, Family, LastBit, ZerosRun, builtin_family, parse_family

N20, N22 = 2 ** 20, 2 ** 22


@contextlib.contextmanager
def criterion(k, text):
    info = {}
    try:
        yield info
    except BaseException:
        ACCEPTANCE_LINES.append(f"[{k:>2}] FAIL  {text}  {info.get('detail', '')}")
        raise
    ACCEPTANCE_LINES.append(f"[{k:>2}] PASS  {text}  {info.get('detail', '')}")


def _full(name, n, base=3):
    fam = builtin_family(name)
    rule = ThresholdRule.exp(base)
    return fam, rule, build(RunConfig(fam, n, rule, TraceRetention.FULL))


@pytest.fixture(scope="session")
def big_base3():
    return _full("infinite", N22, 3)


@pytest.fixture(scope="session")
def big_base8():
    return _full("infinite", N22, 8)


@pytest.fixture(scope="session")
def runs_2_20(big_base3):
    out = {name: _full(name, N20) for name in BUILTINS if name != "infinite"}
    fam, rule, res = big_base3
    # prefix stability: the first 2^20 stages of the 2^22 run are the 2^20 run
    out["infinite"] = (fam, rule, res)
    return out


def test_c01_half_bound(runs_2_20):
    with criterion(1, "half bound 2*S(q[n]) <= n, builtin families, exp:3, N=2^20") as info:
        worst = {}
        for name, (_, _, res) in runs_2_20.items():
            bits = res.bits[:N20]
            S, _ = A.running_sums(bits)
            n = np.arange(1, N20 + 2)
            assert np.all(2 * S <= n), name
            assert A.verify_half_bound(bits).status == A.PASS, name
            worst[name] = int((2 * S - (n - 1)).max())
        info["detail"] = f"max(#1-#0) per family: {worst}"


def test_c02_finite_family_bound():
    fams = {
        1: builtin_family("always-only"),
        2: builtin_family("two-fn"),
        3: parse_family("f1 = always\nf2 = last_bit(1)\nf3 = contains_one"),
        4: parse_family("f1 = always\nf2 = last_bit(1)\nf3 = contains_one\nf4 = periodic(3,0)"),
    }
    fams_alt = {3: Family([Always(), LastBit(0), ZerosRun(2)])}
    with criterion(2, "0 <= m/2 - S_f(m) <= 2^k, build_finite, k in 1..4, N=10^5") as info:
        worst = []
        for k, fam in [*fams.items(), *fams_alt.items()]:
            bits = build_finite(fam, 10 ** 5)
            for ell in range(1, k + 1):
                deficit2 = -A.select(bits, fam, ell).two_delta
                assert deficit2.min() >= 0, (k, ell)
                assert deficit2.max() <= 2 ** (k + 1), (k, ell)
                worst.append((k, ell, int(deficit2.max()) / 2))
            assert A.verify_finite_bound(bits, fam).status == A.PASS
        info["detail"] = "max m/2 - S_f: " + ", ".join(f"k{k}f{l}={v}" for k, l, v in worst)


def test_c03_cutoff_budget(runs_2_20):
    with criterion(3, "#{n : I(n)=i} <= i*(3^i+1), exp:3, N=2^20; i=1 count is 4") as info:
        for name, (_, rule, res) in runs_2_20.items():
            cut = res.trace.cutoffs[:N20]
            levels, counts = np.unique(cut, return_counts=True)
            for i, c in zip(levels.tolist(), counts.tolist()):
                assert c <= i * (3 ** i + 1), (name, i, c)
            assert A.verify_cutoff_budget(cut, rule).status == A.PASS
        cut = runs_2_20["always-only"][2].trace.cutoffs
        assert int(np.count_nonzero(cut == 1)) == 4
        info["detail"] = f"always-only levels up to {int(cut.max())}"


def test_c04_alternation():
    with criterion(4, "per-active-set bits are 0,1,0,1,..., Full trace, N=10^5") as info:
        total = 0
        for name in BUILTINS:
            for base in (3, 4, 8):
                _, _, res = _full(name, 10 ** 5, base)
                r = A.verify_alternation(res.trace)
                assert r.status == A.PASS, (name, base, r.message)
                total += r.details["distinct_sets"]
        info["detail"] = f"12 runs, {total} (run, set) pairs"


def test_c05_oracle_equivalence():
    with criterion(5, "naive quadratic oracle == incremental build, N=10^4, r in {3,4,8}") as info:
        for name in BUILTINS:
            for base in (3, 4, 8):
                fam = builtin_family(name)
                size = None if fam.tail else len(fam)
                expected = naive_records(fam, 10 ** 4, lambda i, b=base: b ** i, size)
                res = build(RunConfig(builtin_family(name), 10 ** 4, ThresholdRule.exp(base),
                                      TraceRetention.FULL))
                got = [(r.cutoff, r.active, r.witness, r.bit) for r in res.trace]
                assert got == expected, (name, base)
        info["detail"] = "12 configurations bit- and record-identical"


def test_c06_convergence(big_base3):
    fam, _, res = big_base3
    with criterion(6, "|S_l(m)/m - 1/2| <= 0.05 at final checkpoint, envelope within x2 "
                      "from 2^10, l <= 5, N=2^22") as info:
        parts = []
        for ell in range(1, 6):
            cr = A.convergence_report(A.select(res.bits, fam, ell))
            if cr.exempt:
                parts.append(f"f{ell}: exempt")
                continue
            assert cr.final_deviation <= 0.05, (ell, cr.final_deviation)
            assert cr.envelope_ok(start=2 ** 10, factor=2.0), (ell, cr.envelope)
            parts.append(f"f{ell}: {cr.final_deviation:.2e}")
        info["detail"] = ", ".join(parts)


def test_c07_fluctuation_exponent(big_base3, big_base8):
    with criterion(7, "-min delta_1 slope <= ln2/ln3+0.1 (r=3), <= 1/3+0.1 (r=8); "
                      "max delta_1 = 0, N=2^22") as info:
        slopes = {}
        for base, (fam, rule, res), limit in ((3, big_base3, math.log(2) / math.log(3) + 0.1),
                                              (8, big_base8, 1 / 3 + 0.1)):
            fr = A.fluctuation_report(A.select(res.bits, fam, 1), rule)
            assert fr.max_two_delta == 0
            assert fr.exponent is not None and fr.exponent <= limit, (base, fr.exponent)
            slopes[base] = round(fr.exponent, 3)
        info["detail"] = f"fitted slopes {slopes}"


def test_c08_sub_lil(big_base3):
    fam, _, res = big_base3
    with criterion(8, "max |delta_1| < lil_curve(2^22, 0.5)") as info:
        _, td = A.running_sums(res.bits)
        worst = np.abs(td).max() / 2
        bound = A.lil_curve(N22, 0.5)
        assert worst < bound
        info["detail"] = f"max |delta_1| = {worst} < {bound:.1f}"


def test_c09_determinism(tmp_path):
    with criterion(9, "byte-identical golden outputs, builtin configs, N=4096, two runs"):
        for name in BUILTINS:
            outs = []
            for k in range(2):
                for fmt in ("text", "packed"):
                    path = tmp_path / f"{name}.{k}.{fmt}"
                    subprocess.run([sys.executable, "-m", "ville", "build", "--family", name,
                                    "--length", "4096", "--threshold", "exp:3",
                                    "--format", fmt, "--out", str(path)], check=True)
                outs.append(((tmp_path / f"{name}.{k}.text").read_bytes(),
                             (tmp_path / f"{name}.{k}.packed").read_bytes()))
            assert outs[0] == outs[1], name
            assert outs[0][0] == (GOLDEN / f"{name}_exp3_4096.txt").read_bytes(), name


def test_c10_laziness():
    with criterion(10, "no family query above I(n) in any stage, infinite family, N=10^4") as info:
        queried = []
        calls = []

        def tail(m):
            calls.append(m)
            from ville.selection import suffix_binary
            return suffix_binary(m)

        base = builtin_family("infinite")
        fam = Family(base.explicit, tail=tail, probe=queried.append)
        eng = Engine(fam, ThresholdRule.exp(3))
        top = 0
        for _ in range(10 ** 4):
            queried.clear()
            rec = eng.step()
            assert queried and max(queried) <= rec.cutoff, rec
            top = max(top, rec.cutoff)
        assert max(calls) <= top
        info["detail"] = f"max cutoff {top}, tail generator reached index {max(calls)}"

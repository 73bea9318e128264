import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ville import analysis as A
from ville.core import StageRecord, ThresholdRule
from ville.driver import RunConfig, TraceRetention, build, build_finite
from ville.selection import Family, Always, MajorityOnes, builtin_family

BASE3 = ThresholdRule.exp(3)


def full_run(name, n, base=3):
    fam = builtin_family(name)
    return fam, build(RunConfig(fam, n, ThresholdRule.exp(base), TraceRetention.FULL))


def test_running_sums_examples():
    S, td = A.running_sums("0101")
    assert S.tolist() == [0, 0, 1, 1, 2]
    assert td.tolist() == [0, -1, 0, -1, 0]
    assert A.running_sums("0000")[0].tolist() == [0] * 5
    S, td = A.running_sums("0101001")
    assert S[-1] == 3
    assert np.all(2 * S <= np.arange(1, 9))


def test_select_examples():
    fam = builtin_family("two-fn")
    q = "0101001"
    tr = A.select(q, fam, 1)
    assert tr.positions.tolist() == list(range(1, 8))
    assert tr.bits.tolist() == [0, 1, 0, 1, 0, 0, 1]
    tr2 = A.select(q, fam, 2)
    assert tr2.positions.tolist() == [3, 5]
    assert tr2.bits.tolist() == [0, 0]


def test_majority_ones_never_cares_on_ville_output():
    fam = Family([Always(), MajorityOnes()])
    res = build(RunConfig(fam, 5000, BASE3))
    tr = A.select(res.bits, fam, 2)
    assert tr.count == 0 and tr.finite_care
    assert A.convergence_report(tr).exempt


@given(st.text(alphabet="01", max_size=60))
def test_delta_step_law(q):
    fam = builtin_family("mixed-5")
    for ell in range(1, 6):
        td = A.select(q, fam, ell).two_delta
        assert td[0] == 0
        assert np.all(np.abs(np.diff(td)) == 1)


def test_half_bound_examples():
    assert A.verify_half_bound("0011").status == A.PASS
    r = A.verify_half_bound("1")
    assert r.status == A.FAIL and r.details["first_violation"] == 2
    _, res = full_run("infinite", 20000)
    assert A.verify_half_bound(res.bits).status == A.PASS


def test_alternation_examples():
    _, res = full_run("mixed-5", 5000)
    assert A.verify_alternation(res.trace).status == A.PASS
    fresh_one = [StageRecord(1, 1, (1,), 1, 1)]
    assert A.verify_alternation(fresh_one).status == A.FAIL
    dup = [StageRecord(1, 1, (1,), 1, 0), StageRecord(2, 2, (1, 2), 1, 0),
           StageRecord(3, 1, (1,), 1, 0)]
    r = A.verify_alternation(dup)
    assert r.status == A.FAIL and r.details["first_violation"] == 3


def test_cutoff_budget_examples():
    _, res = full_run("always-only", 5000)
    r = A.verify_cutoff_budget(res.trace, BASE3)
    assert r.status == A.PASS
    assert r.details["levels"][1] == {"count": 4, "budget": 4}
    _, res = full_run("infinite", 20000)
    assert A.verify_cutoff_budget(res.trace, BASE3).status == A.PASS
    forged = [StageRecord(n, 1, (1,), 1, n % 2) for n in range(1, 6)]
    assert A.verify_cutoff_budget(forged, BASE3).status == A.FAIL


def test_finite_bound_check():
    fam = builtin_family("mixed-5")
    assert A.verify_finite_bound(build_finite(fam, 20000), fam).status == A.PASS
    assert A.verify_finite_bound("1", builtin_family("always-only")).status == A.FAIL
    assert A.verify_finite_bound("0", builtin_family("infinite")).status == A.FAIL


@pytest.mark.parametrize("name", ["two-fn", "mixed-5", "infinite"])
def test_selection_consistency(name):
    fam, res = full_run(name, 20000)
    for ell in range(1, int(res.trace.cutoffs.max()) + 1):
        if fam.is_finite and ell > len(fam):
            break
        assert A.verify_selection_consistency(res.trace, fam, ell).status == A.PASS


def test_block_facts_on_runs():
    fam, res = full_run("infinite", 100000)
    for ell in (1, 2, 3):
        zb = A.zeta_blocks(res.trace, A.select(res.bits, fam, ell))
        r = A.verify_block_facts(zb, BASE3)
        assert r.status == A.PASS, r.message
    zb1 = A.zeta_blocks(res.trace, A.select(res.bits, fam, 1))
    assert zb1.level == 1 and zb1.head == 0
    assert zb1.blocks[0].distinct_sets == 1  # sets inside alpha(1) are subsets of {1}
    assert zb1.blocks[0].occurrences == 4


def test_block_facts_forged_and_inconclusive():
    short = A.ZetaBlocks.from_arrays(1, [1, 1, 2], [0, 0, 0], [0, 1, 0])
    assert A.verify_block_facts(short, BASE3).status == A.FAIL
    open_only = A.ZetaBlocks.from_arrays(1, [1, 1], [0, 0], [0, 1])
    assert A.verify_block_facts(open_only, BASE3).status == A.INCONCLUSIVE
    too_many_sets = A.ZetaBlocks.from_arrays(1, [1, 1, 1, 1, 2], [0, 1, 2, 3, 4], [0] * 5)
    assert A.verify_block_facts(too_many_sets, BASE3).status == A.FAIL


def test_deficit_bounds():
    fam, res = full_run("two-fn", 100000)
    r1 = A.deficit_bounds(A.zeta_blocks(res.trace, A.select(res.bits, fam, 1)))
    assert r1.status == A.PASS and r1.details["head"] == 0
    r2 = A.deficit_bounds(A.zeta_blocks(res.trace, A.select(res.bits, fam, 2)))
    assert r2.status == A.PASS
    # forged: one more 1 than the head can explain
    forged = A.ZetaBlocks.from_arrays(1, [1], [0], [1])
    assert forged.head == 0
    assert A.deficit_bounds(forged).status == A.FAIL
    forged_zeros = A.ZetaBlocks.from_arrays(1, [1, 1, 1], [0, 1, 2], [0, 0, 0])
    assert A.deficit_bounds(forged_zeros).status == A.FAIL


def test_stabilization_level_skips_low_head():
    # entries below ell before the tail are head; tail starts at a fresh level >= ell
    zb = A.ZetaBlocks.from_arrays(2, [1, 2, 1, 2, 3, 3, 2, 4], list(range(8)), [0] * 8)
    assert zb.level == 3 and zb.head == 4
    assert [b.level for b in zb.blocks] == [3, 4]


def test_convergence_report_shape():
    fam, res = full_run("infinite", 2 ** 16)
    cr = A.convergence_report(A.select(res.bits, fam, 1))
    assert cr.checkpoints == [2 ** j for j in range(17)]
    assert cr.final_deviation <= 0.05
    assert cr.envelope_ok()
    assert not cr.exempt


def test_fluctuation_report_basic():
    fam, res = full_run("infinite", 2 ** 16)
    fr = A.fluctuation_report(A.select(res.bits, fam, 1), BASE3)
    assert fr.max_two_delta == 0
    assert fr.min_two_delta < 0
    assert fr.target_exponent == pytest.approx(math.log(2) / math.log(3))
    assert fr.exponent is not None and np.isfinite(fr.exponent)
    # the sup constant really bounds -delta by C * m**target
    td = A.select(res.bits, fam, 1).two_delta
    m = np.arange(1, len(td))
    assert np.all(-td[1:] / 2 <= fr.sup_constant * m ** fr.target_exponent + 1e-9)


def test_lil_curve():
    expected = math.sqrt(16 * math.log(math.log(16))) / math.sqrt(2)
    assert A.lil_curve(16, 0.0) == pytest.approx(expected)
    assert A.lil_curve(16, 0.0) == pytest.approx(2.856, abs=1e-3)
    assert A.lil_curve(1000, 1.0) == 0
    xs = np.arange(16, 5000)
    assert np.all(np.diff(A.lil_curve(xs, 0.0)) > 0)
    with pytest.raises(ValueError):
        A.lil_curve(2, 0.0)

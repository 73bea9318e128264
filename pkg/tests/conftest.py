import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from ville.selection import (  # noqa: E402
    Always, ContainsOne, Family, LastBit, MajorityOnes, Periodic, Suffix, ZerosRun,
    suffix_binary,
)

GOLDEN = Path(__file__).parent / "golden"
BUILTINS = ("always-only", "two-fn", "mixed-5", "infinite")

catalog_specs = st.one_of(
    st.just(Always()),
    st.sampled_from([0, 1]).map(LastBit),
    st.just(ContainsOne()),
    st.text(alphabet="01", min_size=1, max_size=4).map(Suffix),
    st.integers(1, 5).flatmap(lambda k: st.integers(0, k - 1).map(lambda r: Periodic(k, r))),
    st.integers(1, 3).map(ZerosRun),
    st.just(MajorityOnes()),
)


@st.composite
def families(draw, max_size=5, allow_infinite=True):
    rest = draw(st.lists(catalog_specs, max_size=max_size - 1))
    infinite = allow_infinite and draw(st.booleans())
    return Family([Always(), *rest], tail=suffix_binary if infinite else None)


# criterion lines collected by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def golden_dir():
    return GOLDEN

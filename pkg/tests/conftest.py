import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from blocktoeplitz import BlockSymbol
from blocktoeplitz.symbols import Abs, Const, Cos, Indicator, Pow, Prod, Scale, Sin, Sum, Theta

CASES = Path(__file__).resolve().parent.parent / "cases"

CASE_BLOCKS = {
    "case1": (2, {"1,1": "3-4*cos(t)", "1,2": "4-cos(t)-2*cos(2*t)", "2,1": "t^2+1", "2,2": "t-5"}),
    "case2": (2, {"1,1": "-t^4", "1,2": "2-2*cos(t)", "2,1": "t^2", "2,2": "1"}),
    "case3": (3, {"1,1": "t^2", "1,2": "2-2*cos(t)", "2,1": "t^2", "2,2": "1",
                  "2,3": "t+4", "3,2": "abs(t)", "3,3": "sqrt(abs(t))"}),
    "case4": (3, {"1,1": "-t^4", "1,2": "2-2*cos(t)", "2,1": "t^2", "2,2": "1",
                  "2,3": "t*ind(0,pi)", "3,2": "abs(t)", "3,3": "sqrt(abs(t))"}),
}

ALL_CASE_SYMBOLS = sorted({s for _, blocks in CASE_BLOCKS.values() for s in blocks.values()})


def case_blocksym(name):
    k, blocks = CASE_BLOCKS[name]
    return BlockSymbol.from_strings(k, blocks)


@pytest.fixture
def case1():
    return case_blocksym("case1")


@pytest.fixture
def case3():
    return case_blocksym("case3")


@pytest.fixture
def case4():
    return case_blocksym("case4")


def random_spd(rng, n, complex_=False, cond=50.0):
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(X)
    w = np.exp(rng.uniform(0, math.log(cond), n))
    A = (Q * w) @ Q.conj().T
    return (A + A.conj().T) / 2


# --- expression trees in the parser's normal form ----------------------------

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
angles = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)
harmonics = st.integers(min_value=1, max_value=6)


def _not(*types):
    return lambda node: not isinstance(node, types)


def _extend(children):
    nonconst = children.filter(_not(Const))
    scalable = children.filter(_not(Const, Scale))
    return st.one_of(
        st.builds(Abs, nonconst),
        st.builds(Pow, nonconst, finite.filter(lambda e: e != 0)),
        st.builds(lambda cs: Sum(tuple(cs)), st.lists(children, min_size=2, max_size=4)),
        st.builds(lambda cs: Prod(tuple(cs)), st.lists(nonconst, min_size=2, max_size=3)),
        st.builds(Scale, finite.filter(lambda c: c != 1.0), scalable),
        st.builds(lambda a, b, c: Indicator(min(a, b), max(a, b), c), angles, angles, children),
    )


leaves = st.one_of(
    st.builds(Const, finite),
    st.just(Theta()),
    st.builds(Cos, harmonics),
    st.builds(Sin, harmonics),
)

expressions = st.recursive(leaves, _extend, max_leaves=12)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run the minutes-scale table rows")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="minutes-scale; enable with --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, (ok, detail) in RESULTS.items():
        terminalreporter.write_line(f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})")

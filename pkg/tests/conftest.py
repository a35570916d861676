import pytest
from hypothesis import HealthCheck, settings, strategies as st

from mlq.generators import GenSpec, rng_for, sample_expr, sample_stack, sample_value
from mlq.surface import parse_expr

settings.register_profile("mlq", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("mlq")

SPEC = GenSpec()
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def closed_exprs(draw, depth=3):
    return sample_expr(rng_for(draw(seeds), "e"), (), depth)


@st.composite
def values(draw, depth=2):
    return sample_value(rng_for(draw(seeds), "v"), depth)


@st.composite
def stacks(draw):
    return sample_stack(rng_for(draw(seeds), "k"))


GAMMAS = [(), ("X",), ("X", "Y"), ("X", "f/1")]


@st.composite
def open_exprs(draw, depth=3):
    from mlq.syntax import parse_name

    gamma = tuple(parse_name(n) for n in draw(st.sampled_from(GAMMAS)))
    return frozenset(gamma), sample_expr(rng_for(draw(seeds), "o"), gamma, depth)


@pytest.fixture
def p():
    return parse_expr


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)

from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def small_rationals(max_num=12, max_den=6, allow_zero=True):
    frac = st.builds(Fraction, st.integers(-max_num, max_num), st.integers(1, max_den))
    return frac if allow_zero else frac.filter(lambda q: q != 0)


def positive_rationals(max_num=12, max_den=4):
    return st.builds(Fraction, st.integers(1, max_num), st.integers(1, max_den))


def probabilities():
    return st.builds(Fraction, st.integers(1, 9), st.just(10))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])

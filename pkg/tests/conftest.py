import hypothesis.strategies as st
import pytest
from hypothesis import HealthCheck, settings

from wittenpoly.polyring import Polynomial

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile("default")


@st.composite
def polynomials(draw, n=None, max_degree=6, max_terms=5, coeffs=None):
    """Sparse polynomials with small rational coefficients."""
    n = n if n is not None else draw(st.integers(1, 3))
    coeffs = coeffs or st.fractions(min_value=-5, max_value=5, max_denominator=4)
    exps = st.lists(st.integers(0, max_degree), min_size=n, max_size=n).filter(lambda e: sum(e) <= max_degree)
    terms = draw(st.dictionaries(exps.map(tuple), coeffs, max_size=max_terms))
    return Polynomial(n, terms)


def rationals(lo=-3, hi=3):
    return st.fractions(min_value=lo, max_value=hi, max_denominator=5)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE[number] = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])

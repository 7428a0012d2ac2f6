import json
from fractions import Fraction

import hypothesis.strategies as st
import numpy as np
import pytest
from conftest import polynomials, rationals
from hypothesis import assume, given, settings

from wittenpoly.polyring import (
    HyperplaneFace,
    Polynomial,
    PolynomialParseError,
    WeightSystem,
    arith,
    critical_points_only_origin,
    detect_case_B,
    euler_identity_check,
    evaluate,
    gap_check,
    is_quasi_homogeneous,
    leading_form,
    parse,
    partial_derivative,
    polynomial_from_dict,
    polynomial_from_json,
    polynomial_to_json,
    smallest_odd_k,
    substitute_phi,
    weighted_degree,
)

x, y = Polynomial.variables(2)
W11 = WeightSystem((1, 1))


def P(expr, names=("x", "y")):
    return parse(expr, list(names))


# -- arithmetic -----------------------------------------------------------------


def test_difference_of_squares():
    assert arith(x + y, x - y, "mul") == x**2 - y**2


def test_add_zero_is_identity():
    p = P("x^3 - 2*x*y + 7")
    assert arith(p, Polynomial.zero(2), "add") == p


def test_cancellation_gives_empty_term_map():
    d = arith(x**2, x**2, "sub")
    assert d.is_zero() and d.terms == {}


def test_unknown_op_rejected():
    with pytest.raises(ValueError):
        arith(x, y, "div")


def test_partial_derivatives():
    assert partial_derivative(P("x^4 + y^4"), 0) == P("4*x^3")
    assert partial_derivative(Polynomial.constant(2, 5), 0).is_zero()
    assert partial_derivative(P("x^2*y"), 1) == P("x^2")


def test_evaluate_exact_and_float():
    assert evaluate(P("x^2 - y^2"), [3, 4]) == -7
    p = P("x^3 - 3*x*y^2 + 5/2")
    assert evaluate(p, [0, 0]) == Fraction(5, 2)
    assert evaluate(P("x^4 + x^2", ["x"]), [2]) == 20
    assert isinstance(evaluate(p, [Fraction(1, 3), 2]), Fraction)
    assert evaluate(p, [0.5, 1.5]) == pytest.approx(0.125 - 3 * 0.5 * 2.25 + 2.5)


def test_compiled_matches_exact():
    p = P("x^5 - 3*x^2*y^3 + 2/3*y - 1")
    pts = np.random.default_rng(1).normal(size=(50, 2)) * 3
    exact = [float(evaluate(p, [Fraction(a), Fraction(b)])) for a, b in pts]
    np.testing.assert_allclose(p.compiled(pts), exact, rtol=1e-12)


# -- weights and faces ------------------------------------------------------------


def test_weighted_degree_examples():
    assert weighted_degree(P("x^2*y + y^3"), W11) == 3
    assert is_quasi_homogeneous(P("x^2*y + y^3"), W11)
    w = WeightSystem((2, 3))
    assert weighted_degree(P("x^3 + y^2"), w) == 6 and is_quasi_homogeneous(P("x^3 + y^2"), w)
    p = P("x^3 + x", ["x"])
    assert weighted_degree(p, WeightSystem((1,))) == 3
    assert not is_quasi_homogeneous(p, WeightSystem((1,)))


def test_weights_must_be_positive():
    with pytest.raises(ValueError):
        WeightSystem((1, 0))


def test_leading_form_selects_face():
    face = HyperplaneFace(W11, 3)
    assert leading_form(P("x^3 + y^3 + x"), face) == P("x^3 + y^3")
    h = P("x^3 - 3*x*y^2")
    assert leading_form(h, face) == h
    with pytest.raises(ValueError):
        leading_form(P("x^2 + x*y^3"), face)


def test_euler_identity_examples():
    assert euler_identity_check(P("x^3 + y^3"), W11)
    assert euler_identity_check(P("x^3 + y^2"), WeightSystem((2, 3)))
    assert not euler_identity_check(P("x^2 + x", ["x"]), WeightSystem((1,)))


def test_substitution_examples():
    t = ["x"]
    assert substitute_phi(P("x^2", t), 3) == P("x^6 + 2*x^4 + x^2", t)
    assert substitute_phi(P("x", t), 3) == P("x^3 + x", t)
    assert substitute_phi(P("x^2 + x", t), 3) == P("x^6 + 2*x^4 + x^3 + x^2 + x", t)
    with pytest.raises(ValueError):
        substitute_phi(P("x", t), 2)


def test_smallest_odd_k():
    assert [smallest_odd_k(d) for d in (1, 2, 3, 4)] == [3, 3, 5, 5]


def test_gap_examples():
    p = P("x^6 + 2*x^4 + x^2", ["x"])
    w = WeightSystem((1,))
    assert gap_check(p, w, 6, 5).passed
    bad = gap_check(p, w, 6, 3)
    assert not bad.passed
    assert [e for e, _, _ in bad.offenders] == [(4,)]
    assert gap_check(P("x^4 + y^4 + x^2"), W11, 4, 3).passed


# -- critical point certificate and case B ----------------------------------------------


def test_certificate_quartic_margin():
    # dense-sampling oracle for the minimum of the gradient energy on the unit shell
    cert = critical_points_only_origin(P("x^4 + y^4"), W11)
    th = np.linspace(0, 2 * np.pi, 200_001)
    c, s = np.cos(th), np.sin(th)
    oracle = np.min(16 * (c**6 + s**6))
    assert cert.passed
    assert cert.margin == pytest.approx(oracle, rel=1e-6)
    assert oracle == pytest.approx(4.0, rel=1e-6)


def test_certificate_saddle_and_failure():
    assert critical_points_only_origin(P("x^2 - y^2"), W11).passed
    bad = critical_points_only_origin(P("x^2*y^2"), W11)
    assert not bad.passed and bad.margin < 1e-10
    assert min(abs(v) for v in bad.witness) < 1e-5  # witness sits on an axis


def test_detect_case_b_examples():
    res = detect_case_B(P("x^3 - 3*x*y^2 + x + 1"))
    assert res.is_case_b
    assert res.face == HyperplaneFace(W11, 3)
    assert res.leading == P("x^3 - 3*x*y^2")
    # oracle: the gradient of the leading form has no real zero on the circle
    th = np.linspace(0, 2 * np.pi, 100_001)
    gx = 3 * np.cos(th) ** 2 - 3 * np.sin(th) ** 2
    gy = -6 * np.cos(th) * np.sin(th)
    assert np.min(gx**2 + gy**2) > 1

    res = detect_case_B(P("x^2*y^2 + x"))
    assert not res.is_case_b and res.leading == P("x^2*y^2")
    res = detect_case_B(P("x^4 + y^4 + x^2"))
    assert res.is_case_b and res.face.degree == 4


def test_detect_case_b_rejects_constant():
    with pytest.raises(ValueError):
        detect_case_B(Polynomial.constant(2, 3))


# -- parsing and JSON --------------------------------------------------------------


def test_json_roundtrip_and_expression_input():
    p = P("x^3 - 3/2*x*y^2 + 1")
    spec = polynomial_from_json(polynomial_to_json(p, ["x", "y"], [1, 1]))
    assert spec.poly == p and spec.names == ("x", "y")
    spec = polynomial_from_dict({"vars": ["x", "y"], "weights": [2, 3], "expression": "x^3 + y^2"})
    assert spec.poly == P("x^3 + y^2") and spec.weights == WeightSystem((2, 3))


@pytest.mark.parametrize(
    "doc",
    [
        '{"vars": ["x"], "terms": [{"exp": [1], "coeff": "1/0"}]}',
        '{"vars": ["x"], "terms": [{"exp": [1, 2], "coeff": 1}]}',
        '{"vars": ["x"], "terms": "x^2"}',
        '{"vars": [], "terms": []}',
        '{"vars": ["x"], "weights": [0], "terms": []}',
        '{"vars": ["x"], "expression": "x^"}',
        '{"vars": ["x"], "terms": [{"exp": [-1], "coeff": 1}]}',
        '[1, 2]',
    ],
)
def test_malformed_json_rejected(doc):
    with pytest.raises(PolynomialParseError):
        polynomial_from_json(doc)


def test_parse_error_has_line_and_column():
    with pytest.raises(PolynomialParseError) as info:
        polynomial_from_json('{"vars": ["x"],\n  "terms": [}')
    assert info.value.line == 2 and info.value.column is not None


def test_canonical_json_is_order_independent():
    a = Polynomial(2, {(2, 0): 1, (0, 2): -1})
    b = Polynomial(2, {(0, 2): -1, (2, 0): 1})
    assert a.canonical_json() == b.canonical_json()
    json.loads(a.canonical_json())


# -- properties -----------------------------------------------------------------------


@settings(max_examples=200)
@given(st.data())
def test_ring_laws(data):
    n = data.draw(st.integers(1, 3))
    p, q, r = (data.draw(polynomials(n=n, max_degree=6, max_terms=4)) for _ in range(3))
    assert (p * q) * r == p * (q * r)
    assert (p + q) + r == p + (q + r)
    assert p * (q + r) == p * q + p * r
    i = data.draw(st.integers(0, n - 1))
    assert (p * q).partial(i) == p * q.partial(i) + q * p.partial(i)


@st.composite
def quasi_homogeneous(draw):
    n = draw(st.integers(1, 3))
    w = WeightSystem(tuple(draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))))
    exps = draw(st.lists(st.lists(st.integers(0, 4), min_size=n, max_size=n), min_size=1, max_size=4))
    d = max(w.degree_of(e) for e in exps)
    # keep only exponents of the top weighted degree
    terms = {tuple(e): draw(rationals()) for e in exps if w.degree_of(e) == d}
    p = Polynomial(n, terms)
    assume(not p.is_zero())
    return p, w


@settings(max_examples=100)
@given(quasi_homogeneous(), st.data())
def test_quasi_homogeneous_scaling_is_exact(pw, data):
    p, w = pw
    assert euler_identity_check(p, w)
    d = weighted_degree(p, w)
    lam = data.draw(rationals(Fraction(1, 4), 4).filter(lambda v: v != 0))
    pt = [data.draw(rationals()) for _ in range(p.num_vars)]
    scaled = [lam**wi * v for wi, v in zip(w.weights, pt)]
    assert evaluate(p, scaled) == lam**d * evaluate(p, pt)


@settings(max_examples=100)
@given(polynomials(n=2, max_degree=5))
def test_leading_form_idempotent(p):
    assume(not p.is_constant())
    w = W11
    face = HyperplaneFace(w, int(weighted_degree(p, w)))
    lead = leading_form(p, face)
    assert leading_form(lead, face) == lead


@settings(max_examples=60)
@given(polynomials(n=2, max_degree=4, max_terms=4), st.sampled_from([(1, 1), (1, 2), (2, 1)]), st.sampled_from([3, 5]))
def test_substitution_degree_and_leading_form(p, weights, k):
    assume(not p.is_constant())
    w = WeightSystem(weights)
    d = int(weighted_degree(p, w))
    q = substitute_phi(p, k)
    assert weighted_degree(q, w) == k * d
    lead = leading_form(p, HyperplaneFace(w, d))
    powers = [Polynomial.variable(2, i) ** k for i in range(2)]
    assert leading_form(q, HyperplaneFace(w, k * d)) == lead.compose(powers)


@settings(max_examples=60)
@given(polynomials(n=2, max_degree=4, max_terms=4), st.sampled_from([(1, 1), (1, 2), (2, 1), (1, 3)]))
def test_gap_opens_after_substitution(p, weights):
    assume(not p.is_constant())
    w = WeightSystem(weights)
    k = smallest_odd_k(w.delta)
    d = int(weighted_degree(p, w))
    q = substitute_phi(p, k)
    assert gap_check(q, w, k * d, k * d - w.delta).passed

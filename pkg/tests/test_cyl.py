import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from wittenpoly import corpus
from wittenpoly.cyl import (
    SamplingConfig,
    VectorFieldExpr,
    apply,
    bracket,
    decompose_partial,
    development_identities,
    development_quasihomog,
    frame_coefficients,
    gauge_shift,
    generating_fields,
    growth_probe,
    radial_field,
    rho_squared,
    rotation_expansion,
    rotation_field,
    verify_development,
)
from wittenpoly.polyring import Polynomial, WeightSystem, parse
from wittenpoly.radial import RadialExpr


def R(n):
    return RadialExpr.r(n)


def X(n, i):
    return RadialExpr.x(n, i)


# -- radial and rotation fields -------------------------------------------------------


def test_radial_field_examples():
    d_r = radial_field(2)
    assert apply(d_r, R(2)) == 1
    assert float(apply(d_r, X(2, 0)).evaluate(np.array([3.0, 4.0]))) == pytest.approx(0.6)
    assert apply(d_r, RadialExpr.s(2)) == R(2) * 2
    assert apply(d_r, R(2) * R(2)) == R(2) * 2


def test_rotation_examples():
    X01 = rotation_field(0, 1, 2)
    assert apply(X01, R(2)).is_zero()
    assert apply(X01, X(2, 0)) == X(2, 1)
    assert apply(X01, RadialExpr.s(2)).is_zero()
    assert bracket(X01, radial_field(2)).is_zero()
    assert bracket(X01, X01).is_zero()


def test_bracket_examples():
    d_r = radial_field(3)
    assert bracket(d_r, d_r.scale(R(3))) == d_r
    # hand computation: [x1 d0 - x0 d1, x2 d0 - x0 d2] = x2 d1 - x1 d2
    assert bracket(rotation_field(0, 1, 3), rotation_field(0, 2, 3)) == rotation_field(1, 2, 3)


def test_field_names():
    names = generating_fields(3)
    assert set(names) == {"d_r", "X01", "X02", "X12"}
    assert names["X12"] == rotation_field(1, 2, 3)


# -- decomposition of coordinate fields ------------------------------------------------


def test_decomposition_evaluates_correctly():
    dec = decompose_partial(0, 2)
    field = dec.reassembled()
    pt = np.array([3.0, 4.0])
    assert float(apply(field, X(2, 0)).evaluate(pt)) == pytest.approx(1.0)
    assert float(apply(field, X(2, 1)).evaluate(pt)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_decomposition_ray_behaviour(n):
    d_r = radial_field(n)
    for k in range(n):
        dec = decompose_partial(k, n)
        assert dec.reassembled() == VectorFieldExpr.coordinate(n, k)
        assert apply(d_r, dec.g).is_zero()
        for f in dec.f.values():
            # f itself is degree -1 along rays; r*f is constant on them
            assert apply(d_r, R(n) * f).is_zero()
            assert apply(d_r, f) == -f / R(n)


def test_decomposition_rejects_line():
    with pytest.raises(ValueError):
        decompose_partial(0, 1)


# -- development fields -----------------------------------------------------------------


def test_equal_weights_give_radial_field():
    h = parse("x^2 - y^2")
    Y = development_quasihomog(h, WeightSystem((1, 1)))
    assert Y == radial_field(2)
    assert rotation_expansion(WeightSystem((1, 1))).is_zero()


def test_weighted_development_euler_identity():
    w = WeightSystem((2, 3))
    h = parse("x^3 + y^2")
    Y = development_quasihomog(h, w)
    assert apply(Y, R(2)) == 1
    assert apply(Y, h) == R(2) / rho_squared(w) * RadialExpr(h) * 6


def test_rotation_expansion_coefficient():
    w = WeightSystem((2, 3))
    _, rot = frame_coefficients(rotation_expansion(w))
    assert rot[(0, 1)] == X(2, 0) * X(2, 1) * (-1) / rho_squared(w)


def test_development_rejects_non_quasi_homogeneous():
    with pytest.raises(ValueError):
        development_quasihomog(parse("x^3 + x"), WeightSystem((1, 1)))


@pytest.mark.parametrize("name,h,w", corpus.quasi_homogeneous_pairs(), ids=lambda v: v if isinstance(v, str) else "")
def test_identity_suite_on_corpus(name, h, w):
    assert all(development_identities(h, w).values()), name


def test_verify_development_saddle():
    h = parse("x^2 - y^2")
    rep = verify_development(development_quasihomog(h, WeightSystem((1, 1))), h, 10.0)
    assert rep.passed
    assert all(c.status == "pass" for c in rep.conditions.values())


def test_cylinder_model_in_polar_coordinates():
    # h = a(theta) t^n with t = r: the monkey saddle is cos(3 theta) r^3, Y = d_t = d_r
    h = parse("x^3 - 3*x*y^2")
    rep = verify_development(radial_field(2), h, 5.0, SamplingConfig(seed=3))
    assert rep.passed


def test_doubled_radial_field_fails_unit_speed():
    h = parse("x^2 - y^2")
    rep = verify_development(radial_field(2).scale(2), h, 10.0)
    assert rep.conditions["iii"].status == "fail"
    assert not rep.passed


def test_verify_development_needs_positive_c():
    with pytest.raises(ValueError):
        verify_development(radial_field(2), parse("x^2 - y^2"), 0.0)


# -- gauge and growth -----------------------------------------------------------------


def test_gauge_identity_and_radial_weight():
    h = parse("x^2")
    assert gauge_shift(h, 1).max_residual <= 1e-15
    rep = gauge_shift(parse("x^2 + 0*y"), R(2))
    assert rep.points == 100 and rep.max_residual <= 1e-10


def test_gauge_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        gauge_shift(parse("x^2 + 0*y"), -1)


def test_growth_of_s():
    rep = growth_probe(RadialExpr.s(2), [], [2, 4, 8, 16, 32, 64])
    assert rep.exponent == pytest.approx(2.0, abs=0.05)


def test_rational_bump_grows_under_rotation():
    f, word = corpus.rational_field()
    rep = growth_probe(f, word, [4, 8, 16, 32, 64, 128])
    assert rep.verdict == "polynomial"
    assert rep.exponent == pytest.approx(1.0, abs=0.05)
    # without the rotation the function itself stays bounded
    assert growth_probe(f, [], [4, 8, 16, 32, 64, 128]).verdict == "bounded"


def test_exponential_has_no_polynomial_fit():
    rep = growth_probe(lambda x: np.exp(np.linalg.norm(x, axis=-1)), [], [2, 4, 8, 16, 32], n=2)
    assert rep.verdict == "unbounded/no-fit"


def test_field_names_need_dimension_for_callables():
    with pytest.raises(ValueError):
        growth_probe(lambda x: x[..., 0], ["X01"], [2, 4])


# -- properties -------------------------------------------------------------------------


def _random_expr(data, n):
    """A random expression built twice: symbolically and as a float function."""
    leaves = [
        (RadialExpr.r(n), lambda p: np.linalg.norm(p, axis=-1)),
        (RadialExpr.s(n), lambda p: np.sum(p**2, axis=-1)),
    ] + [(X(n, i), (lambda i: lambda p: p[..., i])(i)) for i in range(n)]
    sym, fn = leaves[data.draw(st.integers(0, len(leaves) - 1))]
    for _ in range(data.draw(st.integers(1, 4))):
        osym, ofn = leaves[data.draw(st.integers(0, len(leaves) - 1))]
        c = data.draw(st.integers(1, 3))
        op = data.draw(st.sampled_from(["+", "-", "*", "/", "+c"]))
        if op == "+":
            sym, fn = sym + osym, (lambda f, g: lambda p: f(p) + g(p))(fn, ofn)
        elif op == "-":
            sym, fn = sym - osym, (lambda f, g: lambda p: f(p) - g(p))(fn, ofn)
        elif op == "*":
            sym, fn = sym * osym, (lambda f, g: lambda p: f(p) * g(p))(fn, ofn)
        elif op == "/":
            # divide by r + c or s + c, which never vanish
            if data.draw(st.booleans()):
                den, dfn = RadialExpr.r(n) + c, (lambda c: lambda p: np.linalg.norm(p, axis=-1) + c)(c)
            else:
                den, dfn = RadialExpr.s(n) + c, (lambda c: lambda p: np.sum(p**2, axis=-1) + c)(c)
            sym, fn = sym / den, (lambda f, g: lambda p: f(p) / g(p))(fn, dfn)
        else:
            sym, fn = sym + c, (lambda f, c: lambda p: f(p) + c)(fn, c)
    return sym, fn


@settings(max_examples=500)
@given(st.data())
def test_quotient_ring_soundness(data):
    n = data.draw(st.integers(1, 3))
    sym, fn = _random_expr(data, n)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**16)))
    dirs = rng.normal(size=(20, n))
    pts = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * rng.uniform(1, 5, size=(20, 1))
    got = np.asarray(sym.evaluate(pts), dtype=float) * np.ones(20)
    want = fn(pts)
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


@settings(max_examples=40)
@given(st.data())
def test_jacobi_identity(data):
    n = data.draw(st.integers(2, 3))
    fields = list(generating_fields(n).values())
    A, B, C = (fields[data.draw(st.integers(0, len(fields) - 1))] for _ in range(3))
    total = bracket(A, bracket(B, C)) + bracket(B, bracket(C, A)) + bracket(C, bracket(A, B))
    assert total.is_zero()


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 6))
def test_identity_suite_on_weighted_powers(w0, w1, d):
    # x^(L/w0) + y^(L/w1) with L a common multiple of the weights
    L = w0 * w1 * d
    w = WeightSystem((w0, w1))
    h = Polynomial(2, {(L // w0, 0): 1, (0, L // w1): -1})
    assert all(development_identities(h, w).values())

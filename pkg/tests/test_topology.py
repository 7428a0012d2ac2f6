import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from scipy import ndimage

from wittenpoly import corpus
from wittenpoly.polyring import Polynomial, parse
from wittenpoly.topology import (
    Axis,
    CubicalComplex,
    CubicalPair,
    GridSpec,
    GridTooLarge,
    base_cone_model,
    build_sublevel_pair,
    circle_line_model,
    component_count,
    euler_check,
    fiber_betti,
    gf2_rank,
    relative_homology,
    smith_diagonal,
    stabilization_scan,
)

SADDLE = parse("x^2 - y^2")
MONKEY = parse("x^3 - 3*x*y^2")


def grid(R, m, n=2):
    return GridSpec(R, m, n)


# -- pairs --------------------------------------------------------------------------------


def test_sublevel_of_positive_function_is_empty():
    pair = build_sublevel_pair(parse("x^2 + y^2"), 1.0, grid(4, 16))
    assert not pair.sub.any()


def test_sublevel_of_negative_constant_is_everything():
    pair = build_sublevel_pair(Polynomial.constant(2, -1), 0.5, grid(4, 16))
    assert np.array_equal(pair.sub, pair.ambient)
    assert relative_homology(pair).ranks == (0, 0, 0)


def test_saddle_sublevel_has_two_branches():
    pair = build_sublevel_pair(SADDLE, 1.0, grid(4, 128))
    assert component_count(pair) == 2
    # fine-grid oracle: label the pixels of {x^2 - y^2 <= -1} directly
    u = np.linspace(-4, 4, 2001)
    X, Y = np.meshgrid(u, u, indexing="ij")
    _, count = ndimage.label(X**2 - Y**2 <= -1)
    assert count == 2


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(4, 4, 2)
    with pytest.raises(ValueError):
        GridSpec(0, 16, 2)
    with pytest.raises(GridTooLarge):
        build_sublevel_pair(SADDLE, 1.0, GridSpec(4, 64, 2, max_cells=1000))
    with pytest.raises(ValueError):
        build_sublevel_pair(SADDLE, 0.0, grid(4, 16))
    with pytest.raises(ValueError):
        build_sublevel_pair(SADDLE, 1.0, grid(4, 16, n=3))


# -- homology ---------------------------------------------------------------------------------


def test_interval_relative_to_endpoints():
    cx = CubicalComplex([Axis("interval", 8, -1, 1)])
    sub = np.zeros(cx.shape, dtype=bool)
    sub[[0, -1]] = True
    assert relative_homology(CubicalPair(cx, cx.valid.copy(), sub)).ranks == (0, 1)


def test_box_relative_to_nothing():
    pair = build_sublevel_pair(parse("x^2 + y^2"), 1.0, grid(4, 16))
    assert relative_homology(pair).ranks == (1, 0, 0)


def test_box_relative_to_saddle_branches():
    pair = build_sublevel_pair(SADDLE, 1.0, grid(4, 64))
    bv = relative_homology(pair)
    assert bv.ranks == (0, 1, 0)
    assert bv.gf2 == bv.ranks and euler_check(pair, bv)


def test_circle_and_torus():
    circ = CubicalComplex([Axis("periodic", 12, 0, 2 * np.pi)])
    empty = np.zeros(circ.shape, dtype=bool)
    assert relative_homology(CubicalPair(circ, circ.valid.copy(), empty)).ranks == (1, 1)
    torus = CubicalComplex([Axis("periodic", 8, 0, 1), Axis("periodic", 8, 0, 1)])
    empty = np.zeros(torus.shape, dtype=bool)
    assert relative_homology(CubicalPair(torus, torus.valid.copy(), empty)).ranks == (1, 2, 1)


def test_discrete_points():
    pts = CubicalComplex([Axis("discrete", 3)])
    empty = np.zeros(pts.shape, dtype=bool)
    assert relative_homology(CubicalPair(pts, pts.valid.copy(), empty)).ranks == (3,)


def test_smith_diagonal_with_torsion():
    assert smith_diagonal(np.array([[2, 0], [0, 3]])) == [1, 6]
    assert smith_diagonal(np.array([[2, 4], [6, 8]])) == [2, 4]
    assert smith_diagonal(np.array([[0, 0], [0, 0]])) == []


def test_gf2_rank_small():
    assert gf2_rank([0b11, 0b01, 0b10]) == 2
    assert gf2_rank([]) == 0
    assert gf2_rank([0b101, 0b101]) == 1


def test_subcomplex_must_sit_inside():
    cx = CubicalComplex([Axis("discrete", 2)])
    amb = np.zeros(cx.shape, dtype=bool)
    with pytest.raises(ValueError):
        CubicalPair(cx, amb, ~amb)


# -- scans and fibers ------------------------------------------------------------------------


def test_scan_saddle_and_paraboloid():
    res = stabilization_scan(SADDLE, [1, 2, 4], [4, 8], [32, 64])
    assert res.status == "stable" and tuple(res.betti) == (0, 1, 0)
    assert res.window == {"c": [1, 2, 4], "R": [4, 8], "m": [32, 64]}
    res = stabilization_scan(parse("x^2 + y^2"), [1, 2], [4, 8], [16, 32])
    assert tuple(res.betti) == (1, 0, 0)
    assert res.to_csv().splitlines()[0] == "c,R,m,b0,b1,b2"


def test_scan_monkey_saddle():
    res = stabilization_scan(MONKEY, [1, 2, 4], [4, 8], [32, 64])
    assert tuple(res.betti) == (0, 2, 0)


def test_scan_without_plateau():
    # both levels empty the sublevel set in the R = 4 box (|h| <= 16) but not in the R = 8 box
    res = stabilization_scan(SADDLE, [20, 50], [4, 8], [16, 32])
    assert res.status == "unstable" and res.betti is None


def test_scan_needs_increasing_lists():
    with pytest.raises(ValueError):
        stabilization_scan(SADDLE, [1], [4, 8], [16, 32])
    with pytest.raises(ValueError):
        stabilization_scan(SADDLE, [2, 1], [4, 8], [16, 32])


def test_scan_uses_cache(tmp_path):
    from wittenpoly.cache import Cache

    cache = Cache(tmp_path)
    a = stabilization_scan(SADDLE, [1, 2], [4, 8], [16, 32], cache=cache)
    assert cache.misses == 8 and cache.hits == 0
    b = stabilization_scan(SADDLE, [1, 2], [4, 8], [16, 32], cache=cache)
    assert cache.hits == 8
    assert a.to_dict() == b.to_dict()


def test_fiber_examples():
    rep = fiber_betti(SADDLE, 1.0, grid(4, 64))
    assert rep.fiber_reduced[0] == 1 and rep.pair == (0, 1, 0) and rep.les_consistent
    rep = fiber_betti(parse("x^2 + y^2"), 1.0, grid(4, 32))
    assert rep.fiber_reduced is None and rep.pair == (1, 0, 0) and rep.les_consistent
    rep = fiber_betti(MONKEY, 8.0, grid(8, 64))
    assert rep.fiber_reduced[0] == 2 and rep.pair[1] == 2 and rep.les_consistent
    assert "retract" in rep.to_dict()["assumption"]


# -- model comparisons -----------------------------------------------------------------------


def test_circle_line_models():
    rep = circle_line_model(np.cos, m=256)
    # the product N x [-T, T] is 2-dimensional, so the direct vector carries a trailing 0
    assert rep.direct == (0, 2, 0) and rep.predicted == (0, 2) and rep.match
    rep = circle_line_model(lambda th: 2 + np.cos(th), m=64)
    assert rep.match and rep.direct == (0, 0, 0)
    rep = circle_line_model(lambda th: -np.ones_like(th), m=64)
    assert rep.match and rep.direct == (0, 0, 0)


def test_base_cone_models():
    rep = base_cone_model("circle", r=1, s=0)
    assert rep.direct == (0, 1, 1) and rep.match
    rep = base_cone_model("points:2", r=1, s=0)
    assert rep.direct == (0, 2) and rep.match
    rep = base_cone_model("circle", r=1, s=1, m=16, m_fiber=8)
    assert rep.match and rep.direct == (0, 1, 1, 0)
    rep = base_cone_model("circle", r=0, s=1, m=16, m_fiber=8)
    assert rep.direct == (1, 1, 0)  # empty sublevel: plain homology of N x box
    with pytest.raises(ValueError):
        base_cone_model("sphere")


def test_model_fixtures_are_reproduced():
    for name, doc in corpus.models().items():
        if doc["model"] == "circle_times_line":
            rep = circle_line_model(corpus.model_function(doc["g"]), m=64)
        else:
            rep = base_cone_model(doc["N"], doc["r"], doc["s"], m=16, m_fiber=8)
        n = max(len(rep.direct), len(doc["expected"]))
        assert list(rep.direct) + [0] * (n - len(rep.direct)) == doc["expected"] + [0] * (n - len(doc["expected"])), name


# -- properties ---------------------------------------------------------------------------------


@settings(max_examples=60)
@given(st.integers(8, 14), st.integers(8, 14), st.floats(0.2, 0.7), st.integers(0, 2**16))
def test_random_planar_pairs_match_independent_counts(mx, my, density, seed):
    rng = np.random.default_rng(seed)
    cx = CubicalComplex([Axis("interval", mx), Axis("interval", my)])
    squares = rng.random((mx, my)) < density
    top = np.zeros(cx.shape, dtype=bool)
    top[1::2, 1::2] = squares
    sub = cx.close(top)
    pair = CubicalPair(cx, cx.valid.copy(), sub)
    bv = relative_homology(pair, gf2=True)
    assert bv.gf2 == bv.ranks
    assert euler_check(pair, bv)
    # squares sharing a vertex are connected in the closure
    _, b0 = ndimage.label(squares, structure=np.ones((3, 3)))
    dims = cx.dims[sub]
    chi = sum((-1) ** k * int(np.sum(dims == k)) for k in range(3))
    if b0 == 0:
        assert bv.ranks == (1, 0, 0)
    else:
        assert bv.ranks == (0, b0 - 1, b0 - chi)


@settings(max_examples=20)
@given(st.integers(0, 2**16))
def test_random_3d_pairs_are_consistent(seed):
    rng = np.random.default_rng(seed)
    cx = CubicalComplex([Axis("interval", 6)] * 3)
    top = np.zeros(cx.shape, dtype=bool)
    top[1::2, 1::2, 1::2] = rng.random((6, 6, 6)) < 0.45
    pair = CubicalPair(cx, cx.valid.copy(), cx.close(top))
    bv = relative_homology(pair, gf2=True)
    assert bv.consistent() and euler_check(pair, bv)
    sub = relative_homology(pair.sub_as_pair(), gf2=True)
    if top.any():
        # long exact sequence over the contractible box
        assert bv.ranks[0] == 0
        assert bv.ranks[1] == sub.ranks[0] - 1
        assert bv.ranks[2:] == sub.ranks[1:3]

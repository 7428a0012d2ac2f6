"""Differential forms on R^n with exact radial-rational coefficients.

:class:`PolyForm` is the symbolic object (exterior derivative, wedge,
Witten differential ``d_h w = dw + dh ^ w``).  :class:`PointForm` is the
value of a form at one point, used for the radial split
``w = w_par ^ dr + w_perp``, the split identity check, the cone complex
of the restriction map, and the remote primitive along rays.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .polyring import Polynomial
from .radial import RadialExpr

Index = tuple[int, ...]


def _sort_sign(idx: Sequence[int]) -> tuple[int, Index]:
    """Sign of the permutation sorting idx, or 0 if an index repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


class PolyForm:
    """k-form sum_I a_I dx_I with increasing multi-indices I."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: dict | None = None):
        if not 0 <= degree <= n:
            raise ValueError(f"degree {degree} outside [0, {n}]")
        self.n = n
        self.degree = degree
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index {idx} is not strictly increasing of length {degree}")
            if any(not 0 <= i < n for i in idx):
                raise ValueError(f"index {idx} out of range")
            c = RadialExpr.coerce(c, n)
            if not c.is_zero():
                clean[idx] = c
        self.coeffs = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, n: int, degree: int) -> PolyForm:
        return cls(n, degree)

    @classmethod
    def function(cls, f) -> PolyForm:
        n = f.n if isinstance(f, RadialExpr) else f.num_vars
        return cls(n, 0, {(): f})

    @classmethod
    def dx(cls, n: int, *indices: int) -> PolyForm:
        sign, idx = _sort_sign(indices)
        if sign == 0:
            return cls(n, len(indices))
        return cls(n, len(indices), {idx: sign})

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"PolyForm(0, degree={self.degree})"
        parts = []
        for idx, c in self.coeffs.items():
            basis = "^".join(f"dx{i}" for i in idx) or "1"
            parts.append(f"[{c}] {basis}")
        return "PolyForm(" + " + ".join(parts) + ")"

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: PolyForm) -> PolyForm:
        self._compat(other)
        acc = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            acc[idx] = acc[idx] + c if idx in acc else c
        return PolyForm(self.n, self.degree, acc)

    def __neg__(self) -> PolyForm:
        return PolyForm(self.n, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: PolyForm) -> PolyForm:
        return self + (-other)

    def scale(self, f) -> PolyForm:
        f = RadialExpr.coerce(f, self.n)
        return PolyForm(self.n, self.degree, {k: f * v for k, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyForm):
            return NotImplemented
        return self.n == other.n and self.degree == other.degree and (self - other).is_zero()

    __hash__ = None

    def _compat(self, other: PolyForm):
        if self.n != other.n or self.degree != other.degree:
            raise ValueError(
                f"incompatible forms: ({self.n}, {self.degree}) vs ({other.n}, {other.degree})"
            )

    def wedge(self, other: PolyForm) -> PolyForm:
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        deg = self.degree + other.degree
        if deg > self.n:
            return _overflow(self.n)
        acc: dict[Index, RadialExpr] = {}
        for i1, c1 in self.coeffs.items():
            for i2, c2 in other.coeffs.items():
                sign, idx = _sort_sign(i1 + i2)
                if sign == 0:
                    continue
                term = c1 * c2 if sign > 0 else -(c1 * c2)
                acc[idx] = acc[idx] + term if idx in acc else term
        return PolyForm(self.n, deg, acc)

    def __xor__(self, other: PolyForm) -> PolyForm:
        return self.wedge(other)

    def at(self, x) -> PointForm:
        x = np.asarray(x, dtype=float)
        return PointForm(self.n, self.degree, {k: float(v.evaluate(x)) for k, v in self.coeffs.items()})

    def on_fields(self, fields: Sequence) -> RadialExpr:
        """Exact value w(X_1, ..., X_k) = sum_I a_I det[X_j^{i}]_{i in I}."""
        if len(fields) != self.degree:
            raise ValueError(f"need {self.degree} fields, got {len(fields)}")
        out = RadialExpr.const(self.n, 0)
        for idx, c in self.coeffs.items():
            out = out + c * _det([[fields[j].comps[i] for j in range(self.degree)] for i in idx], self.n)
        return out


class _DegreeOverflow(PolyForm):
    """Zero form of formal degree > n, produced by an overfull wedge."""

    def __init__(self, n: int):
        self.n = n
        self.degree = n + 1
        self.coeffs = {}

    def __add__(self, other: PolyForm) -> PolyForm:
        self._compat(other)
        return self

    def __neg__(self) -> PolyForm:
        return self

    def scale(self, f) -> PolyForm:
        return self

    def wedge(self, other: PolyForm) -> PolyForm:
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return self

    def at(self, x) -> PointForm:
        return PointForm(self.n, self.degree)


def _overflow(n: int) -> PolyForm:
    return _DegreeOverflow(n)


def _det(mat: list[list[RadialExpr]], n: int) -> RadialExpr:
    k = len(mat)
    if k == 0:
        return RadialExpr.const(n, 1)
    if k == 1:
        return mat[0][0]
    out = RadialExpr.const(n, 0)
    for j in range(k):
        if mat[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _det(minor, n)
        out = out + term if j % 2 == 0 else out - term
    return out


def exterior_derivative(w: PolyForm) -> PolyForm:
    """Coordinate formula dw = sum_I sum_i d_i a_I dx_i ^ dx_I.

    A top-degree form returns the zero form of degree n (formally n+1).
    """
    if w.degree >= w.n:
        return _overflow(w.n)
    acc: dict[Index, RadialExpr] = {}
    for idx, c in w.coeffs.items():
        for i in range(w.n):
            if i in idx:
                continue
            d = c.partial(i)
            if d.is_zero():
                continue
            sign, new = _sort_sign((i,) + idx)
            term = d if sign > 0 else -d
            acc[new] = acc[new] + term if new in acc else term
    return PolyForm(w.n, w.degree + 1, acc)


def wedge(a: PolyForm, b: PolyForm) -> PolyForm:
    return a.wedge(b)


def witten_differential(w: PolyForm, h) -> PolyForm:
    """d_h w = dw + dh ^ w."""
    dh = exterior_derivative(PolyForm.function(RadialExpr.coerce(h, w.n)))
    dw = exterior_derivative(w)
    if isinstance(dw, _DegreeOverflow):
        return dw
    return dw + dh.wedge(w)


def invariant_formula(w: PolyForm, fields: Sequence) -> RadialExpr:
    """dw(X_0..X_k) via the coordinate-free formula with brackets."""
    from .cyl import apply, bracket

    k = w.degree
    out = RadialExpr.const(w.n, 0)
    for j, X in enumerate(fields):
        rest = [f for m, f in enumerate(fields) if m != j]
        term = apply(X, w.on_fields(rest))
        out = out + term if j % 2 == 0 else out - term
    for i, j in itertools.combinations(range(k + 1), 2):
        rest = [f for m, f in enumerate(fields) if m not in (i, j)]
        term = w.on_fields([bracket(fields[i], fields[j])] + rest)
        out = out + term if (i + j) % 2 == 0 else out - term
    return out


def invariant_formula_check(w: PolyForm, fields: Sequence, points: np.ndarray) -> float:
    """Max |coordinate dw(X..) - invariant formula| over sample points."""
    dw = exterior_derivative(w)
    lhs = dw.on_fields(fields) if not isinstance(dw, _DegreeOverflow) else RadialExpr.const(w.n, 0)
    rhs = invariant_formula(w, fields)
    a = np.asarray(lhs.evaluate(points)) * np.ones(len(points))
    b = np.asarray(rhs.evaluate(points)) * np.ones(len(points))
    return float(np.max(np.abs(a - b) / (1 + np.abs(a))))


def random_form(n: int, k: int, rng: np.random.Generator, max_degree: int = 4, terms: int = 3) -> PolyForm:
    """Random k-form with small integer polynomial coefficients."""
    coeffs = {}
    for idx in itertools.combinations(range(n), k):
        acc = {}
        for _ in range(terms):
            exp = tuple(int(v) for v in rng.integers(0, max_degree + 1, size=n))
            if sum(exp) > max_degree:
                continue
            acc[exp] = acc.get(exp, 0) + int(rng.integers(-3, 4))
        coeffs[idx] = Polynomial(n, acc)
    return PolyForm(n, k, coeffs)


def random_polynomial(n: int, rng: np.random.Generator, max_degree: int = 4, terms: int = 4) -> Polynomial:
    acc = {}
    for _ in range(terms):
        exp = tuple(int(v) for v in rng.integers(0, max_degree + 1, size=n))
        if sum(exp) <= max_degree:
            acc[exp] = acc.get(exp, 0) + int(rng.integers(-3, 4))
    return Polynomial(n, acc)


# -- pointwise forms ----------------------------------------------------------


class PointForm:
    """Value of a k-form at a point: increasing index tuple -> float."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: dict | None = None):
        self.n = n
        self.degree = degree
        self.coeffs = {tuple(k): float(v) for k, v in (coeffs or {}).items()}

    @classmethod
    def zero(cls, n: int, degree: int) -> PointForm:
        return cls(n, degree)

    @classmethod
    def covector(cls, v: Sequence[float]) -> PointForm:
        return cls(len(v), 1, {(i,): float(c) for i, c in enumerate(v)})

    @staticmethod
    def sum(*forms: PointForm) -> PointForm:
        out = PointForm(forms[0].n, forms[0].degree)
        for f in forms:
            out = out + f
        return out

    def __repr__(self) -> str:
        return f"PointForm(deg={self.degree}, {self.coeffs})"

    def __add__(self, other: PointForm) -> PointForm:
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            acc[k] = acc.get(k, 0.0) + v
        return PointForm(self.n, self.degree, acc)

    def __sub__(self, other: PointForm) -> PointForm:
        return self + other.scale(-1.0)

    def scale(self, c: float) -> PointForm:
        return PointForm(self.n, self.degree, {k: c * v for k, v in self.coeffs.items()})

    def wedge(self, other: PointForm) -> PointForm:
        deg = self.degree + other.degree
        acc: dict[Index, float] = {}
        if deg <= self.n:
            for i1, c1 in self.coeffs.items():
                for i2, c2 in other.coeffs.items():
                    sign, idx = _sort_sign(i1 + i2)
                    if sign:
                        acc[idx] = acc.get(idx, 0.0) + sign * c1 * c2
        return PointForm(self.n, deg, acc)

    def contract(self, v: Sequence[float]) -> PointForm:
        """Interior product i_v (inserting v in the first slot)."""
        if self.degree == 0:
            return PointForm(self.n, -1)
        acc: dict[Index, float] = {}
        for idx, c in self.coeffs.items():
            for pos, i in enumerate(idx):
                rest = idx[:pos] + idx[pos + 1:]
                acc[rest] = acc.get(rest, 0.0) + (-1) ** pos * v[i] * c
        return PointForm(self.n, self.degree - 1, acc)

    def on_vectors(self, vecs: np.ndarray) -> float:
        """w(v_1..v_k) for the columns of an (n, k) array."""
        if self.degree == 0:
            return self.coeffs.get((), 0.0)
        return float(sum(c * np.linalg.det(vecs[list(idx), :]) for idx, c in self.coeffs.items()))

    def pullback(self, vecs: np.ndarray) -> PointForm:
        """Coefficients on the frame given by the columns of vecs (n, m)."""
        m = vecs.shape[1]
        out = {}
        for J in itertools.combinations(range(m), self.degree):
            out[J] = self.on_vectors(vecs[:, list(J)])
        return PointForm(m, self.degree, out)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def max_abs_diff(self, other: PointForm) -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) for k in keys), default=0.0)

    def vector(self) -> np.ndarray:
        """Coefficients in lexicographic basis order (for tables)."""
        return np.array(
            [self.coeffs.get(idx, 0.0) for idx in itertools.combinations(range(self.n), self.degree)]
        )


# -- radial split ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitForm:
    parallel: PointForm
    perp: PointForm
    point: tuple[float, ...]

    def reassemble(self) -> PointForm:
        dr = PointForm.covector(np.asarray(self.point) / np.linalg.norm(self.point))
        if self.parallel.degree < 0:
            return self.perp
        return self.parallel.wedge(dr) + self.perp


def split_point_form(w: PointForm, x: np.ndarray) -> SplitForm:
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0:
        raise ValueError("the radial split is undefined at the origin")
    unit = x / r
    if w.degree == 0:
        return SplitForm(PointForm(w.n, -1), w, tuple(x))
    par = w.contract(unit).scale((-1) ** (w.degree - 1))
    perp = w - par.wedge(PointForm.covector(unit))
    return SplitForm(par, perp, tuple(x))


def split(w: PolyForm, point) -> SplitForm:
    """w = w_par ^ dr + w_perp at a point, with w_par = (-1)^(k-1) i_{d_r} w."""
    x = np.asarray(point, dtype=float)
    if np.linalg.norm(x) == 0:
        raise ValueError("the radial split is undefined at the origin")
    return split_point_form(w.at(x), x)


def _tangent_frame(unit: np.ndarray) -> np.ndarray:
    n = len(unit)
    q, _ = np.linalg.qr(np.column_stack([unit, np.eye(n)]))
    frame = q[:, 1:n]
    return frame


class _Chart:
    """Great-circle chart (u, t) -> t (x0 + E u)/|x0 + E u| around a point."""

    def __init__(self, x0: np.ndarray):
        self.R = float(np.linalg.norm(x0))
        self.unit = x0 / self.R
        self.E = _tangent_frame(self.unit)

    def point(self, u: np.ndarray, t: float) -> np.ndarray:
        v = self.unit + self.E @ u
        return t * v / np.linalg.norm(v)

    def u_vectors(self, u: np.ndarray, t: float) -> np.ndarray:
        v = self.unit + self.E @ u
        nv = np.linalg.norm(v)
        return t * (self.E / nv - np.outer(v, v @ self.E) / nv**3)


def _five_point(fn, step: float):
    """Fourth-order central difference of fn(s) at s = 0."""
    a, b, c, d = fn(-2 * step), fn(-step), fn(step), fn(2 * step)
    if isinstance(a, PointForm):
        return (a - d + (c - b).scale(8.0)).scale(1 / (12 * step))
    return (a - d + 8 * (c - b)) / (12 * step)


def split_identity_check(w: PolyForm, h: Polynomial, points: np.ndarray, step: float = 1e-3) -> float:
    """Max relative residual of the split identity at the given points.

    Checks (d_h w)_par = d_G w_par + d_G h ^ w_par + (-1)^j (d_t w_perp + d_t h w_perp),
    i.e. the identity for e^h d_h w with the factor e^h divided out.  The
    left side is the exact form d_h w split pointwise; the right side is
    built from finite differences along great circles (d_G) and rays (d_t)
    in a chart at each point.
    """
    j = w.degree
    n = w.n
    lhs_form = witten_differential(w, h)
    hc = h.compiled
    worst = 0.0
    for x0 in np.atleast_2d(points):
        chart = _Chart(np.asarray(x0, dtype=float))
        R = chart.R
        u0 = np.zeros(n - 1)
        U0 = chart.u_vectors(u0, R)
        lhs = split(lhs_form, x0).parallel.pullback(U0)

        def coeffs(kind: str, u: np.ndarray, t: float) -> PointForm:
            y = chart.point(u, t)
            sp = split(w, y)
            part = sp.parallel if kind == "par" else sp.perp
            if part.degree < 0:
                return PointForm(n - 1, -1)
            return part.pullback(chart.u_vectors(u, t))

        def h_at(u, t):
            return float(hc(chart.point(u, t)))

        du = step
        dt = step * R
        # tangential derivatives
        d_h_u = np.array([_five_point(lambda s, e=e: h_at(u0 + s * e, R), du) for e in np.eye(n - 1)])
        d_h_t = _five_point(lambda s: h_at(u0, R + s), dt)
        rhs = PointForm(n - 1, j)
        if j >= 1:
            par0 = coeffs("par", u0, R)
            dG = PointForm(n - 1, j)
            for a, e in enumerate(np.eye(n - 1)):
                deriv = _five_point(lambda s, e=e: coeffs("par", u0 + s * e, R), du)
                dG = dG + PointForm(n - 1, 1, {(a,): 1.0}).wedge(deriv)
            rhs = rhs + dG + PointForm.covector(d_h_u).wedge(par0)
        if j <= n - 1:
            perp0 = coeffs("perp", u0, R)
            dperp = _five_point(lambda s: coeffs("perp", u0, R + s), dt)
            rhs = rhs + (dperp + perp0.scale(d_h_t)).scale((-1) ** j)
        diff = lhs.max_abs_diff(rhs) / (1.0 + lhs.max_abs())
        worst = max(worst, diff)
    return worst


# -- cone of the restriction map ----------------------------------------------


@dataclass
class ConeElement:
    """(w, w') in Omega^j(M) + Omega^{j-1}(U); w' is known on a sample table."""

    global_form: PolyForm
    relative: PolyForm
    region: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.global_form.degree != self.relative.degree + 1:
            raise ValueError("relative part must have degree one less than the global part")

    @property
    def degree(self) -> int:
        return self.global_form.degree

    def table(self) -> np.ndarray:
        return np.array([self.relative.at(x).vector() for x in self.region])

    def global_table(self) -> np.ndarray:
        return np.array([self.global_form.at(x).vector() for x in self.region])

    def __add__(self, other: ConeElement) -> ConeElement:
        if self.region.shape != other.region.shape or not np.array_equal(self.region, other.region):
            raise ValueError("cone elements live on different region tables")
        return ConeElement(self.global_form + other.global_form, self.relative + other.relative, self.region)


def cone_differential(e: ConeElement, restriction: Callable[[PolyForm], PolyForm] | None = None) -> ConeElement:
    """d(w, w') = (dw, -dw' + r(w)); r restricts w to the region (identity on expressions)."""
    restriction = restriction or (lambda f: f)
    dg = exterior_derivative(e.global_form)
    drel = exterior_derivative(e.relative)
    if isinstance(dg, _DegreeOverflow):
        raise ValueError("cone differential of a top-degree element leaves the complex")
    rel = restriction(e.global_form) - drel
    return ConeElement(dg, rel, e.region)


def cone_square_residual(e: ConeElement) -> float:
    """max over the table of |d(d(e))|, both components."""
    if e.degree + 2 > e.global_form.n:
        return 0.0
    dd = cone_differential(cone_differential(e))
    vals = np.concatenate([dd.table().ravel(), dd.global_table().ravel()])
    return float(np.max(np.abs(vals))) if vals.size else 0.0


# -- remote primitive along rays ------------------------------------------------


def exp_poly_tail(a: float, n: int, t: float) -> float:
    """int_t^inf e^{-a tau} tau^n d tau, closed form."""
    if a <= 0:
        raise ValueError("a must be positive")
    s = sum((t * a) ** (i - n) / math.factorial(i) for i in range(n + 1))
    return math.exp(-a * t) * t**n * math.factorial(n) / a * s


def _scaled_tail(a: float, n: int, T: float) -> float:
    """e^{aT} * int_T^inf e^{-a tau} tau^n d tau, free of overflow."""
    s = sum((T * a) ** (i - n) / math.factorial(i) for i in range(n + 1))
    return T**n * math.factorial(n) / a * s


def ray_restriction(p: Polynomial, direction) -> Polynomial:
    """The 1-variable polynomial tau -> p(tau * u) with u = direction/|direction|."""
    from fractions import Fraction

    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    tau = Polynomial.variable(1, 0)
    subs = [tau.scale(Fraction(float(c))) for c in u]
    return p.compose(subs)


@dataclass(frozen=True)
class PrimitiveResult:
    t: np.ndarray
    values: np.ndarray
    truncation: np.ndarray
    tail_bound: np.ndarray
    quad_error: np.ndarray
    chain_residual: float | None


def _poly_growth(p: Polynomial) -> tuple[float, int]:
    deg = p.total_degree()
    deg = 0 if p.is_zero() else int(deg)
    return float(sum(abs(c) for c in p.terms.values())), deg


def check_ray(h: Polynomial, t: float, c: float, horizon: float = 64.0, samples: int = 400) -> None:
    """Raise unless h < -c, h' < 0 and (h/tau)' <= 0 on sampled [t, t*horizon]."""
    taus = np.geomspace(t, t * horizon, samples)[:, None]
    hv = h.compiled(taus)
    dh = h.partial(0).compiled(taus)
    slope = dh * taus[:, 0] - hv  # tau^2 (h/tau)'
    bad = np.where((hv > -c + 1e-12 * (1 + abs(c))) | (dh >= 0) | (slope > 1e-12 * (1 + np.abs(hv))))[0]
    if len(bad):
        raise ValueError(f"ray leaves the negative remote fiber at tau={float(taus[bad[0], 0]):.6g}")


def remote_primitive(
    omega_par,
    h: Polynomial,
    t,
    degree: int = 1,
    c: float | None = None,
    growth: tuple[float, int] | None = None,
    tol: float = 1e-11,
    check_chain: bool = False,
    direction=None,
) -> PrimitiveResult:
    """Gauge-normalised primitive (-1)^j int_t^inf e^{h(tau)-h(t)} w_par(tau) d tau.

    ``h`` is the restriction of the Morse function to the ray (one
    variable); ``omega_par`` a one-variable Polynomial or a vectorised
    callable with declared growth ``(C, m)``: |w_par(tau)| <= C tau^m for
    tau >= 1.  The integral is truncated at T where the tail bound from
    the linear majorant h(tau) - h(T) <= (h(T)/T)(tau - T) falls below tol.
    With ``direction`` given, ``h`` (and a polynomial ``omega_par``) may be
    functions on R^n; they are restricted to the ray through it first.
    """
    if direction is not None:
        if h.num_vars > 1:
            h = ray_restriction(h, direction)
        if isinstance(omega_par, Polynomial) and omega_par.num_vars > 1:
            omega_par = ray_restriction(omega_par, direction)
    if h.num_vars != 1:
        raise ValueError("h must be a one-variable ray restriction (or pass direction)")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if isinstance(omega_par, Polynomial):
        growth = growth or _poly_growth(omega_par)
        wc = omega_par.compiled
        wfun = lambda tau: float(wc(np.array([tau])))  # noqa: E731
    else:
        if growth is None:
            raise ValueError("a callable omega_par needs a declared growth bound (C, m)")
        wfun = lambda tau: float(omega_par(tau))  # noqa: E731
    C, m = growth
    hc = h.compiled
    hfun = lambda tau: float(hc(np.array([tau])))  # noqa: E731
    sign = (-1) ** degree
    vals, Ts, tails, errs = [], [], [], []
    for t0 in ts:
        h0 = hfun(t0)
        c_ray = -h0 if c is None else c
        if c_ray <= 0:
            raise ValueError(f"h(t)={h0} is not below -c at t={t0}")
        check_ray(h, t0, c_ray)
        T = t0 + 1.0
        while True:
            hT = hfun(T)
            a = -hT / T
            tail = C * math.exp(hT - h0) * _scaled_tail(a, m, T) if a > 0 else math.inf
            if tail < tol:
                break
            if T > 1e6 * max(t0, 1.0):
                raise ValueError("tail bound does not converge along the ray")
            T = t0 + 2 * (T - t0)
        val, err = integrate.quad(
            lambda tau: math.exp(hfun(tau) - h0) * wfun(tau), t0, T,
            epsabs=tol * 0.1, epsrel=1e-13, limit=400,
        )
        vals.append(sign * val)
        Ts.append(T)
        tails.append(tail)
        errs.append(err)
    res = PrimitiveResult(ts, np.array(vals), np.array(Ts), np.array(tails), np.array(errs), None)
    if check_chain:
        res = PrimitiveResult(
            res.t, res.values, res.truncation, res.tail_bound, res.quad_error,
            chain_map_residual(omega_par, h, ts, degree, c, growth, tol),
        )
    return res


def chain_map_residual(omega_par, h: Polynomial, ts, degree: int = 1, c=None, growth=None, tol=1e-11) -> float:
    """Residual of P' + h' P = (-1)^{j+1} w_par for the computed primitive P.

    This is the ray component of -dw' + e^h w = ..., with e^h divided out;
    P' is taken by independent central differences of the quadrature.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    dh = h.partial(0).compiled
    wv = omega_par.compiled if isinstance(omega_par, Polynomial) else omega_par
    worst = 0.0
    for t0 in ts:
        step = 1e-3 * t0
        p_plus, p0, p_minus = remote_primitive(omega_par, h, [t0 + step, t0, t0 - step], degree, c, growth, tol).values
        deriv = (p_plus - p_minus) / (2 * step)
        target = (-1) ** (degree + 1) * float(np.asarray(wv(np.array([t0]))).ravel()[0])
        resid = abs(deriv + float(dh(np.array([t0]))) * p0 - target) / (1 + abs(target))
        worst = max(worst, resid)
    return worst

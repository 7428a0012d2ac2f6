"""Exact sparse multivariate polynomials over the rationals.

Polynomials are immutable maps from exponent tuples to nonzero ``Fraction``
coefficients.  Besides ring arithmetic the module knows about weighted
(quasi-homogeneous) degree, Newton support faces and leading forms, the
critical-point certificate used for leading forms, and the odd-power
substitution ``x_i = y_i**k + y_i`` together with its degree-gap check.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

Exponent = tuple[int, ...]


class _MinusInfinity:
    """Weighted degree of the zero polynomial.

    Orders below every integer but refuses arithmetic, so a degree that
    should not exist can never leak into a sum or comparison silently.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MINUS_INFINITY"

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("wittenpoly.MINUS_INFINITY")

    def _no_arith(self, *_):
        raise TypeError("the zero polynomial has no weighted degree")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _no_arith


MINUS_INFINITY = _MinusInfinity()


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError("float coefficients are not exact; pass a Fraction or a 'p/q' string")
    return Fraction(value)


class Polynomial:
    """Sparse polynomial in ``num_vars`` variables with rational coefficients."""

    __slots__ = ("num_vars", "_terms", "_hash", "__dict__")

    def __init__(self, num_vars: int, terms: Mapping[Sequence[int], object] | None = None):
        if num_vars < 1:
            raise ValueError("num_vars must be positive")
        acc: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != num_vars:
                raise ValueError(f"exponent {exp} does not have length {num_vars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _to_fraction(coeff)
            acc[exp] = acc.get(exp, Fraction(0)) + c
        self.num_vars = num_vars
        self._terms = {e: acc[e] for e in sorted(acc) if acc[e] != 0}
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> Polynomial:
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> Polynomial:
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> Polynomial:
        if not 0 <= i < n:
            raise IndexError(f"variable index {i} out of range for {n} variables")
        exp = [0] * n
        exp[i] = 1
        return cls(n, {tuple(exp): 1})

    @classmethod
    def variables(cls, n: int) -> tuple[Polynomial, ...]:
        return tuple(cls.variable(n, i) for i in range(n))

    @classmethod
    def monomial(cls, exp: Sequence[int], coeff=1) -> Polynomial:
        return cls(len(exp), {tuple(exp): coeff})

    # -- basic protocol ---------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.num_vars, Fraction(0))

    def coefficient(self, exp: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def total_degree(self):
        if not self._terms:
            return MINUS_INFINITY
        return max(sum(e) for e in self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.num_vars == other.num_vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.num_vars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num_vars, tuple(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Polynomial({self.num_vars}, {self!s})"

    def __str__(self) -> str:
        return self.to_string()

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        names = list(names) if names else default_names(self.num_vars)
        pieces = []
        for exp in sorted(self._terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            c = self._terms[exp]
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exp) if e
            )
            if not mono:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(mono)
            elif c == -1:
                pieces.append("-" + mono)
            else:
                pieces.append(f"{c}*{mono}")
        return " + ".join(pieces).replace("+ -", "- ")

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise ValueError(
                    f"dimension mismatch: {self.num_vars} vs {other.num_vars} variables"
                )
            return other
        if isinstance(other, (int, Fraction, np.integer)):
            return Polynomial.constant(self.num_vars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for e, c in other._terms.items():
            acc[e] = acc.get(e, 0) + c
        return Polynomial(self.num_vars, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.num_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0) + c1 * c2
        return Polynomial(self.num_vars, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.num_vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> Polynomial:
        c = _to_fraction(c)
        return Polynomial(self.num_vars, {e: c * v for e, v in self._terms.items()})

    def partial(self, i: int) -> Polynomial:
        if not 0 <= i < self.num_vars:
            raise IndexError(f"variable index {i} out of range for {self.num_vars} variables")
        acc = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                acc[tuple(ne)] = c * e[i]
        return Polynomial(self.num_vars, acc)

    def gradient(self) -> tuple[Polynomial, ...]:
        return tuple(self.partial(i) for i in range(self.num_vars))

    def leading_term(self) -> tuple[Exponent, Fraction]:
        """Lexicographically largest term."""
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        e = next(reversed(self._terms))
        return e, self._terms[e]

    def divide_exact(self, q: Polynomial) -> Polynomial | None:
        """Return ``self / q`` when ``q`` divides ``self`` exactly, else None."""
        q = self._coerce(q)
        if q.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        qe, qc = q.leading_term()
        rem = self
        quot: dict[Exponent, Fraction] = {}
        while not rem.is_zero():
            re_, rc = rem.leading_term()
            if any(a < b for a, b in zip(re_, qe)):
                return None
            me = tuple(a - b for a, b in zip(re_, qe))
            mc = rc / qc
            quot[me] = mc
            rem = rem - Polynomial(self.num_vars, {me: mc}) * q
        return Polynomial(self.num_vars, quot)

    def compose(self, subs: Sequence[Polynomial]) -> Polynomial:
        """Substitute polynomial ``subs[i]`` for variable ``i``."""
        if len(subs) != self.num_vars:
            raise ValueError("need one substitution per variable")
        m = subs[0].num_vars
        cache: list[dict[int, Polynomial]] = [{0: Polynomial.constant(m, 1)} for _ in subs]

        def power(i: int, k: int) -> Polynomial:
            table = cache[i]
            if k not in table:
                table[k] = power(i, k - 1) * subs[i]
            return table[k]

        out = Polynomial.zero(m)
        for e, c in self._terms.items():
            term = Polynomial.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    # -- evaluation -------------------------------------------------------
    def evaluate(self, point):
        """Evaluate at a point.

        Exact when every coordinate is an int or Fraction; otherwise the
        float path is used.  The float path accepts arrays of shape
        ``(..., num_vars)`` and sums monomials in float64, so it carries the
        usual cancellation error for large, nearly cancelling terms.
        """
        if isinstance(point, np.ndarray) and point.dtype.kind == "f":
            return self.compiled(point)
        pt = list(point)
        if len(pt) != self.num_vars:
            raise ValueError(f"point has {len(pt)} coordinates, expected {self.num_vars}")
        if all(isinstance(v, (int, Fraction, np.integer)) for v in pt):
            return self._evaluate_exact([_to_fraction(v) for v in pt])
        return float(self.compiled(np.asarray(pt, dtype=float)))

    def _evaluate_exact(self, pt: list[Fraction]) -> Fraction:
        # Horner in the last variable, recursing over the leading ones.
        def horner(terms: dict[Exponent, Fraction], var: int) -> Fraction:
            if var == self.num_vars:
                return sum(terms.values(), Fraction(0))
            groups: dict[int, dict[Exponent, Fraction]] = {}
            for e, c in terms.items():
                groups.setdefault(e[var], {})[e] = c
            acc = Fraction(0)
            for k in range(max(groups), -1, -1):
                acc = acc * pt[var]
                if k in groups:
                    acc += horner(groups[k], var + 1)
            return acc

        if not self._terms:
            return Fraction(0)
        return horner(self._terms, 0)

    @cached_property
    def compiled(self) -> CompiledPolynomial:
        return CompiledPolynomial(self)

    # -- serialisation ----------------------------------------------------
    def to_dict(self, names: Sequence[str] | None = None, weights: Sequence[int] | None = None) -> dict:
        return {
            "vars": list(names) if names else default_names(self.num_vars),
            "weights": list(weights) if weights is not None else [1] * self.num_vars,
            "terms": [
                {"coeff": _fraction_str(c), "exp": list(e)} for e, c in self._terms.items()
            ],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _fraction_str(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def default_names(n: int) -> list[str]:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


class CompiledPolynomial:
    """Vectorised float64 evaluator for a fixed polynomial."""

    def __init__(self, p: Polynomial):
        self.num_vars = p.num_vars
        if p.is_zero():
            self.exps = np.zeros((0, p.num_vars), dtype=np.int64)
            self.coeffs = np.zeros(0)
        else:
            self.exps = np.array(list(p._terms), dtype=np.int64)
            self.coeffs = np.array([float(c) for c in p._terms.values()])
        self.max_exp = self.exps.max(axis=0) if len(self.exps) else np.zeros(p.num_vars, int)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.num_vars:
            raise ValueError(f"points have {x.shape[-1]} coordinates, expected {self.num_vars}")
        if not len(self.coeffs):
            return np.zeros(x.shape[:-1])
        mono = np.ones(x.shape[:-1] + (len(self.coeffs),))
        for i in range(self.num_vars):
            if self.max_exp[i] == 0:
                continue
            powers = x[..., i, None] ** np.arange(self.max_exp[i] + 1)
            mono = mono * powers[..., self.exps[:, i]]
        return mono @ self.coeffs


def arith(p: Polynomial, q: Polynomial, op: str) -> Polynomial:
    if p.num_vars != q.num_vars:
        raise ValueError(f"dimension mismatch: {p.num_vars} vs {q.num_vars} variables")
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def partial_derivative(p: Polynomial, i: int) -> Polynomial:
    return p.partial(i)


def evaluate(p: Polynomial, point):
    return p.evaluate(point)


# -- weights -----------------------------------------------------------------


@dataclass(frozen=True)
class WeightSystem:
    weights: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(v) for v in self.weights)
        if not w or any(v < 1 for v in w):
            raise ValueError(f"weights must be positive integers, got {self.weights}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> WeightSystem:
        return cls((1,) * n)

    @property
    def delta(self) -> int:
        return max(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def degree_of(self, exp: Sequence[int]) -> int:
        return sum(w * e for w, e in zip(self.weights, exp))


def _check_dims(p: Polynomial, w: WeightSystem):
    if len(w) != p.num_vars:
        raise ValueError(f"weight system has {len(w)} entries for {p.num_vars} variables")


def weighted_degree(p: Polynomial, w: WeightSystem):
    """Maximum weighted degree over the terms, or ``MINUS_INFINITY`` for zero."""
    _check_dims(p, w)
    if p.is_zero():
        return MINUS_INFINITY
    return max(w.degree_of(e) for e in p._terms)


def is_quasi_homogeneous(p: Polynomial, w: WeightSystem) -> bool:
    _check_dims(p, w)
    return len({w.degree_of(e) for e in p._terms}) <= 1


def newton_support(p: Polynomial) -> frozenset[Exponent]:
    return frozenset(p._terms)


@dataclass(frozen=True)
class HyperplaneFace:
    """The lattice hyperplane ``sum w_i m_i = degree``."""

    weights: WeightSystem
    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("face degree must be positive")


def leading_form(p: Polynomial, face: HyperplaneFace) -> Polynomial:
    """Sum of the terms of ``p`` on ``face``; every term must lie on or under it."""
    _check_dims(p, face.weights)
    above = [e for e in p._terms if face.weights.degree_of(e) > face.degree]
    if above:
        raise ValueError(f"support points above the hyperplane: {above}")
    return Polynomial(
        p.num_vars,
        {e: c for e, c in p._terms.items() if face.weights.degree_of(e) == face.degree},
    )


def euler_identity_check(f: Polynomial, w: WeightSystem) -> bool:
    """True iff sum w_i x_i df/dx_i == deg_w(f) * f exactly."""
    _check_dims(f, w)
    if f.is_zero():
        return True
    d = weighted_degree(f, w)
    xs = Polynomial.variables(f.num_vars)
    lhs = Polynomial.zero(f.num_vars)
    for i, wi in enumerate(w.weights):
        lhs = lhs + xs[i] * f.partial(i) * wi
    return lhs == f * d


# -- shell geometry and the critical-point certificate -----------------------


def angle_norm(x, w: WeightSystem | Sequence[int]) -> np.ndarray:
    """Weighted norm sqrt(sum |x_i|**(2/w_i)), vectorised over leading axes."""
    weights = np.asarray(w.weights if isinstance(w, WeightSystem) else w, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(np.abs(x) ** (2.0 / weights), axis=-1))


def shell_points(directions: np.ndarray, w: WeightSystem, radius: float = 1.0) -> np.ndarray:
    """Push arbitrary nonzero directions onto the shell ``<x> = radius``."""
    weights = np.asarray(w.weights, dtype=float)
    nrm = angle_norm(directions, w)[..., None]
    return (radius / nrm) ** weights * directions


def sphere_directions(n: int, count: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Deterministic well-spread unit vectors (uniform angles for n=2)."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if n == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * i / count)
        theta = np.pi * (1 + 5**0.5) * i
        return np.stack(
            [np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=-1
        )
    rng = rng or np.random.default_rng(0)
    v = rng.normal(size=(count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class CertificateConfig:
    samples: Mapping[int, int] = field(default_factory=lambda: {2: 10_000, 3: 100_000})
    default_samples: int = 100_000
    restarts: int = 5
    threshold: float = 1e-6

    def samples_for(self, n: int) -> int:
        return self.samples.get(n, self.default_samples)


@dataclass(frozen=True)
class Certificate:
    """Numeric (not rigorous) evidence that a quasi-homogeneous f has no
    critical points off the origin: the minimum of the weighted gradient
    energy over the unit angle-norm shell."""

    passed: bool
    margin: float
    witness: tuple[float, ...] | None
    exact: bool
    kind: str = "numeric-certificate"


def gradient_energy(f: Polynomial, w: WeightSystem):
    """Return F(x) = sum_j <x>^{2 w_j} (df/dx_j)^2 as a vectorised callable."""
    grads = [g.compiled for g in f.gradient()]
    weights = np.asarray(w.weights, dtype=float)

    def energy(x: np.ndarray) -> np.ndarray:
        nrm2 = np.sum(np.abs(x) ** (2.0 / weights), axis=-1)
        return sum(nrm2 ** weights[j] * grads[j](x) ** 2 for j in range(len(grads)))

    return energy


def critical_points_only_origin(
    f: Polynomial, w: WeightSystem, config: CertificateConfig | None = None
) -> Certificate:
    _check_dims(f, w)
    if not is_quasi_homogeneous(f, w):
        raise ValueError("critical point certificate needs a quasi-homogeneous polynomial")
    config = config or CertificateConfig()
    n = f.num_vars
    if n == 1:
        # f = a x^m; its derivative a m x^(m-1) is nonzero off 0 iff a m != 0.
        if f.is_zero() or f.is_constant():
            return Certificate(False, 0.0, (1.0,), exact=True)
        (m,), a = next(iter(f.items()))
        return Certificate(True, float((a * m) ** 2), None, exact=True)
    energy = gradient_energy(f, w)
    dirs = sphere_directions(n, config.samples_for(n))
    pts = shell_points(dirs, w)
    vals = energy(pts)
    order = np.argsort(vals)[: config.restarts]
    best_val = float(vals[order[0]])
    best_pt = pts[order[0]]

    def on_shell(u):
        u = np.asarray(u, dtype=float)
        if not np.any(u):
            u = u + 1e-12
        return shell_points(u[None, :], w)[0]

    for idx in order:
        res = minimize(
            lambda u: float(energy(on_shell(u)[None, :])[0]),
            dirs[idx],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000},
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_pt = on_shell(res.x)
    passed = best_val > config.threshold
    return Certificate(passed, best_val, tuple(float(v) for v in best_pt), exact=False)


# -- Newton support faces -----------------------------------------------------


def _nullspace_vector(rows: list[list[Fraction]], n: int) -> list[Fraction] | None:
    """Basis vector of a one-dimensional rational nullspace, or None."""
    mat = [list(r) for r in rows]
    pivots: list[int] = []
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        pv = mat[row][col]
        mat[row] = [v / pv for v in mat[row]]
        for i in range(len(mat)):
            if i != row and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [Fraction(0)] * n
    vec[fc] = Fraction(1)
    for r, pc in enumerate(pivots):
        vec[pc] = -mat[r][fc]
    return vec


def _integer_normal(vec: Sequence[Fraction]) -> tuple[int, ...]:
    lcm = reduce(math.lcm, (v.denominator for v in vec), 1)
    ints = [int(v * lcm) for v in vec]
    g = reduce(math.gcd, (abs(v) for v in ints), 0) or 1
    return tuple(v // g for v in ints)


def upper_faces(p: Polynomial, max_weight: int = 6) -> list[HyperplaneFace]:
    """Supporting hyperplanes of the Newton support with positive normals.

    Facets (through ``num_vars`` affinely independent support points) come
    first, ordered by weight sum.  Lower-dimensional upper faces follow,
    found by scanning coprime weight vectors with entries up to
    ``max_weight``; they matter when the support has no positive facet.
    """
    pts = sorted(p._terms)
    n = p.num_vars
    seen: dict[frozenset, HyperplaneFace] = {}
    facets: list[HyperplaneFace] = []
    for combo in itertools.combinations(pts, n):
        base = combo[0]
        rows = [[Fraction(a - b) for a, b in zip(q, base)] for q in combo[1:]]
        vec = _nullspace_vector(rows, n)
        if vec is None:
            continue
        normal = _integer_normal(vec)
        if all(v < 0 for v in normal):
            normal = tuple(-v for v in normal)
        if not all(v > 0 for v in normal):
            continue
        w = WeightSystem(normal)
        d = w.degree_of(base)
        if d < 1 or any(w.degree_of(q) > d for q in pts):
            continue
        face_pts = frozenset(q for q in pts if w.degree_of(q) == d)
        if face_pts not in seen:
            seen[face_pts] = HyperplaneFace(w, d)
            facets.append(seen[face_pts])
    facets.sort(key=lambda f: (sum(f.weights.weights), f.weights.weights))
    lower: list[HyperplaneFace] = []
    for normal in itertools.product(range(1, max_weight + 1), repeat=n):
        if reduce(math.gcd, normal) != 1:
            continue
        w = WeightSystem(normal)
        d = max(w.degree_of(q) for q in pts)
        if d < 1:
            continue
        face_pts = frozenset(q for q in pts if w.degree_of(q) == d)
        if face_pts not in seen:
            seen[face_pts] = HyperplaneFace(w, d)
            lower.append(seen[face_pts])
    lower.sort(key=lambda f: (-len([q for q in pts if f.weights.degree_of(q) == f.degree]),
                              sum(f.weights.weights), f.weights.weights))
    return facets + lower


@dataclass(frozen=True)
class CaseBResult:
    is_case_b: bool
    face: HyperplaneFace
    leading: Polynomial
    certificate: Certificate
    reason: str


def detect_case_B(
    p: Polynomial,
    candidate: WeightSystem | HyperplaneFace | None = None,
    config: CertificateConfig | None = None,
) -> CaseBResult:
    """Find a face whose leading form has no critical points off the origin."""
    if p.is_constant():
        raise ValueError("case B detection needs a nonconstant polynomial")
    if candidate is not None:
        if isinstance(candidate, WeightSystem):
            _check_dims(p, candidate)
            candidate = HyperplaneFace(candidate, weighted_degree(p, candidate))
        faces = [candidate]
    else:
        faces = upper_faces(p)
    if not faces:
        raise ValueError("no positive-normal face covers the support")
    first: CaseBResult | None = None
    for face in faces:
        lead = leading_form(p, face)
        cert = critical_points_only_origin(lead, face.weights, config)
        if cert.passed:
            return CaseBResult(True, face, lead, cert, "leading form has isolated critical point")
        if first is None:
            first = CaseBResult(False, face, lead, cert, "not case B (numeric)")
    return first


# -- the odd-power substitution ----------------------------------------------


def substitute_phi(p: Polynomial, k: int, w: WeightSystem | None = None) -> Polynomial:
    """Compose p with x_i = y_i**k + y_i (k odd)."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be an odd positive integer, got {k}")
    if w is not None and k < w.delta + 1:
        import warnings

        warnings.warn(
            f"k={k} < delta+1={w.delta + 1}: the degree gap below the leading face may not open",
            stacklevel=2,
        )
    n = p.num_vars
    subs = [Polynomial.variable(n, i) ** k + Polynomial.variable(n, i) for i in range(n)]
    return p.compose(subs)


def smallest_odd_k(delta: int) -> int:
    k = delta + 1
    return k if k % 2 else k + 1


@dataclass(frozen=True)
class GapReport:
    passed: bool
    offenders: tuple[tuple[Exponent, Fraction, int], ...]


def gap_check(p: Polynomial, w: WeightSystem, d: int, gap_low: int) -> GapReport:
    """Pass iff no term of p has weighted degree strictly between gap_low and d."""
    _check_dims(p, w)
    if gap_low >= d:
        raise ValueError("gap_low must be below d")
    bad = tuple(
        (e, c, w.degree_of(e)) for e, c in p._terms.items() if gap_low < w.degree_of(e) < d
    )
    return GapReport(not bad, bad)


# -- JSON ingestion -----------------------------------------------------------


class PolynomialParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class PolynomialSpec:
    """A parsed polynomial document: the polynomial, names and weights."""

    poly: Polynomial
    names: tuple[str, ...]
    weights: WeightSystem
    meta: Mapping[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = self.poly.to_dict(self.names, self.weights.weights)
        out.update({k: v for k, v in self.meta.items() if k not in out})
        return out


def polynomial_from_dict(doc: Mapping) -> PolynomialSpec:
    if not isinstance(doc, Mapping):
        raise PolynomialParseError("expected a JSON object")
    try:
        names = tuple(doc["vars"])
    except (KeyError, TypeError) as exc:
        raise PolynomialParseError(f"missing field {exc}") from None
    if not names or not all(isinstance(v, str) for v in names):
        raise PolynomialParseError("'vars' must be a nonempty list of names")
    try:
        weights = WeightSystem(tuple(doc.get("weights", [1] * len(names))))
    except (TypeError, ValueError) as exc:
        raise PolynomialParseError(f"bad weights: {exc}") from None
    if len(weights) != len(names):
        raise PolynomialParseError("'weights' and 'vars' differ in length")
    meta = {k: v for k, v in doc.items() if k not in ("vars", "weights", "terms")}
    if "terms" not in doc and isinstance(doc.get("expression"), str):
        try:
            poly = parse(doc["expression"], names)
        except ValueError as exc:
            raise PolynomialParseError(f"bad expression: {exc}") from None
        return PolynomialSpec(poly, names, weights, meta)
    terms = doc.get("terms")
    if not isinstance(terms, list):
        raise PolynomialParseError("'terms' must be a list of {exp, coeff} objects")
    acc = {}
    for t in terms:
        try:
            exp = tuple(int(v) for v in t["exp"])
            coeff = _to_fraction(t["coeff"])
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise PolynomialParseError(f"bad term {t!r}: {exc}") from None
        if len(exp) != len(names):
            raise PolynomialParseError(f"term exponent {list(exp)} has wrong length")
        if any(v < 0 for v in exp):
            raise PolynomialParseError(f"negative exponent in {list(exp)}")
        acc[exp] = acc.get(exp, 0) + coeff
    return PolynomialSpec(Polynomial(len(names), acc), names, weights, meta)


def polynomial_from_json(text: str) -> PolynomialSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolynomialParseError(exc.msg, exc.lineno, exc.colno) from None
    return polynomial_from_dict(doc)


def polynomial_to_json(p: Polynomial, names=None, weights=None) -> str:
    return json.dumps(p.to_dict(names, weights), indent=2)


def parse(expr: str, names: Sequence[str] | None = None) -> Polynomial:
    """Build a polynomial from a small infix expression such as ``"x^3 - 3*x*y^2"``.

    Only ``+ - * ^`` (or ``**``), integer/rational literals and variable
    names are understood; convenient for tests and fixtures.
    """
    import re

    names = list(names) if names else None
    compact = expr.replace(" ", "")
    tokens = re.findall(r"\d+/\d+|\d+|\*\*|[A-Za-z_]\w*|[-+*^()]", compact)
    if "".join(tokens) != compact:
        raise ValueError(f"unrecognized characters in {expr!r}")
    if names is None:
        found = sorted({t for t in tokens if re.match(r"[A-Za-z_]", t)})
        order = ["x", "y", "z"]
        names = [v for v in order if v in found] + [v for v in found if v not in order]
        names = names or ["x"]
    n = len(names)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of {expr!r}")
        pos += 1
        return tokens[pos - 1]

    def expr_():
        sign = 1
        if peek() in ("+", "-"):
            sign = -1 if take() == "-" else 1
        acc = term_() * sign
        while peek() in ("+", "-"):
            op = take()
            t = term_()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term_():
        acc = factor_()
        while peek() == "*":
            take()
            acc = acc * factor_()
        return acc

    def factor_():
        base = atom_()
        if peek() in ("^", "**"):
            take()
            exp = take()
            if not exp.isdigit():
                raise ValueError(f"exponent must be a nonnegative integer, got {exp!r}")
            base = base ** int(exp)
        return base

    def atom_():
        tok = take()
        if tok == "(":
            v = expr_()
            if take() != ")":
                raise ValueError("unbalanced parentheses")
            return v
        if tok == "-":
            return -factor_()
        if re.match(r"\d", tok):
            return Polynomial.constant(n, Fraction(tok))
        if tok in names:
            return Polynomial.variable(n, names.index(tok))
        raise ValueError(f"unexpected token {tok!r}")

    out = expr_()
    if pos != len(tokens):
        raise ValueError(f"trailing input in {expr!r}")
    return out

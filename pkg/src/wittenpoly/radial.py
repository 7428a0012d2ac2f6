"""Exact expressions in x_1..x_n and the Euclidean norm r.

A :class:`RadialExpr` is ``(a + r*b) / D`` with ``a, b`` rational
polynomials in the coordinates and ``D`` a product of powers of polynomial
bases.  ``r**2`` is always rewritten as ``s = sum x_i**2`` so the numerator
stays linear in ``r``; ``1/r`` becomes ``r/s``.  Denominator bases are
kept as opaque factors (never factorised); common factors are cancelled by
trial exact division.  Equality is decided by cross-multiplication, i.e. by
testing whether the difference has a zero numerator.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .polyring import Polynomial

Den = tuple[tuple[Polynomial, int], ...]


def _monic(p: Polynomial) -> tuple[Fraction, Polynomial]:
    _, c = p.leading_term()
    return c, p.scale(1 / c)


def _den_key(base: Polynomial):
    return tuple(base.items())


@lru_cache(maxsize=None)
def _sum_squares(n: int) -> Polynomial:
    return sum((Polynomial.variable(n, i) ** 2 for i in range(n)), Polynomial.zero(n))


class RadialExpr:
    __slots__ = ("n", "a", "b", "den")

    def __init__(self, a: Polynomial, b: Polynomial | None = None, den: Den = ()):
        self.n = a.num_vars
        self.a = a
        self.b = b if b is not None else Polynomial.zero(self.n)
        self.den = den

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, n: int, c) -> RadialExpr:
        return cls(Polynomial.constant(n, c))

    @classmethod
    def poly(cls, p: Polynomial) -> RadialExpr:
        return cls(p)

    @classmethod
    def x(cls, n: int, i: int) -> RadialExpr:
        return cls(Polynomial.variable(n, i))

    @classmethod
    def r(cls, n: int) -> RadialExpr:
        return cls(Polynomial.zero(n), Polynomial.constant(n, 1))

    @classmethod
    def s(cls, n: int) -> RadialExpr:
        return cls(_sum_squares(n))

    @classmethod
    def coerce(cls, value, n: int) -> RadialExpr:
        if isinstance(value, RadialExpr):
            if value.n != n:
                raise ValueError(f"dimension mismatch: {value.n} vs {n}")
            return value
        if isinstance(value, Polynomial):
            if value.num_vars != n:
                raise ValueError(f"dimension mismatch: {value.num_vars} vs {n}")
            return cls(value)
        if isinstance(value, (int, Fraction)):
            return cls.const(n, value)
        raise TypeError(f"cannot coerce {type(value).__name__} to RadialExpr")

    # -- structure --------------------------------------------------------
    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def is_polynomial(self) -> bool:
        return self.b.is_zero() and not self.den

    @property
    def s_poly(self) -> Polynomial:
        return _sum_squares(self.n)

    def _den_poly(self) -> Polynomial:
        out = Polynomial.constant(self.n, 1)
        for base, e in self.den:
            out = out * base**e
        return out

    def __repr__(self) -> str:
        num = f"({self.a}) + r*({self.b})" if not self.b.is_zero() else f"{self.a}"
        if not self.den:
            return f"RadialExpr[{num}]"
        den = " * ".join(f"({b})^{e}" if e > 1 else f"({b})" for b, e in self.den)
        return f"RadialExpr[({num}) / ({den})]"

    # -- normalisation ----------------------------------------------------
    @staticmethod
    def _build(a: Polynomial, b: Polynomial, den: dict) -> RadialExpr:
        """Cancel what exact division allows and return a normalised expression."""
        if a.is_zero() and b.is_zero():
            return RadialExpr(a, b, ())
        items = []
        for key in sorted(den):
            base, e = den[key]
            while e > 0:
                qa = a.divide_exact(base)
                if qa is None:
                    break
                qb = b.divide_exact(base)
                if qb is None:
                    break
                a, b, e = qa, qb, e - 1
            if e > 0:
                items.append((base, e))
        return RadialExpr(a, b, tuple(items))

    @staticmethod
    def _den_dict(den: Den) -> dict:
        return {_den_key(b): (b, e) for b, e in den}

    def _with_extra_den(self, p: Polynomial) -> RadialExpr:
        """Divide by the polynomial p, merging it into known bases when possible."""
        if p.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        c, p = _monic(p)
        a, b = self.a.scale(1 / c), self.b.scale(1 / c)
        den = self._den_dict(self.den)
        # split p into known bases first so s and s^2 do not become unrelated atoms
        for key in sorted(den):
            base, e = den[key]
            while not p.is_constant():
                q = p.divide_exact(base)
                if q is None:
                    break
                p = q
                e += 1
            den[key] = (base, e)
        if not p.is_constant():
            c2, p = _monic(p)
            a, b = a.scale(1 / c2), b.scale(1 / c2)
            key = _den_key(p)
            base, e = den.get(key, (p, 0))
            den[key] = (base, e + 1)
        else:
            k = p.constant_term()
            a, b = a.scale(1 / k), b.scale(1 / k)
        return self._build(a, b, den)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> RadialExpr:
        return RadialExpr.coerce(other, self.n)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        d1 = self._den_dict(self.den)
        d2 = self._den_dict(other.den)
        merged = {}
        for key in set(d1) | set(d2):
            base = (d1.get(key) or d2.get(key))[0]
            merged[key] = (base, max(d1.get(key, (None, 0))[1], d2.get(key, (None, 0))[1]))

        def lift(expr: RadialExpr, mine: dict):
            mult = Polynomial.constant(self.n, 1)
            for key, (base, e) in merged.items():
                missing = e - mine.get(key, (None, 0))[1]
                if missing:
                    mult = mult * base**missing
            return expr.a * mult, expr.b * mult

        a1, b1 = lift(self, d1)
        a2, b2 = lift(other, d2)
        return self._build(a1 + a2, b1 + b2, merged)

    __radd__ = __add__

    def __neg__(self):
        return RadialExpr(-self.a, -self.b, self.den)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        s = self.s_poly
        a = self.a * other.a + s * self.b * other.b
        b = self.a * other.b + self.b * other.a
        den = self._den_dict(self.den)
        for key, (base, e) in self._den_dict(other.den).items():
            den[key] = (base, den.get(key, (base, 0))[1] + e)
        return self._build(a, b, den)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return RadialExpr.const(self.n, 1) / (self ** (-k))
        out = RadialExpr.const(self.n, 1)
        for _ in range(k):
            out = out * self
        return out

    def reciprocal(self) -> RadialExpr:
        if self.is_zero():
            raise ZeroDivisionError("reciprocal of zero")
        # multiply by the conjugate (a - r b): (a + r b)(a - r b) = a^2 - s b^2
        num = RadialExpr(self._den_poly())
        if self.b.is_zero():
            return num._with_extra_den(self.a)
        norm = self.a * self.a - self.s_poly * self.b * self.b
        if norm.is_zero():
            raise ZeroDivisionError("denominator is a zero divisor of the radical ring")
        return (num * RadialExpr(self.a, -self.b))._with_extra_den(norm)

    def __truediv__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if other.is_polynomial() and not other.a.is_zero():
            return self._with_extra_den(other.a)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __eq__(self, other) -> bool:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # -- calculus ---------------------------------------------------------
    def partial(self, i: int) -> RadialExpr:
        """Exact d/dx_i using dr/dx_i = x_i / r."""
        n = self.n
        xi = Polynomial.variable(n, i)
        # d(a + r b) = da + r db + (x_i/r) b = da + r db + r x_i b / s
        top = RadialExpr(self.a.partial(i), self.b.partial(i))
        if not self.b.is_zero():
            top = top + RadialExpr(Polynomial.zero(n), xi * self.b)._with_extra_den(self.s_poly)
        if not self.den:
            return top
        out = top * RadialExpr(Polynomial.constant(n, 1), None, self.den)
        log_deriv = RadialExpr.const(n, 0)
        for base, e in self.den:
            db = base.partial(i)
            if not db.is_zero():
                log_deriv = log_deriv + RadialExpr(db.scale(e))._with_extra_den(base)
        if log_deriv.is_zero():
            return out
        return out - self * log_deriv

    # -- numerics ---------------------------------------------------------
    def evaluate(self, x) -> np.ndarray | float:
        """Float evaluation at points of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        val = self.a.compiled(x) + r * self.b.compiled(x)
        for base, e in self.den:
            val = val / base.compiled(x) ** e
        return val if val.ndim else float(val)


def radial_constants(n: int):
    """Handy (x_1..x_n, r, s) tuple of RadialExpr building blocks."""
    return tuple(RadialExpr.x(n, i) for i in range(n)), RadialExpr.r(n), RadialExpr.s(n)


def as_radial(values: Sequence, n: int) -> tuple[RadialExpr, ...]:
    return tuple(RadialExpr.coerce(v, n) for v in values)

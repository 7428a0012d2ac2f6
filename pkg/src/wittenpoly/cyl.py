"""The standard cylindrical structure on R^n.

Vector fields have :class:`~wittenpoly.radial.RadialExpr` components.  The
constant fields are generated by the radial field ``d_r = (1/r) sum x_i d_i``
and the rotations ``X_ij = x_j d_i - x_i d_j`` (i < j, zero-based indices).
This module builds the quasi-homogeneous development field, checks the
development conditions (i)-(v) on sampled remote fibers, and fits growth
exponents of derivatives along words of constant fields.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .polyring import Polynomial, WeightSystem, is_quasi_homogeneous, sphere_directions, weighted_degree
from .radial import RadialExpr


class VectorFieldExpr:
    """Vector field sum_i comps[i] * d/dx_i with exact components."""

    __slots__ = ("comps",)

    def __init__(self, comps: Sequence):
        if not comps:
            raise ValueError("a vector field needs at least one component")
        first = comps[0]
        n = first.n if isinstance(first, RadialExpr) else len(comps)
        if len(comps) != n:
            raise ValueError(f"{len(comps)} components for {n} variables")
        self.comps = tuple(RadialExpr.coerce(c, n) for c in comps)

    @property
    def n(self) -> int:
        return len(self.comps)

    @classmethod
    def zero(cls, n: int) -> VectorFieldExpr:
        return cls([RadialExpr.const(n, 0)] * n)

    @classmethod
    def coordinate(cls, n: int, k: int) -> VectorFieldExpr:
        return cls([RadialExpr.const(n, int(i == k)) for i in range(n)])

    def __repr__(self) -> str:
        return f"VectorFieldExpr({list(self.comps)})"

    def __add__(self, other: VectorFieldExpr) -> VectorFieldExpr:
        _check(self, other)
        return VectorFieldExpr([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other: VectorFieldExpr) -> VectorFieldExpr:
        _check(self, other)
        return VectorFieldExpr([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self) -> VectorFieldExpr:
        return VectorFieldExpr([-a for a in self.comps])

    def scale(self, f) -> VectorFieldExpr:
        f = RadialExpr.coerce(f, self.n)
        return VectorFieldExpr([f * a for a in self.comps])

    __rmul__ = scale

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorFieldExpr):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __call__(self, e) -> RadialExpr:
        return apply(self, e)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c.evaluate(x), x.shape[:-1]) for c in self.comps], axis=-1)


def _check(a: VectorFieldExpr, b: VectorFieldExpr):
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def radial_field(n: int) -> VectorFieldExpr:
    if n < 1:
        raise ValueError("n must be positive")
    r = RadialExpr.r(n)
    return VectorFieldExpr([RadialExpr.x(n, i) / r for i in range(n)])


def rotation_field(i: int, j: int, n: int) -> VectorFieldExpr:
    """X_ij = x_j d_i - x_i d_j (zero-based, i < j)."""
    if not 0 <= i < j < n:
        raise ValueError(f"rotation needs 0 <= i < j < n, got ({i}, {j}) with n={n}")
    comps = [RadialExpr.const(n, 0)] * n
    comps[i] = RadialExpr.x(n, j)
    comps[j] = -RadialExpr.x(n, i)
    return VectorFieldExpr(comps)


def rotation_pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def generating_fields(n: int) -> dict[str, VectorFieldExpr]:
    """The constant fields d_r and X_ij keyed by name."""
    out = {"d_r": radial_field(n)}
    for i, j in rotation_pairs(n):
        out[f"X{i}{j}"] = rotation_field(i, j, n)
    return out


def apply(Y: VectorFieldExpr, e) -> RadialExpr:
    """Y(e) = sum_i Y_i de/dx_i, exact."""
    e = RadialExpr.coerce(e, Y.n)
    out = RadialExpr.const(Y.n, 0)
    for i, c in enumerate(Y.comps):
        if not c.is_zero():
            d = e.partial(i)
            if not d.is_zero():
                out = out + c * d
    return out


def bracket(Y: VectorFieldExpr, Z: VectorFieldExpr) -> VectorFieldExpr:
    """Lie bracket [Y, Z] = YZ - ZY."""
    _check(Y, Z)
    return VectorFieldExpr([apply(Y, zk) - apply(Z, yk) for yk, zk in zip(Y.comps, Z.comps)])


def frame_coefficients(Y: VectorFieldExpr) -> tuple[RadialExpr, dict[tuple[int, int], RadialExpr]]:
    """Coefficients of Y in the constant frame: Y = f d_r + sum c_ij X_ij.

    f = Y(r); the perpendicular part V = Y - f d_r satisfies x.V = 0 and
    c_ij = (x_j V_i - x_i V_j) / s reassembles it exactly.
    """
    n = Y.n
    f = apply(Y, RadialExpr.r(n))
    V = Y - radial_field(n).scale(f)
    s = RadialExpr.s(n)
    xs = [RadialExpr.x(n, i) for i in range(n)]
    coeffs = {
        (i, j): (xs[j] * V.comps[i] - xs[i] * V.comps[j]) / s for i, j in rotation_pairs(n)
    }
    return f, coeffs


def reassemble(n: int, radial_coeff, rot_coeffs: dict) -> VectorFieldExpr:
    out = radial_field(n).scale(radial_coeff)
    for (i, j), c in rot_coeffs.items():
        out = out + rotation_field(i, j, n).scale(c)
    return out


@dataclass
class PartialDecomposition:
    k: int
    g: RadialExpr
    f: dict[tuple[int, int], RadialExpr]

    def reassembled(self) -> VectorFieldExpr:
        return reassemble(self.g.n, self.g, self.f)


def decompose_partial(k: int, n: int) -> PartialDecomposition:
    """Write d_k = sum f_ij X_ij + g d_r with g = x_k / r.

    f_kj = x_j / s for j > k and f_ik = -x_i / s for i < k; all other
    rotation coefficients vanish.  Verified exactly before returning.
    """
    if n < 2:
        raise ValueError("n = 1 has no rotations; d_1 = (x_1/r) d_r is the pure radial case")
    if not 0 <= k < n:
        raise IndexError(f"coordinate index {k} out of range for n={n}")
    r, s = RadialExpr.r(n), RadialExpr.s(n)
    xs = [RadialExpr.x(n, i) for i in range(n)]
    g = xs[k] / r
    f = {}
    for i, j in rotation_pairs(n):
        if i == k:
            f[(i, j)] = xs[j] / s
        elif j == k:
            f[(i, j)] = -xs[i] / s
        else:
            f[(i, j)] = RadialExpr.const(n, 0)
    dec = PartialDecomposition(k, g, f)
    if not (dec.reassembled() - VectorFieldExpr.coordinate(n, k)).is_zero():
        raise ArithmeticError("partial derivative decomposition failed to reassemble")
    return dec


# -- development for quasi-homogeneous h --------------------------------------


def rho_squared(w: WeightSystem) -> RadialExpr:
    n = len(w)
    return sum(
        (RadialExpr.x(n, k) * RadialExpr.x(n, k) * w.weights[k] for k in range(n)),
        RadialExpr.const(n, 0),
    )


def development_quasihomog(h: Polynomial, w: WeightSystem) -> VectorFieldExpr:
    """Y = (r / rho^2) sum_j w_j x_j d_j with rho^2 = sum w_k x_k^2."""
    if not is_quasi_homogeneous(h, w):
        raise ValueError("h is not quasi-homogeneous for the given weights")
    d = weighted_degree(h, w)
    if h.is_zero() or d < w.delta:
        raise ValueError(f"weighted degree {d} is below max weight {w.delta}")
    n = h.num_vars
    factor = RadialExpr.r(n) / rho_squared(w)
    Y = VectorFieldExpr([factor * RadialExpr.x(n, j) * w.weights[j] for j in range(n)])
    ids = development_identities(h, w, Y)
    failed = [k for k, ok in ids.items() if not ok]
    if failed:
        raise ArithmeticError(f"development identities failed: {failed}")
    return Y


def rotation_expansion(w: WeightSystem) -> VectorFieldExpr:
    """sum_{i<j} x_i x_j (w_i - w_j) / rho^2 * X_ij."""
    n = len(w)
    rho2 = rho_squared(w)
    out = VectorFieldExpr.zero(n)
    for i, j in rotation_pairs(n):
        c = RadialExpr.x(n, i) * RadialExpr.x(n, j) * (w.weights[i] - w.weights[j]) / rho2
        out = out + rotation_field(i, j, n).scale(c)
    return out


def development_identities(h: Polynomial, w: WeightSystem, Y: VectorFieldExpr | None = None) -> dict[str, bool]:
    """The three exact identities behind the quasi-homogeneous development."""
    n = h.num_vars
    if Y is None:
        Y = development_quasihomog(h, w)
    r = RadialExpr.r(n)
    rho2 = rho_squared(w)
    d = weighted_degree(h, w)
    return {
        "Y(r)=1": apply(Y, r) == 1,
        "Y(h)=(r/rho^2) d h": apply(Y, h) == r / rho2 * RadialExpr(h) * d,
        "r(Y-d_r)=rotation expansion": (Y - radial_field(n)).scale(r) == rotation_expansion(w),
    }


# -- growth probes ------------------------------------------------------------


@dataclass(frozen=True)
class GrowthConfig:
    fit_residual: float = 0.25
    bounded_exponent: float = 0.1
    directions: int = 720
    fd_step: float = 1e-4


@dataclass(frozen=True)
class GrowthReport:
    exponent: float
    constant: float
    residual: float
    verdict: str  # "polynomial" | "bounded" | "unbounded/no-fit"
    radii: tuple[float, ...] = ()
    sups: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "residual": self.residual,
            "verdict": self.verdict,
            "radii": list(self.radii),
            "sups": list(self.sups),
        }


def _fd_apply(Y: VectorFieldExpr, g: Callable, step: float) -> Callable:
    def derived(x):
        x = np.asarray(x, dtype=float)
        v = Y.evaluate(x)
        eps = step * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
        return (g(x + eps * v) - g(x - eps * v)) / (2 * eps[..., 0])

    return derived


def sphere_sup(fn: Callable, n: int, radius: float, directions: int) -> float:
    dirs = sphere_directions(n, directions if n > 1 else 2)
    return float(np.max(np.abs(fn(radius * dirs))))


def growth_probe(
    f,
    word: Sequence[VectorFieldExpr | str],
    radii: Sequence[float],
    n: int | None = None,
    config: GrowthConfig | None = None,
) -> GrowthReport:
    """Fit sup_{|x|=R} |D f| ~ C R^k for the operator D = word[0] ... word[-1].

    Symbolic when f is a RadialExpr (or Polynomial); nested central
    differences when f is a plain vectorised callable.
    """
    config = config or GrowthConfig()
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing with at least two entries")
    if isinstance(f, Polynomial):
        f = RadialExpr(f)
    if isinstance(f, RadialExpr):
        n = f.n
    if any(isinstance(Y, str) for Y in word):
        if n is None:
            raise ValueError("dimension n is required to resolve field names")
        named = generating_fields(n)
        word = [named[Y] if isinstance(Y, str) else Y for Y in word]
    if isinstance(f, RadialExpr):
        expr = f
        for Y in reversed(list(word)):
            expr = apply(Y, expr)
        fn = expr.evaluate
    else:
        if n is None:
            raise ValueError("dimension n is required for callable fields")
        fn = f
        for Y in reversed(list(word)):
            fn = _fd_apply(Y, fn, config.fd_step)
    with np.errstate(over="ignore", invalid="ignore"):
        sups = [sphere_sup(fn, n, R, config.directions) for R in radii]
    sups_arr = np.asarray(sups)
    if not np.all(np.isfinite(sups_arr)):
        return GrowthReport(math.inf, math.inf, math.inf, "unbounded/no-fit", tuple(radii), tuple(sups))
    if np.all(sups_arr <= 1e-300):
        return GrowthReport(0.0, 0.0, 0.0, "bounded", tuple(radii), tuple(sups))
    floor = max(sups_arr.max() * 1e-14, 1e-300)
    logs = np.log(np.maximum(sups_arr, floor))
    lr = np.log(radii)
    slope, icpt = np.polyfit(lr, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * lr + icpt)) ** 2)))
    if resid > config.fit_residual:
        verdict = "unbounded/no-fit"
    elif slope <= config.bounded_exponent:
        verdict = "bounded"
    else:
        verdict = "polynomial"
    return GrowthReport(float(slope), float(math.exp(icpt)), resid, verdict, tuple(radii), tuple(sups))


# -- development verification -------------------------------------------------


@dataclass
class ConditionResult:
    status: str  # "pass" | "fail" | "vacuous"
    margin: float | None = None
    witness: list[float] | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"status": self.status, "margin": self.margin}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class DevelopmentReport:
    conditions: dict[str, ConditionResult]
    samples: dict[str, int]
    kind: str = "numeric-certificate"

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "samples": self.samples,
            "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
        }


@dataclass(frozen=True)
class SamplingConfig:
    shells: tuple[float, ...] = (2, 4, 8, 16, 32, 64)
    quota: int = 200
    max_draws: int = 200_000
    seed: int = 0
    tolerance: float = 1e-9
    word_depth: int = 1


def sample_region(
    h: Polynomial, predicate: Callable[[np.ndarray], np.ndarray], config: SamplingConfig
) -> np.ndarray:
    """Rejection-sample points with predicate(h(x)) true, per spherical shell."""
    n = h.num_vars
    rng = np.random.default_rng(config.seed)
    hc = h.compiled
    chunks = []
    for R in config.shells:
        kept = np.zeros((0, n))
        drawn = 0
        while len(kept) < config.quota and drawn < config.max_draws:
            batch = 4096
            dirs = rng.normal(size=(batch, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            rad = rng.uniform(R, 2 * R, size=(batch, 1))
            pts = dirs * rad
            kept = np.vstack([kept, pts[predicate(hc(pts))]])
            drawn += batch
        chunks.append(kept[: config.quota])
    return np.vstack(chunks) if chunks else np.zeros((0, n))


def _sign_check(expr: RadialExpr, pts: np.ndarray, scale: np.ndarray, want: str, tol: float) -> ConditionResult:
    if len(pts) == 0:
        return ConditionResult("vacuous", None, None, {"points": 0})
    vals = np.asarray(expr.evaluate(pts)) / scale
    worst = int(np.argmax(vals)) if want == "<=0" else int(np.argmin(vals))
    v = float(vals[worst])
    ok = v <= tol if want == "<=0" else v >= -tol
    margin = -v if want == "<=0" else v
    return ConditionResult(
        "pass" if ok else "fail",
        margin,
        None if ok else [float(t) for t in pts[worst]],
        {"points": int(len(pts))},
    )


def verify_development(
    Y: VectorFieldExpr, h: Polynomial, c: float, config: SamplingConfig | None = None,
    growth: GrowthConfig | None = None,
) -> DevelopmentReport:
    """Check development conditions (i)-(v) and (iv') for Y against h.

    (iii) is exact.  (iv), (iv'), (v) are sampled on the remote fibers
    {h < -c} and {h > c}; (i) and (ii) are growth-probe certificates.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    config = config or SamplingConfig()
    growth = growth or GrowthConfig()
    n = h.num_vars
    r = RadialExpr.r(n)
    H = RadialExpr(h)
    conds: dict[str, ConditionResult] = {}

    Yr = apply(Y, r)
    if Yr == 1:
        conds["iii"] = ConditionResult("pass", 0.0)
    else:
        probe = sphere_directions(n, 64) * config.shells[0]
        vals = np.abs(np.asarray(Yr.evaluate(probe)) - 1)
        k = int(np.argmax(vals))
        conds["iii"] = ConditionResult("fail", -float(vals[k]), [float(t) for t in probe[k]])

    neg = sample_region(h, lambda v: v < -c, config)
    pos = sample_region(h, lambda v: v > c, config)
    hc = h.compiled

    def scale(pts):
        if len(pts) == 0:
            return np.ones(0)
        return 1.0 + np.abs(hc(pts)) / np.maximum(np.linalg.norm(pts, axis=-1), 1.0)

    Yh = apply(Y, H)
    # Y(h/r) is of size |h|/r^2, one power of r below Y(h)
    scale_iv = scale(neg) / np.maximum(np.linalg.norm(neg, axis=-1), 1.0)
    conds["iv"] = _sign_check(apply(Y, H / r), neg, scale_iv, "<=0", config.tolerance)
    conds["iv'"] = _sign_check(Yh - H / r, neg, scale(neg), "<=0", config.tolerance)
    conds["v"] = _sign_check(Yh, pos, scale(pos), ">=0", config.tolerance)

    fields = generating_fields(n)
    words: list[tuple[str, list[VectorFieldExpr]]] = [("", [])]
    for depth in range(1, config.word_depth + 1):
        for combo in itertools.product(fields.items(), repeat=depth):
            words.append((".".join(k for k, _ in combo), [v for _, v in combo]))
    radii = [float(R) for R in config.shells]

    f, rot = frame_coefficients(Y)
    coeffs = {"d_r": f} | {f"X{i}{j}": v for (i, j), v in rot.items()}
    worst = -math.inf
    detail = {}
    ok = True
    for name, coeff in coeffs.items():
        for wname, word in words:
            rep = growth_probe(coeff, word, radii, config=growth)
            key = f"{wname}({name})" if wname else name
            detail[key] = rep.verdict
            worst = max(worst, rep.exponent)
            ok &= rep.verdict == "bounded"
    conds["i"] = ConditionResult("pass" if ok else "fail", growth.bounded_exponent - worst, None, detail)

    detail = {}
    ok = True
    worst = -math.inf
    for zname, Z in fields.items():
        B = bracket(Z, Y).scale(r)
        bf, brot = frame_coefficients(B)
        for name, coeff in ({"d_r": bf} | {f"X{i}{j}": v for (i, j), v in brot.items()}).items():
            rep = growth_probe(coeff, [], radii, config=growth)
            detail[f"r[{zname},Y].{name}"] = rep.verdict
            worst = max(worst, rep.exponent)
            ok &= rep.verdict == "bounded"
    conds["ii"] = ConditionResult("pass" if ok else "fail", growth.bounded_exponent - worst, None, detail)

    return DevelopmentReport(conds, {"negative": int(len(neg)), "positive": int(len(pos))})


# -- gauge shift --------------------------------------------------------------


@dataclass(frozen=True)
class GaugeReport:
    max_residual: float
    points: int


def gauge_shift(
    h: Polynomial,
    p,
    forms: Sequence | None = None,
    points: np.ndarray | None = None,
    seed: int = 0,
) -> GaugeReport:
    """Check d_H w = p^{-1} d_h(p w) pointwise for H = h + log p.

    The left side is assembled from dw + (dh + dp/p) ^ w evaluated at
    each point; the right side is the exact form d_h(p w) evaluated and
    divided by p.  Residuals are relative to 1 + |left side|.
    """
    from . import forms as F

    n = h.num_vars
    p = RadialExpr.coerce(p, n)
    rng = np.random.default_rng(seed)
    if points is None:
        dirs = rng.normal(size=(100, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        points = dirs * rng.uniform(2, 10, size=(100, 1))
    pv = np.asarray(p.evaluate(points), dtype=float) * np.ones(len(points))
    if np.any(pv <= 0):
        k = int(np.argmin(pv))
        raise ValueError(f"p is not positive at {points[k].tolist()}")
    if forms is None:
        forms = [F.random_form(n, k, rng, max_degree=2) for k in range(n)]
    dh = F.exterior_derivative(F.PolyForm.function(h))
    dp = F.exterior_derivative(F.PolyForm.function(p))
    worst = 0.0
    for w in forms:
        rhs_form = F.witten_differential(F.PolyForm.function(p).wedge(w), h)
        dw = F.exterior_derivative(w)
        for k, x in enumerate(points):
            pk = pv[k]
            dH = F.PointForm.sum(dh.at(x), dp.at(x).scale(1.0 / pk))
            lhs = F.PointForm.sum(dw.at(x), dH.wedge(w.at(x)))
            rhs = rhs_form.at(x).scale(1.0 / pk)
            diff = lhs.max_abs_diff(rhs) / (1.0 + lhs.max_abs())
            worst = max(worst, diff)
    return GaugeReport(worst, int(len(points)))

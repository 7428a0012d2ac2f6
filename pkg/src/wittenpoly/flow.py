"""The conjugation flow between f + g and its quasi-homogeneous leading part f.

Along y' = v(y, tau) the quantity h_tau(y) with h_tau = f + (1 - tau) g
changes at rate (rho(y) - 1) g(y), so wherever the cutoff rho equals one
the time-one map phi satisfies f(phi(x)) = h(x).  The module integrates
the flow and its variational equations with an embedded Runge-Kutta
pair, checks two linear-ODE growth bounds, and evaluates the closed
forms used for exponential tails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import forms
from .polyring import (
    Certificate,
    Polynomial,
    WeightSystem,
    critical_points_only_origin,
    is_quasi_homogeneous,
    shell_points,
    sphere_directions,
    weighted_degree,
)
from .polyring import angle_norm as _angle_norm


class HypothesisError(ValueError):
    """Input violates a hypothesis of the conjugation construction."""


class EllipticityViolation(RuntimeError):
    def __init__(self, point, tau, ratio):
        super().__init__(f"denominator below a<y>^(2d)/4 at y={list(point)}, tau={tau}: ratio {ratio:.3g}")
        self.point = list(point)
        self.tau = tau
        self.ratio = ratio


class StepUnderflow(RuntimeError):
    pass


def angle_norm(x, w) -> float | np.ndarray:
    """<x> = sqrt(sum |x_i|^(2/w_i))."""
    out = _angle_norm(x, w)
    return float(out) if np.ndim(out) == 0 else out


# -- problem ---------------------------------------------------------------------


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


def smoothstep_slope(s):
    s = np.clip(s, 0.0, 1.0)
    return 30 * s * s * (1 - s) ** 2


@dataclass(frozen=True)
class BoundEstimate:
    a: float
    r1: float
    infimum: float
    radii: tuple[float, ...]
    shell_inf: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "r1": self.r1,
            "infimum": self.infimum,
            "radii": list(self.radii),
            "shell_inf": list(self.shell_inf),
        }


def _derivatives(p: Polynomial):
    n = p.num_vars
    grad = [p.partial(i) for i in range(n)]
    hess = [[grad[i].partial(k) for k in range(n)] for i in range(n)]
    return [q.compiled for q in grad], [[q.compiled for q in row] for row in hess]


def _check_inputs(f: Polynomial, g: Polynomial, w: WeightSystem) -> tuple[int, Certificate]:
    if f.num_vars != g.num_vars or f.num_vars != len(w):
        raise ValueError("f, g and the weights must share the number of variables")
    if f.is_zero() or not is_quasi_homogeneous(f, w):
        raise HypothesisError("f must be a nonzero quasi-homogeneous polynomial")
    d = int(weighted_degree(f, w))
    if not g.is_zero() and weighted_degree(g, w) > d - w.delta:
        raise HypothesisError(
            f"perturbation has weighted degree {weighted_degree(g, w)} > d - delta = {d - w.delta}"
        )
    cert = critical_points_only_origin(f, w)
    if not cert.passed:
        raise HypothesisError(f"f has critical points off the origin (witness {cert.witness})")
    return d, cert


def lower_bound_constant(
    f: Polynomial,
    g: Polynomial,
    w: WeightSystem,
    r_start: float = 1.0,
    r_cap: float = 256.0,
    taus: int = 11,
    directions: int | None = None,
) -> BoundEstimate:
    """Estimate a, r1 with sum_j <y>^(2 w_j) (d_j h_tau)^2 >= a <y>^(2d) for <y> >= r1.

    Shells <y> = r_start * sqrt(2)^k up to r_cap, tau on a grid of ``taus``
    values.  r1 is the smallest shell radius from which the shell infimum
    stays positive and within a factor 2 of its value on the outermost
    shell; a is half the infimum over those shells.
    """
    d, _ = _check_inputs(f, g, w)
    n = f.num_vars
    count = directions or {1: 2, 2: 1440, 3: 4000}.get(n, 4000)
    dirs = sphere_directions(n, count)
    fg = [p.compiled for p in f.gradient()]
    gg = [p.compiled for p in g.gradient()]
    weights = np.asarray(w.weights, dtype=float)
    radii = []
    r = r_start
    while r <= r_cap * (1 + 1e-12):
        radii.append(r)
        r *= math.sqrt(2)
    infs = []
    for r in radii:
        pts = shell_points(dirs, w, r)
        N = r * r
        worst = math.inf
        for tau in np.linspace(0, 1, taus):
            den = sum(N ** weights[j] * (fg[j](pts) + (1 - tau) * gg[j](pts)) ** 2 for j in range(n))
            worst = min(worst, float(np.min(den)) / r ** (2 * d))
        infs.append(worst)
    ref = infs[-1]
    if not ref > 0:
        raise HypothesisError("ellipticity infimum is not positive up to the radius cap")
    start = None
    for i in range(len(radii) - 1, -1, -1):
        if infs[i] > 0 and ref / 2 <= infs[i] <= 2 * ref:
            start = i
        else:
            break
    r1 = radii[start]
    inf = min(infs[start:])
    return BoundEstimate(0.5 * inf, r1, inf, tuple(radii), tuple(infs))


@dataclass(frozen=True)
class ConjugationProblem:
    f: Polynomial
    g: Polynomial
    w: WeightSystem
    d: int
    delta: int
    a: float
    r1: float
    width: float = 1.0
    estimate: BoundEstimate | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        d, _ = _check_inputs(self.f, self.g, self.w)
        if d != self.d or self.delta != self.w.delta:
            raise ValueError("declared degree data disagree with f and w")
        if not (self.a > 0 and self.r1 > 0 and self.width > 0):
            raise ValueError("a, r1 and the cutoff width must be positive")
        fg, fh = _derivatives(self.f)
        gg, gh = _derivatives(self.g)
        object.__setattr__(self, "_fd", (fg, fh, gg, gh))

    @classmethod
    def create(cls, f: Polynomial, g: Polynomial, w: WeightSystem, width: float = 1.0, **kw) -> ConjugationProblem:
        est = lower_bound_constant(f, g, w, **kw)
        d = int(weighted_degree(f, w))
        return cls(f, g, w, d, w.delta, est.a, est.r1, width, est)

    @property
    def n(self) -> int:
        return self.f.num_vars

    @property
    def h(self) -> Polynomial:
        return self.f + self.g

    def h_tau(self, y: np.ndarray, tau: float) -> float:
        return float(self.f.compiled(y) + (1 - tau) * self.g.compiled(y))

    def to_dict(self) -> dict:
        return {
            "f": self.f.to_string(),
            "g": self.g.to_string(),
            "weights": list(self.w.weights),
            "d": self.d,
            "delta": self.delta,
            "a": self.a,
            "r1": self.r1,
            "width": self.width,
        }

    # -- field and its Jacobian --------------------------------------------
    def _pieces(self, y: np.ndarray, tau: float):
        fg, fh, gg, gh = self._fd
        n = self.n
        wts = np.asarray(self.w.weights, dtype=float)
        ay = np.abs(y)
        N = float(np.sum(ay ** (2 / wts)))
        norm = math.sqrt(N)
        s = (norm - self.r1) / self.width
        rho = float(smoothstep(s))
        H = np.array([fg[i](y) + (1 - tau) * gg[i](y) for i in range(n)], dtype=float)
        Nw = N**wts
        D = float(np.sum(Nw * H * H))
        return wts, N, norm, s, rho, H, Nw, D

    def velocity(self, y, tau: float, check: bool = True) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        wts, N, norm, s, rho, H, Nw, D = self._pieces(y, tau)
        if rho == 0.0:
            return np.zeros(self.n)
        if check and D < self.a * norm ** (2 * self.d) / 4:
            raise EllipticityViolation(y, tau, D / norm ** (2 * self.d))
        gv = float(self.g.compiled(y))
        return rho * gv * Nw * H / D

    def velocity_jacobian(self, y, tau: float) -> np.ndarray:
        """Exact dv_i/dy_k from polynomial Hessians and the derivatives of N and rho."""
        y = np.asarray(y, dtype=float)
        n = self.n
        wts, N, norm, s, rho, H, Nw, D = self._pieces(y, tau)
        if rho == 0.0:
            return np.zeros((n, n))
        fg, fh, gg, gh = self._fd
        Hk = np.array([[fh[i][k](y) + (1 - tau) * gh[i][k](y) for k in range(n)] for i in range(n)], dtype=float)
        gv = float(self.g.compiled(y))
        dg = np.array([gg[k](y) for k in range(n)], dtype=float)
        ay = np.abs(y)
        expo = 2 / wts - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            dN = np.where(ay > 0, (2 / wts) * ay**expo * np.sign(y), 0.0)
        dnorm = dN / (2 * norm)
        drho = smoothstep_slope(s) * dnorm / self.width
        dNw = (wts * N ** (wts - 1))[:, None] * dN[None, :]  # d(N^w_i)/dy_k
        dD = np.sum(dNw * (H * H)[:, None], axis=0) + 2 * np.sum((Nw * H)[:, None] * Hk, axis=0)
        v = rho * gv * Nw * H / D
        num_terms = (
            np.outer(Nw * H, drho * gv + rho * dg)
            + rho * gv * (dNw * H[:, None] + Nw[:, None] * Hk)
        )
        return num_terms / D - np.outer(v, dD) / D


# -- integrator -------------------------------------------------------------------

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4


@dataclass
class StepRecord:
    t0: float
    t1: float
    y0: np.ndarray
    y1: np.ndarray


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    accepted: int
    rejected: int


def dormand_prince(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0: np.ndarray,
    rtol: float,
    atol: float | None = None,
    h0: float | None = None,
    max_steps: int = 200_000,
    on_step: Callable[[StepRecord], None] | None = None,
) -> Trajectory:
    """Embedded 5(4) pair with PI step control; integrates forward or backward."""
    atol = rtol if atol is None else atol
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    y = np.array(y0, dtype=float)
    t = t0
    ts, ys = [t], [y.copy()]
    if span == 0:
        return Trajectory(np.array(ts), np.array(ys), 0, 0)
    h = min(span, h0 or span * 0.05)
    k1 = np.asarray(fun(t, y), dtype=float)
    err_prev = 1e-4
    accepted = rejected = 0
    beta, alpha = 0.04, 0.2 - 0.75 * 0.04
    while direction * (t1 - t) > 0:
        if accepted + rejected > max_steps:
            raise StepUnderflow("step budget exhausted")
        h = min(h, abs(t1 - t))
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t={t}")
        hs = direction * h
        k = [k1]
        for i in range(1, 7):
            yi = y + hs * sum(a * kj for a, kj in zip(_A[i], k))
            k.append(np.asarray(fun(t + _C[i] * hs, yi), dtype=float))
        y_new = y + hs * sum(b * kj for b, kj in zip(_B, k) if b)
        err_vec = hs * sum(e * kj for e, kj in zip(_E, k))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t_new = t + hs
            if on_step is not None:
                on_step(StepRecord(t, t_new, y, y_new))
            t, y = t_new, y_new
            k1 = k[6]
            ts.append(t)
            ys.append(y.copy())
            accepted += 1
            fac = 0.9 * max(err, 1e-10) ** -alpha * err_prev**beta
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err**-0.2)
    return Trajectory(np.array(ts), np.array(ys), accepted, rejected)


# -- flow maps --------------------------------------------------------------------


@dataclass
class FlowResult:
    start: np.ndarray
    endpoint: np.ndarray
    jacobian: np.ndarray | None
    drift: float
    displacement: float
    rho_one_throughout: bool
    steps: int
    rejected: int
    deviation: float | None = None  # sup_tau max |dphi^tau/dx - I|

    def to_dict(self) -> dict:
        return {
            "start": self.start.tolist(),
            "endpoint": self.endpoint.tolist(),
            "jacobian": self.jacobian.tolist() if self.jacobian is not None else None,
            "drift": self.drift,
            "displacement": self.displacement,
            "rho_one_throughout": self.rho_one_throughout,
            "steps": self.steps,
            "rejected": self.rejected,
            "deviation": self.deviation,
        }


def _run(problem: ConjugationProblem, x, tol: float, backward: bool, with_jacobian: bool) -> FlowResult:
    x = np.asarray(x, dtype=float)
    n = problem.n
    w = problem.w
    if angle_norm(x, w) <= problem.r1:
        # v vanishes wherever rho does, so the orbit is stationary
        return FlowResult(x, x.copy(), np.eye(n) if with_jacobian else None, 0.0, 0.0, False, 0, 0,
                          0.0 if with_jacobian else None)
    t0, t1 = (1.0, 0.0) if backward else (0.0, 1.0)
    scale0 = 1.0 + abs(problem.h_tau(x, t0))
    drift = 0.0
    disp = 0.0
    all_one = True
    deviation = 0.0

    def rho_at(y):
        return float(smoothstep((angle_norm(y, w) - problem.r1) / problem.width))

    def on_step(rec: StepRecord):
        nonlocal drift, disp, all_one, deviation
        ya, yb = rec.y0[:n], rec.y1[:n]
        one = rho_at(ya) == 1.0 and rho_at(yb) == 1.0
        if one:
            drift += abs(problem.h_tau(yb, rec.t1) - problem.h_tau(ya, rec.t0))
        else:
            all_one = False
        disp = max(disp, angle_norm(yb - x, w))
        if with_jacobian:
            J = rec.y1[n:].reshape(n, n)
            deviation = max(deviation, float(np.max(np.abs(J - np.eye(n)))))

    if with_jacobian:
        def fun(tau, z):
            y = z[:n]
            J = z[n:].reshape(n, n)
            return np.concatenate([problem.velocity(y, tau), (problem.velocity_jacobian(y, tau) @ J).ravel()])

        z0 = np.concatenate([x, np.eye(n).ravel()])
    else:
        def fun(tau, z):
            return problem.velocity(z, tau)

        z0 = x
    traj = dormand_prince(fun, t0, t1, z0, rtol=tol, on_step=on_step)
    end = traj.y[-1]
    return FlowResult(
        x,
        end[:n].copy(),
        end[n:].reshape(n, n).copy() if with_jacobian else None,
        drift / scale0,
        disp,
        all_one,
        traj.accepted,
        traj.rejected,
        deviation if with_jacobian else None,
    )


def integrate_flow(x, problem: ConjugationProblem, tol: float = 1e-10) -> FlowResult:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _run(problem, x, tol, backward=False, with_jacobian=False)


def inverse_map(y, problem: ConjugationProblem, tol: float = 1e-10) -> np.ndarray:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _run(problem, y, tol, backward=True, with_jacobian=False).endpoint


def fd_jacobian(x, problem: ConjugationProblem, tol: float = 1e-12, step: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    eps = step or 1e-4 * max(1.0, float(np.max(np.abs(x))))
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        plus = integrate_flow(x + e, problem, tol).endpoint
        minus = integrate_flow(x - e, problem, tol).endpoint
        cols.append((plus - minus) / (2 * eps))
    return np.column_stack(cols)


@dataclass
class VariationalResult:
    flow: FlowResult
    jacobian: np.ndarray
    fd_jacobian: np.ndarray
    agreement: float  # max |J - J_fd| / max(1, |J|)
    deviation: float
    determinant: float

    @property
    def consistent(self) -> bool:
        return self.agreement <= 1e-4

    def to_dict(self) -> dict:
        return {
            "jacobian": self.jacobian.tolist(),
            "fd_jacobian": self.fd_jacobian.tolist(),
            "agreement": self.agreement,
            "deviation": self.deviation,
            "determinant": self.determinant,
        }


class IntegratorAccuracyError(RuntimeError):
    pass


def variational_flow(x, problem: ConjugationProblem, tol: float = 1e-11, strict: bool = True) -> VariationalResult:
    """Co-integrate the n^2 variational equations and cross-check with finite differences."""
    res = _run(problem, x, tol, backward=False, with_jacobian=True)
    J = res.jacobian
    Jfd = fd_jacobian(x, problem, min(tol, 1e-12))
    agree = float(np.max(np.abs(J - Jfd)) / max(1.0, float(np.max(np.abs(J)))))
    out = VariationalResult(res, J, Jfd, agree, float(res.deviation), float(np.linalg.det(J)))
    if strict and not out.consistent:
        raise IntegratorAccuracyError(f"variational and finite-difference Jacobians differ by {agree:.3g}")
    return out


def seeds_on_shell(problem: ConjugationProblem, radius: float, count: int, rng: np.random.Generator | None = None):
    n = problem.n
    if rng is None:
        dirs = sphere_directions(n, count) if n > 1 else np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    else:
        dirs = rng.normal(size=(count, n))
    return shell_points(dirs, problem.w, radius)


@dataclass
class ProbeReport:
    order: int
    radii: tuple[float, ...]
    sups: tuple[float, ...]
    non_increasing: bool

    def to_dict(self) -> dict:
        return {"order": self.order, "radii": list(self.radii), "sups": list(self.sups), "non_increasing": self.non_increasing}


def _nested_difference(fn, x: np.ndarray, ks: Sequence[int], step: float) -> np.ndarray:
    """Central difference d^p fn / dx_{k1} ... dx_{kp} with a product stencil."""
    total = 0.0
    for signs in itertools.product((1, -1), repeat=len(ks)):
        pt = x.copy()
        for k, sg in zip(ks, signs):
            pt[k] += sg * step
        total = total + np.prod(signs) * fn(pt)
    return total / (2 * step) ** len(ks)


def derivative_boundedness_probe(
    problem: ConjugationProblem,
    order: int,
    radii: Sequence[float],
    seeds: int = 8,
    tol: float = 1e-12,
    step: float | None = None,
    slack: float = 0.05,
) -> ProbeReport:
    """Sup over shell seeds of all order-p partial derivatives of phi (finite differences)."""
    if not 1 <= order <= 3:
        raise ValueError("order must be 1, 2 or 3")
    step = step or {1: 1e-4, 2: 1e-2, 3: 5e-2}[order]
    n = problem.n

    def phi(p):
        return integrate_flow(p, problem, tol).endpoint

    sups = []
    for R in radii:
        best = 0.0
        for x in seeds_on_shell(problem, R, seeds):
            for ks in itertools.combinations_with_replacement(range(n), order):
                best = max(best, float(np.max(np.abs(_nested_difference(phi, x, ks, step)))))
        sups.append(best)
    floor = 1e-6
    mono = all(b <= a * (1 + slack) + floor for a, b in zip(sups, sups[1:]))
    return ProbeReport(order, tuple(radii), tuple(sups), mono)


@dataclass
class VelocityBoundReport:
    b: float
    c: float
    a: float
    max_ratio: float  # max over samples and i of |v_i| / <y>^(w_i - delta)
    bound: float  # b c / a^2

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound

    def to_dict(self) -> dict:
        return {"b": self.b, "c": self.c, "a": self.a, "max_ratio": self.max_ratio, "bound": self.bound,
                "passed": self.passed}


def velocity_bound_check(problem: ConjugationProblem, radii: Sequence[float], count: int = 360) -> VelocityBoundReport:
    """Estimate b, c with |d_i h_tau| <= b <y>^(d - w_i), |g| <= c <y>^(d - delta) and compare |v_i|."""
    n = problem.n
    wts = np.asarray(problem.w.weights, dtype=float)
    fg, _, gg, _ = problem._fd
    b = c = ratio = 0.0
    rows = []
    for R in radii:
        for y in seeds_on_shell(problem, R, count):
            for tau in np.linspace(0, 1, 5):
                H = np.array([fg[i](y) + (1 - tau) * gg[i](y) for i in range(n)], dtype=float)
                b = max(b, float(np.max(np.abs(H) / R ** (problem.d - wts))))
                rows.append((y, tau, R))
            c = max(c, abs(float(problem.g.compiled(y))) / R ** (problem.d - problem.delta))
    for y, tau, R in rows:
        v = problem.velocity(y, tau)
        ratio = max(ratio, float(np.max(np.abs(v) / R ** (wts - problem.delta))))
    return VelocityBoundReport(b, c, problem.a, ratio, b * c / problem.a**2)


# -- linear ODE growth bounds -------------------------------------------------------


@dataclass
class GronwallCase:
    """x' = A(nu) x + b(nu) on nu >= 1 with declared constants."""

    dim: int
    A: Callable[[float], np.ndarray]
    b: Callable[[float], np.ndarray]
    x1: np.ndarray
    k: float
    l: float = 0.0
    eps: float = 1.0
    m: float = 0.0
    horizon: float | None = None


@dataclass
class GronwallReport:
    satisfied: bool
    nu: np.ndarray
    margin: np.ndarray
    norms: np.ndarray
    bound: np.ndarray
    tail: float | None = None
    converged: bool | None = None

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))

    @property
    def max_abs_margin(self) -> float:
        return float(np.max(np.abs(self.margin)))

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "min_margin": self.min_margin,
            "max_abs_margin": self.max_abs_margin,
            "tail": self.tail,
            "converged": self.converged,
            "steps": len(self.nu),
        }


class DeclaredBoundError(ValueError):
    pass


def _verify_declared(case: GronwallCase, horizon: float, a_bound, b_bound, samples: int = 400) -> None:
    if np.linalg.norm(case.x1) > case.m * (1 + 1e-12) + 1e-15:
        raise DeclaredBoundError(f"|x(1)| = {np.linalg.norm(case.x1)} exceeds m = {case.m}")
    for nu in np.geomspace(1.0, horizon, samples):
        a = np.linalg.norm(np.atleast_2d(case.A(nu)), 2)
        if a > a_bound(nu) * (1 + 1e-12):
            raise DeclaredBoundError(f"|A({nu:.4g})| = {a:.4g} exceeds declared {a_bound(nu):.4g}")
        b = np.linalg.norm(np.atleast_1d(case.b(nu)))
        if b > b_bound(nu) * (1 + 1e-12):
            raise DeclaredBoundError(f"|b({nu:.4g})| = {b:.4g} exceeds declared {b_bound(nu):.4g}")


def _integrate_linear(case: GronwallCase, horizon: float, tol: float):
    """Integrate in s = log(nu): dx/ds = nu (A x + b)."""
    def fun(s, x):
        nu = math.exp(s)
        return nu * (np.atleast_2d(case.A(nu)) @ x + np.atleast_1d(case.b(nu)))

    traj = dormand_prince(fun, 0.0, math.log(horizon), np.atleast_1d(np.asarray(case.x1, dtype=float)),
                          rtol=tol, atol=tol * 1e-3)
    return np.exp(traj.t), traj.y


def polynomial_growth_check(case: GronwallCase, tol: float = 1e-12) -> GronwallReport:
    """|x(nu)| <= nu^k (l nu + m - l) given |A| <= k/nu, |b| <= l nu^k, |x(1)| <= m.

    Margin trace: (m - l) - (|x|/nu^k - l nu), which vanishes identically
    in the scalar equality case.
    """
    horizon = case.horizon or 1e3
    k, l, m = case.k, case.l, case.m
    _verify_declared(case, horizon, lambda nu: k / nu, lambda nu: l * nu**k)
    nu, xs = _integrate_linear(case, horizon, tol)
    norms = np.linalg.norm(xs, axis=1)
    bound = nu**k * (l * nu + m - l)
    margin = (m - l) - (norms / nu**k - l * nu)
    slack = 1e-9 * (1 + np.abs(l * nu + m - l))
    return GronwallReport(bool(np.all(margin >= -slack)), nu, margin, norms, bound)


def integrable_growth_check(case: GronwallCase, tol: float = 1e-12, tail_tol: float = 1e-5) -> GronwallReport:
    """|x(nu)| <= (m + 1) e^(k/eps) given |A|, |b| <= k/nu^(1+eps), |x(1)| <= m.

    Margin trace: (m + 1) e^(k/eps) - (|x| + 1) e^(k/(eps nu^eps)); the
    trajectory also has to settle: past the horizon it can move at most
    (k / (eps nu^eps)) (sup |x| + 1).
    """
    horizon = case.horizon or 1e12
    k, e, m = case.k, case.eps, case.m
    decl = lambda nu: k / nu ** (1 + e)  # noqa: E731
    _verify_declared(case, horizon, decl, decl)
    nu, xs = _integrate_linear(case, horizon, tol)
    norms = np.linalg.norm(xs, axis=1)
    cap = (m + 1) * math.exp(k / e)
    bound = np.full_like(nu, cap)
    margin = cap - (norms + 1) * np.exp(k / (e * nu**e))
    tail = k / (e * horizon**e) * (float(np.max(norms)) + 1)
    ok = bool(np.all(margin >= -1e-9 * cap)) and bool(np.all(norms <= cap * (1 + 1e-12)))
    return GronwallReport(ok, nu, margin, norms, bound, tail, tail <= tail_tol * (1 + float(np.max(norms))))


def random_gronwall_case(rng: np.random.Generator, kind: str, dim: int = 3) -> GronwallCase:
    """Time-varying matrix problem using half the declared coefficient bound."""
    P = rng.normal(size=(dim, dim))
    Q = rng.normal(size=(dim, dim))
    P /= np.linalg.norm(P, 2)
    Q /= np.linalg.norm(Q, 2)
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    x1 = rng.normal(size=dim)
    k = float(rng.uniform(0.5, 2.0))
    m = 1.05 * float(np.linalg.norm(x1))  # declared with headroom so the bound is strict at nu = 1

    def unit_mix(nu):
        # convex combination of two unit-norm matrices stays within norm 1
        c = 0.5 + 0.5 * math.cos(math.log(nu))
        return c * P + (1 - c) * Q

    if kind == "polynomial":
        l = float(rng.uniform(0.1, 2.0))
        return GronwallCase(dim, lambda nu: 0.5 * k / nu * unit_mix(nu),
                            lambda nu: 0.5 * l * nu**k * math.sin(3 * math.log(nu)) * u, x1, k, l=l, m=m)
    if kind == "integrable":
        e = 0.5
        return GronwallCase(dim, lambda nu: 0.5 * k / nu ** (1 + e) * unit_mix(nu),
                            lambda nu: 0.5 * k / nu ** (1 + e) * math.cos(math.log(nu)) * u, x1, k, eps=e, m=m)
    raise ValueError(f"unknown kind {kind!r}")


# -- closed forms ------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    closed_form: float
    quadrature: float
    residual: float

    def to_dict(self) -> dict:
        return {"closed_form": self.closed_form, "quadrature": self.quadrature, "residual": self.residual}


def exp_integral_identity(a: float, n: int, t: float) -> IdentityReport:
    """int_t^inf e^(-a tau) tau^n d tau: closed form against adaptive quadrature."""
    if not (a > 0 and t > 0) or n < 0 or int(n) != n:
        raise ValueError("need a > 0, t > 0 and a nonnegative integer n")
    closed = forms.exp_poly_tail(a, int(n), t)
    # substitute tau = t + u and pull out e^(-a t) so quad sees an O(1) integrand
    val, err = integrate.quad(lambda u: math.exp(-a * u) * (t + u) ** n, 0, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    quad = math.exp(-a * t) * val
    if not math.isfinite(quad) or err > 1e-9 * abs(val):
        raise RuntimeError("quadrature did not converge")
    return IdentityReport(closed, quad, abs(closed - quad) / abs(closed))


@dataclass
class RemotePrimitiveReport:
    t: np.ndarray
    phi: np.ndarray
    residual: float
    exponent: float
    allowed: float

    @property
    def passed(self) -> bool:
        return self.residual <= 1e-6 and self.exponent <= self.allowed + 0.1

    def to_dict(self) -> dict:
        return {
            "t": self.t.tolist(),
            "phi": self.phi.tolist(),
            "residual": self.residual,
            "exponent": self.exponent,
            "allowed": self.allowed,
            "passed": self.passed,
        }


def remote_primitive_model(h1d: Polynomial, psi: Polynomial, n: int, t: Sequence[float] | None = None) -> RemotePrimitiveReport:
    """phi(t) = -int_t^inf e^(h(tau) - h(t)) psi(tau) d tau, its ODE residual and growth exponent."""
    ts = np.asarray(t if t is not None else np.geomspace(2.0, 64.0, 12), dtype=float)
    res = forms.remote_primitive(psi, h1d, ts, degree=1, check_chain=True)
    phi = res.values
    if len(ts) < 2:
        raise ValueError("the growth fit needs at least two sample points")
    if np.all(np.abs(phi) < 1e-300):
        exponent = 0.0
    else:
        exponent = float(np.polyfit(np.log(ts), np.log(np.abs(phi)), 1)[0])
    return RemotePrimitiveReport(ts, phi, float(res.chain_residual), exponent, float(n + 1))

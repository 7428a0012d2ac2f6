"""Command line front end: classify, develop, compute fibers, conjugate, verify.

Exit codes: 0 verified, 1 refuted, 2 unstable or certificate-only, 3 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy
from scipy.optimize import minimize

from . import __version__, corpus, cyl, flow, forms, topology
from .cache import Cache, canonical
from .polyring import (
    HyperplaneFace,
    Polynomial,
    PolynomialParseError,
    PolynomialSpec,
    WeightSystem,
    detect_case_B,
    gap_check,
    is_quasi_homogeneous,
    leading_form,
    polynomial_from_json,
    smallest_odd_k,
    critical_points_only_origin,
    substitute_phi,
    upper_faces,
    weighted_degree,
)

log = logging.getLogger("wittenpoly")

SCHEMA_VERSION = 1
EXIT = {"verified": 0, "refuted": 1, "unstable": 2, "certificate-only": 2}
USAGE_ERROR = 3
VERDICT_ORDER = ["verified", "certificate-only", "unstable", "refuted"]


class UsageError(Exception):
    pass


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if not verdicts:
        return "certificate-only"
    return max(verdicts, key=VERDICT_ORDER.index)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


# -- classification ---------------------------------------------------------------


def _shell_minimum(h: Polynomial, R: float, dirs: np.ndarray, refine: int = 4) -> float:
    vals = h.compiled(R * dirs)
    best = float(np.min(vals))
    if h.num_vars == 1:
        return best
    on_shell = lambda u: float(h.compiled(R * u / np.linalg.norm(u)))  # noqa: E731
    for i in np.argsort(vals)[:refine]:
        res = minimize(on_shell, dirs[i], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def bounded_below_probe(h: Polynomial, radii=tuple(2.0**k for k in range(1, 11)), count: int = 2000) -> dict:
    """Minimize h on spheres; unbounded below when the shell minima keep falling."""
    n = h.num_vars
    dirs = (
        np.array([[1.0], [-1.0]])
        if n == 1
        else np.random.default_rng(0).normal(size=(count, n))
    )
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    mins = [_shell_minimum(h, R, dirs) for R in radii]
    falling = mins[-1] < -1 and mins[-1] < 1.5 * mins[-3]
    return {"bounded_below": not falling, "radii": list(radii), "shell_minima": mins, "kind": "numeric-certificate"}


def _own_weights(h: Polynomial, given: WeightSystem) -> tuple[WeightSystem, int] | None:
    if is_quasi_homogeneous(h, given):
        return given, int(weighted_degree(h, given))
    for face in upper_faces(h):
        if leading_form(h, face) == h:
            return face.weights, face.degree
    return None


def analyze(spec: PolynomialSpec) -> dict:
    h = spec.poly
    if h.is_constant():
        raise UsageError("the polynomial is constant")
    sign = bounded_below_probe(h)
    out: dict = {"polynomial": h.to_string(list(spec.names)), "case_C_flag": sign["bounded_below"], "sign_probe": sign}
    qh = _own_weights(h, spec.weights)
    if qh is not None:
        w, d = qh
        out.update(case="A", weights=list(w.weights), degree=d, degree_condition=d >= w.delta)
        return out
    try:
        res = detect_case_B(h)
    except ValueError as exc:
        res = None
        out["case_B_error"] = str(exc)
    if res is not None:
        out["case_B_certificate"] = {
            "passed": res.certificate.passed,
            "margin": res.certificate.margin,
            "witness": list(res.certificate.witness) if res.certificate.witness is not None else None,
            "kind": res.certificate.kind,
        }
        out["face"] = {"weights": list(res.face.weights.weights), "degree": res.face.degree}
        out["leading_form"] = res.leading.to_string(list(spec.names))
        if res.is_case_b:
            out["case"] = "B"
            return out
    out["case"] = "C" if sign["bounded_below"] else "unclassified"
    return out


# -- pipeline stages ------------------------------------------------------------------


def develop_stage(h: Polynomial, w: WeightSystem, seed: int, c: float = 10.0) -> dict:
    try:
        Y = cyl.development_quasihomog(h, w)
    except ValueError as exc:
        return {"verdict": "refuted", "error": str(exc)}
    ids = cyl.development_identities(h, w, Y)
    rep = cyl.verify_development(Y, h, c, cyl.SamplingConfig(seed=seed))
    verdict = "verified" if all(ids.values()) and rep.passed else "refuted"
    return {"identities": ids, "exact": True, "conditions": rep.to_dict(), "c": c, "verdict": verdict}


def _scan_job(args):
    h, n, c, R, m = args
    return topology._pair_betti(h, n, c, R, m)


def topology_stage(h: Polynomial, cfg, cache: Cache | None) -> dict:
    n = h.num_vars
    if cfg.jobs > 1:
        # compute the grid in worker processes, then let the scan read the results back
        combos = [(h, n, c, R, m) for c in cfg.scan_c for R in cfg.scan_R for m in cfg.grid]
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_scan_job, combos))
        table = {(c, R, m): b for (_, _, c, R, m), b in zip(combos, results)}
        scan = topology.stabilization_scan(h, cfg.scan_c, cfg.scan_R, cfg.grid, cache=_DictCache(h, table))
    else:
        scan = topology.stabilization_scan(h, cfg.scan_c, cfg.scan_R, cfg.grid, cache=cache)
    out = {"scan": scan.to_dict()}
    if scan.status != "stable":
        out["verdict"] = "unstable"
        return out
    c, R, m = scan.window["c"][-1], scan.window["R"][-1], scan.window["m"][-1]
    fib = topology.fiber_betti(h, c, topology.GridSpec(R, m, n))
    out["fiber"] = fib.to_dict()
    out["fiber_point"] = {"c": c, "R": R, "m": m}
    out["verdict"] = "verified" if fib.les_consistent and fib.pair == tuple(scan.betti) else "refuted"
    return out


class _DictCache:
    """Read-only cache view over precomputed scan results (parallel path)."""

    def __init__(self, h, table):
        self.table = {topology_key(h, c, R, m): {"betti": list(b)} for (c, R, m), b in table.items()}

    def key(self, op, h, params):
        return topology_key(h, params["c"], params["R"], params["m"])

    def get(self, key):
        return self.table.get(key)

    def put(self, key, value):
        pass


def topology_key(h, c, R, m) -> str:
    return Cache.key("relative_homology", h, {"c": c, "R": R, "m": m})


def conjugation_stage(f: Polynomial, g: Polynomial, w: WeightSystem, cfg) -> tuple[dict, list[dict]]:
    try:
        prob = flow.ConjugationProblem.create(f, g, w)
    except flow.HypothesisError as exc:
        return {"verdict": "certificate-only", "reason": str(exc)}, []
    shells = cfg.shells or [prob.r1 + 2, 2 * (prob.r1 + 2)]
    rows = []
    worst = {"conjugacy": 0.0, "drift": 0.0, "roundtrip": 0.0, "displacement": 0.0}
    per_shell = max(1, cfg.seeds // len(shells))
    for R in shells:
        for x in flow.seeds_on_shell(prob, R, per_shell):
            res = flow.integrate_flow(x, prob, cfg.tol)
            hx = float(prob.h.compiled(x))
            conj = abs(float(prob.f.compiled(res.endpoint)) - hx) / (1 + abs(hx))
            back = flow.inverse_map(res.endpoint, prob, cfg.tol)
            rt = float(np.max(np.abs(back - x)))
            rows.append({
                "seed": [float(v) for v in x],
                "shell": R,
                "drift": res.drift,
                "displacement": res.displacement,
                "conjugacy_residual": conj if res.rho_one_throughout else None,
                "roundtrip": rt,
            })
            if res.rho_one_throughout:
                worst["conjugacy"] = max(worst["conjugacy"], conj)
            worst["drift"] = max(worst["drift"], res.drift)
            worst["roundtrip"] = max(worst["roundtrip"], rt)
            worst["displacement"] = max(worst["displacement"], res.displacement)
    out = {"problem": prob.to_dict(), "bounds": prob.estimate.to_dict(), "shells": shells, "worst": worst,
           "seeds": len(rows)}
    ok = worst["conjugacy"] <= 1e-6 and worst["drift"] <= 1e-8 and worst["roundtrip"] <= 1e-5
    if cfg.order:
        probe = flow.derivative_boundedness_probe(prob, cfg.order, [s * 2**k for s in shells[:1] for k in range(3)])
        out["derivative_probe"] = probe.to_dict()
        ok &= probe.non_increasing
    out["verdict"] = "verified" if ok else "refuted"
    return out, rows


def reduction_stage(h: Polynomial, face: HyperplaneFace) -> tuple[dict, tuple[Polynomial, Polynomial, WeightSystem] | None]:
    """Split h = f + g on the face; substitute odd powers when the degree gap is closed."""
    w, d = face.weights, face.degree
    f = leading_form(h, face)
    gap = gap_check(h, w, d, d - w.delta)
    out: dict = {"face": {"weights": list(w.weights), "degree": d}, "gap": _gap_dict(gap), "substituted": False}
    if gap.passed:
        return out, (f, h - f, w)
    k = smallest_odd_k(w.delta)
    hk = substitute_phi(h, k)
    face_k = HyperplaneFace(w, k * d)
    fk = leading_form(hk, face_k)
    gap_k = gap_check(hk, w, k * d, k * d - w.delta)
    wide = gap_check(hk, w, k * d, k * d - k)
    cert = critical_points_only_origin(fk, w)
    out.update(
        substituted=True,
        k=k,
        substituted_gap=_gap_dict(gap_k),
        wide_gap_informational=_gap_dict(wide),
        substituted_leading_form=fk.to_string(),
        substituted_certificate={"passed": cert.passed, "margin": cert.margin},
    )
    if not (gap_k.passed and cert.passed):
        return out, None
    return out, (fk, hk - fk, w)


def _gap_dict(g) -> dict:
    return {
        "passed": g.passed,
        "offenders": [{"exp": list(e), "coeff": str(c), "degree": deg} for e, c, deg in g.offenders],
    }


def _force_case(h: Polynomial, spec: PolynomialSpec, cls: dict, case: str) -> dict:
    cls = dict(cls, forced=True, detected_case=cls["case"], case=case)
    if case == "A":
        if not is_quasi_homogeneous(h, spec.weights):
            raise UsageError("cannot force case A: h is not quasi-homogeneous for the given weights")
        cls.update(weights=list(spec.weights.weights), degree=int(weighted_degree(h, spec.weights)))
    elif "face" not in cls:
        try:
            res = detect_case_B(h)
        except ValueError as exc:
            raise UsageError(f"cannot force case B: {exc}") from None
        if not res.is_case_b:
            raise UsageError("cannot force case B: no Newton face passes the critical-point certificate")
        cls.update(face={"weights": list(res.face.weights.weights), "degree": res.face.degree},
                   leading_form=res.leading.to_string(list(spec.names)))
    return cls


def run_pipeline(spec: PolynomialSpec, cfg, cache: Cache | None) -> dict:
    h = spec.poly
    cls = analyze(spec)
    sections: dict = {"classification": cls}
    forced = getattr(cfg, "case", None)
    if forced and forced != cls["case"]:
        cls = _force_case(h, spec, cls, forced)
        sections["classification"] = cls
    verdicts = []
    if cls["case"] == "A":
        w = WeightSystem(tuple(cls["weights"]))
        sections["development"] = develop_stage(h, w, cfg.seed)
        verdicts.append(sections["development"]["verdict"])
    elif cls["case"] == "B":
        face = HyperplaneFace(WeightSystem(tuple(cls["face"]["weights"])), cls["face"]["degree"])
        red, problem = reduction_stage(h, face)
        sections["reduction"] = red
        if problem is None:
            sections["conjugation"] = {"verdict": "certificate-only",
                                       "reason": "reduced leading form fails the critical-point certificate"}
        else:
            sections["conjugation"], _ = conjugation_stage(*problem, cfg)
        verdicts.append(sections["conjugation"]["verdict"])
    else:
        verdicts.append("certificate-only")
    sections["topology"] = topology_stage(h, cfg, cache)
    verdicts.append(sections["topology"]["verdict"])
    if cls["case_C_flag"]:
        sections["case_C"] = {
            "verdict": "certificate-only",
            "note": "h appears bounded below: negative remote fibers are empty; this case is conjectural",
        }
        verdicts.append("certificate-only")
    sections["verdict"] = combine(verdicts)
    return sections


# -- other subcommands ----------------------------------------------------------------


def gronwall_report(seed: int, cases: int) -> dict:
    rng = np.random.default_rng(seed)
    eq26 = flow.polynomial_growth_check(flow.GronwallCase(
        1, lambda nu: np.array([[2.0 / nu]]), lambda nu: np.array([nu**2]), np.array([3.0]), 2.0, l=1.0, m=3.0))
    eq28 = flow.integrable_growth_check(flow.GronwallCase(
        1, lambda nu: np.array([[1.0 / nu**2]]), lambda nu: np.array([1.0 / nu**2]), np.array([0.0]), 1.0,
        eps=1.0, m=0.0))
    rand = {}
    for kind, check in (("polynomial", flow.polynomial_growth_check), ("integrable", flow.integrable_growth_check)):
        reps = [check(flow.random_gronwall_case(rng, kind)) for _ in range(cases)]
        rand[kind] = {
            "cases": cases,
            "all_satisfied": all(r.satisfied for r in reps),
            "min_margin": min(r.min_margin for r in reps),
        }
        rand[kind]["strict"] = rand[kind]["all_satisfied"] and rand[kind]["min_margin"] > 0
    ok = (
        eq26.satisfied and eq26.max_abs_margin <= 1e-9 and eq28.satisfied and eq28.max_abs_margin <= 1e-9
        and all(v["strict"] for v in rand.values())
    )
    return {
        "scalar_polynomial": eq26.to_dict(),
        "scalar_integrable": eq28.to_dict(),
        "random": rand,
        "verdict": "verified" if ok else "refuted",
    }


def forms_report(seed: int, count: int = 10, points: int = 50) -> dict:
    rng = np.random.default_rng(seed)
    split_rows = []
    worst_split = 0.0
    for _ in range(count):
        n = 2
        k = int(rng.integers(0, n + 1))
        w = forms.random_form(n, k, rng, max_degree=3)
        h = forms.random_polynomial(n, rng, max_degree=3)
        dirs = rng.normal(size=(points, n))
        pts = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * rng.uniform(1.5, 3.0, size=(points, 1))
        for p in pts:
            res = forms.split_identity_check(w, h, p[None, :])
            split_rows.append({"point": [float(v) for v in p], "residual": res})
            worst_split = max(worst_split, res)
    exact = True
    for _ in range(count):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(0, n + 1))
        w = forms.random_form(n, k, rng)
        h = forms.random_polynomial(n, rng)
        dd = forms.exterior_derivative(forms.exterior_derivative(w))
        dhdh = forms.witten_differential(forms.witten_differential(w, h), h)
        exact &= dd.is_zero() and dhdh.is_zero()
    region = rng.normal(size=(20, 3)) * 3
    cone_worst = 0.0
    for _ in range(count):
        g = forms.random_form(3, 1, rng)
        rel = forms.random_form(3, 0, rng)
        cone_worst = max(cone_worst, forms.cone_square_residual(forms.ConeElement(g, rel, region)))
    t = Polynomial.variable(1, 0)
    one = Polynomial.constant(1, 1)
    chain_rows = []
    for name, h1, psi in (("-t^2", -(t**2), one), ("-t", -t, one), ("-t^2", -(t**2), t**2)):
        r = forms.remote_primitive(psi, h1, [2.0, 5.0], check_chain=True)
        chain_rows.append({"h": name, "psi": psi.to_string(["t"]), "residual": r.chain_residual})
    chain_worst = max(r["residual"] for r in chain_rows)
    ok = exact and worst_split <= 1e-6 and cone_worst <= 1e-9 and chain_worst <= 1e-6
    return {
        "d_squared_exact": exact,
        "split_identity": split_rows,
        "split_worst": worst_split,
        "cone_square_worst": cone_worst,
        "chain_map": chain_rows,
        "verdict": "verified" if ok else "refuted",
    }


def models_report() -> dict:
    out = {}
    verdicts = []
    for name, doc in sorted(corpus.models().items()):
        if doc["model"] == "circle_times_line":
            rep = topology.circle_line_model(corpus.model_function(doc["g"]))
        else:
            rep = topology.base_cone_model(doc["N"], doc["r"], doc["s"])
        d = rep.to_dict()
        pad = lambda v, n: list(v) + [0] * (n - len(v))  # noqa: E731
        size = max(len(d["direct"]), len(doc["expected"]))
        d["expected"] = doc["expected"]
        d["verdict"] = "verified" if rep.match and pad(d["direct"], size) == pad(doc["expected"], size) else "refuted"
        d["assumption"] = topology.FLOW_RETRACTION_ASSUMPTION
        verdicts.append(d["verdict"])
        out[name] = d
    out["verdict"] = combine(verdicts)
    return out


# -- I/O -------------------------------------------------------------------------------


def _read_input(path: str | None) -> PolynomialSpec:
    if path is None:
        raise UsageError("--input is required for this subcommand")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    return polynomial_from_json(text)


def provenance(cfg) -> dict:
    relevant = {k: v for k, v in sorted(vars(cfg).items()) if k not in ("out", "cache_dir", "csv", "jobs", "func", "verbose")}
    return {
        "config_hash": hashlib.sha256(canonical(relevant).encode()).hexdigest(),
        "config": relevant,
        "seed": cfg.seed,
        "versions": {
            "wittenpoly": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _clean(obj):
    """Make a report JSON-safe: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit(report: dict, cfg, rows: list[dict] | None = None) -> int:
    report = {"schema_version": SCHEMA_VERSION, "command": cfg.command, **report, "provenance": provenance(cfg)}
    text = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.csv and rows is not None:
        Path(cfg.csv).write_text(rows_to_csv(rows))
    return EXIT[report.get("verdict", "certificate-only")]


def rows_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    if not rows:
        return ""
    keys = list(rows[0].keys())
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(keys)
    for r in rows:
        writer.writerow([json.dumps(r[k]) if isinstance(r[k], list) else r[k] for k in keys])
    return out.getvalue()


# -- commands ---------------------------------------------------------------------------


def cmd_analyze(cfg, cache):
    cls = analyze(_read_input(cfg.input))
    verdict = "verified" if cls["case"] in ("A", "B") else "certificate-only"
    return emit({"classification": cls, "verdict": verdict}, cfg)


def cmd_develop(cfg, cache):
    spec = _read_input(cfg.input)
    qh = _own_weights(spec.poly, spec.weights)
    if qh is None:
        raise UsageError("develop needs a quasi-homogeneous polynomial")
    rep = develop_stage(spec.poly, qh[0], cfg.seed)
    return emit({"development": rep, "verdict": rep["verdict"]}, cfg)


def cmd_fiber(cfg, cache):
    spec = _read_input(cfg.input)
    rep = topology_stage(spec.poly, cfg, cache)
    if cfg.csv:
        Path(cfg.csv).write_text(_scan_csv(rep["scan"]))
    return emit({"topology": rep, "verdict": rep["verdict"]}, cfg)


def _scan_csv(scan: dict) -> str:
    res = topology.ScanResult(scan["status"], scan["betti"], scan["window"], scan["table"])
    return res.to_csv()


def cmd_conjugate(cfg, cache):
    spec = _read_input(cfg.input)
    h = spec.poly
    qh = _own_weights(h, spec.weights)
    if qh is not None:
        raise UsageError("h is quasi-homogeneous: there is no perturbation to conjugate away")
    res = detect_case_B(h)
    if not res.is_case_b:
        return emit({"verdict": "certificate-only", "reason": res.reason}, cfg)
    red, problem = reduction_stage(h, res.face)
    if problem is None:
        return emit({"reduction": red, "verdict": "certificate-only"}, cfg)
    rep, rows = conjugation_stage(*problem, cfg)
    return emit({"reduction": red, "conjugation": rep, "verdict": rep["verdict"]}, cfg, rows)


def cmd_verify_all(cfg, cache):
    if cfg.input:
        sections = run_pipeline(_read_input(cfg.input), cfg, cache)
        return emit({"pipeline": sections, "verdict": sections["verdict"]}, cfg)
    report = {"models": models_report(), "gronwall": gronwall_report(cfg.seed, 10), "forms": forms_report(cfg.seed, 3, 10)}
    pipelines = {}
    for name in ("saddle", "monkey_saddle", "paraboloid", "case_b_cubic", "case_b_bounded_below"):
        fx = corpus.fixture(name)
        pipelines[name] = run_pipeline(fx.spec, cfg, cache)
    report["pipelines"] = pipelines
    report["verdict"] = combine(
        [report["models"]["verdict"], report["gronwall"]["verdict"], report["forms"]["verdict"]]
        + [p["verdict"] for p in pipelines.values()]
    )
    return emit(report, cfg)


def cmd_gronwall(cfg, cache):
    rep = gronwall_report(cfg.seed, cfg.cases)
    return emit({"gronwall": rep, "verdict": rep["verdict"]}, cfg)


def cmd_forms_check(cfg, cache):
    rep = forms_report(cfg.seed, cfg.cases)
    return emit({"forms": rep, "verdict": rep["verdict"]}, cfg)


def _common_flags(top: bool) -> argparse.ArgumentParser:
    # subcommands re-declare the global flags without defaults so values given
    # before the subcommand name are not overwritten
    p = argparse.ArgumentParser(add_help=False, argument_default=None if top else argparse.SUPPRESS)

    def flag(name, default=None, **kw):
        if top:
            kw["default"] = default
        p.add_argument(name, **kw)

    flag("--input", help="polynomial JSON file")
    flag("--out", help="write the JSON report here instead of stdout")
    flag("--csv", help="also write a CSV table (scan or per-seed rows)")
    flag("--cache-dir", help="content-addressed cache directory")
    flag("--seed", 0, type=int)
    flag("--tol", 1e-10, type=float)
    flag("--grid", [64, 128], type=_ints, help="resolutions m, e.g. 64,128")
    flag("--scan-c", [1.0, 2.0, 4.0], type=_floats)
    flag("--scan-R", [4.0, 8.0], type=_floats)
    flag("--jobs", 1, type=int)
    flag("--verbose", False, action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(top=False)
    parser = argparse.ArgumentParser(prog="wittenpoly", description=__doc__.splitlines()[0],
                                     parents=[_common_flags(top=True)])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("analyze", cmd_analyze, "classify h (quasi-homogeneous, Newton face, bounded below)"),
        ("develop", cmd_develop, "build and check the development field of a quasi-homogeneous h"),
        ("fiber", cmd_fiber, "stabilized relative homology and remote fiber Betti numbers"),
        ("conjugate", cmd_conjugate, "conjugation flow diagnostics for h = f + g"),
        ("verify-all", cmd_verify_all, "full pipeline on --input, or on the bundled corpus"),
        ("gronwall", cmd_gronwall, "growth bounds for linear ODE model problems"),
        ("forms-check", cmd_forms_check, "differential-form identities on random data"),
    ):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=fn)
        if name == "conjugate":
            p.add_argument("--seeds", type=int, default=16)
            p.add_argument("--shells", type=_floats, default=None)
            p.add_argument("--order", type=int, default=0, choices=[0, 1, 2, 3])
        if name == "verify-all":
            p.add_argument("--case", choices=["A", "B"], help="override the detected classification")
        if name in ("gronwall", "forms-check"):
            p.add_argument("--cases", type=int, default=50 if name == "gronwall" else 10)
    return parser


def _validate(cfg) -> None:
    if not cfg.tol > 0:
        raise UsageError("--tol must be positive")
    if not (cfg.grid and cfg.scan_c and cfg.scan_R):
        raise UsageError("scan lists must be nonempty")
    if cfg.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    for k in ("seeds", "shells", "order"):
        if not hasattr(cfg, k):
            setattr(cfg, k, {"seeds": 16, "shells": None, "order": 0}[k])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if cfg.verbose else logging.WARNING)
    log.propagate = False
    try:
        _validate(cfg)
        cache = Cache(cfg.cache_dir) if cfg.cache_dir else None
        code = cfg.func(cfg, cache)
        if cache is not None:
            log.info("cache hits=%d misses=%d", cache.hits, cache.misses)
        return code
    except PolynomialParseError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line is not None else ""
        print(f"error: malformed polynomial input{where}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except topology.GridTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())

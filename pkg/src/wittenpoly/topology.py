"""Cubical relative homology of (box, {h <= -c}) and the model checks built on it.

Cells live in doubled coordinates: along an axis with m intervals the
coordinates run 0..2m, even entries are vertices and odd entries are
intervals.  A periodic axis (circle factor) wraps modulo 2m; a discrete
axis (finite point set) has vertices only.  Homology is computed by
algebraic reductions with unit pivots (exact over Z), followed by a dense
Smith normal form on whatever survives; a GF(2) bitset elimination is
run independently as a cross-check.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .polyring import Polynomial

DEFAULT_MAX_CELLS = 2_000_000

# Every report carries this: the pair (R^n, {h <= -c}) stands in for
# (R^n, h^{-1}(-c)), which needs h to decrease along a retracting flow.
FLOW_RETRACTION_ASSUMPTION = (
    "H*(box, {h <= -c}) is used for H*(R^n, h^-1(-c)); this assumes {h <= -c} "
    "retracts onto the fiber along a flow decreasing h"
)


class GridTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    kind: str  # "interval" | "periodic" | "discrete"
    m: int  # intervals (interval), vertices on the circle (periodic), points (discrete)
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("interval", "periodic", "discrete"):
            raise ValueError(f"unknown axis kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("axis needs at least one cell")
        if self.kind == "periodic" and self.m < 3:
            raise ValueError("a periodic axis needs at least 3 vertices")

    @property
    def size(self) -> int:
        return {"interval": 2 * self.m + 1, "periodic": 2 * self.m, "discrete": 2 * self.m - 1}[self.kind]

    def vertex_coords(self) -> np.ndarray:
        if self.kind == "interval":
            return np.linspace(self.lo, self.hi, self.m + 1)
        if self.kind == "periodic":
            return self.lo + (self.hi - self.lo) * np.arange(self.m) / self.m
        return np.arange(self.m, dtype=float)


@dataclass(frozen=True)
class GridSpec:
    """Box [-R, R]^n with m cells per axis; ``periodic`` marks circle factors."""

    R: float
    m: int
    n: int
    periodic: tuple[bool, ...] | None = None
    max_cells: int = DEFAULT_MAX_CELLS

    def __post_init__(self):
        if self.m < 8:
            raise ValueError(f"resolution m={self.m} is below the minimum 8")
        if not self.R > 0:
            raise ValueError("box radius must be positive")
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.periodic is not None and len(self.periodic) != self.n:
            raise ValueError("periodic mask length must equal n")

    def axes(self) -> tuple[Axis, ...]:
        mask = self.periodic or (False,) * self.n
        return tuple(
            Axis("periodic", self.m, 0.0, 2 * math.pi) if p else Axis("interval", self.m, -self.R, self.R)
            for p in mask
        )

    def to_dict(self) -> dict:
        return {"R": self.R, "m": self.m, "n": self.n, "periodic": list(self.periodic or ())}


# -- cell complexes -------------------------------------------------------------


class CubicalComplex:
    """All cells of a product of axes, indexed by flattened doubled coordinates."""

    def __init__(self, axes: Sequence[Axis], max_cells: int = DEFAULT_MAX_CELLS):
        self.axes = tuple(axes)
        self.shape = tuple(a.size for a in self.axes)
        total = int(np.prod(self.shape))
        if total > max_cells:
            raise GridTooLarge(f"{total} cells exceed the cap of {max_cells}")
        grids = np.indices(self.shape)
        odd = grids % 2 == 1
        self.dims = odd.sum(axis=0)
        valid = np.ones(self.shape, dtype=bool)
        for i, a in enumerate(self.axes):
            if a.kind == "discrete":
                valid &= ~odd[i]
        self.valid = valid

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def dim(self) -> int:
        """Geometric dimension: discrete axes contribute none."""
        return sum(a.kind != "discrete" for a in self.axes)

    def vertex_points(self) -> np.ndarray:
        """Coordinates of all vertices, shape (*vertex_shape, n)."""
        coords = [a.vertex_coords() for a in self.axes]
        mesh = np.meshgrid(*coords, indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_max(self, vertex_values: np.ndarray) -> np.ndarray:
        """Max of a vertex function over the vertices of every cell."""
        full = np.full(self.shape, -np.inf)
        full[tuple(slice(0, None, 2) for _ in self.axes)] = vertex_values
        for i, a in enumerate(self.axes):
            if a.kind == "discrete":
                continue
            moved = np.moveaxis(full, i, 0)
            lo = moved[0::2]
            hi = np.roll(moved, -1, axis=0)[1::2] if a.kind == "periodic" else moved[2::2]
            moved[1::2] = np.maximum(lo[: moved[1::2].shape[0]], hi)
        return full

    def close(self, top: np.ndarray) -> np.ndarray:
        """Smallest face-closed set containing the marked cells."""
        mask = top.copy()
        for i, a in enumerate(self.axes):
            if a.kind == "discrete":
                continue
            moved = np.moveaxis(mask, i, 0)
            odd = moved[1::2].copy()
            if a.kind == "periodic":
                moved[0::2] |= odd | np.roll(odd, 1, axis=0)
            else:
                moved[0:-1:2] |= odd
                moved[2::2] |= odd
        return mask & self.valid

    def maximal_cells(self) -> np.ndarray:
        grids = np.indices(self.shape)
        mask = self.valid.copy()
        for i, a in enumerate(self.axes):
            if a.kind != "discrete":
                mask &= grids[i] % 2 == 1
        return mask

    def boundary_entries(self, cells: np.ndarray):
        """(face_flat, cell_flat, sign) arrays for the boundary of the given flat cells."""
        coords = np.array(np.unravel_index(cells, self.shape))
        odd = coords % 2 == 1
        before = np.cumsum(odd, axis=0) - odd
        faces, owners, signs = [], [], []
        for i, a in enumerate(self.axes):
            sel = odd[i]
            if not sel.any():
                continue
            base = coords[:, sel]
            sgn = np.where(before[i, sel] % 2 == 0, 1, -1)
            for step, s in ((1, 1), (-1, -1)):
                f = base.copy()
                f[i] = f[i] + step
                if a.kind == "periodic":
                    f[i] %= self.shape[i]
                faces.append(np.ravel_multi_index(tuple(f), self.shape))
                owners.append(cells[sel])
                signs.append(s * sgn)
        if not faces:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0, int)
        return np.concatenate(faces), np.concatenate(owners), np.concatenate(signs)


@dataclass
class CubicalPair:
    """Ambient cubical complex with a face-closed subcomplex (boolean masks)."""

    complex: CubicalComplex
    ambient: np.ndarray
    sub: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.sub & ~self.ambient):
            raise ValueError("subcomplex is not contained in the ambient complex")

    def is_closed(self, mask: np.ndarray) -> bool:
        return bool(np.array_equal(self.complex.close(mask), mask))

    def relative_cells(self) -> np.ndarray:
        return np.flatnonzero(self.ambient & ~self.sub)

    def relative_cell_counts(self) -> list[int]:
        dims = self.complex.dims[self.ambient & ~self.sub]
        return [int(np.sum(dims == k)) for k in range(self.complex.dim + 1)]

    def sub_as_pair(self) -> CubicalPair:
        """(sub, empty): its homology is the absolute homology of the sublevel set."""
        return CubicalPair(self.complex, self.sub, np.zeros_like(self.sub), dict(self.meta))


def build_sublevel_pair(
    h: Polynomial | Callable, c: float, grid: GridSpec | Sequence[Axis], max_cells: int | None = None
) -> CubicalPair:
    """Pair (grid, closure of the top cells with h <= -c at every vertex)."""
    if not c > 0:
        raise ValueError("c must be positive")
    axes = grid.axes() if isinstance(grid, GridSpec) else tuple(grid)
    cap = max_cells or (grid.max_cells if isinstance(grid, GridSpec) else DEFAULT_MAX_CELLS)
    cx = CubicalComplex(axes, cap)
    pts = cx.vertex_points()
    fn = h.compiled if isinstance(h, Polynomial) else h
    if isinstance(h, Polynomial) and h.num_vars != cx.n:
        raise ValueError(f"polynomial in {h.num_vars} variables on a {cx.n}-dimensional grid")
    values = np.broadcast_to(np.asarray(fn(pts), dtype=float), pts.shape[:-1])
    cm = cx.cell_max(values)
    top = cx.maximal_cells() & (cm <= -c)
    sub = cx.close(top)
    meta = {"c": c, "assumption": FLOW_RETRACTION_ASSUMPTION}
    if isinstance(grid, GridSpec):
        meta["grid"] = grid.to_dict()
    return CubicalPair(cx, cx.valid.copy(), sub, meta)


# -- homology -------------------------------------------------------------------


@dataclass(frozen=True)
class BettiVector:
    ranks: tuple[int, ...]
    gf2: tuple[int, ...] | None = None
    torsion: tuple[bool, ...] = ()

    def __post_init__(self):
        if any(b < 0 for b in self.ranks):
            raise ValueError("negative Betti number")

    def consistent(self) -> bool:
        return self.gf2 is None or any(self.torsion) or self.gf2 == self.ranks

    def euler(self) -> int:
        return sum((-1) ** k * b for k, b in enumerate(self.ranks))

    def to_dict(self) -> dict:
        return {
            "betti": list(self.ranks),
            "gf2": list(self.gf2) if self.gf2 is not None else None,
            "torsion": list(self.torsion),
        }


class _Reducer:
    """Sparse chain complex over Z with elementary reductions along unit entries."""

    def __init__(self, dims: np.ndarray, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray):
        count = len(dims)
        self.dims = dims
        self.alive = np.ones(count, dtype=bool)
        self.bd: list[dict[int, int]] = [dict() for _ in range(count)]
        self.cob: list[dict[int, int]] = [dict() for _ in range(count)]
        for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            v = self.bd[c].get(r, 0) + v
            if v:
                self.bd[c][r] = v
                self.cob[r][c] = v
            else:
                self.bd[c].pop(r, None)
                self.cob[r].pop(c, None)

    def _remove(self, a: int, b: int) -> list[int]:
        """Drop cells a (face) and b; return cells whose coboundary shrank."""
        touched = []
        for cell in (a, b):
            for f in self.bd[cell]:
                del self.cob[f][cell]
                touched.append(f)
            for e in self.cob[cell]:
                del self.bd[e][cell]
            self.bd[cell] = {}
            self.cob[cell] = {}
            self.alive[cell] = False
        return touched

    def _pivot(self, a: int, b: int) -> list[int]:
        """General reduction: d(c) -= (<dc,a>/<db,a>) d(b) for the other cofaces c of a."""
        piv = self.bd[b][a]
        db = dict(self.bd[b])
        touched = []
        for c, coef in list(self.cob[a].items()):
            if c == b:
                continue
            q = coef * piv  # piv = +-1, so 1/piv = piv
            for f, v in db.items():
                nv = self.bd[c].get(f, 0) - q * v
                if nv:
                    self.bd[c][f] = nv
                    self.cob[f][c] = nv
                else:
                    self.bd[c].pop(f, None)
                    self.cob[f].pop(c, None)
                    touched.append(f)
        return touched + self._remove(a, b)

    def reduce(self) -> None:
        work = list(np.flatnonzero(self.alive))
        while True:
            while work:
                a = work.pop()
                if not self.alive[a] or len(self.cob[a]) != 1:
                    continue
                (b, v), = self.cob[a].items()
                if abs(v) == 1:
                    work.extend(self._remove(a, b))
            best = None
            for a in np.flatnonzero(self.alive).tolist():
                for b, v in self.cob[a].items():
                    if abs(v) == 1:
                        cost = (len(self.cob[a]) - 1) * (len(self.bd[b]) - 1)
                        if best is None or cost < best[0]:
                            best = (cost, a, b)
            if best is None:
                return
            work.extend(self._pivot(best[1], best[2]))

    def leftover(self, top: int):
        cells = np.flatnonzero(self.alive)
        by_dim = {k: [int(c) for c in cells if self.dims[c] == k] for k in range(top + 1)}
        mats = {}
        for k in range(1, top + 1):
            ridx = {c: i for i, c in enumerate(by_dim[k - 1])}
            mat = np.zeros((len(by_dim[k - 1]), len(by_dim[k])), dtype=object)
            for j, c in enumerate(by_dim[k]):
                for f, v in self.bd[c].items():
                    mat[ridx[f], j] = v
            mats[k] = mat
        return {k: len(v) for k, v in by_dim.items()}, mats


def smith_diagonal(mat: np.ndarray) -> list[int]:
    """Nonzero invariant factors of an integer matrix (dense, small)."""
    a = [[int(v) for v in row] for row in mat]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    diag = []
    t = 0
    while t < min(rows, cols):
        nz = [(abs(a[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if a[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        a[t], a[pi] = a[pi], a[t]
        for row in a:
            row[t], row[pj] = row[pj], row[t]
        while True:
            p = a[t][t]
            changed = False
            for i in range(t + 1, rows):
                q = a[i][t] // p
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                if a[i][t]:
                    a[t], a[i] = a[i], a[t]
                    changed = True
                    break
            if changed:
                continue
            for j in range(t + 1, cols):
                q = a[t][j] // p
                if q:
                    for row in a:
                        row[j] -= q * row[t]
                if a[t][j]:
                    for row in a:
                        row[t], row[j] = row[j], row[t]
                    changed = True
                    break
            if changed:
                continue
            bad = next(
                ((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols) if a[i][j] % p),
                None,
            )
            if bad is None:
                break
            a[t] = [x + y for x, y in zip(a[t], a[bad[0]])]
        diag.append(abs(a[t][t]))
        t += 1
    return diag


def gf2_rank(columns: Iterable[int]) -> int:
    """Rank over GF(2) of columns given as Python-int bitsets."""
    pivots: dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            top = col.bit_length() - 1
            other = pivots.get(top)
            if other is None:
                pivots[top] = col
                rank += 1
                break
            col ^= other
    return rank


def _relative_entries(pair: CubicalPair):
    rel = pair.relative_cells()
    index = np.full(int(np.prod(pair.complex.shape)), -1, dtype=np.int64)
    index[rel] = np.arange(len(rel))
    faces, owners, signs = pair.complex.boundary_entries(rel)
    keep = index[faces] >= 0
    return rel, index[faces[keep]], index[owners[keep]], signs[keep]


def _gf2_betti(dims: np.ndarray, rows: np.ndarray, cols: np.ndarray, top: int) -> tuple[int, ...]:
    counts = [int(np.sum(dims == k)) for k in range(top + 1)]
    order = np.argsort(cols, kind="stable")
    rows, cols = rows[order], cols[order]
    rank = [0] * (top + 2)
    bits: dict[int, int] = {}
    for r, c in zip(rows.tolist(), cols.tolist()):
        bits[c] = bits.get(c, 0) ^ (1 << r)
    for k in range(1, top + 1):
        rank[k] = gf2_rank(v for c, v in bits.items() if dims[c] == k)
    return tuple(counts[k] - rank[k] - rank[k + 1] for k in range(top + 1))


def relative_homology(pair: CubicalPair, gf2: bool | None = None, gf2_cap: int = 80_000) -> BettiVector:
    """Betti numbers of H_*(ambient, sub) over Q, with torsion flags and a GF(2) cross-check."""
    top = pair.complex.dim
    rel, rows, cols, signs = _relative_entries(pair)
    dims = pair.complex.dims.ravel()[rel]
    red = _Reducer(dims, rows, cols, signs)
    red.reduce()
    counts, mats = red.leftover(top)
    ranks = [0] * (top + 2)
    torsion = [False] * (top + 1)
    for k, mat in mats.items():
        if mat.size:
            diag = smith_diagonal(mat)
            ranks[k] = len(diag)
            if any(d > 1 for d in diag):
                torsion[k - 1] = True
    betti = tuple(counts[k] - ranks[k] - ranks[k + 1] for k in range(top + 1))
    g = None
    if gf2 or (gf2 is None and len(rel) <= gf2_cap):
        g = _gf2_betti(dims, rows, cols, top)
    return BettiVector(betti, g, tuple(torsion))


def euler_check(pair: CubicalPair, betti: BettiVector) -> bool:
    counts = pair.relative_cell_counts()
    return betti.euler() == sum((-1) ** k * c for k, c in enumerate(counts))


def sublevel_betti(pair: CubicalPair) -> BettiVector:
    return relative_homology(pair.sub_as_pair())


def component_count(pair: CubicalPair) -> int:
    if not pair.sub.any():
        return 0
    return sublevel_betti(pair).ranks[0]


# -- scans ------------------------------------------------------------------------


@dataclass
class ScanResult:
    status: str  # "stable" | "unstable"
    betti: tuple[int, ...] | None
    window: dict | None
    table: list[dict]
    assumption: str = FLOW_RETRACTION_ASSUMPTION

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "betti": list(self.betti) if self.betti is not None else None,
            "window": self.window,
            "table": self.table,
            "assumption": self.assumption,
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        n = max((len(r["betti"]) for r in self.table), default=0)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["c", "R", "m"] + [f"b{k}" for k in range(n)])
        for r in self.table:
            writer.writerow([r["c"], r["R"], r["m"]] + r["betti"])
        return out.getvalue()


def _pair_betti(h, n: int, c: float, R: float, m: int, cache=None) -> tuple[int, ...]:
    key = None
    if cache is not None and isinstance(h, Polynomial):
        key = cache.key("relative_homology", h, {"c": c, "R": R, "m": m})
        hit = cache.get(key)
        if hit is not None:
            return tuple(hit["betti"])
    pair = build_sublevel_pair(h, c, GridSpec(R, m, n))
    bv = relative_homology(pair)
    if bv.gf2 is not None and not bv.consistent():
        raise RuntimeError(f"GF(2) and rational ranks disagree at c={c}, R={R}, m={m}: {bv}")
    if not euler_check(pair, bv):
        raise RuntimeError(f"Euler characteristic mismatch at c={c}, R={R}, m={m}")
    if key is not None:
        cache.put(key, bv.to_dict())
    return bv.ranks


def stabilization_scan(
    h, c_list: Sequence[float], R_list: Sequence[float], m_list: Sequence[int], n: int | None = None, cache=None
) -> ScanResult:
    """Largest box in the (c, R, m) grid, at least 2 wide per axis, with constant Betti vector."""
    for name, lst in (("c", c_list), ("R", R_list), ("m", m_list)):
        if len(lst) < 2 or any(b <= a for a, b in zip(lst, lst[1:])):
            raise ValueError(f"{name} list must be increasing with at least 2 entries")
    n = n if n is not None else h.num_vars
    values = {}
    table = []
    for (i, c), (j, R), (k, m) in itertools.product(enumerate(c_list), enumerate(R_list), enumerate(m_list)):
        b = _pair_betti(h, n, c, R, m, cache)
        values[i, j, k] = b
        table.append({"c": c, "R": R, "m": m, "betti": list(b)})
    best = None
    ranges = lambda L: [(a, b) for a in range(L) for b in range(a + 1, L)]  # noqa: E731
    for ci, Ri, mi in itertools.product(ranges(len(c_list)), ranges(len(R_list)), ranges(len(m_list))):
        cells = [
            values[i, j, k]
            for i in range(ci[0], ci[1] + 1)
            for j in range(Ri[0], Ri[1] + 1)
            for k in range(mi[0], mi[1] + 1)
        ]
        if all(v == cells[0] for v in cells):
            size = len(cells)
            if best is None or size > best[0]:
                best = (size, ci, Ri, mi, cells[0])
    if best is None:
        return ScanResult("unstable", None, None, table)
    _, ci, Ri, mi, b = best
    window = {
        "c": list(c_list[ci[0]: ci[1] + 1]),
        "R": list(R_list[Ri[0]: Ri[1] + 1]),
        "m": list(m_list[mi[0]: mi[1] + 1]),
    }
    return ScanResult("stable", b, window, table)


@dataclass(frozen=True)
class RefinementReport:
    m: int
    rows: tuple[dict, ...]

    @property
    def unchanged(self) -> bool:
        return all(r["unchanged"] for r in self.rows)

    def to_dict(self) -> dict:
        return {"m": self.m, "rows": list(self.rows), "unchanged": self.unchanged}


def refine_plateau(h, scan: ScanResult, factor: int = 2, n: int | None = None, cache=None) -> RefinementReport:
    """Recompute every (c, R) of a stable window at factor x its finest resolution."""
    if scan.status != "stable":
        raise ValueError("only a stabilized plateau can be refined")
    n = n if n is not None else h.num_vars
    m = factor * max(scan.window["m"])
    rows = []
    for c in scan.window["c"]:
        for R in scan.window["R"]:
            b = _pair_betti(h, n, c, R, m, cache)
            rows.append({"c": c, "R": R, "m": m, "betti": list(b), "unchanged": tuple(b) == tuple(scan.betti)})
    return RefinementReport(m, tuple(rows))


@dataclass
class FiberReport:
    fiber_reduced: tuple[int, ...] | None  # None for an empty fiber
    pair: tuple[int, ...]
    les_consistent: bool
    sub_components: int
    assumption: str = FLOW_RETRACTION_ASSUMPTION

    def to_dict(self) -> dict:
        return {
            "fiber_reduced_betti": list(self.fiber_reduced) if self.fiber_reduced is not None else None,
            "empty_fiber": self.fiber_reduced is None,
            "pair_betti": list(self.pair),
            "les_consistent": self.les_consistent,
            "sub_components": self.sub_components,
            "assumption": self.assumption,
        }


def fiber_betti(h, c: float, grid: GridSpec) -> FiberReport:
    """Reduced Betti numbers of the sublevel set (fiber proxy) and the LES check over a box."""
    pair = build_sublevel_pair(h, c, grid)
    pb = relative_homology(pair).ranks
    if not pair.sub.any():
        ok = pb == (1,) + (0,) * (len(pb) - 1)
        return FiberReport(None, pb, ok, 0)
    sb = list(sublevel_betti(pair).ranks)
    comps = sb[0]
    sb[0] -= 1
    reduced = tuple(sb)
    # box contractible: H_k(box, sub) = reduced H_{k-1}(sub)
    ok = pb[0] == 0 and all(pb[k] == reduced[k - 1] for k in range(1, len(pb)))
    return FiberReport(reduced, pb, ok, comps)


# -- product and cone models ---------------------------------------------------------


@dataclass
class ModelReport:
    direct: tuple[int, ...]
    predicted: tuple[int, ...]
    detail: dict = field(default_factory=dict)

    @property
    def match(self) -> bool:
        n = max(len(self.direct), len(self.predicted))
        pad = lambda v: tuple(v) + (0,) * (n - len(v))  # noqa: E731
        return pad(self.direct) == pad(self.predicted)

    def to_dict(self) -> dict:
        return {"direct": list(self.direct), "predicted": list(self.predicted), "match": self.match, **self.detail}


def _circle(m: int) -> Axis:
    return Axis("periodic", m, 0.0, 2 * math.pi)


def circle_line_model(
    g: Callable[[np.ndarray], np.ndarray],
    c: float = 1.0,
    T: float = 4.0,
    m: int = 256,
    m_t: int = 64,
    zero_tol: float = 1e-9,
) -> ModelReport:
    """Compare H(N x [-T,T], {t g <= -c}) with H(N, N - Z) for N a circle, Z = g^{-1}(0)."""
    circ = _circle(m)
    base = CubicalComplex([circ])
    gv = np.asarray(g(base.vertex_points()[..., 0]), dtype=float)
    off_zero = base.cell_max(-np.abs(gv)) < -zero_tol  # every vertex has |g| > tol
    top = base.maximal_cells() & off_zero
    rel_pair = CubicalPair(base, base.valid.copy(), base.close(top), {"N": "circle", "m": m})
    predicted = relative_homology(rel_pair).ranks

    def h(p):
        return p[..., 1] * g(p[..., 0])

    pair = build_sublevel_pair(h, c, [circ, Axis("interval", m_t, -T, T)])
    direct = relative_homology(pair).ranks
    return ModelReport(direct, predicted, {"c": c, "T": T, "m": m, "zero_vertices": int(np.sum(np.abs(gv) <= zero_tol))})


def base_cone_model(
    N: str = "circle",
    r: int = 1,
    s: int = 0,
    c: float = 1.0,
    R: float = 3.0,
    m: int = 32,
    m_fiber: int = 16,
) -> ModelReport:
    """Compare H(N x box^{r+s}, {|u|^2 - |v|^2 <= -c}) with H^{i-r}(N).

    ``N`` is "circle" or "points:k"; the first r box coordinates are the
    negative directions v.
    """
    if N == "circle":
        base = _circle(m)
    elif N.startswith("points:"):
        base = Axis("discrete", int(N.split(":")[1]))
    else:
        raise ValueError(f"unsupported base {N!r}")
    axes = [base] + [Axis("interval", m_fiber, -R, R) for _ in range(r + s)]

    def h(p):
        v = p[..., 1: 1 + r]
        u = p[..., 1 + r:]
        return np.sum(u**2, axis=-1) - np.sum(v**2, axis=-1)

    pair = build_sublevel_pair(h, c, axes)
    direct = relative_homology(pair).ranks
    cx = CubicalComplex([base])
    hn = relative_homology(CubicalPair(cx, cx.valid.copy(), np.zeros_like(cx.valid))).ranks
    predicted = tuple([0] * r + list(hn) + [0] * (len(direct) - r - len(hn)))[: len(direct)]
    return ModelReport(direct, predicted, {"N": N, "r": r, "s": s, "c": c})

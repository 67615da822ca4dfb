"""Polyhedral tooling: cones, tropical cells, dual fans.

Polyhedra are kept in H-representation with exact rational data
(``coeffs . x <= const`` or ``= const``).  Feasibility is decided by
Fourier-Motzkin elimination over Fractions when the data is rational and by
an LP solve with 1e-9 slack otherwise.  Euclidean projection onto a cell is
computed by enumerating candidate active sets, which is exact for the small
systems that arise here and vectorizes over many query points.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .dequantize import AffineForm, TropicalAtom, affine_max_form, nice_fraction
from .formula import And, Exists, Forall, Not, Or

__all__ = [
    "Constraint", "Polyhedron", "PolyhedralComplex", "NewtonData", "GridSpec",
    "basic_cone", "basic_cone_contains", "exponential_cone_membership",
    "tropical_atom_cells", "tropical_formula_cells", "complex_membership",
    "dual_fan", "attained_twice_oracle",
    "sphere_grid", "complex_on_sphere",
]

_FM_ROW_LIMIT = 5000
_DENOM_LIMIT = 10**12


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    const: Fraction
    rel: str  # "leq" | "eq"

    def __post_init__(self):
        if self.rel not in ("leq", "eq"):
            raise ValueError(f"unknown relation {self.rel!r}")

    @staticmethod
    def make(coeffs: Iterable, const, rel: str) -> "Constraint":
        cs = tuple(c if isinstance(c, Fraction) else nice_fraction(float(c))
                   for c in coeffs)
        b = const if isinstance(const, Fraction) else nice_fraction(float(const))
        return Constraint(cs, b, rel)


# ---------------------------------------------------------------------------
# Rational feasibility
# ---------------------------------------------------------------------------

def _normalize_row(row: tuple) -> tuple:
    scale = max((abs(c) for c in row if c != 0), default=Fraction(0))
    if scale == 0:
        return row
    return tuple(c / scale for c in row)


def _fm_feasible(rows: list[tuple]) -> bool:
    """Feasibility of {x : a . x <= b} rows given as (a_1..a_n, b)."""
    if not rows:
        return True
    n = len(rows[0]) - 1
    work = {_normalize_row(r) for r in rows}
    for j in range(n - 1, -1, -1):
        pos, neg, rest = [], [], []
        for r in work:
            if r[j] > 0:
                pos.append(r)
            elif r[j] < 0:
                neg.append(r)
            else:
                rest.append(r)
        new = set(map(_normalize_row, rest))
        for p in pos:
            for q in neg:
                combo = tuple(pc / p[j] + qc / (-q[j]) for pc, qc in zip(p, q))
                new.add(_normalize_row(combo))
                if len(new) > _FM_ROW_LIMIT:
                    return _lp_feasible_rows(list(work), n)
        work = new
    # only constant rows remain: 0 <= b
    return all(r[-1] >= 0 for r in work)


def _lp_feasible_rows(rows: list[tuple], n: int) -> bool:
    from scipy.optimize import linprog
    A = np.array([[float(c) for c in r[:-1]] for r in rows])
    b = np.array([float(r[-1]) for r in rows]) + 1e-9
    res = linprog(np.zeros(n), A_ub=A, b_ub=b, bounds=[(None, None)] * n,
                  method="highs")
    return res.status == 0


@dataclass
class Polyhedron:
    """Closed polyhedron {x : constraints hold}."""
    constraints: tuple

    _proj_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def make(constraints: Sequence[Constraint]) -> "Polyhedron":
        return Polyhedron(tuple(constraints))

    @property
    def dim_ambient(self) -> int:
        return len(self.constraints[0].coeffs) if self.constraints else 0

    def is_cone(self) -> bool:
        return all(c.const == 0 for c in self.constraints)

    def _rational_ok(self) -> bool:
        for c in self.constraints:
            if c.const.denominator > _DENOM_LIMIT:
                return False
            if any(x.denominator > _DENOM_LIMIT for x in c.coeffs):
                return False
        return True

    def is_empty(self) -> bool:
        rows = []
        for c in self.constraints:
            rows.append(c.coeffs + (c.const,))
            if c.rel == "eq":
                rows.append(tuple(-x for x in c.coeffs) + (-c.const,))
        if self._rational_ok():
            return not _fm_feasible(rows)
        n = self.dim_ambient
        return not _lp_feasible_rows(rows, n)

    def contains(self, x, tol: float = 1e-9):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for c in self.constraints:
            v = pts @ np.array([float(q) for q in c.coeffs]) - float(c.const)
            ok &= (np.abs(v) <= tol) if c.rel == "eq" else (v <= tol)
        return ok if np.asarray(x).ndim == 2 else bool(ok[0])

    # projection ------------------------------------------------------------

    def _projection_data(self):
        """Precompute per-active-set linear projectors."""
        if "data" in self._proj_cache:
            return self._proj_cache["data"]
        n = self.dim_ambient
        ineq, eq = [], []
        for c in self.constraints:
            row = (np.array([float(q) for q in c.coeffs]), float(c.const))
            (eq if c.rel == "eq" else ineq).append(row)
        A = np.array([r[0] for r in ineq]).reshape(len(ineq), n)
        b = np.array([r[1] for r in ineq])
        projectors = []
        for k in range(0, min(n, len(ineq)) + 1):
            for S in itertools.combinations(range(len(ineq)), k):
                E_rows = [A[i] for i in S] + [r[0] for r in eq]
                f_vals = [b[i] for i in S] + [r[1] for r in eq]
                if not E_rows:
                    projectors.append((None, None))
                    continue
                E = np.array(E_rows)
                f = np.array(f_vals)
                M = E.T @ np.linalg.pinv(E @ E.T)
                projectors.append((E, (M, f)))
        data = (A, b, projectors)
        self._proj_cache["data"] = data
        return data

    def project_many(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Projection of each row of X onto the polyhedron.

        Returns (distances, projected points); empty polyhedra give inf.
        """
        X = np.asarray(X, dtype=float)
        m, n = X.shape
        A, b, projectors = self._projection_data()
        best_d = np.full(m, np.inf)
        best_p = np.full((m, n), np.nan)
        for E, payload in projectors:
            if E is None:
                P = X
            else:
                M, f = payload
                R = X @ E.T - f
                P = X - R @ M.T
            if A.shape[0]:
                resid = P @ A.T - b
                feas = np.all(resid <= 1e-7 * (1.0 + np.abs(b)), axis=1)
            else:
                feas = np.ones(m, dtype=bool)
            if not feas.any():
                continue
            d = np.linalg.norm(X - P, axis=1)
            take = feas & (d < best_d)
            best_d[take] = d[take]
            best_p[take] = P[take]
        return best_d, best_p

    def distance(self, x) -> float:
        d, _ = self.project_many(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(d[0])

    # serialization ---------------------------------------------------------

    def to_obj(self) -> list[dict]:
        return [{"coeffs": [float(q) for q in c.coeffs],
                 "const": float(c.const), "rel": c.rel}
                for c in self.constraints]

    @staticmethod
    def from_obj(obj: list[dict]) -> "Polyhedron":
        return Polyhedron.make([Constraint.make(d["coeffs"], d["const"], d["rel"])
                                for d in obj])


@dataclass
class PolyhedralComplex:
    cells: tuple

    @staticmethod
    def make(cells: Sequence[Polyhedron]) -> "PolyhedralComplex":
        return PolyhedralComplex(tuple(cells))

    @property
    def dim_ambient(self) -> int:
        return self.cells[0].dim_ambient if self.cells else 0

    def prune(self) -> "PolyhedralComplex":
        return PolyhedralComplex(tuple(c for c in self.cells if not c.is_empty()))

    def distance_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], np.inf)
        for cell in self.cells:
            d, _ = cell.project_many(X)
            out = np.minimum(out, d)
        return out

    def distance(self, x) -> float:
        return float(self.distance_many(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def contains(self, x, tol: float = 1e-9):
        X = np.asarray(x, dtype=float)
        d = self.distance_many(np.atleast_2d(X))
        return d <= tol if X.ndim == 2 else bool(d[0] <= tol)

    def to_json(self) -> str:
        return json.dumps({"cells": [c.to_obj() for c in self.cells]}, indent=2)

    @staticmethod
    def from_json(text: str) -> "PolyhedralComplex":
        data = json.loads(text)
        return PolyhedralComplex.make([Polyhedron.from_obj(c) for c in data["cells"]])


def complex_membership(K: PolyhedralComplex, x, tol: float = 1e-9):
    """Euclidean membership of a point (or rows) in the cell union."""
    return K.contains(x, tol)


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------

def basic_cone(N: Sequence[int]) -> Polyhedron:
    """{x <= 0, x_{i+1} <= N_i x_i} in R^(len(N)+1)."""
    n = len(N) + 1
    cons: list[Constraint] = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        cons.append(Constraint(tuple(e), Fraction(0), "leq"))
    for i, Ni in enumerate(N):
        if Ni < 1:
            raise ValueError("exponents must be >= 1")
        row = [Fraction(0)] * n
        row[i + 1] = Fraction(1)
        row[i] = Fraction(-Ni)
        cons.append(Constraint(tuple(row), Fraction(0), "leq"))
    return Polyhedron.make(cons)


def basic_cone_contains(inner: Polyhedron, outer: Polyhedron) -> bool:
    """Exact containment of polyhedral cones: no constraint of the outer cone
    can be violated by a point of the inner one (scale invariance lets a unit
    violation stand in for any violation)."""
    for c in outer.constraints:
        rows = []
        for ic in inner.constraints:
            rows.append(ic.coeffs + (ic.const,))
            if ic.rel == "eq":
                rows.append(tuple(-x for x in ic.coeffs) + (-ic.const,))
        # c . x >= const + 1, i.e. -c . x <= -const - 1
        rows.append(tuple(-x for x in c.coeffs) + (-c.const - 1,))
        if _fm_feasible(rows):
            return False
        if c.rel == "eq":
            rows[-1] = c.coeffs + (c.const - 1,)
            if _fm_feasible(rows):
                return False
    return True


def exponential_cone_membership(x, N: Sequence[int], h: float):
    """Membership in {0 < x_i <= h, x_{i+1} <= x_i^{N_i}}, decided in log
    space so that deep points do not overflow."""
    if not (0.0 < h):
        raise ValueError("h must be positive")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(N) + 1
    if pts.shape[1] != n:
        raise ValueError(f"points must have dimension {n}")
    ok = np.all(pts > 0.0, axis=1) & np.all(pts <= h, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(pts > 0.0, np.log(pts), -np.inf)
        for i, Ni in enumerate(N):
            bound = Ni * logs[:, i]
            # absorb rounding of log at exact-boundary points
            slack = 1e-12 * np.where(np.isfinite(bound),
                                     np.maximum(1.0, np.abs(bound)), 0.0)
            ok &= logs[:, i + 1] <= bound + slack
    return ok if np.asarray(x).ndim == 2 else bool(ok[0])


# ---------------------------------------------------------------------------
# Tropical cells
# ---------------------------------------------------------------------------

def _diff_leq(a: AffineForm, b: AffineForm) -> Constraint:
    """Constraint a(x) <= b(x)."""
    return Constraint(tuple(ca - cb for ca, cb in zip(a.coeffs, b.coeffs)),
                      b.const - a.const, "leq")


def _diff_eq(a: AffineForm, b: AffineForm) -> Constraint:
    return Constraint(tuple(ca - cb for ca, cb in zip(a.coeffs, b.coeffs)),
                      b.const - a.const, "eq")


def tropical_atom_cells(atom: TropicalAtom, n: int) -> PolyhedralComplex:
    """Cell decomposition of a max-plus atom.

    For ``max L = max R`` there is one candidate cell per argmax pair, for
    ``max L <= max R`` one per right argmax; infeasible candidates are pruned.
    """
    L = affine_max_form(atom.lhs, n)
    R = affine_max_form(atom.rhs, n)
    cells: list[Polyhedron] = []
    if atom.rel == "eq":
        for li in L:
            for rj in R:
                cons = [_diff_eq(li, rj)]
                cons += [_diff_leq(lk, li) for lk in L if lk is not li]
                cons += [_diff_leq(rl, rj) for rl in R if rl is not rj]
                cells.append(Polyhedron.make(cons))
    else:
        for rj in R:
            cons = [_diff_leq(rl, rj) for rl in R if rl is not rj]
            cons += [_diff_leq(lk, rj) for lk in L]
            cells.append(Polyhedron.make(cons))
    return PolyhedralComplex.make(cells).prune()


def tropical_formula_cells(tf, n: int) -> PolyhedralComplex:
    """Cells of a positive quantifier-free max-plus formula: unions collect
    cells, conjunctions intersect them pairwise."""
    if isinstance(tf, TropicalAtom):
        return tropical_atom_cells(tf, n)
    if isinstance(tf, Or):
        cells: list[Polyhedron] = []
        for item in tf.items:
            cells.extend(tropical_formula_cells(item, n).cells)
        return PolyhedralComplex.make(cells)
    if isinstance(tf, And):
        parts = [tropical_formula_cells(item, n) for item in tf.items]
        current = parts[0].cells
        for nxt in parts[1:]:
            merged = []
            for a in nxt.cells:
                for b in current:
                    merged.append(Polyhedron.make(tuple(b.constraints) + tuple(a.constraints)))
            current = tuple(PolyhedralComplex.make(merged).prune().cells)
        return PolyhedralComplex.make(current)
    if isinstance(tf, (Not, Exists, Forall)):
        raise ValueError("cells are defined for positive quantifier-free formulas")
    raise TypeError(f"not a tropical formula: {tf!r}")


# ---------------------------------------------------------------------------
# Newton data and dual fans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonData:
    """Support points with weights; the tracked function is
    ``max_w (<w, x> + weight_w)``."""
    support: tuple
    weights: tuple

    @staticmethod
    def make(support: Sequence[Sequence[int]], weights: Sequence | None = None) -> "NewtonData":
        sup = tuple(tuple(int(e) for e in w) for w in support)
        if len(set(sup)) != len(sup):
            raise ValueError("support points must be distinct")
        if weights is None:
            wts = tuple(Fraction(0) for _ in sup)
        else:
            wts = tuple(w if isinstance(w, Fraction) else nice_fraction(float(w))
                        for w in weights)
        if len(wts) != len(sup):
            raise ValueError("one weight per support point required")
        return NewtonData(sup, wts)

    @property
    def dim(self) -> int:
        return len(self.support[0]) if self.support else 0

    def values(self, X: np.ndarray) -> np.ndarray:
        W = np.array(self.support, dtype=float)
        w0 = np.array([float(w) for w in self.weights])
        return np.atleast_2d(np.asarray(X, dtype=float)) @ W.T + w0


def dual_fan(nd: NewtonData) -> PolyhedralComplex:
    """Locus where the max over the support is attained at least twice:
    one candidate cell per unordered support pair, pruned for feasibility."""
    n = nd.dim
    pts = [np.array(w, dtype=object) for w in nd.support]
    cells = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            cons = [Constraint(tuple(Fraction(int(a) - int(b))
                                     for a, b in zip(nd.support[i], nd.support[j])),
                               nd.weights[j] - nd.weights[i], "eq")]
            for k in range(len(pts)):
                if k in (i, j):
                    continue
                cons.append(Constraint(tuple(Fraction(int(a) - int(b))
                                             for a, b in zip(nd.support[k], nd.support[i])),
                                       nd.weights[i] - nd.weights[k], "leq"))
            cells.append(Polyhedron.make(cons))
    return PolyhedralComplex.make(cells).prune()


@dataclass(frozen=True)
class GridSpec:
    count: int = 10000
    seed: int = 0


def attained_twice_oracle(nd: NewtonData, grid: GridSpec = GridSpec()) -> np.ndarray:
    """Brute-force tie locations on the unit sphere.

    Directions are scanned on a grid; whenever the argmax changes between
    neighbours the transition is bisected, so reported directions carry a
    top-two gap that vanishes to solver precision.  Exact on-grid ties are
    reported as-is.
    """
    n = nd.dim
    if len(nd.support) < 2:
        return np.zeros((0, n))
    if n == 2:
        return _oracle_circle(nd, grid.count)
    dirs = sphere_grid(n, grid.count, seed=grid.seed)
    vals = nd.values(dirs)
    part = np.partition(vals, vals.shape[1] - 2, axis=1)
    gap = part[:, -1] - part[:, -2]
    step = math.sqrt(4.0 * math.pi / grid.count)
    lip = _pair_lipschitz(nd)
    return dirs[gap <= step * lip]


def _pair_lipschitz(nd: NewtonData) -> float:
    best = 1.0
    for i in range(len(nd.support)):
        for j in range(i + 1, len(nd.support)):
            d = np.array(nd.support[i], dtype=float) - np.array(nd.support[j], dtype=float)
            best = max(best, float(np.linalg.norm(d)))
    return best


def _oracle_circle(nd: NewtonData, count: int) -> np.ndarray:
    thetas = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    vals = nd.values(dirs)
    top = np.argmax(vals, axis=1)
    part = np.partition(vals, vals.shape[1] - 2, axis=1)
    gap = part[:, -1] - part[:, -2]
    tied = gap <= 1e-12 * np.maximum(1.0, np.abs(part[:, -1]))
    angles: list[float] = [float(thetas[k]) for k in np.nonzero(tied)[0]]
    m = len(thetas)
    step = 2.0 * math.pi / m
    for k in range(m):
        k2 = (k + 1) % m
        if top[k] == top[k2] or tied[k] or tied[k2]:
            continue
        lo, hi = thetas[k], thetas[k] + step
        ref = top[k]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            u = np.array([[math.cos(mid), math.sin(mid)]])
            if np.argmax(nd.values(u)[0]) == ref:
                lo = mid
            else:
                hi = mid
        angles.append(0.5 * (lo + hi))
    # a cell can touch the circle without flipping the argmax (the runner-up
    # grazes the leader); chase local minima of the top-two gap to zero
    lip = _pair_lipschitz(nd)
    for k in range(m):
        if tied[k] or gap[k] > lip * step:
            continue
        if gap[k] > gap[(k - 1) % m] or gap[k] > gap[(k + 1) % m]:
            continue
        theta = _ternary_min_gap(nd, thetas[k] - step, thetas[k] + step)
        u = np.array([[math.cos(theta), math.sin(theta)]])
        v = nd.values(u)[0]
        p = np.partition(v, len(v) - 2)
        if p[-1] - p[-2] <= 1e-10 * max(1.0, abs(p[-1])):
            angles.append(theta % (2.0 * math.pi))
    if not angles:
        return np.zeros((0, 2))
    angles = sorted(a % (2.0 * math.pi) for a in angles)
    merged: list[float] = []
    for a in angles:
        if not merged or a - merged[-1] > 1e-9:
            merged.append(a)
    if len(merged) > 1 and (2.0 * math.pi + merged[0]) - merged[-1] <= 1e-9:
        merged.pop()
    return np.array([[math.cos(a), math.sin(a)] for a in merged])


def _ternary_min_gap(nd: NewtonData, lo: float, hi: float) -> float:
    def g(theta: float) -> float:
        v = nd.values(np.array([[math.cos(theta), math.sin(theta)]]))[0]
        p = np.partition(v, len(v) - 2)
        return float(p[-1] - p[-2])

    for _ in range(120):
        third = (hi - lo) / 3.0
        a, b = lo + third, hi - third
        if g(a) <= g(b):
            hi = b
        else:
            lo = a
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Sphere sampling
# ---------------------------------------------------------------------------

def sphere_grid(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic covers of S^(n-1): uniform angles for n=2, a Fibonacci
    lattice for n=3, seeded Gaussian directions beyond."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        thetas = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        return np.column_stack([np.cos(thetas), np.sin(thetas)])
    if n == 3:
        k = np.arange(count, dtype=float) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * k
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def complex_on_sphere(K: PolyhedralComplex, count: int = 20000,
                      keep_tol: float | None = None) -> np.ndarray:
    """Unit directions lying on the complex, obtained by projecting a sphere
    cover onto each cell and renormalizing; covers K intersect S^(n-1) to
    within the grid spacing."""
    n = K.dim_ambient
    if n == 0 or not K.cells:
        return np.zeros((0, n))
    grid = sphere_grid(n, count)
    step = 2.0 * math.pi / count if n == 2 else math.sqrt(4.0 * math.pi / count)
    tol = keep_tol if keep_tol is not None else 2.0 * step
    out = []
    for cell in K.cells:
        d, P = cell.project_many(grid)
        norms = np.linalg.norm(P, axis=1)
        keep = (d <= tol) & (norms > 1e-9)
        if keep.any():
            out.append(P[keep] / norms[keep, None])
    if not out:
        return np.zeros((0, n))
    return np.vstack(out)

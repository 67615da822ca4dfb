"""Exact tropical descriptions via guard formulas.

A cone spec presents an open convex cone C whose closure sits in the lower
half-space of transformed coordinates x' = B(x): faces are given by rows a
with the x'_n coefficient scaled to 1.  The guard formula

    phi_C(x, h) = not( h <= x'_n  or  h <= x'^(a_i) * x'_n  or ... )

carves out the exponential neighborhood E_h(C); its negation is a positive
disjunction of Leq atoms.  Conjoining those negations onto a positive
formula removes limit directions that the sampled set provably misses,
which is how the spurious rays of a dequantized description get cut away.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .amoeba import PointCloud, SamplerConfig, sample_members
from .dequantize import (dequantize_formula, eval_classical,
                         eval_tropical_formula, nice_fraction)
from .formula import (And, Atom, Formula, Not, Or, Parameter, Power, Product,
                      Term, Variable)
from .geometry import PolyhedralComplex

__all__ = [
    "ConeSpec", "GuardFormula", "InvalidConeError", "ExhaustionFailedError",
    "ExhaustionReport", "AssembledExact", "VerifyGrid", "VerifyReport",
    "guard_formula", "exhaustion_check", "assemble_exact", "verify_exactness",
    "substitute_parameter",
]

THRESHOLD_NAME = "h"
DEFAULT_H_DESCENT = tuple(Fraction(1, 10 ** k) for k in range(1, 7))


class InvalidConeError(ValueError):
    pass


class ExhaustionFailedError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return nice_fraction(x)
    return Fraction(x)


def _det(rows: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / inv
            for c in range(col, n):
                m[r][c] -= factor * m[col][c]
    return det


@dataclass(frozen=True)
class ConeSpec:
    """B: invertible rational change of coordinates; normals: per-face rows
    a of length n-1, the face being <a, x'_{1..n-1}> + x'_n <= 0."""
    B: tuple
    normals: tuple

    @staticmethod
    def make(B, normals) -> "ConeSpec":
        Bt = tuple(tuple(_frac(v) for v in row) for row in B)
        n = len(Bt)
        if any(len(row) != n for row in Bt):
            raise InvalidConeError("B must be square")
        if _det([list(r) for r in Bt]) == 0:
            raise InvalidConeError("B must be invertible")
        Nt = tuple(tuple(_frac(v) for v in row) for row in normals)
        if any(len(row) != n - 1 for row in Nt):
            raise InvalidConeError(f"face rows must have length {n - 1}")
        return ConeSpec(Bt, Nt)

    @property
    def dim(self) -> int:
        return len(self.B)

    @staticmethod
    def from_obj(obj: dict) -> "ConeSpec":
        return ConeSpec.make(obj["B"], obj.get("normals", []))

    def to_obj(self) -> dict:
        return {"B": [[str(v) for v in row] for row in self.B],
                "normals": [[str(v) for v in row] for row in self.normals]}

    @staticmethod
    def list_from_json(text: str) -> list:
        data = json.loads(text)
        if isinstance(data, dict):
            data = data.get("cones", [data])
        return [ConeSpec.from_obj(o) for o in data]


def _monomial(exponents: Sequence[Fraction]) -> Term:
    factors = []
    for i, e in enumerate(exponents):
        if e == 0:
            continue
        if e == 1:
            factors.append(Variable(i))
        else:
            factors.append(Power(Variable(i), float(e)))
    if not factors:
        return Parameter("1")
    out = factors[0]
    for f in factors[1:]:
        out = Product(out, f)
    return out


def _pullback(spec: ConeSpec, prim_exponents: Sequence[Fraction]) -> list:
    """Exponent vector of x'^c written in the original coordinates: B^T c."""
    n = spec.dim
    return [sum(spec.B[j][k] * prim_exponents[j] for j in range(n))
            for k in range(n)]


@dataclass(frozen=True)
class GuardFormula:
    """phi_C with a free threshold parameter; complement() is the positive
    disjunction used during assembly."""
    spec: ConeSpec
    atoms: tuple  # Leq atoms  h <= monomial
    threshold: str = THRESHOLD_NAME

    @property
    def formula(self) -> Formula:
        return Not(self._join())

    def _join(self) -> Formula:
        return self.atoms[0] if len(self.atoms) == 1 else Or(tuple(self.atoms))

    def complement(self, h=None) -> Formula:
        out = self._join()
        if h is not None:
            out = substitute_parameter(out, self.threshold, Parameter(str(_frac(h))))
        return out

    def monomials(self) -> list:
        return [a.rhs for a in self.atoms]


def guard_formula(spec: ConeSpec) -> GuardFormula:
    n = spec.dim
    prims = [[Fraction(0)] * (n - 1) + [Fraction(1)]]
    for a in spec.normals:
        prims.append(list(a) + [Fraction(1)])
    atoms = tuple(Atom("leq", Parameter(THRESHOLD_NAME), _monomial(_pullback(spec, c)))
                  for c in prims)
    return GuardFormula(spec, atoms)


def _substitute_term(term: Term, name: str, repl: Term) -> Term:
    from .formula import Power as P, Product as Pr, Sum as S
    if isinstance(term, Parameter):
        return repl if term.name == name else term
    if isinstance(term, S):
        return S(_substitute_term(term.left, name, repl),
                 _substitute_term(term.right, name, repl))
    if isinstance(term, Pr):
        return Pr(_substitute_term(term.left, name, repl),
                  _substitute_term(term.right, name, repl))
    if isinstance(term, P):
        return P(_substitute_term(term.base, name, repl), term.exponent)
    return term


def substitute_parameter(f: Formula, name: str, repl: Term) -> Formula:
    from .formula import Exists, Forall
    if isinstance(f, Atom):
        return Atom(f.rel, _substitute_term(f.lhs, name, repl),
                    _substitute_term(f.rhs, name, repl))
    if isinstance(f, And):
        return And(tuple(substitute_parameter(g, name, repl) for g in f.items))
    if isinstance(f, Or):
        return Or(tuple(substitute_parameter(g, name, repl) for g in f.items))
    if isinstance(f, Not):
        return Not(substitute_parameter(f.item, name, repl))
    if isinstance(f, Exists):
        return Exists(f.var, substitute_parameter(f.body, name, repl))
    if isinstance(f, Forall):
        return Forall(f.var, substitute_parameter(f.body, name, repl))
    return f


# ---------------------------------------------------------------------------
# Exhaustion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExhaustionReport:
    ok: bool
    inside_count: int
    total: int
    h: Fraction
    vacuous: bool

    def __bool__(self) -> bool:
        return self.ok


def exhaustion_check(cloud: PointCloud, spec: ConeSpec, h) -> ExhaustionReport:
    """True when no sampled point lies in E_h(C); sound only up to the
    sampling density.  An empty cloud passes vacuously and is flagged."""
    h = _frac(h)
    if h <= 0:
        raise ValueError("threshold h must be positive")
    if cloud.space != "classical":
        raise ValueError("exhaustion checks run on classical samples")
    if not len(cloud):
        return ExhaustionReport(True, 0, 0, h, vacuous=True)
    guard = guard_formula(spec)
    X = cloud.points
    inside = np.ones(len(X), dtype=bool)
    for mono in guard.monomials():
        inside &= eval_classical(mono, X, None) < float(h)
    count = int(inside.sum())
    return ExhaustionReport(count == 0, count, len(X), h, vacuous=False)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssembledExact:
    formula: Formula
    thresholds: tuple
    reports: tuple


def assemble_exact(phi: Formula, cover: Sequence[ConeSpec], h=None,
                   cloud: PointCloud | None = None, env=None,
                   cfg: SamplerConfig | None = None) -> AssembledExact:
    """psi = phi AND (complement of each guard at its accepted threshold).

    Thresholds are taken from h when given, otherwise searched by geometric
    descent, keeping the largest value whose exhaustion check passes.  The
    substituted thresholds are rational literals, so psi is self-contained
    and still positive.
    """
    if cloud is None:
        cloud = sample_members(phi, env, cfg or SamplerConfig())
    candidates = [_frac(h)] if h is not None else list(DEFAULT_H_DESCENT)
    parts = [phi]
    thresholds = []
    reports = []
    for i, spec in enumerate(cover):
        chosen = None
        for cand in candidates:
            rep = exhaustion_check(cloud, spec, cand)
            if rep.ok:
                chosen = (cand, rep)
                break
        if chosen is None:
            raise ExhaustionFailedError(
                i, f"cone {i}: sampled points remain in E_h(C) for all h tried")
        thresholds.append(chosen[0])
        reports.append(chosen[1])
        parts.append(guard_formula(spec).complement(chosen[0]))
    psi = parts[0] if len(parts) == 1 else And(tuple(parts))
    return AssembledExact(psi, tuple(thresholds), tuple(reports))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyGrid:
    bounds: tuple = ((-2.0, 2.0), (-2.0, 2.0))
    count: int = 401


@dataclass(frozen=True)
class VerifyReport:
    disagreements: int
    total: int
    mismatch_points: np.ndarray
    only_formula: int
    only_target: int

    @property
    def agrees(self) -> bool:
        return self.disagreements == 0


def verify_exactness(psi: Formula, target: PolyhedralComplex,
                     grid: VerifyGrid = VerifyGrid(),
                     tol: float = 1e-9) -> VerifyReport:
    """Grid membership comparison between the tropical set of psi and the
    target complex."""
    axes = [np.linspace(lo, hi, grid.count) for lo, hi in grid.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    tf = dequantize_formula(psi)
    in_formula = eval_tropical_formula(tf, pts, tol=tol)
    dists = target.distance_many(pts)
    in_target = dists <= tol
    mism = in_formula != in_target
    return VerifyReport(
        disagreements=int(mism.sum()),
        total=len(pts),
        mismatch_points=pts[mism],
        only_formula=int((in_formula & ~in_target).sum()),
        only_target=int((~in_formula & in_target).sum()),
    )

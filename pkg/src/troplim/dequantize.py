"""Base-t deformation of positive arithmetic and its max-plus limit.

For a degeneration parameter t in (0,1) the positive reals are pulled back
through ``x -> log_{1/t}(x)``:

    a (+)_t b = log_{1/t}(t^-a + t^-b)        a (*)_t b = a + b

As t -> 0 these operations converge to ``max`` and ``+``.  A term over the
positive language therefore has three readings: classical, base-t, and
tropical.  Constants ``a`` read as ``a``, ``log_{1/t}(a)``, and ``0``
respectively.

The base-t sum is computed in the shifted form
``max(a,b) + log1p(t^|a-b|)/log(1/t)`` which never overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .formula import (
    And, Atom, Exists, Forall, Formula, Not, Or,
    Parameter, ParameterEnvironment, Power, Product, Sum, Term, Variable,
    literal_value,
)

__all__ = [
    "TVar", "TZero", "TScale", "TPlus", "TMax", "TropicalTerm",
    "TropicalAtom", "TropicalFormula",
    "NonPositiveFormulaError", "QuantifiedFormulaError",
    "DEFAULT_EQ_TOL",
    "exp_map", "eval_classical", "eval_t", "eval_tropical_term",
    "dequantize_term", "dequantize_formula", "sandwich_constant",
    "eval_formula_classical", "eval_formula_t", "eval_tropical_formula",
    "AffineForm", "affine_max_form", "tropical_term_to_str",
    "tropical_formula_to_str",
]

DEFAULT_EQ_TOL = 1e-9


class NonPositiveFormulaError(ValueError):
    """Dequantization is defined only for negation-free formulas."""


class QuantifiedFormulaError(ValueError):
    """Pointwise evaluation requires a quantifier-free formula."""


# ---------------------------------------------------------------------------
# Tropical terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TVar:
    index: int


@dataclass(frozen=True)
class TZero:
    pass


@dataclass(frozen=True)
class TScale:
    factor: float
    item: "TropicalTerm"


@dataclass(frozen=True)
class TPlus:
    left: "TropicalTerm"
    right: "TropicalTerm"


@dataclass(frozen=True)
class TMax:
    left: "TropicalTerm"
    right: "TropicalTerm"


TropicalTerm = Union[TVar, TZero, TScale, TPlus, TMax]


@dataclass(frozen=True)
class TropicalAtom:
    rel: str
    lhs: TropicalTerm
    rhs: TropicalTerm


TropicalFormula = Union[TropicalAtom, And, Or, Not, Exists, Forall]


# ---------------------------------------------------------------------------
# Point handling
# ---------------------------------------------------------------------------

def _as_points(x) -> tuple[np.ndarray, bool]:
    """Coerce to an (m, n) array; report whether the input was a single point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ValueError("points must be a vector or a matrix of row vectors")


def _unwrap(values: np.ndarray, single: bool):
    return values[0] if single else values


def exp_map(x, t: float):
    """Inverse of the base-(1/t) log: componentwise (1/t)^x."""
    _check_t(t)
    arr = np.asarray(x, dtype=float)
    return np.exp(arr * math.log(1.0 / t))


def _check_t(t: float) -> None:
    if not (0.0 < t < 1.0):
        raise ValueError(f"t must lie in (0,1), got {t}")


# ---------------------------------------------------------------------------
# Term evaluation: classical, base-t, tropical
# ---------------------------------------------------------------------------

def eval_classical(term: Term, x, env: ParameterEnvironment | None = None):
    """Evaluate a term on positive points; vectorized over rows of ``x``."""
    env = env or ParameterEnvironment()
    pts, single = _as_points(x)

    def ev(node: Term) -> np.ndarray:
        if isinstance(node, Variable):
            return pts[:, node.index]
        if isinstance(node, Parameter):
            return np.full(pts.shape[0], env[node.name])
        if isinstance(node, Sum):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Product):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Power):
            return ev(node.base) ** node.exponent
        raise TypeError(f"not a term: {node!r}")

    return _unwrap(ev(term), single)


def eval_t(term: Term, x, t: float, env: ParameterEnvironment | None = None):
    """Evaluate a term under the base-t operations at log-scale points."""
    _check_t(t)
    env = env or ParameterEnvironment()
    pts, single = _as_points(x)
    L = math.log(1.0 / t)

    def ev(node: Term) -> np.ndarray:
        if isinstance(node, Variable):
            return pts[:, node.index]
        if isinstance(node, Parameter):
            value = env[node.name]
            if value <= 0.0:
                raise ValueError(f"base-t reading needs positive constants, got {value}")
            return np.full(pts.shape[0], math.log(value) / L)
        if isinstance(node, Sum):
            a, b = ev(node.left), ev(node.right)
            m = np.maximum(a, b)
            return m + np.log1p(np.exp(-L * np.abs(a - b))) / L
        if isinstance(node, Product):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Power):
            return node.exponent * ev(node.base)
        raise TypeError(f"not a term: {node!r}")

    return _unwrap(ev(term), single)


def eval_tropical_term(term: TropicalTerm, x):
    """Evaluate a max-plus term; vectorized over rows of ``x``."""
    pts, single = _as_points(x)

    def ev(node: TropicalTerm) -> np.ndarray:
        if isinstance(node, TVar):
            return pts[:, node.index]
        if isinstance(node, TZero):
            return np.zeros(pts.shape[0])
        if isinstance(node, TScale):
            return node.factor * ev(node.item)
        if isinstance(node, TPlus):
            return ev(node.left) + ev(node.right)
        if isinstance(node, TMax):
            return np.maximum(ev(node.left), ev(node.right))
        raise TypeError(f"not a tropical term: {node!r}")

    return _unwrap(ev(term), single)


# ---------------------------------------------------------------------------
# Dequantization
# ---------------------------------------------------------------------------

def dequantize_term(term: Term) -> TropicalTerm:
    """Structural limit t -> 0: sums become max, products become +,
    powers become scaling, and every constant collapses to the
    multiplicative neutral 0."""
    if isinstance(term, Variable):
        return TVar(term.index)
    if isinstance(term, Parameter):
        lit = literal_value(term.name)
        if lit is not None and lit == 0:
            raise ValueError("the literal 0 has no max-plus reading")
        return TZero()
    if isinstance(term, Sum):
        return TMax(dequantize_term(term.left), dequantize_term(term.right))
    if isinstance(term, Product):
        return TPlus(dequantize_term(term.left), dequantize_term(term.right))
    if isinstance(term, Power):
        return TScale(term.exponent, dequantize_term(term.base))
    raise TypeError(f"not a term: {term!r}")


def dequantize_formula(f: Formula) -> TropicalFormula:
    """Atom-wise dequantization.  Requires a negation-free formula;
    quantifiers are carried through syntactically."""
    if isinstance(f, Atom):
        return TropicalAtom(f.rel, dequantize_term(f.lhs), dequantize_term(f.rhs))
    if isinstance(f, And):
        return And(tuple(dequantize_formula(i) for i in f.items))
    if isinstance(f, Or):
        return Or(tuple(dequantize_formula(i) for i in f.items))
    if isinstance(f, Not):
        raise NonPositiveFormulaError(
            "negation does not survive the limit; rewrite as a positive formula")
    if isinstance(f, Exists):
        return Exists(f.var, dequantize_formula(f.body))
    if isinstance(f, Forall):
        return Forall(f.var, dequantize_formula(f.body))
    raise TypeError(f"not a formula: {f!r}")


def sandwich_constant(term: Term, env: ParameterEnvironment | None = None) -> float:
    """Constant C with  U_0 <= U_t <= U_0 + log_{1/t} C  for all t in (0,1).

    Recursion: variables give 1, a constant gives its own value, powers
    raise, products multiply, sums double the larger constant.  The lower
    bound of the sandwich needs every constant >= 1 and every exponent >= 0;
    the upper bound holds for any positive constants.
    """
    env = env or ParameterEnvironment()
    if isinstance(term, Variable):
        return 1.0
    if isinstance(term, Parameter):
        return env[term.name]
    if isinstance(term, Power):
        return sandwich_constant(term.base, env) ** term.exponent
    if isinstance(term, Product):
        return sandwich_constant(term.left, env) * sandwich_constant(term.right, env)
    if isinstance(term, Sum):
        return 2.0 * max(sandwich_constant(term.left, env),
                         sandwich_constant(term.right, env))
    raise TypeError(f"not a term: {term!r}")


# ---------------------------------------------------------------------------
# Formula evaluation (quantifier-free)
# ---------------------------------------------------------------------------

def _eval_connectives(f, atom_fn, pts: np.ndarray) -> np.ndarray:
    if isinstance(f, (Atom, TropicalAtom)):
        return atom_fn(f)
    if isinstance(f, And):
        out = np.ones(pts.shape[0], dtype=bool)
        for item in f.items:
            out &= _eval_connectives(item, atom_fn, pts)
        return out
    if isinstance(f, Or):
        out = np.zeros(pts.shape[0], dtype=bool)
        for item in f.items:
            out |= _eval_connectives(item, atom_fn, pts)
        return out
    if isinstance(f, Not):
        return ~_eval_connectives(f.item, atom_fn, pts)
    if isinstance(f, (Exists, Forall)):
        raise QuantifiedFormulaError("membership evaluation needs a quantifier-free formula")
    raise TypeError(f"not a formula: {f!r}")


def eval_formula_classical(f: Formula, x, env: ParameterEnvironment | None = None,
                           eta: float = 0.0):
    """Classical membership on positive points.  Equalities may be thickened
    relatively: ``|u - v| <= eta * max(u, v)``.  Inequalities stay sharp."""
    env = env or ParameterEnvironment()
    pts, single = _as_points(x)

    def atom_fn(a: Atom) -> np.ndarray:
        u = np.atleast_1d(eval_classical(a.lhs, pts, env))
        v = np.atleast_1d(eval_classical(a.rhs, pts, env))
        if a.rel == "leq":
            return u <= v
        if eta == 0.0:
            return u == v
        return np.abs(u - v) <= eta * np.maximum(u, v)

    return _unwrap(_eval_connectives(f, atom_fn, pts), single)


def eval_formula_t(f: Formula, x, t: float, env: ParameterEnvironment | None = None,
                   tol: float = DEFAULT_EQ_TOL):
    """Membership under the base-t reading at log-scale points."""
    env = env or ParameterEnvironment()
    pts, single = _as_points(x)

    def atom_fn(a: Atom) -> np.ndarray:
        u = np.atleast_1d(eval_t(a.lhs, pts, t, env))
        v = np.atleast_1d(eval_t(a.rhs, pts, t, env))
        if a.rel == "leq":
            return u <= v + tol
        return np.abs(u - v) <= tol

    return _unwrap(_eval_connectives(f, atom_fn, pts), single)


def eval_tropical_formula(tf: TropicalFormula, x, tol: float = DEFAULT_EQ_TOL):
    """Max-plus membership; equalities compare within ``tol``."""
    pts, single = _as_points(x)

    def atom_fn(a: TropicalAtom) -> np.ndarray:
        u = np.atleast_1d(eval_tropical_term(a.lhs, pts))
        v = np.atleast_1d(eval_tropical_term(a.rhs, pts))
        if a.rel == "leq":
            return u <= v + tol
        return np.abs(u - v) <= tol

    return _unwrap(_eval_connectives(tf, atom_fn, pts), single)


# ---------------------------------------------------------------------------
# Max-of-affine normal form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineForm:
    """The function  coeffs . x + const  with exact rational data."""
    coeffs: tuple
    const: Fraction

    def __call__(self, x) -> float:
        pts, single = _as_points(x)
        vals = pts @ np.array([float(c) for c in self.coeffs]) + float(self.const)
        return _unwrap(vals, single)


def nice_fraction(x: float) -> Fraction:
    """Exact Fraction for a float, preferring the small-denominator rational
    that rounds to the same float (so 0.1 is read as 1/10)."""
    r = Fraction(x).limit_denominator(10**9)
    return r if float(r) == x else Fraction(x)


def affine_max_form(term: TropicalTerm, n: int) -> list[AffineForm]:
    """Flatten a tropical term into max(affine forms).

    Scaling by a negative factor is only admissible on single-branch
    subterms; scaling a genuine max by a negative factor would yield a min.
    """
    zero = tuple(Fraction(0) for _ in range(n))

    def go(node: TropicalTerm) -> list[AffineForm]:
        if isinstance(node, TVar):
            coeffs = tuple(Fraction(1) if j == node.index else Fraction(0) for j in range(n))
            return [AffineForm(coeffs, Fraction(0))]
        if isinstance(node, TZero):
            return [AffineForm(zero, Fraction(0))]
        if isinstance(node, TScale):
            branches = go(node.item)
            factor = nice_fraction(node.factor)
            if factor < 0 and len(branches) > 1:
                raise ValueError("negative scaling of a max has no affine-max form")
            return [AffineForm(tuple(factor * c for c in b.coeffs), factor * b.const)
                    for b in branches]
        if isinstance(node, TPlus):
            lefts, rights = go(node.left), go(node.right)
            return [AffineForm(tuple(a + b for a, b in zip(l.coeffs, r.coeffs)),
                               l.const + r.const)
                    for l in lefts for r in rights]
        if isinstance(node, TMax):
            return go(node.left) + go(node.right)
        raise TypeError(f"not a tropical term: {node!r}")

    forms = go(term)
    seen: dict[tuple, AffineForm] = {}
    for form in forms:
        key = (form.coeffs, form.const)
        if key not in seen:
            seen[key] = form
    return list(seen.values())


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _affine_str(form: AffineForm) -> str:
    parts: list[str] = []
    for j, c in enumerate(form.coeffs):
        if c == 0:
            continue
        if c == 1:
            parts.append(f"x{j + 1}")
        elif c == -1:
            parts.append(f"-x{j + 1}")
        else:
            cs = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            parts.append(f"{cs}*x{j + 1}")
    if form.const != 0 or not parts:
        c = form.const
        parts.append(str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}")
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def tropical_term_to_str(term: TropicalTerm, n: int | None = None) -> str:
    """Render as a flat ``max(...)`` of affine forms when possible."""
    if n is None:
        n = _tropical_dim(term)
    try:
        forms = affine_max_form(term, n)
    except ValueError:
        return repr(term)
    if len(forms) == 1:
        return _affine_str(forms[0])
    return "max(" + ", ".join(_affine_str(b) for b in forms) + ")"


def _tropical_dim(term: TropicalTerm) -> int:
    if isinstance(term, TVar):
        return term.index + 1
    if isinstance(term, TZero):
        return 0
    if isinstance(term, TScale):
        return _tropical_dim(term.item)
    if isinstance(term, (TPlus, TMax)):
        return max(_tropical_dim(term.left), _tropical_dim(term.right))
    raise TypeError(f"not a tropical term: {term!r}")


def tropical_formula_to_str(tf: TropicalFormula, n: int | None = None) -> str:
    if n is None:
        n = _tropical_formula_dim(tf)

    def render(node, ctx: int) -> str:
        if isinstance(node, TropicalAtom):
            op = "=" if node.rel == "eq" else "<="
            return f"{tropical_term_to_str(node.lhs, n)} {op} {tropical_term_to_str(node.rhs, n)}"
        if isinstance(node, And):
            s = " & ".join(render(i, 2) for i in node.items)
            return f"({s})" if ctx > 2 else s
        if isinstance(node, Or):
            s = " | ".join(render(i, 1) for i in node.items)
            return f"({s})" if ctx > 1 else s
        if isinstance(node, Not):
            return f"!{render(node.item, 3)}"
        if isinstance(node, (Exists, Forall)):
            q = "E" if isinstance(node, Exists) else "A"
            s = f"{q} x{node.var + 1} . {render(node.body, 0)}"
            return f"({s})" if ctx > 0 else s
        raise TypeError(f"not a tropical formula: {node!r}")

    return render(tf, 0)


def _tropical_formula_dim(tf: TropicalFormula) -> int:
    if isinstance(tf, TropicalAtom):
        return max(_tropical_dim(tf.lhs), _tropical_dim(tf.rhs))
    if isinstance(tf, (And, Or)):
        return max(_tropical_formula_dim(i) for i in tf.items)
    if isinstance(tf, Not):
        return _tropical_formula_dim(tf.item)
    if isinstance(tf, (Exists, Forall)):
        return max(tf.var + 1, _tropical_formula_dim(tf.body))
    raise TypeError(f"not a tropical formula: {tf!r}")

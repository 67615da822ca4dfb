"""Truncated real Puiseux series and valued points.

A series is a finite list of terms ``c * t^e`` with real coefficients and
strictly ascending rational exponents, known below a truncation exponent
(``inf`` for exact series).  ``t`` is a positive infinitesimal: the order is
lexicographic in the exponents, so ``0 < t < r`` for every positive real r.
The valuation is the least exponent, normalized by ``v(t) = 1``.

Polynomials over the series field carry integer support points; twisting by
a rational direction and taking initial forms implement the patchworking
construction for hypersurfaces.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PuiseuxSeries", "PuiseuxPolynomial", "ValuedPoint",
    "ZeroBelowTruncationError", "IndeterminateComparisonError",
    "series_add", "series_neg", "series_sub", "series_mul", "series_pow",
    "valuation", "compare", "is_positive_series", "log_map",
    "instantiate", "twist", "initial_form", "lambda_membership_hypersurface",
    "parse_puiseux_file", "parse_rational_vector",
    "DEFAULT_TRUNCATION_ORDER", "MAX_RAMIFICATION",
]

DEFAULT_TRUNCATION_ORDER = Fraction(8)
MAX_RAMIFICATION = 12

_INF = math.inf


class ZeroBelowTruncationError(ArithmeticError):
    """The series vanishes below its truncation; the query is undefined."""


class IndeterminateComparisonError(ArithmeticError):
    """Two series agree on all known terms; their order is not determined."""


def _as_exponent(e) -> Fraction:
    return e if isinstance(e, Fraction) else Fraction(e)


@dataclass(frozen=True)
class PuiseuxSeries:
    """terms: ((exponent, coefficient), ...) ascending, coefficients nonzero,
    all exponents strictly below ``truncation``."""
    terms: tuple
    truncation: object = _INF  # Fraction or math.inf

    def __post_init__(self):
        last = None
        for e, c in self.terms:
            if not isinstance(e, Fraction):
                raise TypeError("exponents must be Fractions")
            if last is not None and e <= last:
                raise ValueError("exponents must be strictly ascending")
            if c == 0:
                raise ValueError("zero coefficients are not stored")
            if e >= self.truncation:
                raise ValueError("terms at or above the truncation are unknown")
            last = e

    # construction ----------------------------------------------------------

    @staticmethod
    def make(terms: Iterable, truncation=_INF) -> "PuiseuxSeries":
        acc: dict[Fraction, float] = {}
        for e, c in terms:
            e = _as_exponent(e)
            acc[e] = acc.get(e, 0.0) + float(c)
        kept = tuple(sorted((e, c) for e, c in acc.items()
                            if c != 0.0 and e < truncation))
        return PuiseuxSeries(kept, truncation)

    @staticmethod
    def constant(c: float) -> "PuiseuxSeries":
        return PuiseuxSeries.make([(Fraction(0), c)])

    @staticmethod
    def t(power=1) -> "PuiseuxSeries":
        return PuiseuxSeries.make([(_as_exponent(power), 1.0)])

    # queries ---------------------------------------------------------------

    @property
    def ramification(self) -> int:
        out = 1
        for e, _ in self.terms:
            out = out * e.denominator // math.gcd(out, e.denominator)
        return out

    def is_zero(self) -> bool:
        """True only for the exact zero; a truncated zero raises."""
        if self.terms:
            return False
        if self.truncation is _INF or self.truncation == _INF:
            return True
        raise ZeroBelowTruncationError("series vanishes below its truncation")

    def leading(self) -> tuple[Fraction, float]:
        if not self.terms:
            raise ZeroBelowTruncationError("no known terms")
        return self.terms[0]

    def evaluate(self, t_value: float) -> float:
        if not (0.0 < t_value < 1.0):
            raise ValueError("series are evaluated at t in (0,1)")
        return float(sum(c * t_value ** float(e) for e, c in self.terms))

    def __str__(self) -> str:
        if not self.terms:
            body = "0"
        else:
            parts = []
            for e, c in self.terms:
                if e == 0:
                    parts.append(f"{c:g}")
                else:
                    es = str(e) if e.denominator == 1 else f"({e})"
                    parts.append(f"{c:g}*t^{es}")
            body = " + ".join(parts).replace("+ -", "- ")
        if self.truncation is _INF or self.truncation == _INF:
            return body
        return f"{body} + O(t^{self.truncation})"


def _tmin(a, b):
    return a if (b is _INF or (a is not _INF and a <= b)) else b


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

def _coerce(x) -> PuiseuxSeries:
    if isinstance(x, PuiseuxSeries):
        return x
    return PuiseuxSeries.constant(float(x))


def series_add(a, b) -> PuiseuxSeries:
    a, b = _coerce(a), _coerce(b)
    trunc = _tmin(a.truncation, b.truncation)
    return PuiseuxSeries.make(list(a.terms) + list(b.terms), trunc)


def series_neg(a) -> PuiseuxSeries:
    a = _coerce(a)
    return PuiseuxSeries(tuple((e, -c) for e, c in a.terms), a.truncation)


def series_sub(a, b) -> PuiseuxSeries:
    return series_add(a, series_neg(b))


def series_mul(a, b) -> PuiseuxSeries:
    a, b = _coerce(a), _coerce(b)
    if not a.terms or not b.terms:
        # 0 * x vanishes, but the result is only known below the budget
        trunc = _tmin(a.truncation, b.truncation)
        return PuiseuxSeries((), trunc)
    va, vb = a.terms[0][0], b.terms[0][0]
    trunc = _tmin(
        _INF if a.truncation is _INF else a.truncation + vb,
        _INF if b.truncation is _INF else b.truncation + va,
    )
    out = [(ea + eb, ca * cb) for ea, ca in a.terms for eb, cb in b.terms]
    return PuiseuxSeries.make(out, trunc)


def _binomial(alpha: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= (alpha - i)
        out /= (i + 1)
    return out


def series_pow(a: PuiseuxSeries, alpha) -> PuiseuxSeries:
    """Raise to a rational power.

    Integer powers work for any invertible series; fractional powers need a
    positive leading coefficient.  Exact inputs are truncated at relative
    order ``DEFAULT_TRUNCATION_ORDER`` when the expansion does not terminate.
    """
    alpha = _as_exponent(alpha)
    a = _coerce(a)
    if not a.terms:
        if alpha == 0:
            return PuiseuxSeries.constant(1.0)
        if alpha > 0:
            a.is_zero()  # raises for truncated zero
            return PuiseuxSeries((), _INF)
        raise ZeroBelowTruncationError("cannot invert a vanishing series")
    v, c = a.terms[0]
    if alpha.denominator == 1 and alpha >= 0:
        k = int(alpha)
        out = PuiseuxSeries.constant(1.0)
        for _ in range(k):
            out = series_mul(out, a)
        return out
    if c < 0 and alpha.denominator != 1:
        raise ValueError("fractional powers need a positive leading coefficient")
    # a = c t^v (1 + u); expand (1+u)^alpha binomially
    rel_terms = tuple((e - v, w / c) for e, w in a.terms[1:])
    rel_trunc = _INF if a.truncation is _INF else a.truncation - v
    if rel_terms and rel_trunc is _INF:
        rel_trunc = DEFAULT_TRUNCATION_ORDER
    u = PuiseuxSeries(rel_terms, rel_trunc)
    acc = PuiseuxSeries.make([(Fraction(0), 1.0)], rel_trunc)
    if u.terms:
        vu = u.terms[0][0]
        power = PuiseuxSeries.make([(Fraction(0), 1.0)], rel_trunc)
        k = 1
        while k * vu < (rel_trunc if rel_trunc is not _INF else k * vu + 1):
            power = series_mul(power, u)
            if not power.terms:
                break
            coef = float(_binomial(alpha, k))
            if coef != 0.0:
                acc = series_add(acc, series_mul(PuiseuxSeries.constant(coef), power))
            k += 1
            if k > 512:
                raise ArithmeticError("binomial expansion did not terminate")
    # negative c only reaches here with an integer alpha, where float pow is fine
    scale = c ** float(alpha)
    shift = alpha * v
    out_terms = [(e + shift, w * scale) for e, w in acc.terms]
    out_trunc = _INF if acc.truncation is _INF else acc.truncation + shift
    return PuiseuxSeries.make(out_terms, out_trunc)


# ---------------------------------------------------------------------------
# Valuation and order
# ---------------------------------------------------------------------------

def valuation(a: PuiseuxSeries):
    """Least exponent; v(t) = 1.  Exact zero gives +inf, truncated zero raises."""
    a = _coerce(a)
    if not a.terms:
        if a.is_zero():
            return _INF
    return a.terms[0][0]


def compare(a, b) -> int:
    """Sign of a - b in the ordered field; raises when the known terms tie."""
    d = series_sub(a, b)
    if not d.terms:
        if d.truncation is _INF or d.truncation == _INF:
            return 0
        raise IndeterminateComparisonError(
            f"difference vanishes below t^{d.truncation}")
    return 1 if d.terms[0][1] > 0 else -1


def is_positive_series(a) -> bool:
    return compare(a, 0.0) > 0


# ---------------------------------------------------------------------------
# Valued points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValuedPoint:
    coords: tuple

    @staticmethod
    def make(coords: Sequence[PuiseuxSeries]) -> "ValuedPoint":
        return ValuedPoint(tuple(coords))

    def log(self) -> tuple:
        return log_map(self.coords)


def log_map(point) -> tuple:
    """Componentwise -valuation: the image of a valued point in R^n."""
    coords = point.coords if isinstance(point, ValuedPoint) else point
    return tuple(float(-valuation(c)) for c in coords)


# ---------------------------------------------------------------------------
# Polynomials over the series field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PuiseuxPolynomial:
    """sum over support of  c_w(t) * x^w  with integer exponent vectors."""
    support: tuple      # tuple of int tuples
    coefficients: tuple  # matching PuiseuxSeries

    def __post_init__(self):
        if len(self.support) != len(self.coefficients):
            raise ValueError("support and coefficients must align")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support points must be distinct")

    @staticmethod
    def make(entries: dict) -> "PuiseuxPolynomial":
        keys = sorted(entries)
        return PuiseuxPolynomial(
            tuple(tuple(int(e) for e in k) for k in keys),
            tuple(_coerce(entries[k]) for k in keys))

    @property
    def dim(self) -> int:
        return len(self.support[0]) if self.support else 0

    def entries(self):
        return zip(self.support, self.coefficients)


def instantiate(poly: PuiseuxPolynomial, t_value: float) -> dict:
    """Numeric polynomial at a concrete t: support -> float coefficient."""
    return {w: c.evaluate(t_value) for w, c in poly.entries()}


def twist(poly: PuiseuxPolynomial, lam: Sequence) -> PuiseuxPolynomial:
    """Substitute x_i -> t^(-lam_i) x_i: the coefficient of w picks up
    t^(-<lam, w>)."""
    lam = [_as_exponent(v) for v in lam]
    if len(lam) != poly.dim:
        raise ValueError("direction dimension mismatch")
    out = {}
    for w, c in poly.entries():
        shift = -sum(l * e for l, e in zip(lam, w))
        terms = [(e + shift, coef) for e, coef in c.terms]
        trunc = _INF if c.truncation is _INF else c.truncation + shift
        out[w] = PuiseuxSeries.make(terms, trunc)
    return PuiseuxPolynomial.make(out)


def initial_form(poly: PuiseuxPolynomial, lam: Sequence) -> dict:
    """Leading real coefficients on the argmin of v(c_w) - <lam, w>."""
    lam = [_as_exponent(v) for v in lam]
    vals = {}
    for w, c in poly.entries():
        v = valuation(c)
        if v is _INF:
            continue
        vals[w] = v - sum(l * e for l, e in zip(lam, w))
    if not vals:
        raise ZeroBelowTruncationError("polynomial has no nonvanishing coefficients")
    mu = min(vals.values())
    out = {}
    for w, c in poly.entries():
        if w in vals and vals[w] == mu:
            out[w] = c.terms[0][1]
    return out


def _eval_initial(form: dict, pts: np.ndarray) -> np.ndarray:
    total = np.zeros(pts.shape[0])
    for w, c in form.items():
        mono = np.ones(pts.shape[0])
        for j, e in enumerate(w):
            if e:
                mono = mono * pts[:, j] ** e
        total += c * mono
    return total


def lambda_membership_hypersurface(poly: PuiseuxPolynomial, lam: Sequence,
                                   samples: int = 4096, seed: int = 0) -> str:
    """Does the direction lam lie in the limit set of the positive zero locus?

    "No" when the initial form is a monomial or has one-sign coefficients
    (it cannot vanish on the open positive orthant), "Yes" when a sign change
    is bracketed and bisected to a positive zero, "CandidateYes" otherwise.
    """
    form = initial_form(poly, lam)
    coeffs = list(form.values())
    if len(form) == 1 or all(c > 0 for c in coeffs) or all(c < 0 for c in coeffs):
        return "No"
    n = len(next(iter(form)))
    rng = np.random.default_rng(seed)
    logs = rng.uniform(-6.0, 6.0, size=(samples, n))
    pts = np.exp(logs)
    vals = _eval_initial(form, pts)
    pos = np.nonzero(vals > 0)[0]
    neg = np.nonzero(vals < 0)[0]
    if vals.size and (vals == 0).any():
        return "Yes"
    if len(pos) == 0 or len(neg) == 0:
        return "CandidateYes"
    lo, hi = logs[pos[0]], logs[neg[0]]
    flo = vals[pos[0]]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(_eval_initial(form, np.exp(mid)[None, :])[0])
        scale = max(abs(c) for c in coeffs) * float(np.exp(np.abs(mid).sum()))
        if abs(fm) <= 1e-12 * max(1.0, scale):
            return "Yes"
        if (fm > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return "Yes"


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_OMEGA_RE = re.compile(r"omega\s*=\s*\(([^)]*)\)\s*;\s*coeff\s*=\s*(.+)$")
_TERM_RE = re.compile(
    r"^\s*(?P<coef>[+-]?\d+(?:\.\d*)?(?:/\d+)?)\s*"
    r"(?:\*\s*t(?:\^(?P<exp>\(?\s*[+-]?\d+(?:/\d+)?\s*\)?))?)?\s*$")


def _parse_rational(text: str) -> Fraction:
    text = text.strip().lstrip("(").rstrip(")").strip()
    return Fraction(text)


def parse_rational_vector(text: str) -> tuple:
    return tuple(_parse_rational(p) for p in text.split(","))


def _parse_series(text: str, max_ramification: int = MAX_RAMIFICATION) -> PuiseuxSeries:
    chunks = re.split(r"(?<=[0-9a-zA-Z)])\s*\+\s*", text.strip())
    terms = []
    for chunk in chunks:
        m = _TERM_RE.match(chunk)
        if m is None:
            raise ValueError(f"cannot parse series term {chunk!r}")
        coef = _parse_rational(m.group("coef"))
        if "t" in chunk.split("=")[-1]:
            exp = _parse_rational(m.group("exp")) if m.group("exp") else Fraction(1)
        else:
            exp = Fraction(0)
        if exp.denominator > max_ramification:
            raise ValueError(
                f"ramification {exp.denominator} exceeds the limit {max_ramification}")
        terms.append((exp, float(coef)))
    return PuiseuxSeries.make(terms)


def parse_puiseux_file(text: str) -> PuiseuxPolynomial:
    """One support point per line:  omega = (i1, ..., in); coeff = c0*t^e0 + ...

    Exponents are rationals with denominator at most MAX_RAMIFICATION; blank
    lines and '#' comments are skipped.
    """
    entries: dict[tuple, PuiseuxSeries] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _OMEGA_RE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: expected 'omega = (...); coeff = ...'")
        w = tuple(int(p.strip()) for p in m.group(1).split(",") if p.strip())
        if w in entries:
            raise ValueError(f"line {lineno}: duplicate support point {w}")
        entries[w] = _parse_series(m.group(2))
    if not entries:
        raise ValueError("no support points found")
    dims = {len(w) for w in entries}
    if len(dims) != 1:
        raise ValueError("support points have mixed dimensions")
    return PuiseuxPolynomial.make(entries)

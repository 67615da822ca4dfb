"""Terms and first-order formulas of the positive arithmetic language.

Terms are built from variables ``x1, x2, ...``, named positive parameters,
sums, products, and powers with real exponents.  There is no subtraction and
no division; everything a term denotes on the open positive orthant is
positive.  Formulas combine atoms ``s = t`` and ``s <= t`` with ``&``, ``|``,
``!`` and the quantifiers ``E xi . f`` / ``A xi . f``.

Numeric literals (``2``, ``27/4``, ``0.5``) are carried as self-evaluating
:class:`Parameter` nodes so that one syntax tree serves the classical, the
base-t, and the max-plus readings, which interpret constants differently.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

__all__ = [
    "Variable", "Parameter", "Sum", "Product", "Power", "Term",
    "Atom", "And", "Or", "Not", "Exists", "Forall", "Formula",
    "ParameterEnvironment", "ParseError",
    "parse_term", "parse_formula", "term_to_str", "formula_to_str",
    "free_variables", "is_positive", "normalize_polynomial",
]


# ---------------------------------------------------------------------------
# Syntax trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    index: int  # 0-based; surface name is x{index+1}

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("variable index must be >= 0")


@dataclass(frozen=True)
class Parameter:
    name: str


@dataclass(frozen=True)
class Sum:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Product:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Power:
    base: "Term"
    exponent: float


Term = Union[Variable, Parameter, Sum, Product, Power]


@dataclass(frozen=True)
class Atom:
    rel: str  # "eq" | "leq"
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if self.rel not in ("eq", "leq"):
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "Formula"


@dataclass(frozen=True)
class Exists:
    var: int
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: int
    body: "Formula"


Formula = Union[Atom, And, Or, Not, Exists, Forall]

_VAR_RE = re.compile(r"^x([0-9]+)$")
_INT_RE = re.compile(r"^[0-9]+$")
_RAT_RE = re.compile(r"^[0-9]+/[0-9]+$")
_DEC_RE = re.compile(r"^[0-9]+\.[0-9]*$")


def literal_value(name: str) -> Fraction | None:
    """Value of a self-evaluating literal name, or None for a named parameter."""
    if _INT_RE.match(name):
        return Fraction(int(name))
    if _RAT_RE.match(name):
        p, q = name.split("/")
        if int(q) == 0:
            return None
        return Fraction(int(p), int(q))
    if _DEC_RE.match(name):
        return Fraction(name)
    return None


class ParameterEnvironment:
    """Assignment of positive values to named parameters.

    Literal names resolve to their own value; assigned values must be
    positive (zero is admitted only as the literal ``0``, which appears in
    degenerate normalized equations such as ``x1 = 0``).
    """

    def __init__(self, values: dict[str, float] | None = None):
        self._values: dict[str, float] = {}
        for name, value in (values or {}).items():
            self._values[name] = self._check(name, value)

    @staticmethod
    def _check(name: str, value: float) -> float:
        value = float(value)
        if not value > 0.0:
            raise ValueError(f"parameter {name!r} must be positive, got {value}")
        if literal_value(name) is not None:
            raise ValueError(f"{name!r} is a literal and cannot be reassigned")
        return value

    def __getitem__(self, name: str) -> float:
        if name in self._values:
            return self._values[name]
        lit = literal_value(name)
        if lit is not None:
            return float(lit)
        raise KeyError(f"parameter {name!r} has no value")

    def __contains__(self, name: str) -> bool:
        return name in self._values or literal_value(name) is not None

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def items(self):
        return self._values.items()

    def extended(self, extra: dict[str, float]) -> "ParameterEnvironment":
        merged = dict(self._values)
        merged.update(extra)
        return ParameterEnvironment(merged)

    def __repr__(self) -> str:
        return f"ParameterEnvironment({self._values!r})"


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    """Raised on malformed input; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>[0-9]+(?:\.[0-9]*)?(?:/[0-9]+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|[=+*^()!&|.-]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_minus: bool = False):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_minus = allow_minus

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def fail(self, message: str) -> None:
        raise ParseError(message, self.peek()[2])

    # terms -----------------------------------------------------------------

    def term(self) -> Term:
        node = self.product()
        while self.peek()[1] == "+":
            self.next()
            node = Sum(node, self.product())
        return node

    def product(self) -> Term:
        node = self.power()
        while self.peek()[1] == "*":
            self.next()
            node = Product(node, self.power())
        return node

    def power(self) -> Term:
        base = self.primary()
        if self.peek()[1] == "^":
            self.next()
            exponent = self.exponent_literal()
            return Power(base, exponent)
        return base

    def exponent_literal(self) -> float:
        sign = 1.0
        if self.peek()[1] == "-":
            self.next()
            sign = -1.0
        paren = False
        if self.peek()[1] == "(":
            self.next()
            paren = True
            if self.peek()[1] == "-":
                self.next()
                sign = -sign
        kind, val, pos = self.next()
        if kind != "number":
            raise ParseError("expected a numeric exponent", pos)
        value = sign * float(Fraction(literal_value(val)))
        if paren:
            self.expect(")")
        return value

    def primary(self) -> Term:
        kind, val, pos = self.next()
        if kind == "number":
            return Parameter(val)
        if kind == "ident":
            m = _VAR_RE.match(val)
            if m:
                idx = int(m.group(1))
                if idx == 0:
                    raise ParseError("variables are numbered from x1", pos)
                return Variable(idx - 1)
            return Parameter(val)
        if val == "(":
            node = self.term()
            self.expect(")")
            return node
        raise ParseError(f"expected a term, found {val or 'end of input'!r}", pos)

    # formulas --------------------------------------------------------------

    def formula(self) -> Formula:
        node = self.conjunction()
        items = [node]
        while self.peek()[1] == "|":
            self.next()
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.unit()]
        while self.peek()[1] == "&":
            self.next()
            items.append(self.unit())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unit(self) -> Formula:
        kind, val, pos = self.peek()
        if val in ("E", "A") and kind == "ident":
            nxt = self.tokens[self.i + 1]
            if nxt[0] == "ident" and _VAR_RE.match(nxt[1]):
                self.next()
                var_tok = self.next()
                idx = int(_VAR_RE.match(var_tok[1]).group(1)) - 1
                self.expect(".")
                body = self.formula()  # the dot scopes to the end
                return Exists(idx, body) if val == "E" else Forall(idx, body)
        if val == "!":
            self.next()
            return Not(self.unit())
        # An atom and a parenthesized formula both may start with "(";
        # try the atom reading first and backtrack.
        save = self.i
        try:
            return self.atom()
        except ParseError:
            self.i = save
        if val == "(":
            self.next()
            node = self.formula()
            self.expect(")")
            return node
        self.fail("expected a formula")

    def atom(self) -> Atom:
        lhs = self.term()
        kind, val, pos = self.next()
        if val == "=":
            return Atom("eq", lhs, self.term())
        if val == "<=":
            return Atom("leq", lhs, self.term())
        raise ParseError(f"expected '=' or '<=', found {val or 'end of input'!r}", pos)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    node = p.term()
    if p.peek()[0] != "end":
        p.fail(f"trailing input {p.peek()[1]!r}")
    return node


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    node = p.formula()
    if p.peek()[0] != "end":
        p.fail(f"trailing input {p.peek()[1]!r}")
    return node


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _exponent_str(e: float) -> str:
    if e == int(e):
        v = int(e)
        return str(v) if v >= 0 else f"-{-v}"
    frac = Fraction(e).limit_denominator(10**6)
    if float(frac) == e:
        s = f"{abs(frac.numerator)}/{frac.denominator}"
        return s if e > 0 else f"-{s}"
    return repr(e)


_PREC = {Sum: 1, Product: 2, Power: 3, Variable: 4, Parameter: 4}


def term_to_str(t: Term) -> str:
    def render(node: Term, parent_prec: int) -> str:
        if isinstance(node, Variable):
            return f"x{node.index + 1}"
        if isinstance(node, Parameter):
            return node.name
        if isinstance(node, Sum):
            s = f"{render(node.left, 1)} + {render(node.right, 1)}"
            return f"({s})" if parent_prec > 1 else s
        if isinstance(node, Product):
            s = f"{render(node.left, 2)}*{render(node.right, 2)}"
            return f"({s})" if parent_prec > 2 else s
        if isinstance(node, Power):
            e = _exponent_str(node.exponent)
            if "/" in e or e.startswith("-"):
                e = f"({e})"
            s = f"{render(node.base, 4)}^{e}"
            return f"({s})" if parent_prec > 3 else s
        raise TypeError(f"not a term: {node!r}")
    return render(t, 0)


def formula_to_str(f: Formula) -> str:
    # precedence: or (1) < and (2) < not / quantifier body (3)
    def render(node: Formula, ctx: int) -> str:
        if isinstance(node, Atom):
            op = "=" if node.rel == "eq" else "<="
            return f"{term_to_str(node.lhs)} {op} {term_to_str(node.rhs)}"
        if isinstance(node, And):
            s = " & ".join(render(i, 2) for i in node.items)
            return f"({s})" if ctx > 2 else s
        if isinstance(node, Or):
            s = " | ".join(render(i, 1) for i in node.items)
            return f"({s})" if ctx > 1 else s
        if isinstance(node, Not):
            return f"!({render(node.item, 0)})"
        if isinstance(node, (Exists, Forall)):
            q = "E" if isinstance(node, Exists) else "A"
            s = f"{q} x{node.var + 1} . {render(node.body, 0)}"
            return f"({s})" if ctx > 0 else s
        raise TypeError(f"not a formula: {node!r}")
    return render(f, 0)


# ---------------------------------------------------------------------------
# Structure queries
# ---------------------------------------------------------------------------

def free_variables(f: Formula | Term) -> frozenset[int]:
    out: set[int] = set()

    def walk_term(t: Term) -> None:
        if isinstance(t, Variable):
            out.add(t.index)
        elif isinstance(t, (Sum, Product)):
            walk_term(t.left)
            walk_term(t.right)
        elif isinstance(t, Power):
            walk_term(t.base)

    def walk(node, bound: frozenset[int]) -> frozenset[int]:
        if isinstance(node, Atom):
            local: set[int] = set()
            sub = free_variables(node.lhs) | free_variables(node.rhs)
            return sub - bound
        if isinstance(node, (And, Or)):
            acc: frozenset[int] = frozenset()
            for item in node.items:
                acc |= walk(item, bound)
            return acc
        if isinstance(node, Not):
            return walk(node.item, bound)
        if isinstance(node, (Exists, Forall)):
            return walk(node.body, bound | {node.var})
        raise TypeError(f"not a formula: {node!r}")

    if isinstance(f, (Variable, Parameter, Sum, Product, Power)):
        walk_term(f)
        return frozenset(out)
    return walk(f, frozenset())


def is_positive(f: Formula) -> bool:
    """True when the formula uses no negation (and hence no encoded -> or <->)."""
    if isinstance(f, Atom):
        return True
    if isinstance(f, (And, Or)):
        return all(is_positive(i) for i in f.items)
    if isinstance(f, Not):
        return False
    if isinstance(f, (Exists, Forall)):
        return is_positive(f.body)
    raise TypeError(f"not a formula: {f!r}")


def parameters_of(f: Formula | Term) -> frozenset[str]:
    out: set[str] = set()

    def walk_term(t: Term) -> None:
        if isinstance(t, Parameter):
            out.add(t.name)
        elif isinstance(t, (Sum, Product)):
            walk_term(t.left)
            walk_term(t.right)
        elif isinstance(t, Power):
            walk_term(t.base)

    def walk(node) -> None:
        if isinstance(node, Atom):
            walk_term(node.lhs)
            walk_term(node.rhs)
        elif isinstance(node, (And, Or)):
            for item in node.items:
                walk(item)
        elif isinstance(node, Not):
            walk(node.item)
        elif isinstance(node, (Exists, Forall)):
            walk(node.body)

    if isinstance(f, (Variable, Parameter, Sum, Product, Power)):
        walk_term(f)
    else:
        walk(f)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Mixed-sign polynomial normalization
# ---------------------------------------------------------------------------

_LETTER_VARS = {"x": 0, "y": 1, "z": 2, "w": 3}

Monomial = tuple  # exponent tuple, one slot per variable
PolyDict = dict   # Monomial -> Fraction


class _PolyParser(_Parser):
    """Parser for mixed-sign polynomial input: subtraction, implicit
    multiplication (``4x``), single letters x,y,z,w aliasing x1..x4,
    and nonnegative integer exponents on parenthesized subexpressions."""

    def __init__(self, text: str, nvars: int):
        super().__init__(text)
        self.nvars = nvars

    def poly(self) -> PolyDict:
        sign = Fraction(1)
        if self.peek()[1] in ("+", "-"):
            if self.next()[1] == "-":
                sign = -sign
        acc = _pscale(self.pterm(), sign)
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            term = self.pterm()
            acc = _padd(acc, _pscale(term, Fraction(-1) if op == "-" else Fraction(1)))
        return acc

    def pterm(self) -> PolyDict:
        acc = self.pfactor()
        while True:
            kind, val, _ = self.peek()
            if val == "*":
                self.next()
                acc = _pmul(acc, self.pfactor(), self.nvars)
            elif kind in ("number", "ident") or val == "(":
                acc = _pmul(acc, self.pfactor(), self.nvars)  # juxtaposition
            else:
                return acc

    def pfactor(self) -> PolyDict:
        base = self.pprimary()
        if self.peek()[1] == "^":
            self.next()
            kind, val, pos = self.next()
            if kind != "number" or not _INT_RE.match(val):
                raise ParseError("exponents must be nonnegative integers here", pos)
            return _ppow(base, int(val), self.nvars)
        return base

    def pprimary(self) -> PolyDict:
        kind, val, pos = self.next()
        zero = (0,) * self.nvars
        if kind == "number":
            return {zero: Fraction(literal_value(val))}
        if kind == "ident":
            idx = self._var_index(val, pos)
            mono = tuple(1 if j == idx else 0 for j in range(self.nvars))
            return {mono: Fraction(1)}
        if val == "(":
            inner = self.poly()
            self.expect(")")
            return inner
        raise ParseError(f"expected a polynomial, found {val!r}", pos)

    def _var_index(self, name: str, pos: int) -> int:
        m = _VAR_RE.match(name)
        if m:
            idx = int(m.group(1)) - 1
            if idx < 0 or idx >= self.nvars:
                raise ParseError(f"variable {name} out of range", pos)
            return idx
        if name in _LETTER_VARS and _LETTER_VARS[name] < self.nvars:
            return _LETTER_VARS[name]
        raise ParseError(f"unknown variable {name!r}", pos)


def _padd(a: PolyDict, b: PolyDict) -> PolyDict:
    out = dict(a)
    for mono, c in b.items():
        c2 = out.get(mono, Fraction(0)) + c
        if c2 == 0:
            out.pop(mono, None)
        else:
            out[mono] = c2
    return out


def _pscale(a: PolyDict, c: Fraction) -> PolyDict:
    if c == 0:
        return {}
    return {mono: coef * c for mono, coef in a.items()}


def _pmul(a: PolyDict, b: PolyDict, nvars: int) -> PolyDict:
    out: PolyDict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = tuple(ea + eb for ea, eb in zip(ma, mb))
            c = out.get(mono, Fraction(0)) + ca * cb
            if c == 0:
                out.pop(mono, None)
            else:
                out[mono] = c
    return out


def _ppow(a: PolyDict, k: int, nvars: int) -> PolyDict:
    out: PolyDict = {(0,) * nvars: Fraction(1)}
    for _ in range(k):
        out = _pmul(out, a, nvars)
    return out


def _collect_poly_vars(text: str) -> int:
    names = re.findall(r"[A-Za-z_][A-Za-z0-9_]*", text)
    n = 0
    for name in names:
        m = _VAR_RE.match(name)
        if m:
            n = max(n, int(m.group(1)))
        elif name in _LETTER_VARS:
            n = max(n, _LETTER_VARS[name] + 1)
        else:
            raise ParseError(f"unknown variable {name!r} in polynomial input", 0)
    if n == 0:
        raise ParseError("no variables found in polynomial input", 0)
    return n


def _monomial_term(mono: Monomial, coef: Fraction) -> Term:
    factors: list[Term] = []
    if coef != 1 or all(e == 0 for e in mono):
        name = str(coef) if coef.denominator != 1 else str(coef.numerator)
        factors.append(Parameter(name))
    for j, e in enumerate(mono):
        if e == 0:
            continue
        base: Term = Variable(j)
        factors.append(base if e == 1 else Power(base, float(e)))
    node = factors[0]
    for f in factors[1:]:
        node = Product(node, f)
    return node


def _side_term(d: PolyDict) -> Term:
    if not d:
        return Parameter("0")
    keys = sorted(d, key=lambda m: (-sum(m), tuple(-e for e in m)))
    node = _monomial_term(keys[0], d[keys[0]])
    for mono in keys[1:]:
        node = Sum(node, _monomial_term(mono, d[mono]))
    return node


def normalize_polynomial(text: str) -> Atom:
    """Rewrite a mixed-sign polynomial equation as an equality of two
    positive-coefficient terms by moving each monomial to the side where its
    sign is positive.  Accepts ``x,y,z,w`` as aliases for ``x1..x4``.

    >>> formula_to_str(normalize_polynomial("x^2 - 4x + y^2 - 6y + 27/4 = 0"))
    'x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2'
    """
    if "=" not in text:
        raise ParseError("polynomial input must be an equation", len(text))
    left_text, right_text = text.split("=", 1)
    nvars = _collect_poly_vars(left_text + " " + right_text)
    lp = _PolyParser(left_text, nvars)
    left = lp.poly()
    if lp.peek()[0] != "end":
        lp.fail("trailing input on left side")
    right_text = right_text.strip()
    rp = _PolyParser(right_text if right_text else "0", nvars)
    right = rp.poly()
    if rp.peek()[0] != "end":
        rp.fail("trailing input on right side")
    diff = _padd(left, _pscale(right, Fraction(-1)))
    pos = {m: c for m, c in diff.items() if c > 0}
    neg = {m: -c for m, c in diff.items() if c < 0}
    return Atom("eq", _side_term(pos), _side_term(neg))


def eval_poly_dict(d: PolyDict, point) -> float:
    """Direct evaluation of a normalization dictionary; test oracle helper."""
    total = 0.0
    for mono, coef in d.items():
        v = float(coef)
        for j, e in enumerate(mono):
            v *= point[j] ** e
        total += v
    return total

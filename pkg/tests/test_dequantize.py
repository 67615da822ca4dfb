import math

import numpy as np
import pytest

from troplim.dequantize import (NonPositiveFormulaError, dequantize_formula,
                                dequantize_term, eval_classical,
                                eval_formula_classical, eval_formula_t,
                                eval_t, eval_tropical_formula,
                                eval_tropical_term, sandwich_constant,
                                tropical_formula_to_str, tropical_term_to_str)
from troplim.formula import (ParameterEnvironment, parse_formula, parse_term)


def test_dequantize_circle_formula():
    f = parse_formula("x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2")
    assert tropical_formula_to_str(dequantize_formula(f)) == \
        "max(2*x1, 2*x2, 0) = max(x1, x2)"


def test_dequantize_band():
    f = parse_formula("x1^2 <= x2 & x2 <= x1^(1/2)")
    assert tropical_formula_to_str(dequantize_formula(f)) == \
        "2*x1 <= x2 & x2 <= 1/2*x1"


def test_dequantize_cubic():
    f = parse_formula("x1^2 + x2^2 + 1 = 2*x2 + x1^3")
    assert tropical_formula_to_str(dequantize_formula(f)) == \
        "max(2*x1, 2*x2, 0) = max(x2, 3*x1)"


def test_constants_become_zero():
    t = parse_term("5*x1 + 3")
    assert tropical_term_to_str(dequantize_term(t)) == "max(x1, 0)"


def test_negation_rejected():
    with pytest.raises(NonPositiveFormulaError):
        dequantize_formula(parse_formula("!(x1 <= x2)"))


def test_literal_zero_rejected():
    with pytest.raises(ValueError):
        dequantize_term(parse_term("0*x1"))


def test_eval_classical_matches_numpy():
    t = parse_term("x1^2*x2 + 3*x1")
    X = np.array([[2.0, 5.0], [1.5, 0.25]])
    expect = X[:, 0] ** 2 * X[:, 1] + 3 * X[:, 0]
    assert np.allclose(eval_classical(t, X), expect)


def test_eval_t_is_conjugated_classical():
    # log_(1/t) . classical . exp_(1/t) = eval_t, exactly by construction
    t = parse_term("x1^2*x2 + 3*x1 + x2^(1/2)")
    pts = np.array([[0.5, -1.0], [-2.0, 0.25], [0.0, 0.0]])
    for tv in (1e-2, 1e-4):
        L = math.log(1.0 / tv)
        classical = eval_classical(t, np.exp(pts * L))
        assert np.allclose(eval_t(t, pts, tv), np.log(classical) / L,
                           rtol=1e-12, atol=1e-12)


def test_eval_t_converges_to_tropical():
    t = parse_term("x1^2 + x2 + 1")
    trop = dequantize_term(t)
    pts = np.array([[0.7, -0.3], [-1.0, 2.0]])
    u0 = eval_tropical_term(trop, pts)
    errs = []
    for tv in (1e-2, 1e-4, 1e-8):
        errs.append(np.max(np.abs(eval_t(t, pts, tv) - u0)))
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] <= 1e-7


def test_sandwich_constant_recursion():
    env = ParameterEnvironment()
    assert sandwich_constant(parse_term("x1"), env) == 1.0
    assert sandwich_constant(parse_term("5"), env) == 5.0
    assert sandwich_constant(parse_term("x1^3"), env) == 1.0
    assert sandwich_constant(parse_term("5*x1"), env) == 5.0
    # sum doubles the larger branch constant
    assert sandwich_constant(parse_term("x1 + x2"), env) == 2.0
    assert sandwich_constant(parse_term("3*x1 + x2"), env) == 6.0


def test_sandwich_bound_holds_at_unit_parameters():
    term = parse_term("3*x1^2*x2 + 7*x2 + 1")
    trop = dequantize_term(term)
    C = sandwich_constant(term)
    pts = np.array([[1.2, -0.7], [-3.0, 2.0], [0.0, 0.0]])
    u0 = eval_tropical_term(trop, pts)
    for tv in (1e-1, 1e-3, 1e-6):
        ut = eval_t(term, pts, tv)
        upper = math.log(C) / math.log(1.0 / tv)
        assert np.all(ut - u0 >= -1e-9)
        assert np.all(ut - u0 <= upper + 1e-9)


def test_sandwich_lower_bound_fails_below_one():
    # u = (1/2) * x1: the parameter's log is negative, so U_t < U_0;
    # the lower bound needs every parameter >= 1
    term = parse_term("1/2*x1")
    trop = dequantize_term(term)
    pts = np.array([[0.0]])
    u0 = eval_tropical_term(trop, pts)
    tv = 1e-3
    ut = eval_t(term, pts, tv)
    assert ut[0] - u0[0] < -1e-3
    # magnitude is exactly log_(1/t) of the parameter
    assert math.isclose(ut[0] - u0[0], math.log(0.5) / math.log(1.0 / tv),
                        rel_tol=1e-9)


def test_formula_thickening_only_on_equalities():
    f = parse_formula("x1 = x2")
    X = np.array([[1.0, 1.04], [1.0, 1.06]])
    keep = eval_formula_classical(f, X, eta=0.05)
    assert keep.tolist() == [True, False]
    g = parse_formula("x1 <= x2")
    Y = np.array([[1.0, 0.96]])
    assert not eval_formula_classical(g, Y, eta=0.5)[0]


def test_formula_t_membership():
    f = parse_formula("x1^2 <= x2 & x2 <= x1^(1/2)")
    # (-1, -1.5) satisfies 2x1 <= x2 <= x1/2 strictly
    inside = np.array([[-1.0, -1.5]])
    outside = np.array([[-1.0, -3.0]])
    assert eval_formula_t(f, inside, 1e-6)[0]
    assert not eval_formula_t(f, outside, 1e-6)[0]
    tf = dequantize_formula(f)
    assert eval_tropical_formula(tf, inside)[0]
    assert not eval_tropical_formula(tf, outside)[0]


def test_circle_limit_two_printed_variants():
    # the right side is sometimes displayed with an extra 0 branch; the two
    # readings agree wherever max(x1, x2) >= 0 but the 0-branch variant
    # swallows the whole negative quadrant, so it is not the limit set
    from troplim.dequantize import TMax, TScale, TVar, TZero, TropicalAtom

    f = parse_formula("x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2")
    tight = dequantize_formula(f)
    lhs = TMax(TMax(TScale(2.0, TVar(0)), TScale(2.0, TVar(1))), TZero())
    loose = TropicalAtom("eq", lhs, TMax(TZero(), TMax(TVar(0), TVar(1))))

    g = np.linspace(-2.0, 2.0, 81)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    in_tight = eval_tropical_formula(tight, pts)
    in_loose = eval_tropical_formula(loose, pts)
    assert np.all(in_loose[in_tight])
    upper = np.maximum(pts[:, 0], pts[:, 1]) >= 0
    assert np.array_equal(in_tight[upper], in_loose[upper])
    extra = in_loose & ~in_tight
    assert np.all(np.max(pts[extra], axis=1) < 0)
    assert extra.sum() > 0

"""Reference fixtures: the worked examples, their tuned sampler settings,
and the pass/fail checks behind the suite command.

Schedules and boxes are calibrated per fixture.  A direction estimated from
a fixed point x does not move with t (Log_{1/t} x is parallel for every t),
so accuracy is set by how far along its ray the box lets the sampler reach;
curved sets need boxes spanning tens of decades and t values deep enough
that the radius filter keeps only the far points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .amoeba import (DirectionCloud, EmptySampleError, PointCloud,
                     SamplerConfig, hausdorff_directions, sweep_directions)
from .dequantize import (dequantize_formula, dequantize_term, eval_t,
                         eval_tropical_term, sandwich_constant,
                         tropical_formula_to_str)
from .formula import (Parameter, ParameterEnvironment, Power, Product, Sum,
                      Variable, normalize_polynomial, parse_formula)
from .geometry import (Constraint, GridSpec, NewtonData, Polyhedron,
                       PolyhedralComplex, attained_twice_oracle, basic_cone,
                       dual_fan)
from .puiseux import (PuiseuxPolynomial, PuiseuxSeries, compare,
                      instantiate, lambda_membership_hypersurface, series_add,
                      series_mul, valuation)
from . import puiseux as _pu

__all__ = [
    "FixtureOutcome", "fixture_names", "expand_only", "run_fixture",
    "run_suite",
    "pow_formula", "circle_formula", "cubic_formula", "umbrella_formula",
    "econe_formula", "pow_config", "circle_config", "cubic_config",
    "umbrella_config", "econe_config",
    "pow_target", "quadrant_complex", "cubic_target_complex",
    "umbrella_newton_data", "circle_newton_data", "cubic_cover",
    "sin_cloud", "exp_cloud", "sininv_cloud",
    "random_positive_term", "random_series", "sandwich_check",
    "valuation_check", "dual_fan_oracle_check", "fan_sphere_points",
    "interior_two_cell",
]


@dataclass
class FixtureOutcome:
    name: str
    passed: bool
    detail: str
    directions: DirectionCloud | None = None
    sweep: list | None = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Formulas and sampler settings
# ---------------------------------------------------------------------------

def pow_formula():
    return parse_formula("x1^2 <= x2 & x2 <= x1^(1/2)")


CIRCLE_CONSTANTS = {"3/2": Fraction(43, 4), "5/2": Fraction(27, 4),
                    "7/2": Fraction(3, 4)}


def circle_formula(radius: str):
    c = CIRCLE_CONSTANTS[radius]
    return normalize_polynomial(f"x^2 - 4x + y^2 - 6y + {c} = 0")


def cubic_formula():
    return parse_formula("x1^2 + x2^2 + 1 = 2*x2 + x1^3")


def umbrella_formula():
    return normalize_polynomial("x^2 - x^2*(z - 2)^2 - x^4 - (y - 1)^2 = 0")


def econe_formula(N: tuple, h: str = "1/2"):
    n = len(N) + 1
    parts = [f"x{i + 1} <= {h}" for i in range(n)]
    parts += [f"x{i + 2} <= x{i + 1}^{N[i]}" for i in range(len(N))]
    return parse_formula(" & ".join(parts))


def pow_config() -> SamplerConfig:
    return SamplerConfig()


def circle_config() -> SamplerConfig:
    return SamplerConfig(box=((-52.0, 3.0),), samples_per_t=150_000,
                         t_schedule=(1e-8, 1e-8, 6))


def cubic_config() -> SamplerConfig:
    return SamplerConfig(box=((-28.0, 12.0), (-28.0, 20.0)),
                         samples_per_t=200_000, t_schedule=(1e-2, 1e-2, 6))


def econe_config(n: int) -> SamplerConfig:
    return SamplerConfig(box=((-36.0, 0.0),), samples_per_t=150_000 if n == 2 else 250_000,
                         t_schedule=(1e-6, 1e-6, 6), cluster_tol=0.01)


def umbrella_config() -> SamplerConfig:
    return SamplerConfig(box=((-40.0, 0.2), (-1.0, 1.0), (-0.5, 1.0)),
                         samples_per_t=250_000, t_schedule=(1e-3, 1e-3, 6))


def cloud_config(t_schedule) -> SamplerConfig:
    return SamplerConfig(t_schedule=t_schedule)


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------

def pow_target() -> PolyhedralComplex:
    """The band's log image is the cone 2x <= y <= x/2 exactly."""
    cell = Polyhedron.make([
        Constraint.make((2, -1), 0, "leq"),
        Constraint.make((Fraction(-1, 2), 1), 0, "leq"),
    ])
    return PolyhedralComplex((cell,))


def quadrant_complex() -> PolyhedralComplex:
    cell = Polyhedron.make([
        Constraint.make((1, 0), 0, "leq"),
        Constraint.make((0, 1), 0, "leq"),
    ])
    return PolyhedralComplex((cell,))


def cubic_target_complex() -> PolyhedralComplex:
    ray_down = Polyhedron.make([
        Constraint.make((1, 0), 0, "eq"),
        Constraint.make((0, 1), 0, "leq"),
    ])
    ray_slope = Polyhedron.make([
        Constraint.make((-3, 2), 0, "eq"),
        Constraint.make((-1, 0), 0, "leq"),
    ])
    return PolyhedralComplex((ray_down, ray_slope))


CIRCLE_RAYS = np.array([[-1.0, 0.0], [0.0, -1.0]])
CUBIC_RAYS = np.array([[0.0, -1.0], [2.0, 3.0] / np.sqrt(13.0)])


def circle_newton_data() -> NewtonData:
    support = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)]
    return NewtonData.make(support, [0] * len(support))


def umbrella_newton_data() -> NewtonData:
    support = [(0, 0, 0), (0, 1, 0), (0, 2, 0), (2, 0, 0), (2, 0, 1),
               (2, 0, 2), (4, 0, 0)]
    return NewtonData.make(support, [0] * len(support))


def cubic_cover() -> list:
    from .exact import ConeSpec
    return [ConeSpec.make([[0, 1], [1, 0]], [[2], [-2]])]


# ---------------------------------------------------------------------------
# Ingested curve clouds
# ---------------------------------------------------------------------------

def sin_cloud() -> PointCloud:
    """y = sin x + 2 for x in (0, 5], sampled down to x = 1e-44."""
    x = 10.0 ** np.linspace(-44.0, math.log10(5.0), 1500)
    y = np.sin(x) + 2.0
    return PointCloud(np.column_stack([x, y]))


def exp_cloud() -> PointCloud:
    """y = exp(-1/x^2) on two subranges: small x, where y collapses to 0
    much faster than x, and large x, where y flattens at 1.  The middle is
    omitted so both asymptotic directions survive the radius filter."""
    x_deep = 10.0 ** np.linspace(math.log10(0.05), math.log10(0.11), 700)
    x_flat = 10.0 ** np.linspace(6.0, 13.0, 500)
    x = np.concatenate([x_deep, x_flat])
    y = np.exp(-1.0 / (x * x))
    return PointCloud(np.column_stack([x, y]))


def sininv_cloud() -> PointCloud:
    """y = sin(1/x) on the positive branches: points built as
    x = 1/(2 pi k + delta), y = sin(delta), which pins log10 x near -a and
    log10 y at -b without catastrophic argument reduction.  The (a, b) grid
    shows every slope between the two axes, which is the whole quadrant."""
    a = np.geomspace(1.0, 44.0, 64)
    b = np.geomspace(1.0, 44.0, 64)
    A, B = np.meshgrid(a, b, indexing="ij")
    rows = [np.column_stack([A.ravel(), B.ravel()])]
    edge_a = np.linspace(1.0, 44.0, 40)
    rows.append(np.column_stack([edge_a, np.zeros_like(edge_a)]))  # y = 1 points
    deep_b = np.array([[1.0, 100.0], [1.5, 200.0], [2.0, 300.0]])
    rows.append(deep_b)
    ab = np.vstack(rows)
    delta = np.where(ab[:, 1] == 0.0, np.pi / 2, np.arcsin(10.0 ** (-ab[:, 1])))
    k = np.maximum(np.round(10.0 ** ab[:, 0] / (2 * np.pi)), 1.0)
    x = 1.0 / (2 * np.pi * k + delta)
    y = np.where(ab[:, 1] == 0.0, 1.0, 10.0 ** (-ab[:, 1]))
    return PointCloud(np.column_stack([x, y]))


# ---------------------------------------------------------------------------
# Random generators for the property fixtures
# ---------------------------------------------------------------------------

def random_positive_term(rng, n_vars: int = 3, depth: int = 5,
                         params: dict | None = None):
    """Random term over +, *, powers with nonnegative exponents; parameter
    values land in [1, 10] so the two-sided envelope applies (see the
    companion regression test for what breaks below 1)."""
    if params is None:
        params = {}
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            name = f"a{len(params) + 1}"
            params[name] = float(rng.uniform(1.0, 10.0))
            return Parameter(name), params
        return Variable(int(rng.integers(0, n_vars))), params
    kind = rng.integers(0, 3)
    if kind == 0:
        left, params = random_positive_term(rng, n_vars, depth - 1, params)
        right, params = random_positive_term(rng, n_vars, depth - 1, params)
        return Sum(left, right), params
    if kind == 1:
        left, params = random_positive_term(rng, n_vars, depth - 1, params)
        right, params = random_positive_term(rng, n_vars, depth - 1, params)
        return Product(left, right), params
    base, params = random_positive_term(rng, n_vars, depth - 1, params)
    return Power(base, round(float(rng.uniform(0.0, 3.0)), 3)), params


def sandwich_check(trials: int = 1000, seed: int = 7) -> dict:
    """0 <= U_t - U_0 <= log_{1/t} C over random terms, points, and the
    default t ladder."""
    rng = np.random.default_rng(seed)
    n_vars = 3
    ts = [10.0 ** (-k) for k in range(1, 7)]
    low = high = 0
    max_rel = 0.0
    for _ in range(trials):
        term, params = random_positive_term(rng, n_vars=n_vars)
        env = ParameterEnvironment(params)
        pts = rng.uniform(-5.0, 5.0, size=(8, n_vars))
        u0 = eval_tropical_term(dequantize_term(term), pts)
        c = sandwich_constant(term, env)
        for t in ts:
            ut = eval_t(term, pts, t, env)
            gap = ut - u0
            bound = math.log(c) / math.log(1.0 / t)
            if np.any(gap < -1e-9):
                low += 1
            if np.any(gap > bound + 1e-9):
                high += 1
            max_rel = max(max_rel, float(np.max(gap - bound)))
    return {"trials": trials, "low_violations": low, "high_violations": high,
            "max_overshoot": max_rel}


_DENOMS = (1, 2, 3, 4, 6, 12)


def random_series(rng, min_terms: int = 1) -> PuiseuxSeries:
    count = int(rng.integers(min_terms, 6))
    exps = set()
    while len(exps) < count:
        d = _DENOMS[int(rng.integers(0, len(_DENOMS)))]
        exps.add(Fraction(int(rng.integers(-12, 25)), d))
    terms = []
    for e in sorted(exps):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        terms.append((e, sign * float(rng.uniform(0.5, 2.0))))
    if rng.random() < 0.5:
        trunc = max(e for e, _ in terms) + Fraction(int(rng.integers(1, 5)), 2)
        return PuiseuxSeries.make(terms, trunc)
    return PuiseuxSeries.make(terms)


def valuation_check(trials: int = 1000, seed: int = 11) -> dict:
    """v(ab) = v(a) + v(b); v(a+b) >= min with equality off the diagonal;
    order-compatibility on positives."""
    rng = np.random.default_rng(seed)
    bad_mul = bad_add = bad_eq = bad_ord = skipped = 0
    for _ in range(trials):
        a = random_series(rng)
        b = random_series(rng)
        va, vb = valuation(a), valuation(b)
        if valuation(series_mul(a, b)) != va + vb:
            bad_mul += 1
        try:
            vs = valuation(series_add(a, b))
            if vs < min(va, vb):
                bad_add += 1
            if va != vb and vs != min(va, vb):
                bad_eq += 1
        except _pu.ZeroBelowTruncationError:
            skipped += 1  # cancellation pushed the sum below its truncation
        pa = PuiseuxSeries((tuple((e, abs(c)) for e, c in a.terms)), a.truncation)
        pb = PuiseuxSeries((tuple((e, abs(c)) for e, c in b.terms)), b.truncation)
        try:
            cmp = compare(pa, pb)
        except _pu.IndeterminateComparisonError:
            skipped += 1
            continue
        if cmp > 0 and valuation(pa) > valuation(pb):
            bad_ord += 1
        if cmp < 0 and valuation(pb) > valuation(pa):
            bad_ord += 1
    return {"trials": trials, "mul_violations": bad_mul,
            "add_violations": bad_add, "add_equality_violations": bad_eq,
            "order_violations": bad_ord, "skipped": skipped}


# ---------------------------------------------------------------------------
# Dual-fan oracle machinery
# ---------------------------------------------------------------------------

def fan_sphere_points(fan: PolyhedralComplex) -> np.ndarray:
    """Exact intersections of 2D fan cells with the unit circle."""
    pts = []
    for cell in fan.cells:
        eqs = [c for c in cell.constraints if c.rel == "eq"]
        if len(eqs) != 1:
            continue
        a = np.array([float(v) for v in eqs[0].coeffs])
        c = float(eqs[0].const)
        nrm2 = float(a @ a)
        if nrm2 == 0:
            continue
        x0 = a * (c / nrm2)
        rad2 = 1.0 - float(x0 @ x0)
        if rad2 < -1e-12:
            continue
        s = math.sqrt(max(rad2, 0.0))
        perp = np.array([-a[1], a[0]]) / math.sqrt(nrm2)
        for cand in (x0 + s * perp, x0 - s * perp):
            if cell.contains(cand, tol=1e-9):
                if all(np.linalg.norm(cand - p) > 1e-9 for p in pts):
                    pts.append(cand)
    return np.array(pts) if pts else np.zeros((0, 2))


def dual_fan_oracle_check(trials: int = 10, seed: int = 5,
                          grid_count: int = 10_000) -> dict:
    """dual_fan against the brute-force attained-twice scan on random
    weighted bivariate supports."""
    rng = np.random.default_rng(seed)
    step = 2 * math.pi / grid_count
    tol = 2.5 * step
    worst_fwd = worst_bwd = 0.0
    failures = 0
    for trial in range(trials):
        count = int(rng.integers(3, 7))
        pts = set()
        while len(pts) < count:
            pts.add((int(rng.integers(-3, 4)), int(rng.integers(-3, 4))))
        weights = [Fraction(int(rng.integers(-8, 9)), int(rng.integers(1, 5)))
                   for _ in pts]
        nd = NewtonData.make(sorted(pts), weights)
        fan = dual_fan(nd)
        oracle = attained_twice_oracle(nd, GridSpec(grid_count, seed=seed + trial))
        fan_pts = fan_sphere_points(fan)
        fwd = 0.0
        if len(oracle):
            dists = fan.distance_many(oracle) if fan.cells else np.full(len(oracle), np.inf)
            fwd = float(dists.max())
        bwd = 0.0
        if len(fan_pts):
            if len(oracle):
                d = np.linalg.norm(fan_pts[:, None, :] - oracle[None, :, :], axis=2)
                bwd = float(d.min(axis=1).max())
            else:
                bwd = math.inf
        worst_fwd = max(worst_fwd, fwd)
        worst_bwd = max(worst_bwd, bwd)
        if fwd > tol or bwd > tol:
            failures += 1
    return {"trials": trials, "failures": failures, "tolerance": tol,
            "worst_forward": worst_fwd, "worst_backward": worst_bwd}


def interior_two_cell(fan: PolyhedralComplex, point, slack: float = 1e-6) -> bool:
    """Is the point inside a cell of codimension 1, away from the cell's own
    walls?  (Equality rank 1; every inequality that is not implied by the
    equalities strictly slack.)"""
    x = np.array([float(v) for v in point])
    for cell in fan.cells:
        eq_rows = np.array([[float(v) for v in c.coeffs]
                            for c in cell.constraints if c.rel == "eq"])
        basis = None
        if len(eq_rows):
            q, r = np.linalg.qr(eq_rows.T)
            keep = np.abs(np.diag(r)) > 1e-12
            basis = q[:, keep]
        ok = True
        for c in cell.constraints:
            row = np.array([float(v) for v in c.coeffs])
            nrm = np.linalg.norm(row)
            if nrm == 0:
                continue
            val = (row @ x - float(c.const)) / nrm
            if c.rel == "eq":
                if abs(val) > 1e-9:
                    ok = False
                    break
            else:
                # rows lying in the span of the equalities are constant on the
                # cell's affine hull and say nothing about interiority
                perp = row - basis @ (basis.T @ row) if basis is not None else row
                if np.linalg.norm(perp) <= 1e-9 * nrm:
                    continue
                if val > -slack:
                    ok = False
                    break
        if not ok:
            continue
        rank = np.linalg.matrix_rank(eq_rows) if len(eq_rows) else 0
        if rank == 1:
            return True
    return False


# ---------------------------------------------------------------------------
# Fixture runners
# ---------------------------------------------------------------------------

def _estimate(source, cfg, rays=None, env=None):
    sweep = sweep_directions(source, cfg, env)
    nonempty = [dc for _, dc in sweep if dc.origin_member]
    if not nonempty:
        raise EmptySampleError("no schedule entry produced samples")
    est = DirectionCloud(nonempty[-1].vectors, True)
    d = None
    if rays is not None:
        target = DirectionCloud(np.asarray(rays, dtype=float))
        d = hausdorff_directions(est, target)
    return est, sweep, d


def _run_pow() -> FixtureOutcome:
    est, sweep, _ = _estimate(pow_formula(), pow_config())
    d = hausdorff_directions(est, pow_target())
    ok = d <= 0.05
    return FixtureOutcome("pow", ok,
                          f"Hausdorff to band arc {d:.4f} rad (limit 0.05)",
                          est, sweep, {"hausdorff": d})


def _run_circle(radius: str) -> FixtureOutcome:
    name = "circle" + radius.replace("/", "")
    phi = circle_formula(radius)
    trop = tropical_formula_to_str(dequantize_formula(phi))
    cfg = circle_config()
    if radius == "3/2":
        est, sweep, _ = _estimate(phi, cfg)
        ok = len(est) == 0 and est.origin_member
        detail = (f"{len(est)} directions, origin_member={est.origin_member} "
                  "(compact: expect none)")
        return FixtureOutcome(name, ok, detail, est, sweep, {"tropical": trop})
    rays = CIRCLE_RAYS[:1] if radius == "5/2" else CIRCLE_RAYS
    est, sweep, d = _estimate(phi, cfg, rays)
    ok = d <= 0.05
    detail = f"Hausdorff to {len(rays)} ray(s) {d:.4f} rad (limit 0.05)"
    return FixtureOutcome(name, ok, detail, est, sweep,
                          {"tropical": trop, "hausdorff": d})


def _run_cubic() -> FixtureOutcome:
    est, sweep, d = _estimate(cubic_formula(), cubic_config(), CUBIC_RAYS)
    ok = d <= 0.05
    return FixtureOutcome("cubic", ok,
                          f"Hausdorff to two rays {d:.4f} rad (limit 0.05)",
                          est, sweep, {"hausdorff": d})


def _run_econe(n: int) -> FixtureOutcome:
    N = (2,) if n == 2 else (2, 3)
    est, sweep, _ = _estimate(econe_formula(N), econe_config(n))
    target = PolyhedralComplex((basic_cone(N),))
    d = hausdorff_directions(est, target)
    ok = d <= 0.05
    return FixtureOutcome(f"econe{n}", ok,
                          f"Hausdorff to basic cone {d:.4f} rad (limit 0.05)",
                          est, sweep, {"hausdorff": d})


def _run_umbrella() -> FixtureOutcome:
    est, sweep, _ = _estimate(umbrella_formula(), umbrella_config())
    ray = np.array([-1.0, 0.0, 0.0])
    if len(est):
        angles = np.arccos(np.clip(est.vectors @ ray, -1.0, 1.0))
        worst = float(angles.max())
    else:
        worst = math.inf
    fan = dual_fan(umbrella_newton_data())
    in_two_cell = interior_two_cell(fan, ray)
    others = np.array([[0.0, 0.0, -1.0], [0.0, -1.0, 0.0],
                       [1.0, 1.0, 1.0] / np.sqrt(3.0)])
    certified = bool(np.all(fan.distance_many(others) <= 1e-9))
    if len(est):
        cross = np.arccos(np.clip(others @ est.vectors.T, -1.0, 1.0))
        gap = float(cross.min())
    else:
        gap = math.inf
    ok = worst <= 0.15 and in_two_cell and certified and gap >= 0.3
    detail = (f"estimate within {worst:.3f} rad of the single ray; "
              f"ray in 2-cell interior: {in_two_cell}; "
              f"gap to other fan directions {gap:.3f} rad (need >= 0.3)")
    return FixtureOutcome("umbrella", ok, detail, est, sweep,
                          {"worst": worst, "gap": gap})


def _run_curve(name: str) -> FixtureOutcome:
    if name == "sin":
        cloud, schedule, rays, tol = sin_cloud(), (1e-8, 1e-8, 6), [[-1.0, 0.0]], 0.05
    elif name == "exp":
        cloud, schedule, rays, tol = exp_cloud(), (1e-4, 1e-4, 6), [[0.0, -1.0], [1.0, 0.0]], 0.05
    else:
        cloud, schedule, rays, tol = sininv_cloud(), (1e-5, 1e-5, 6), None, 0.06
    cfg = cloud_config(schedule)
    est, sweep, d = _estimate(cloud, cfg, rays)
    if name == "sininv":
        d = hausdorff_directions(est, quadrant_complex())
    ok = d <= tol
    what = "quadrant arc" if name == "sininv" else f"{len(rays)} ray(s)"
    return FixtureOutcome(name, ok, f"Hausdorff to {what} {d:.4f} rad (limit {tol})",
                          est, sweep, {"hausdorff": d})


def _run_sandwich() -> FixtureOutcome:
    rep = sandwich_check()
    ok = rep["low_violations"] == 0 and rep["high_violations"] == 0
    return FixtureOutcome("sandwich", ok,
                          f"{rep['trials']} terms, {rep['low_violations']} lower / "
                          f"{rep['high_violations']} upper violations",
                          extra=rep)


def _run_valuation() -> FixtureOutcome:
    rep = valuation_check()
    bad = (rep["mul_violations"] + rep["add_violations"]
           + rep["add_equality_violations"] + rep["order_violations"])
    return FixtureOutcome("valuation", bad == 0,
                          f"{rep['trials']} trials, {bad} violations "
                          f"({rep['skipped']} indeterminate skips)",
                          extra=rep)


def _run_dualfan() -> FixtureOutcome:
    rep = dual_fan_oracle_check()
    ok = rep["failures"] == 0
    return FixtureOutcome("dualfan", ok,
                          f"{rep['trials']} supports, worst gap "
                          f"{max(rep['worst_forward'], rep['worst_backward']):.2e} "
                          f"(tol {rep['tolerance']:.2e})",
                          extra=rep)


def patchwork_polynomial() -> PuiseuxPolynomial:
    return PuiseuxPolynomial.make({
        (2,): PuiseuxSeries.constant(1.0),
        (1,): PuiseuxSeries.constant(1.0),
        (0,): PuiseuxSeries.make([(1, -1.0)]),
    })


def _run_patchwork() -> FixtureOutcome:
    f = patchwork_polynomial()
    t = 1e-6
    coeffs = instantiate(f, t)
    poly = np.array([coeffs[(2,)], coeffs[(1,)], coeffs[(0,)]])
    roots = np.roots(poly)
    pos = [float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
    log_root = math.log(pos[0]) / math.log(1.0 / t) if pos else math.nan
    err = abs(log_root - (-1.0))
    yes = lambda_membership_hypersurface(f, [Fraction(-1)])
    no = lambda_membership_hypersurface(f, [Fraction(0)])
    ok = bool(pos) and err <= 0.02 and yes == "Yes" and no == "No"
    return FixtureOutcome("patchwork", ok,
                          f"positive root log {log_root:.4f} (target -1, err {err:.4f}); "
                          f"membership at -1: {yes}, at 0: {no}",
                          extra={"log_root": log_root, "yes": yes, "no": no})


def _run_exact() -> FixtureOutcome:
    from .amoeba import sample_members
    from .exact import VerifyGrid, assemble_exact, verify_exactness
    phi = cubic_formula()
    cfg = cubic_config()
    cloud = sample_members(phi, None, cfg, eta=cfg.eta_at(cfg.schedule()[-1]))
    assembled = assemble_exact(phi, cubic_cover(), cloud=cloud)
    target = cubic_target_complex()
    rep_psi = verify_exactness(assembled.formula, target)
    rep_phi = verify_exactness(phi, target)
    grid = VerifyGrid()
    axis = np.linspace(grid.bounds[0][0], grid.bounds[0][1], grid.count)
    expected_extra = int((axis < -1e-9).sum())
    ok = (rep_psi.disagreements == 0
          and rep_phi.disagreements == expected_extra
          and rep_phi.only_formula == expected_extra)
    detail = (f"assembled description: {rep_psi.disagreements} grid disagreements; "
              f"bare dequantization: {rep_phi.disagreements} "
              f"(expected {expected_extra}, the spurious half-axis)")
    return FixtureOutcome("exact", ok, detail,
                          extra={"psi": assembled.formula,
                                 "thresholds": assembled.thresholds,
                                 "psi_disagreements": rep_psi.disagreements,
                                 "phi_disagreements": rep_phi.disagreements})


_RUNNERS = {
    "sin": lambda: _run_curve("sin"),
    "pow": _run_pow,
    "exp": lambda: _run_curve("exp"),
    "sininv": lambda: _run_curve("sininv"),
    "circle32": lambda: _run_circle("3/2"),
    "circle52": lambda: _run_circle("5/2"),
    "circle72": lambda: _run_circle("7/2"),
    "cubic": _run_cubic,
    "umbrella": _run_umbrella,
    "econe2": lambda: _run_econe(2),
    "econe3": lambda: _run_econe(3),
    "sandwich": _run_sandwich,
    "valuation": _run_valuation,
    "dualfan": _run_dualfan,
    "patchwork": _run_patchwork,
    "exact": _run_exact,
}


def fixture_names() -> list:
    return list(_RUNNERS)


def expand_only(token: str) -> list:
    matches = [n for n in _RUNNERS if n == token or n.startswith(token)]
    if not matches:
        raise KeyError(f"unknown fixture {token!r}")
    return matches


@lru_cache(maxsize=None)
def run_fixture(name: str) -> FixtureOutcome:
    return _RUNNERS[name]()


def run_suite(only: str | None = None) -> list:
    names = expand_only(only) if only else fixture_names()
    return [run_fixture(n) for n in names]

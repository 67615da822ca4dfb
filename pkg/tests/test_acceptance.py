"""End-to-end acceptance checks: one test per headline guarantee.

Each test pins its tolerance explicitly so a regression shows up as a
number, not a vague failure.  The heavy sampling fixtures are shared
through the cached fixture runner.
"""

import math
import subprocess
import sys
import time

import numpy as np

from troplim.amoeba import (estimate_limit_directions, geodesic_to_complex,
                            hausdorff_directions, sample_members)
from troplim.dequantize import dequantize_formula, eval_tropical_formula
from troplim.exact import VerifyGrid, assemble_exact, verify_exactness
from troplim.fixtures import (circle_formula, circle_newton_data,
                              cubic_config, cubic_cover, cubic_formula,
                              cubic_target_complex, dual_fan_oracle_check,
                              interior_two_cell, pow_config, pow_formula,
                              pow_target, run_fixture, sandwich_check,
                              umbrella_newton_data, valuation_check)
from troplim.formula import parse_formula
from troplim.geometry import dual_fan, tropical_formula_cells

TROPICAL_CIRCLE = "max(2*x1, 2*x2, 0) = max(x1, x2)"


def test_band_estimate_accuracy_within_budget():
    cfg = pow_config()
    assert math.isclose(cfg.schedule()[-1], 1e-6)
    start = time.perf_counter()
    est = estimate_limit_directions(pow_formula(), cfg)
    elapsed = time.perf_counter() - start
    d = hausdorff_directions(est, pow_target())
    assert d <= 0.05, f"Hausdorff {d:.4f} exceeds 0.05"
    assert elapsed <= 30.0, f"estimation took {elapsed:.1f}s (budget 30s)"


def test_circle_family_estimates_and_shared_dequantization():
    o32 = run_fixture("circle32")
    o52 = run_fixture("circle52")
    o72 = run_fixture("circle72")
    # one common limit formula for all three radii
    assert o32.extra["tropical"] == TROPICAL_CIRCLE
    assert o52.extra["tropical"] == TROPICAL_CIRCLE
    assert o72.extra["tropical"] == TROPICAL_CIRCLE
    # compact variety: no directions at all, but the origin stays a member
    assert len(o32.directions) == 0 and o32.directions.origin_member
    assert o52.extra["hausdorff"] <= 0.05
    assert o72.extra["hausdorff"] <= 0.05
    assert len(o52.directions) >= 1 and len(o72.directions) >= 2
    assert o32.passed and o52.passed and o72.passed


def test_growth_envelope_on_random_terms_within_budget():
    start = time.perf_counter()
    rep = sandwich_check()
    elapsed = time.perf_counter() - start
    assert rep["trials"] == 1000
    assert rep["low_violations"] == 0
    assert rep["high_violations"] == 0
    assert elapsed <= 10.0, f"check took {elapsed:.1f}s (budget 10s)"


def test_estimates_contained_in_limit_cells_with_strict_gap():
    cases = [
        ("pow", pow_formula()),
        ("circle52", circle_formula("5/2")),
        ("circle72", circle_formula("7/2")),
        ("cubic", cubic_formula()),
    ]
    for name, phi in cases:
        est = run_fixture(name).directions
        if not len(est):
            continue
        cells = tropical_formula_cells(dequantize_formula(phi), 2)
        worst = float(geodesic_to_complex(est.vectors, cells).max())
        assert worst <= 0.02 + 0.02, (
            f"{name}: estimate strays {worst:.4f} rad from its limit cells")
    # containment is strict: certified limit-cell or fan directions can sit
    # far from everything the samples ever approach
    diag = np.array([1.0, 1.0]) / math.sqrt(2.0)
    circle_fan = dual_fan(circle_newton_data())
    assert float(circle_fan.distance_many(diag[None, :])[0]) <= 1e-9
    c72 = run_fixture("circle72").directions.vectors
    gap72 = float(np.arccos(np.clip(c72 @ diag, -1.0, 1.0)).min())
    assert gap72 >= 0.3

    horiz = np.array([-1.0, 0.0])
    cubic_cells = tropical_formula_cells(dequantize_formula(cubic_formula()), 2)
    assert float(cubic_cells.distance_many(horiz[None, :])[0]) <= 1e-9
    cub = run_fixture("cubic").directions.vectors
    gap_cubic = float(np.arccos(np.clip(cub @ horiz, -1.0, 1.0)).min())
    assert gap_cubic >= 0.3


def test_exponential_cone_estimates():
    for name in ("econe2", "econe3"):
        outcome = run_fixture(name)
        assert outcome.extra["hausdorff"] <= 0.05, outcome.detail
        assert outcome.passed


def _random_atom_text(rng) -> str:
    def monomial() -> str:
        parts = []
        for name in ("x1", "x2"):
            num = int(rng.integers(-6, 7))
            if num == 0:
                continue
            if num == 2:
                parts.append(name)
            elif num % 2 == 0:
                parts.append(f"{name}^{num // 2}")
            else:
                parts.append(f"{name}^({num}/2)")
        return "*".join(parts) if parts else "1"

    def side() -> str:
        return " + ".join(monomial() for _ in range(int(rng.integers(1, 6))))

    rel = "=" if rng.random() < 0.5 else "<="
    return f"{side()} {rel} {side()}"


def test_cell_decompositions_match_direct_evaluation():
    rng = np.random.default_rng(12)
    formulas = [circle_formula("7/2"), cubic_formula()]
    formulas += [parse_formula(_random_atom_text(rng)) for _ in range(10)]
    axis = np.linspace(-2.0, 2.0, 401)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    for phi in formulas:
        tf = dequantize_formula(phi)
        cells = tropical_formula_cells(tf, 2)
        direct = eval_tropical_formula(tf, grid, tol=1e-9)
        via_cells = cells.contains(grid, tol=1e-9)
        mismatches = int((direct != via_cells).sum())
        assert mismatches == 0, (
            f"{mismatches} grid disagreements for {phi!r}")


def test_dual_fans_match_oracle_and_flat_piece_is_detected():
    rep = dual_fan_oracle_check(trials=10, seed=5, grid_count=10_000)
    assert rep["failures"] == 0, rep
    fan = dual_fan(umbrella_newton_data())
    assert interior_two_cell(fan, (-1.0, 0.0, 0.0))
    outcome = run_fixture("umbrella")
    assert outcome.extra["worst"] <= 0.15
    assert outcome.extra["gap"] >= 0.3
    assert outcome.passed


def test_valuation_axioms_on_random_series():
    rep = valuation_check()
    assert rep["trials"] == 1000
    assert rep["mul_violations"] == 0
    assert rep["add_violations"] == 0
    assert rep["add_equality_violations"] == 0
    assert rep["order_violations"] == 0


def test_root_tracking_reaches_its_limit():
    outcome = run_fixture("patchwork")
    assert abs(outcome.extra["log_root"] - (-1.0)) <= 0.02
    assert outcome.extra["yes"] == "Yes"
    assert outcome.extra["no"] == "No"
    assert outcome.passed


def test_exact_description_agrees_everywhere_on_grid():
    phi = cubic_formula()
    cfg = cubic_config()
    cloud = sample_members(phi, None, cfg, eta=cfg.eta_at(cfg.schedule()[-1]))
    assembled = assemble_exact(phi, cubic_cover(), cloud=cloud)
    target = cubic_target_complex()
    refined = verify_exactness(assembled.formula, target, VerifyGrid())
    assert refined.disagreements == 0
    # the bare limit formula keeps exactly the spurious left half-axis
    raw = verify_exactness(phi, target, VerifyGrid())
    assert raw.only_formula == 200
    assert raw.only_target == 0
    assert raw.disagreements == 200
    assert np.all(np.abs(raw.mismatch_points[:, 1]) <= 1e-12)
    assert np.all(raw.mismatch_points[:, 0] < 0)


def test_repeated_suite_runs_are_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        proc = subprocess.run(
            [sys.executable, "-m", "troplim.cli", "paper-suite",
             "--out", str(out)],
            capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stdout + proc.stderr
    names_a = sorted(p.name for p in out_a.iterdir())
    names_b = sorted(p.name for p in out_b.iterdir())
    assert names_a == names_b and "summary.csv" in names_a
    for name in names_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), (
            f"{name} differs between identical runs")

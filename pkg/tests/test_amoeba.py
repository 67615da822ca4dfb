import io
import math

import numpy as np
import pytest

from troplim.amoeba import (DirectionCloud, EmptySampleError, PointCloud,
                            SamplerConfig, amoeba_at, check_cone_invariance,
                            cluster_directions, estimate_limit_directions,
                            hausdorff_directions, ingest_points, project,
                            read_point_cloud, sample_members,
                            sweep_directions, write_direction_cloud,
                            write_point_cloud)
from troplim.dequantize import eval_formula_t
from troplim.formula import ParameterEnvironment, parse_formula

ENV = ParameterEnvironment({})
FAST = SamplerConfig(samples_per_t=20_000, t_schedule=(0.1, 0.1, 4), seed=3)


def test_inequality_sampling_is_exact():
    f = parse_formula("x1 <= x2 & x2 <= 2*x1")
    cloud = sample_members(f, ENV, FAST)
    x = cloud.points
    assert len(x) > 100
    assert np.all(x[:, 0] <= x[:, 1] * (1 + 1e-12))
    assert np.all(x[:, 1] <= 2 * x[:, 0] * (1 + 1e-12))


def test_amoeba_at_known_points():
    cloud = PointCloud(np.array([[0.1, 1.0], [1.0, 1.0]]), space="classical")
    logs = amoeba_at(cloud, 0.1)
    assert np.allclose(logs.points[0], [-1.0, 0.0])
    assert np.allclose(logs.points[1], [0.0, 0.0])
    assert logs.space == "log"
    assert logs.t == 0.1


def test_unsatisfiable_formula_raises():
    f = parse_formula("x1 + a1 <= x1")
    env = ParameterEnvironment({"a1": 1.0})
    with pytest.raises(EmptySampleError):
        sample_members(f, env, FAST)


def test_ingest_rejects_nonpositive_rows():
    with pytest.raises(ValueError):
        ingest_points("x1,x2\n0,1\n")
    cloud = ingest_points("x1,x2\n1,1\n")
    assert cloud.points.shape == (1, 2)
    assert cloud.space == "classical"


def test_ingest_passthrough_and_array():
    base = PointCloud(np.ones((3, 2)), space="classical")
    assert ingest_points(base) is base
    arr = ingest_points(np.array([[1.0, 2.0]]))
    assert arr.space == "classical"
    with pytest.raises(ValueError):
        ingest_points(PointCloud(np.zeros((1, 2)), space="log", t=0.1))


def test_estimate_union_property():
    f1 = parse_formula("x2 = 2*x1")
    f2 = parse_formula("x1*x2 = 1")
    cfg = SamplerConfig(samples_per_t=40_000, t_schedule=(0.1, 0.1, 5), seed=7)
    union = parse_formula("x2 = 2*x1 | x1*x2 = 1")
    du = estimate_limit_directions(union, cfg, ENV)
    merged = np.vstack([
        estimate_limit_directions(f1, cfg, ENV).vectors,
        estimate_limit_directions(f2, cfg, ENV).vectors,
    ])
    merged_cloud = DirectionCloud(cluster_directions(merged, cfg.cluster_tol),
                                  origin_member=True)
    assert hausdorff_directions(du, merged_cloud) <= 2 * cfg.cluster_tol


def test_scaling_invariance_of_log_image():
    # the log image of a sampled member set still satisfies the t-relaxed
    # formula, which ties the sampler to the direct evaluation path
    f = parse_formula("x1*x2 = 1")
    t = 0.01
    cfg = SamplerConfig(samples_per_t=20_000, t_schedule=(t, 0.1, 1), seed=1)
    cloud = sample_members(f, ENV, cfg)
    logs = amoeba_at(cloud, t)
    eta = cfg.eta0 * t ** cfg.eta_decay
    ok = eval_formula_t(f, logs.points, t, ENV, tol=max(eta, 1e-9))
    assert np.mean(ok) > 0.999


def test_determinism_same_seed():
    f = parse_formula("x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2")
    a = sample_members(f, ENV, FAST)
    b = sample_members(f, ENV, FAST)
    assert np.array_equal(a.points, b.points)
    c = sample_members(f, ENV, SamplerConfig(samples_per_t=20_000,
                                             t_schedule=(0.1, 0.1, 4), seed=4))
    assert a.points.shape != c.points.shape or not np.array_equal(a.points, c.points)


def test_refined_sampling_respects_variety_support():
    # x1^2 + x2^2 + 1 = x1^3 + 2*x2 has no real points with x1 < 1
    f = parse_formula("x1^2 + x2^2 + 1 = x1^3 + 2*x2")
    cfg = SamplerConfig(samples_per_t=60_000, t_schedule=(0.1, 0.1, 5), seed=0)
    cloud = sample_members(f, ENV, cfg)
    assert len(cloud.points) > 50
    assert cloud.points[:, 0].min() >= 1.0 - 1e-9


def test_projection_commutes_with_estimation():
    # members (x1, 1/x1, x3) with x3 <= 1 project onto the plane curve x1*x2 = 1
    f = parse_formula("x1*x2 = 1 & x3 <= 1")
    cfg = SamplerConfig(samples_per_t=60_000, t_schedule=(0.1, 0.1, 5), seed=2)
    est3 = estimate_limit_directions(f, cfg, ENV)
    dropped = project(est3, (0, 1))
    f2 = parse_formula("x1*x2 = 1")
    est2 = estimate_limit_directions(f2, cfg, ENV)
    assert hausdorff_directions(dropped, est2) <= 2 * cfg.cluster_tol


def test_cloud_csv_roundtrip(tmp_path):
    cloud = PointCloud(np.array([[1.5, 2.0], [0.25, 4.0]]), space="classical")
    path = tmp_path / "cloud.csv"
    write_point_cloud(cloud, path)
    back = read_point_cloud(path)
    assert back.space == "classical"
    assert np.array_equal(back.points, cloud.points)

    logs = PointCloud(np.array([[-1.0, 0.5]]), space="log", t=0.01)
    lp = tmp_path / "logs.csv"
    write_point_cloud(logs, lp)
    back = read_point_cloud(lp)
    assert back.space == "log"
    assert math.isclose(back.t, 0.01)


def test_direction_csv_writer_stringio():
    dc = DirectionCloud(np.array([[-1.0, 0.0]]), origin_member=True)
    buf = io.StringIO()
    write_direction_cloud(dc, buf)
    text = buf.getvalue()
    assert "origin_member=true" in text
    assert "-1.0" in text


def test_cluster_directions_merges_and_orders():
    raw = np.array([[1.0, 0.0], [0.999999, 0.001], [0.0, 1.0]])
    out = cluster_directions(raw, 0.02)
    assert out.shape == (2, 2)
    rerun = cluster_directions(raw, 0.02)
    assert np.array_equal(out, rerun)


def test_cone_invariance_report():
    f = parse_formula("x1*x2 = 1")
    sweep = sweep_directions(f, FAST, ENV)
    report = check_cone_invariance(sweep)
    assert report["pairs"]
    assert all(d <= 0.2 for _, _, d in report["pairs"] if math.isfinite(d))
    assert "nonincreasing" in report
    short = check_cone_invariance(sweep[:1])
    assert short["note"] == "insufficient data"
    assert short["pairs"] == []


def test_config_box_broadcast():
    cfg = SamplerConfig(box=((-2.0, 1.0),))
    f = parse_formula("x1 <= x2")
    cloud = sample_members(f, ENV, SamplerConfig(box=((-2.0, 1.0),),
                                                 samples_per_t=5_000,
                                                 t_schedule=(0.1, 0.1, 1),
                                                 seed=0))
    assert cloud.points.min() >= 10.0 ** -2 * (1 - 1e-12)
    assert cloud.points.max() <= 10.0 * (1 + 1e-12)
    assert cfg.box == ((-2.0, 1.0),)

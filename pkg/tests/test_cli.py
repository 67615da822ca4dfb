import json
import math

import numpy as np
from click.testing import CliRunner

from troplim.amoeba import SamplerConfig, sample_members, write_point_cloud
from troplim.cli import main
from troplim.fixtures import cubic_target_complex
from troplim.formula import ParameterEnvironment, parse_formula

runner = CliRunner()

CIRCLE = "x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2"
CUBIC = "x1^2 + x2^2 + 1 = 2*x2 + x1^3"
QUADRATIC_FAMILY = """
omega = (2); coeff = 1*t^0
omega = (1); coeff = 1*t^0
omega = (0); coeff = -1*t^1
"""
SMALL = ["--samples", "20000", "--t-schedule", "0.1,0.1,3", "--seed", "3"]


def test_dequantize_text():
    res = runner.invoke(main, ["dequantize", CIRCLE])
    assert res.exit_code == 0
    assert "max(2*x1, 2*x2, 0) = max(x1, x2)" in res.output
    assert "C(lhs)" in res.output


def test_dequantize_json():
    res = runner.invoke(main, ["dequantize", CIRCLE, "--format", "json"])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["tropical"] == "max(2*x1, 2*x2, 0) = max(x1, x2)"
    assert body["atoms"][0]["lhs_constant"] > 0


def test_dequantize_usage_errors():
    assert runner.invoke(main, ["dequantize", "x1 +"]).exit_code == 2
    assert runner.invoke(main, ["dequantize", "!(x1 <= 2)"]).exit_code == 2
    assert runner.invoke(main, ["dequantize", "x1 <= a1*x2",
                                "--param", "a1"]).exit_code == 2


def test_dequantize_params():
    res = runner.invoke(main, ["dequantize", "x1 <= a1*x2",
                               "--param", "a1=3/2"])
    assert res.exit_code == 0
    missing = runner.invoke(main, ["dequantize", "x1 <= a1*x2"])
    assert missing.exit_code == 2


def test_amoeba_csv_stdout():
    res = runner.invoke(main, ["amoeba", "x1*x2 = 1", *SMALL])
    assert res.exit_code == 0
    lines = res.stdout.strip().splitlines()
    assert lines[0].startswith("# kind=log t=0.0001")
    assert lines[1] == "x1,x2"
    assert len(lines) > 10


def test_amoeba_bad_t():
    assert runner.invoke(main, ["amoeba", "x1 <= 1", "--t", "2.0"]).exit_code == 2


def test_amoeba_box_restricts_samples():
    res = runner.invoke(main, ["amoeba", "x1 <= 1", "--samples", "50",
                               "--t-schedule", "0.1,0.1,1", "--seed", "5",
                               "--box", "-1,0"])
    assert res.exit_code == 0
    rows = [float(line) for line in res.stdout.strip().splitlines()[2:]]
    assert len(rows) == 50
    # log10 x in [-1, 0] maps to log_(1/t) x in [-1/4, 0] at t = 1e-4
    assert all(-0.2501 <= v <= 1e-9 for v in rows)


def test_seed_precedence_flag_config_env(tmp_path):
    base = ["amoeba", "x1 <= 1", "--samples", "20",
            "--t-schedule", "0.1,0.1,1"]
    cfg = tmp_path / "troplim.ini"
    cfg.write_text("[sampler]\nseed = 7\n")
    flag5 = runner.invoke(main, [*base, "--seed", "5"]).output
    flag7 = runner.invoke(main, [*base, "--seed", "7"]).output
    assert flag5 != flag7
    # env used when nothing else pins the seed
    env5 = runner.invoke(main, base, env={"TROPLIM_SEED": "5"}).output
    assert env5 == flag5
    # config file beats the environment
    cfg_run = runner.invoke(main, [*base, "--config", str(cfg)],
                            env={"TROPLIM_SEED": "5"}).output
    assert cfg_run == flag7
    # explicit flag beats the config file
    both = runner.invoke(main, [*base, "--config", str(cfg), "--seed", "5"]).output
    assert both == flag5
    bad = runner.invoke(main, base, env={"TROPLIM_SEED": "ten"})
    assert bad.exit_code == 2


def test_config_file_sections(tmp_path):
    cfg = tmp_path / "troplim.ini"
    cfg.write_text("[sampler]\nsamples = 20\nt_schedule = 0.1,0.1,1\n"
                   "seed = 5\nbox = -1,0\n")
    from_file = runner.invoke(main, ["amoeba", "x1 <= 1",
                                     "--config", str(cfg)]).output
    from_flags = runner.invoke(main, ["amoeba", "x1 <= 1", "--samples", "20",
                                      "--t-schedule", "0.1,0.1,1", "--seed",
                                      "5", "--box", "-1,0"]).output
    assert from_file == from_flags


def test_bad_sampler_flags():
    assert runner.invoke(main, ["amoeba", "x1 <= 1",
                                "--t-schedule", "0.1,0.1"]).exit_code == 2
    assert runner.invoke(main, ["amoeba", "x1 <= 1",
                                "--box", "3"]).exit_code == 2
    assert runner.invoke(main, ["amoeba", "x1 <= 1",
                                "--t-schedule", "2.0,0.1,3"]).exit_code == 2


def test_limit_set_csv_and_counts():
    res = runner.invoke(main, ["limit-set", "x1*x2 = 1", *SMALL])
    assert res.exit_code == 0
    assert "2 direction(s), origin_member=True" in res.stderr
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "# origin_member=true"
    assert len(lines) == 4


def test_limit_set_json_out(tmp_path):
    out = tmp_path / "est.json"
    res = runner.invoke(main, ["limit-set", "x1*x2 = 1", *SMALL,
                               "--format", "json", "--out", str(out)])
    assert res.exit_code == 0
    body = json.loads(out.read_text())
    assert body["origin_member"] is True
    dirs = np.array(body["directions"])
    s = math.sqrt(0.5)
    for target in ([s, -s], [-s, s]):
        assert min(np.linalg.norm(d - target) for d in dirs) < 0.05


def test_limit_set_empty_is_not_an_error():
    res = runner.invoke(main, ["limit-set", "x1 + a1 <= x1",
                               "--param", "a1=1", *SMALL])
    assert res.exit_code == 0
    assert "empty set" in res.stderr


def test_limit_set_svg(tmp_path):
    out = tmp_path / "dirs.svg"
    res = runner.invoke(main, ["limit-set", "x1*x2 = 1", *SMALL,
                               "--format", "svg", "--out", str(out)])
    assert res.exit_code == 0
    assert out.read_text().lstrip().startswith("<?xml")
    no_out = runner.invoke(main, ["limit-set", "x1*x2 = 1", *SMALL,
                                  "--format", "svg"])
    assert no_out.exit_code == 2


def test_limit_set_from_csv(tmp_path):
    cloud = sample_members(parse_formula("x1*x2 = 1"), None,
                           SamplerConfig(samples_per_t=20_000,
                                         t_schedule=(0.01, 0.1, 1), seed=0))
    path = tmp_path / "members.csv"
    write_point_cloud(cloud, path)
    res = runner.invoke(main, ["limit-set", str(path), *SMALL])
    assert res.exit_code == 0
    assert "origin_member=True" in res.stderr


def test_cells_json_and_csv():
    res = runner.invoke(main, ["cells", "x1*x2 = 1"])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["cells"]
    csv_res = runner.invoke(main, ["cells", CIRCLE, "--format", "csv"])
    assert csv_res.exit_code == 0
    lines = csv_res.stdout.strip().splitlines()
    assert lines[0] == "cell,relation,constant,c1,c2"
    assert len(lines) > 3
    assert runner.invoke(main, ["cells", "1 <= 2"]).exit_code == 2


def test_dual_fan_support_flag():
    res = runner.invoke(main, ["dual-fan", "--support", "0,0;1,0;0,1",
                               "--format", "csv"])
    assert res.exit_code == 0
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == 4
    assert runner.invoke(main, ["dual-fan"]).exit_code == 2
    assert runner.invoke(main, ["dual-fan", "--support", "0,0;x,1"]).exit_code == 2


def test_dual_fan_json_source(tmp_path):
    src = tmp_path / "fan.json"
    src.write_text(json.dumps({"support": [[0, 0], [1, 0], [0, 1]],
                               "weights": ["0", "0", "0"]}))
    res = runner.invoke(main, ["dual-fan", str(src)])
    assert res.exit_code == 0
    assert json.loads(res.stdout)["cells"]


def test_puiseux_eval_text():
    res = runner.invoke(main, ["puiseux-eval", QUADRATIC_FAMILY,
                               "--t", "0.01", "--lam", "-1", "--lam", "0"])
    assert res.exit_code == 0
    assert "Yes" in res.output and "No" in res.output
    assert "-0.01" in res.output
    bad = runner.invoke(main, ["puiseux-eval", QUADRATIC_FAMILY,
                               "--lam", "1,2"])
    assert bad.exit_code == 2


def test_patchwork_default():
    res = runner.invoke(main, ["patchwork"])
    assert res.exit_code == 0
    assert "log_(1/t) = -1.0000" in res.output
    assert "Yes" in res.output and "No" in res.output


def test_patchwork_json():
    res = runner.invoke(main, ["patchwork", "--format", "json"])
    body = json.loads(res.stdout)
    assert abs(body["root_logs"][0] + 1.0) <= 0.02
    verdicts = {tuple(m["lambda"]): m["membership"] for m in body["membership"]}
    assert verdicts[(-1.0,)] == "Yes" and verdicts[(0.0,)] == "No"


def test_exact_command(tmp_path):
    cover = tmp_path / "cover.json"
    cover.write_text(json.dumps([{"B": [["0", "1"], ["1", "0"]],
                                  "normals": [["2"], ["-2"]]}]))
    target = tmp_path / "target.json"
    target.write_text(cubic_target_complex().to_json())
    cloud = sample_members(
        parse_formula(CUBIC), None,
        SamplerConfig(box=((-28.0, 12.0), (-28.0, 20.0)),
                      samples_per_t=60_000, t_schedule=(1e-2, 1e-2, 4), seed=0))
    points = tmp_path / "members.csv"
    write_point_cloud(cloud, points)
    res = runner.invoke(main, ["exact", CUBIC, "--cover", str(cover),
                               "--points", str(points),
                               "--target", str(target), "--format", "json"])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["verify"]["disagreements"] == 0
    assert all(r["inside"] == 0 for r in body["exhaustion"])


def test_exact_exhaustion_failure(tmp_path):
    cover = tmp_path / "cover.json"
    cover.write_text(json.dumps([{"B": [["0", "1"], ["1", "0"]],
                                  "normals": [["2"], ["-2"]]}]))
    points = tmp_path / "deep.csv"
    points.write_text("x1,x2\n1e-9,1\n")
    res = runner.invoke(main, ["exact", "x1 <= 1", "--cover", str(cover),
                               "--points", str(points)])
    assert res.exit_code == 1
    assert "exhaustion" in res.stderr


def test_paper_suite_only():
    res = runner.invoke(main, ["paper-suite", "--only", "sandwich"])
    assert res.exit_code == 0
    assert "1/1 checks passed" in res.output
    assert runner.invoke(main, ["paper-suite", "--only", "nope"]).exit_code == 2


def test_paper_suite_out_dir(tmp_path):
    out = tmp_path / "suite"
    res = runner.invoke(main, ["paper-suite", "--only", "circle72",
                               "--out", str(out)])
    assert res.exit_code == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0] == "name,status,detail"
    assert summary[1].startswith("circle72,pass,")
    assert (out / "circle72_directions.csv").exists()

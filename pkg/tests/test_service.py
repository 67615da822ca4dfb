import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from troplim.fixtures import cubic_target_complex
from troplim.service import create_app

client = TestClient(create_app())

CUBIC = "x1^2 + x2^2 + 1 = 2*x2 + x1^3"
QUADRATIC_FAMILY = """
omega = (2); coeff = 1*t^0
omega = (1); coeff = 1*t^0
omega = (0); coeff = -1*t^1
"""


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_dequantize_endpoint():
    r = client.post("/dequantize", json={"formula": "x1^2 + x2^2 + 27/4 = 4*x1 + 6*x2"})
    assert r.status_code == 200
    body = r.json()
    assert body["tropical"] == "max(2*x1, 2*x2, 0) = max(x1, x2)"
    assert len(body["atoms"]) == 1
    assert body["atoms"][0]["lhs_constant"] >= 1.0


def test_dequantize_parse_error_and_negation():
    assert client.post("/dequantize", json={"formula": "x1 +"}).status_code == 422
    assert client.post("/dequantize", json={"formula": "!(x1 <= 2)"}).status_code == 422


def test_limit_set_formula():
    req = {"formula": "x1*x2 = 1",
           "sampler": {"samples": 20000, "t_schedule": [0.1, 0.1, 4], "seed": 3}}
    r = client.post("/limit-set", json=req)
    assert r.status_code == 200
    body = r.json()
    assert body["origin_member"] is True
    assert not body["empty_sample"]
    dirs = np.array(body["directions"])
    target = np.array([[1.0, -1.0], [-1.0, 1.0]]) / math.sqrt(2.0)
    assert dirs.shape == (2, 2)
    assert all(min(np.linalg.norm(d - t) for t in target) < 0.05 for d in dirs)
    assert len(body["per_t"]) == 4
    # deterministic given a pinned seed
    again = client.post("/limit-set", json=req)
    assert again.json()["directions"] == body["directions"]


def test_limit_set_empty_sample():
    r = client.post("/limit-set", json={"formula": "x1 + a1 <= x1",
                                        "params": {"a1": 1.0}})
    assert r.status_code == 200
    assert r.json()["empty_sample"] is True
    assert r.json()["directions"] == []


def test_limit_set_points_csv():
    r = client.post("/limit-set", json={"points_csv": "x1,x2\n1,1\n"})
    assert r.status_code == 200
    body = r.json()
    assert body["origin_member"] is True
    assert body["directions"] == []


def test_limit_set_requires_exactly_one_source():
    assert client.post("/limit-set", json={}).status_code == 422
    assert client.post("/limit-set", json={
        "formula": "x1 <= 1", "points_csv": "x1\n1\n"}).status_code == 422


def test_cells_endpoint():
    r = client.post("/cells", json={"formula": "x1*x2 = 1"})
    assert r.status_code == 200
    body = r.json()
    assert body["dimension"] == 2
    assert body["cells"]
    for cell in body["cells"]:
        for row in cell["constraints"]:
            assert row["rel"] in {"eq", "leq"}
            assert len(row["coeffs"]) == 2
    assert client.post("/cells", json={"formula": "1 <= 2"}).status_code == 422


def test_dual_fan_endpoint():
    r = client.post("/dual-fan", json={"support": [[0, 0], [1, 0], [0, 1]]})
    assert r.status_code == 200
    body = r.json()
    assert body["cells"]
    pts = np.array(body["sphere_points"])
    s = math.sqrt(0.5)
    expected = np.array([[-1.0, 0.0], [0.0, -1.0], [s, s]])
    assert pts.shape == (3, 2)
    for e in expected:
        assert min(np.linalg.norm(p - e) for p in pts) < 1e-9


def test_dual_fan_weights():
    r = client.post("/dual-fan", json={"support": [[0, 0], [1, 0]],
                                       "weights": ["0", "-1"]})
    assert r.status_code == 200
    assert r.json()["cells"]
    bad = client.post("/dual-fan", json={"support": [[0, 0], [1, 0]],
                                         "weights": ["zero", "0"]})
    assert bad.status_code == 422


def test_puiseux_eval_endpoint():
    r = client.post("/puiseux-eval", json={
        "text": QUADRATIC_FAMILY, "t": 0.01,
        "lambdas": [[-1.0], [0.0]]})
    assert r.status_code == 200
    body = r.json()
    assert sorted(tuple(w) for w in body["support"]) == [(0,), (1,), (2,)]
    values = {tuple(c["omega"]): c["value"] for c in body["coefficients"]}
    assert math.isclose(values[(0,)], -0.01)
    assert values[(1,)] == 1.0 and values[(2,)] == 1.0
    memb = {tuple(m["lam"]): m["membership"] for m in body["membership"]}
    assert memb[(-1.0,)] == "Yes" and memb[(0.0,)] == "No"
    bad = client.post("/puiseux-eval", json={"text": "omega = (1); coeff ="})
    assert bad.status_code == 422


def test_patchwork_endpoint_default():
    r = client.post("/patchwork", json={})
    assert r.status_code == 200
    body = r.json()
    assert len(body["root_logs"]) == 1
    assert abs(body["root_logs"][0] + 1.0) <= 0.02
    memb = {tuple(m["lam"]): m["membership"] for m in body["membership"]}
    assert memb[(-1.0,)] == "Yes" and memb[(0.0,)] == "No"


def test_exact_endpoint_roundtrip():
    target = [{"constraints": cell.to_obj()}
              for cell in cubic_target_complex().cells]
    req = {
        "formula": CUBIC,
        "cover": [{"B": [["0", "1"], ["1", "0"]], "normals": [["2"], ["-2"]]}],
        "target": target,
        "sampler": {"samples": 60000, "t_schedule": [1e-2, 1e-2, 4],
                    "box": [[-28.0, 12.0], [-28.0, 20.0]], "seed": 0},
    }
    r = client.post("/exact", json=req)
    assert r.status_code == 200
    body = r.json()
    assert body["thresholds"] and body["exhaustion"]
    assert all(row["inside"] == 0 for row in body["exhaustion"])
    assert body["verify"]["disagreements"] == 0
    assert body["verify"]["total"] == 401 * 401
    assert "<=" in body["psi"]


def test_exact_endpoint_exhaustion_conflict():
    req = {
        "formula": "x1 <= 1",
        "cover": [{"B": [["0", "1"], ["1", "0"]], "normals": [["2"], ["-2"]]}],
        "points_csv": "x1,x2\n1e-9,1\n",
    }
    r = client.post("/exact", json=req)
    assert r.status_code == 409


def test_exact_endpoint_bad_inputs():
    base = {"formula": "x1 <= 1",
            "cover": [{"B": [["1", "1"], ["2", "2"]]}]}
    assert client.post("/exact", json=base).status_code == 422
    bad_h = {"formula": "x1 <= 1",
             "cover": [{"B": [["1", "0"], ["0", "1"]]}],
             "h": "-1/10", "points_csv": "x1,x2\n10,10\n"}
    assert client.post("/exact", json=bad_h).status_code == 422

import math

import numpy as np
import pytest

import awbench


def test_remus_model_and_zoh():
    sys = awbench.remus_yaw_model()
    assert sys.A.shape == (2, 2)
    ad, bd = awbench.zoh_discretize(sys, 0.01)
    e = math.exp(-2.16 * 0.01)
    assert ad[1, 1] == pytest.approx(e, abs=1e-12)
    assert ad[0, 1] == pytest.approx((1 - e) / 2.16, abs=1e-12)
    assert bd[1, 0] == pytest.approx(1.98 * (1 - e) / 2.16, abs=1e-12)


def test_lqi_gains():
    g = awbench.lqi_gains(awbench.remus_yaw_model(), np.diag([1000.0, 50.0, 25.0]), np.eye(1))
    assert abs(g["k_x"][0, 0]) == pytest.approx(math.sqrt(1000.0), rel=1e-9)
    assert g["residual"] <= 1e-8
    assert np.all(np.linalg.eigvalsh(g["P"]) > 0)


def test_solve_qp_clamp():
    a = np.array([[1.0], [-1.0]])
    b = np.array([0.3, 0.3])
    for method in ("hildreth", "active_set"):
        s = awbench.solve_qp(np.array([[2.0]]), np.array([-2.0]), a, b, method)
        assert s["x"][0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        awbench.solve_qp(np.array([[2.0]]), np.array([-2.0]), a, b, "nope")


def test_simulate_pd():
    log = awbench.simulate("pd_aw")
    assert len(log["t"]) == 8001
    assert not log["diverged"]
    assert np.max(np.abs(log["u_ac"])) <= 20.0 + 1e-9
    np.testing.assert_array_equal(log["e"], log["r"] - log["y"])
    m = awbench.metrics("pd_aw")
    assert m["ise"] > 0 and not m["unstable"]


def test_config_errors():
    with pytest.raises(ValueError, match="foo"):
        awbench.simulate("pd_aw", "foo: 1")
    with pytest.raises(ValueError):
        awbench.simulate("pd_aw", "tau: 0")
    assert "mpc" in awbench.known_controllers()
    assert "kp" in awbench.config_keys()


def test_short_scenario_margins():
    cfg = "setpoints: [[0, 0], [1, 30]]\ntf: 10\ngm_cap: 2\ndm_cap: 0.2\n"
    r = awbench.margins("lqi_aw", cfg)
    assert r["gm"]["value"] >= 1.0
    assert 0.0 <= r["dm"]["value"] <= 0.2


def test_compare_writes_files(tmp_path):
    cfg = "controllers: [pd_aw, lqi_aw]\nmargins: false\nsetpoints: [[0, 0], [1, 30]]\ntf: 10\n"
    reports, files = awbench.compare(cfg, str(tmp_path))
    assert [r["controller"] for r in reports] == ["pd_aw", "lqi_aw"]
    assert all(r["gm"] is None for r in reports)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["control.svg", "lqi_aw.csv", "metrics.json", "pd_aw.csv", "tracking.svg"]
    assert len(files) == 5

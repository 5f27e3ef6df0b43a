"""Smoke tests for the python bindings."""

import math

import pytest

import colombeau as cb


def test_mollifier_moments():
    m = cb.build_mollifier(2, 1, symmetric=True)
    assert m.q == 2 and m.n == 1 and m.symmetric
    moments = dict()
    for idx, v in cb.verify_moments(m):
        moments[tuple(idx)] = v
    assert abs(moments[(0,)] - 1.0) <= 1e-8
    assert abs(moments[(1,)]) <= 1e-8
    assert abs(moments[(2,)]) <= 1e-8
    assert m.support_radius <= 1.0 + 1e-12


def test_mollifier_eval_and_json():
    m = cb.build_mollifier(0, 1)
    # phi = bump / mass, so phi(0) = e^{-1} / 0.4439938...
    assert m.phi([0.0]) == pytest.approx(math.exp(-1) / 0.44399381616807944, rel=1e-9)
    import json

    data = json.loads(m.to_json())
    assert data["q"] == 0 and data["n"] == 1
    assert len(data["coeffs"]) == 1


def test_model_kernel_scaling():
    k = cb.model_kernel(cb.build_mollifier(1, 1))
    rep = cb.check_lsk(k, "lsk2", hull=(-0.4, 0.4), alpha=[0], beta=[0], two_sided=True)
    assert rep["verdict"] == "pass"
    assert rep["slope"] == pytest.approx(-1.0, abs=0.05)


def test_delta_is_moderate_not_negligible():
    delta = {"op": "iota", "dist": {"kind": "delta", "point": [0]}}
    mod = cb.moderateness(delta, n=1, orders=[0, 1], alpha_max=0)
    assert mod["pass"] and mod["worst_N"] == 1
    neg = cb.negligibility(delta, n=1, orders=[0, 1], m_targets=[1])
    assert not neg["pass"]


def test_association_heaviside_delta():
    R = {
        "op": "product",
        "args": [
            {"op": "iota", "dist": {"kind": "heaviside"}},
            {"op": "iota", "dist": {"kind": "delta", "point": [0]}},
        ],
    }
    raw = cb.association(R)
    assert raw["limit"] == pytest.approx(0.5, abs=2e-3)


def test_run_scenario_dict(tmp_path):
    scenario = {
        "name": "smoke",
        "eps": {"min": 0.01, "max": 0.3, "points": 8},
        "mollifiers": [{"id": "m0", "q": 0, "n": 1}],
        "kernels": [{"id": "k0", "type": "model", "mollifier": "m0"}],
        "subjects": [{"id": "delta", "tree": {"op": "iota", "dist": {"kind": "delta", "point": [0]}}}],
        "tests": [
            {
                "type": "moderate",
                "subject": "delta",
                "kernels": ["k0"],
                "alpha_max": 0,
                "expect_N": 1,
                "probe": {"hull": {"lo": [-0.3], "hi": [0.3]}, "points": 3},
            }
        ],
    }
    summary = cb.run_scenario(scenario, out_dir=str(tmp_path / "out"))
    assert summary["all_passed"]
    assert (tmp_path / "out" / "summary.json").exists()


def test_scenario_error_is_typed():
    with pytest.raises(Exception) as exc:
        cb.run_scenario({"tests": [{"type": "mystery"}]}, out_dir="/tmp/colombeau_err")
    assert "mystery" in str(exc.value)

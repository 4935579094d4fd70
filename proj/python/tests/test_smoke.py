import math
import os

import numpy as np
import pytest

import demosuff as ds


def test_pose_and_screw_round_trip():
    a = ds.Pose.from_axis_angle([0, 0, 1], 0.7, [0.1, 0.2, 0.3])
    b = ds.Pose.from_axis_angle([1, 0, 0], -0.4, [0.5, -0.1, 0.0])
    assert ds.pose_distance(ds.sclerp(a, b, 0.0), a) < 1e-12
    assert ds.pose_distance(ds.sclerp(a, b, 1.0), b) < 1e-12
    s = ds.screw_log(a.inverse() * b)
    assert s["angle"] == pytest.approx(
        ds.pose_distance(ds.Pose(a.quaternion, [0, 0, 0]), ds.Pose(b.quaternion, [0, 0, 0]))
    )
    assert np.allclose((a * a.inverse()).matrix(), np.eye(4))


def test_segmentation_and_discretization():
    a = ds.Pose()
    b = ds.Pose.from_axis_angle([0, 0, 1], 1.0, [0.3, 0.0, 0.1])
    path = [ds.sclerp(a, b, k / 40) for k in range(41)]
    guides = ds.segment_into_screws(path)
    assert len(guides) == 2
    wps = ds.discretize_screw_path(guides, 0.02)
    assert all(seg == 0 for _, seg in wps)
    assert max(ds.pose_distance(p.__class__.from_matrix(p.matrix()), p) for p, _ in wps) < 1e-12
    assert all(ds.pose_distance(wps[i][0], wps[i + 1][0]) <= 0.02 + 1e-9 for i in range(len(wps) - 1))


def test_kinematics():
    assert "planar-3r" in ds.builtin_model_ids()
    p = ds.forward_kinematics("planar-3r", [0.0, 0.0, 0.0])
    assert p.translation[0] == pytest.approx(0.45 + 0.35 + 0.12)


def test_sample_count_and_stopping():
    assert ds.per_arm_sample_count(0.02, 0.05, 16) == 32308
    assert ds.per_arm_sample_count(0.02, 0.05, 1) == 18445
    assert ds.early_stop_beta(0.10, 0.02) == pytest.approx(0.88)
    assert ds.stopping_satisfied(0.0, 0.1, 0.85)
    with pytest.raises(ValueError):
        ds.per_arm_sample_count(0.0, 0.1, 1)


def test_acquisition_runs_and_is_deterministic():
    cfg = ds.load_config(os.path.join(ds.DATA_DIR, "configs", "planar_scoop.json"))
    a = ds.run_acquisition(cfg)
    b = ds.run_acquisition(cfg)
    assert a == b
    assert a["terminated"] == "sufficient"
    assert len(a["demos"]) <= 10
    assert len(a["history"]) == a["iteration"]


def test_mask_study_and_bandit_validation():
    r = ds.run_mask_study(os.path.join(ds.DATA_DIR, "scenarios", "weak_corner.json"))
    assert r["acquisition"]["terminated"] == "sufficient"
    assert r["flagged"] == [15]
    assert math.isclose(r["weighted_coverage"], r["overall_coverage"], abs_tol=1e-9)
    v = ds.validate_bandit([0.9, 0.5, 0.1], 0.1, 0.1, runs=20, seed=2)
    assert v["accuracy_ok"] and v["optimality_ok"]


def test_k_sweep_small():
    cfg = {
        "work_area": {"pos_min": [0, 0], "pos_max": [1, 1]},
        "world": {"kind": "ball", "radius": 2.0},
        "initial_anchors": [[0.5, 0.5]],
    }
    out = ds.run_k_sweep(cfg, K=[1], reps=3)
    assert out["pmf_csv"] == "K,demo_count,count,probability\n1,1,3,1\n"
    assert out["summary"][0]["mean"] == 1.0

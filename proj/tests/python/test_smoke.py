import json
import math

import pytest

import uavbo


def test_kernel_and_ei():
    th = uavbo.Hyperparams(noise_std=4.47, signal_std=3.32, length_scale=0.2)
    assert uavbo.kernel((0.3, 0.3), (0.3, 0.3), th) == pytest.approx(3.32 ** 2)
    assert uavbo.expected_improvement(1.0, 1.0, 0.0) == pytest.approx(1.0833154705876864)
    assert uavbo.expected_improvement(7.0, 0.0, 3.0) == 0.0


def test_posterior_and_fit():
    th = uavbo.Hyperparams()
    empty = uavbo.posterior(uavbo.Dataset(), [(0.1, 0.2), (0.5, 0.5)], th)
    assert empty.mean == [0.0, 0.0]
    assert empty.std == pytest.approx([3.32, 3.32])

    d = uavbo.Dataset()
    for i, (x, y, r) in enumerate([(0.1, 0.1, 2.0), (0.9, 0.9, 8.0), (0.5, 0.4, 5.0)]):
        d.append(i + 1.0, (x, y), r)
    assert len(d) == 3
    post = uavbo.posterior(d, [(0.9, 0.9), (0.1, 0.1)], th)
    assert uavbo.estimate_location(post) == 0
    assert math.isfinite(uavbo.log_marginal_likelihood(d, th))
    best, surface = uavbo.fit_hyperparameters(d, (0.1, 0.5, 3), (1.0, 4.0, 4), (1.0, 5.0, 2))
    assert len(surface) == 24
    assert max(surface) == pytest.approx(uavbo.log_marginal_likelihood(d, best))
    assert uavbo.holdout_mse(d, d, th) >= 0.0


def test_acquisition_helpers():
    rng = uavbo.Rng(3)
    cands = uavbo.sample_candidates(uavbo.Rect(), 50, rng)
    assert len(cands) == 50
    assert all(0.0 <= p.x <= 1.0 and 0.0 <= p.y <= 1.0 for p in cands)

    a = uavbo.Posterior()
    a.candidates = [(0.1, 0.1), (0.9, 0.9)]
    a.mean, a.std = [1.0, 5.0], [0.5, 2.0]
    b = uavbo.Posterior()
    b.candidates = a.candidates
    b.mean, b.std = [4.0, 2.0], [1.5, 1.0]
    agg = uavbo.aggregate_multi_device([a, b])
    assert agg.mean == [4.0, 5.0]
    assert agg.std == [1.5, 2.0]
    assert uavbo.select_next_waypoint(agg, 4.5) == 1
    assert uavbo.should_stop([(1, 1), (2, 2), (1, 2), (2, 1)], uavbo.StopParams())


def test_channel_and_kinematics():
    profile = uavbo.generate_profile()
    edges = profile.edges()
    assert len(edges) == 21 and edges[-1] == pytest.approx(600.0)
    times = uavbo.transmission_times(uavbo.ArrivalParams(2.0, 0.0), 10.0, uavbo.Rng(1))
    assert times == [2.0, 4.0, 6.0, 8.0, 10.0]

    s = uavbo.UavState()
    s.position = (0.0, 500.0)
    s = uavbo.set_waypoint(s, (1000.0, 500.0), uavbo.Rect(0, 0, 1000, 1000))
    s = uavbo.step(s, 1.0)
    assert s.position.x == pytest.approx(15.8)
    wps = uavbo.initial_scan_waypoints(uavbo.Rect(), 3)
    assert [tuple(p) for p in wps][0] == (0.0, 1.0)
    assert [p.y for p in wps[1:4]] == pytest.approx([0.75, 0.5, 0.25])


def test_run_scenario_deterministic():
    a = uavbo.run_scenario({"seed": 4})
    b = uavbo.run_scenario({"seed": 4})
    assert a == b
    assert len(a) == 1
    assert a[0][-1]["event"] == "stop"
    kinds = {e["event"] for e in a[0]}
    assert {"measurement", "decision", "estimate", "stop"} <= kinds


def test_montecarlo_and_config():
    cfg = json.loads(uavbo.default_config())
    assert cfg["seed"] == 1
    out = uavbo.montecarlo(json.dumps({"seed": 2}), 4, 2)
    assert out["stats_csv"].startswith("t_s,mean_err_m,std_err_m\n")
    assert out["failures"] == 0
    assert out["stats_csv"] == uavbo.montecarlo(json.dumps({"seed": 2}), 4, 1)["stats_csv"]
    with pytest.raises(ValueError, match=r"sources\[0\]"):
        uavbo.run_scenario({"sources": [{"id": "a", "x": 5000, "y": 1}]})

"""Smoke test for the activeloc Python module.

Build and install first, e.g. `maturin develop --release` from crates/py.
"""

import math

import activeloc


def main():
    # 3-4-5 triangle
    assert math.isclose(activeloc.distance((0, 0), (3, 4)), 5.0)
    assert math.isclose(activeloc.bearing((0, 0), (3, 4)), math.atan2(4, 3))

    sensors, q, sigma = [(0.0, 0.0), (10.0, 0.0)], (5.0, 5.0), 0.2
    det = activeloc.fim_det(sensors, q, "bearing", sigma)
    g = activeloc.gdop(sensors[0], sensors[1], q)
    assert math.isclose(det, 1.0 / (sigma**4 * g * g), rel_tol=1e-9)
    assert math.isinf(activeloc.total_uncertainty([(0.0, 0.0)], [q]))

    plan = activeloc.plan_offline([(12.0, 9.0), (5.0, 15.0)], (2.0, 2.0), horizon=20)
    assert len(plan) == 20
    assert all(math.dist(a, b) <= 0.5 + 1e-9 for a, b in zip(plan, plan[1:]))

    h = activeloc.Histogram(100, 100)
    target = (14.0, 6.0)
    for p in [(2.0, 2.0), (2.0, 18.0), (18.0, 18.0)]:
        h.update(p, math.atan2(target[1] - p[1], target[0] - p[0]))
    assert h.shape == (100, 100)
    assert math.dist(h.map_estimate(), target) < 0.3
    assert max(max(row) for row in h.values()) == 1.0

    ep = activeloc.run_episode("offline", seed=3, horizon=20)
    assert len(ep["trajectory"]) == 21 and len(ep["targets"]) == 2
    ev = activeloc.evaluate_policy("random", episodes=4, seed=1, horizon=10)
    assert len(ev["finals"]) == 4 and ev["std"] >= 0.0

    try:
        activeloc.run_episode("clever")
    except ValueError as e:
        assert "clever" in str(e)
    else:
        raise AssertionError("unknown policy accepted")

    print("activeloc smoke test passed")


if __name__ == "__main__":
    main()

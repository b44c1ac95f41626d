import math

import pytest

import delayoco

CONFIG = """
seed: 3
T: 300
domain: {kind: ball, dim: 2, radius: 1.0}
losses:
  seed: 5
  components:
    - {kind: linear, mean: [0.2, 0], noise: 0.5}
delays: {kind: constant, d: 4}
player: {compose: "oco(pftrl)", schedule: general}
sweep: {T_grid: [64, 128], reps: 2}
"""


def test_reference_profile():
    p = delayoco.profile([4, 2, 0, 0, 0])
    assert p["sigma"] == [0, 1, 2, 2, 1]
    assert p["d_star"] == [3, 1, 0, 1, 1]
    assert p["sigma_star"] == [1, 2, 2, 1, 0]
    assert [b + 1 for b in p["beta"]] == [4, 2, 1, 3, 5]
    assert p["d_tot"] == 6
    assert all(delayoco.verify_identities([4, 2, 0, 0, 0]).values())


def test_invalid_schedule_raises():
    with pytest.raises(ValueError):
        delayoco.profile([3, 0])


def test_philox_known_answer():
    out = delayoco.philox4x32([0, 0, 0, 0], [0, 0])
    assert list(out) == [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]


def test_projection():
    x = delayoco.project_ball([3.0, 4.0], [0.0, 0.0], 1.0)
    assert math.isclose(x[0], 0.6) and math.isclose(x[1], 0.8)
    y = delayoco.project_box([2.0, -2.0], [-1.0, -1.0], [1.0, 1.0])
    assert list(y) == [1.0, -1.0]


def test_episode_deterministic():
    a = delayoco.run_episode(CONFIG, audit=True)
    b = delayoco.run_episode(CONFIG, audit=True)
    assert a["regret"] == b["regret"]
    assert a["fingerprint"] == b["fingerprint"]
    assert a["packets"] == 300
    assert a["dual_audit_pass"] and a["decomposition_pass"]
    assert math.isclose(sum(a["losses"]) - a["comparator_total"], a["regret"], abs_tol=1e-9)


def test_sweep_and_fit():
    rows = delayoco.sweep(CONFIG)
    assert [r["T"] for r in rows] == [64, 128]
    for r in rows:
        assert r["min"] <= r["mean"] <= r["max"]
    slope, _, _ = delayoco.fit_scaling([2.0**k for k in range(10, 14)],
                                       [2.0 ** (0.5 * k) for k in range(10, 14)])
    assert abs(slope - 0.5) < 1e-12


def test_bad_config_names_field():
    with pytest.raises(ValueError, match="losses.G"):
        delayoco.run_episode(CONFIG.replace("seed: 5", "seed: 5\n  G: -1"))

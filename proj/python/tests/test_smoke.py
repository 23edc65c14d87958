import math

import pytest

import coordkit

PERFECT = {
    "alphabets": {"U": 2, "X": 2, "Y": 2, "V": 2},
    "source": [0.5, 0.5],
    "channel": [[1, 0], [0, 1]],
    "target": [[0.5, 1 / 6, 1 / 6, 1 / 6], [1 / 6, 1 / 6, 1 / 6, 0.5]],
}


def test_binary_entropy():
    assert coordkit.hb(0.5) == pytest.approx(1.0)
    assert coordkit.hb(0.0) == 0.0
    with pytest.raises(ValueError):
        coordkit.hb(1.5)


def test_perfect_channel_bounds_coincide():
    lower, upper = coordkit.coordination_bounds(0.0, 0.4)
    expected = coordkit.hb(0.4) + 0.6 * math.log2(3) - 1
    assert lower == pytest.approx(expected, abs=1e-12)
    assert upper == pytest.approx(expected, abs=1e-12)


def test_gamma_star_at_useless_channel():
    assert coordkit.gamma_star(0.5) == pytest.approx(0.25, abs=1e-3)


def test_capacity_bsc():
    c = coordkit.capacity(2, 2, [0.9, 0.1, 0.1, 0.9])
    assert c == pytest.approx(1 - coordkit.hb(0.1), abs=1e-9)


def test_evaluate_example():
    report = coordkit.evaluate(PERFECT, restarts=2)
    assert report["value"] == pytest.approx(0.5 * math.log2(3), abs=1e-6)
    assert report["verdict"] == "Achievable"


def test_rejects_unnormalized_source():
    bad = dict(PERFECT, source=[0.5, 0.6])
    with pytest.raises(ValueError, match="source"):
        coordkit.evaluate(bad)


def test_zero_capacity_simulation_runs():
    inst = dict(PERFECT, channel=[[0.5, 0.5], [0.5, 0.5]], target=[[0.25] * 4, [0.25] * 4])
    summary = coordkit.simulate(inst, n=50, blocks=4, trials=3, mode="zero-capacity")
    assert summary["trials"] == 3
    assert summary["mixing_identity_ok"]

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermsqueeze import pump
from thermsqueeze.errors import EnvelopeError

FIVE_OVER_E = 1.83939720585721160797761885081
SIGMA = 1 / math.sqrt(2)


def test_constant_envelope():
    env = pump.make_envelope({"kind": "constant", "g0": 0.8})
    assert env(0.0) == 0.8 and env(17.3) == 0.8
    assert env(-1e-9) == 0.0
    np.testing.assert_array_equal(env(np.array([0.0, 1.0, 2.0])), [0.8, 0.8, 0.8])


def test_gaussian_envelope():
    env = pump.make_envelope({"kind": "gaussian", "g0": 5, "sigma": SIGMA, "t_o": 2.5})
    assert env(2.5) == 5
    assert env(1.5) == pytest.approx(FIVE_OVER_E, rel=1e-15)
    assert env(3.5) == pytest.approx(FIVE_OVER_E, rel=1e-15)
    assert env.peak_time == 2.5 and env.peak_value == 5


def test_gaussian_in_gamma_units():
    env = pump.gaussian(5, SIGMA, 2.5, gamma_decay=2.0)
    assert env(1.25) == 5
    assert env.peak_time == 1.25


@given(st.floats(0, 10))
def test_gaussian_symmetric(delta):
    env = pump.gaussian(5, SIGMA, 2.5)
    assert abs(env(2.5 + delta) - env(2.5 - delta)) <= 1e-14


@pytest.mark.parametrize("desc", [
    {"kind": "sampled", "samples": [(0, 1), (2, 1), (1, 1)]},
    {"kind": "sampled", "samples": [(0, 1), (0, 2)]},
    {"kind": "sampled", "samples": [(0, -0.1)]},
    {"kind": "sampled", "samples": []},
    {"kind": "gaussian", "g0": 1, "sigma": 0, "t_o": 0},
    {"kind": "gaussian", "g0": 1, "sigma": 1},
    {"kind": "constant", "g0": -1},
    {"kind": "square", "g0": 1},
    {"kind": "constant", "g0": 1, "colour": "red"},
])
def test_invalid_specs(desc):
    with pytest.raises(EnvelopeError):
        pump.make_envelope(desc)


def test_sampled_nodes_and_extrapolation():
    samples = [(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)]
    env = pump.sampled(samples)
    for t, g in samples:
        assert env(t) == g
    assert env(0.5) == 1.0
    assert env(-5) == 0.0 and env(10) == 1.0
    assert env.peak_time == 1.0


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(0, 10)), min_size=1, max_size=20,
                unique_by=lambda p: p[0]), st.floats(-200, 200))
def test_sampled_nonnegative(points, t):
    env = pump.sampled(sorted(points))
    assert env(t) >= 0
    for ts, gs in env.samples:
        assert env(ts) == gs


def test_pump_product():
    env = pump.constant(0.8)
    ag = pump.pump_product(env, -math.pi / 2, 0.0, 1.0)
    assert ag == pytest.approx(-0.2j)
    ag = pump.pump_product(env, 0.0, 1.5, 1.0, gamma_decay=2.0)
    assert abs(ag) == pytest.approx(0.4) and np.angle(ag) == pytest.approx(-3.0)


def test_load_sampled_csv(tmp_path):
    path = tmp_path / "env.csv"
    path.write_text("t,g\n0,0\n1,0.5\n2,0.25\n")
    env = pump.load_sampled_csv(path)
    assert env.samples == ((0.0, 0.0), (1.0, 0.5), (2.0, 0.25))
    bad = tmp_path / "bad.csv"
    bad.write_text("time,g\n0,1\n")
    with pytest.raises(EnvelopeError):
        pump.load_sampled_csv(bad)
    bad.write_text("t,g\n0,x\n")
    with pytest.raises(EnvelopeError):
        pump.load_sampled_csv(bad)

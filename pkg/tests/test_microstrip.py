import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rectenna.combiner import C0, microstrip_analysis, microstrip_synthesis

# 50 ohm line on 1.6 mm FR4 (eps_r 4.4): standard calculators give about 3.06 mm
PUBLISHED_FR4_50_OHM_WIDTH = 3.06e-3


def test_fr4_fifty_ohm_width():
    r = microstrip_synthesis(50.0, 4.4, 1.6e-3, 9e9)
    assert r["width"] == pytest.approx(PUBLISHED_FR4_50_OHM_WIDTH, rel=0.05)
    assert r["closed_form_width"] == pytest.approx(PUBLISHED_FR4_50_OHM_WIDTH, rel=0.05)


def test_air_line():
    r = microstrip_synthesis(50.0, 1.0, 1e-3, 1e9)
    assert r["effective_eps"] == pytest.approx(1.0, abs=1e-12)
    assert r["quarter_wave_length"] == pytest.approx(C0 / 4e9, rel=1e-12)


def test_higher_impedance_is_narrower():
    w50 = microstrip_synthesis(50.0, 4.4, 1.6e-3, 9e9)["width"]
    w70 = microstrip_synthesis(70.71, 4.4, 1.6e-3, 9e9)["width"]
    assert w70 < w50


@given(st.floats(30, 120), st.floats(1.0, 12.0), st.floats(1e-4, 5e-3))
def test_round_trip(z0, eps_r, h):
    r = microstrip_synthesis(z0, eps_r, h, 1e9)
    z, eeff = microstrip_analysis(r["width"], eps_r, h)
    assert z == pytest.approx(z0, rel=0.01)
    assert 1 <= eeff <= eps_r
    assert r["quarter_wave_length"] == pytest.approx(C0 / (4e9 * math.sqrt(eeff)), rel=1e-12)


@pytest.mark.parametrize("args", [(5, 4.4, 1e-3, 1e9), (250, 4.4, 1e-3, 1e9), (50, 0.5, 1e-3, 1e9), (50, 4.4, 0, 1e9)])
def test_rejects(args):
    with pytest.raises(ValueError):
        microstrip_synthesis(*args)

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import friis
from rectenna.chain import (
    ChainConfig,
    LinkSpec,
    SweepResult,
    SweepRow,
    efficiency,
    element_power,
    log_grid,
    power_grid,
    reference_input_voltage,
    run_chain,
    sweep_input_power,
    sweep_load,
)
from rectenna.rectifier import DoublerConfig
from rectenna.rf_link import dbm_to_watts, default_antenna, mismatch_fraction


def small(dbm=0.0, **kw):
    # two stages keep the steady-state runs short
    return ChainConfig(rectifier=DoublerConfig(stages=2), link=LinkSpec(incident_power_dbm=dbm), **kw)


def test_efficiency_examples():
    assert efficiency(3.0, 3.0) == 100.0
    assert efficiency(0.0, 1.0) == 0.0
    v_in = reference_input_voltage(dbm_to_watts(40.0))
    assert v_in == pytest.approx(math.sqrt(10 * 50), rel=1e-12)
    assert efficiency(1.823, v_in) == pytest.approx(8.153, abs=1e-3)
    assert reference_input_voltage(1.0, 50, "peak") == pytest.approx(10.0)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            efficiency(1.0, bad)
    with pytest.raises(ValueError):
        efficiency(-1.0, 1.0)


def test_config_invariants():
    with pytest.raises(ValueError):
        ChainConfig(elements=3)
    with pytest.raises(ValueError):
        ChainConfig(frequency=20e9)
    with pytest.raises(ValueError):
        LinkSpec(mode="radar")
    assert ChainConfig().tree_depth == 2


def test_element_power_friis():
    cfg = ChainConfig(link=LinkSpec("friis", transmit_power_dbm=30, distance=2.0, transmit_gain_dbi=6))
    lam = 299_792_458.0 / 9e9
    assert element_power(cfg) == pytest.approx(friis(1.0, 10 ** 0.6, 10 ** 0.2, lam, 2.0), rel=1e-12)


def test_zero_power_gives_zero_output():
    r = run_chain(small(-200.0))
    assert abs(r.v_dc) < 1e-9


def test_drive_is_four_elements():
    cfg = small(0.0)
    r = run_chain(cfg)
    p_elem = element_power(cfg)
    mf = mismatch_fraction(default_antenna().bands[-1].return_loss_db)
    assert r.stage("junction").input_w == pytest.approx(4 * p_elem * mf, rel=1e-6)
    assert r.drive_amplitude == pytest.approx(math.sqrt(8 * 4 * p_elem * mf * r.source_resistance), rel=1e-6)


def test_ledger_balanced():
    r = run_chain(small(10.0))
    names = [e.stage for e in r.ledger]
    assert names == ["antenna", "combiner_level_1", "combiner_level_2", "junction", "rectifier"]
    for e in r.ledger:
        assert e.balanced(), (e, e.imbalance_w)
    # each stage receives what the previous one delivered
    for a, b in zip(r.ledger, r.ledger[1:]):
        assert b.input_w == pytest.approx(a.delivered_w, rel=1e-9)


def test_unmatched_uses_antenna_impedance():
    r = run_chain(replace(small(0.0), match=False))
    assert r.source_resistance == 50.0 and r.match is None
    for e in r.ledger:
        assert e.balanced()


def test_gain_offset_translates_curve():
    base = small(0.0)
    shifted = replace(base, antenna=default_antenna().with_gain_offset(3.0))
    for p in (-5.0, 5.0):
        assert run_chain(shifted.with_power(p)).v_dc == pytest.approx(run_chain(base.with_power(p + 3.0)).v_dc,
                                                                      rel=1e-4)


def test_power_grid():
    assert len(power_grid(-40, 40, 10)) == 9
    assert power_grid(0, 1, 0.3) == pytest.approx([0, 0.3, 0.6, 0.9])
    with pytest.raises(ValueError):
        power_grid(1, 0, 1)
    with pytest.raises(ValueError):
        power_grid(0, 1, 0)


def test_log_grid():
    g = log_grid(100, 1e6, 3)
    assert len(g) == 13 and g[0] == pytest.approx(100) and g[-1] == pytest.approx(1e6)


def test_sweep_power_rows_and_csv():
    res = sweep_input_power(small(), -10, 10, 10)
    assert list(res.x) == [-10, 0, 10]
    assert np.all(np.diff(res.v_dc) >= 0)
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("# sweep=power config_hash=")
    assert lines[1] == "x,v_dc_V,efficiency_pct,settled"
    assert len(lines) == 5


def test_sweep_parallel_matches_sequential():
    a = sweep_input_power(small(), 0, 10, 10)
    b = sweep_input_power(small(), 0, 10, 10, workers=2)
    assert np.allclose(a.v_dc, b.v_dc, rtol=1e-4)


def test_single_load_is_argmax():
    res = sweep_load(small(0.0), [47e3])
    assert res.argmax() == 47e3


def test_sweep_load_rejects():
    for loads in ([], [1e3, 1e3], [2e3, 1e3], [-1.0]):
        with pytest.raises(ValueError):
            sweep_load(small(), loads)


def test_failed_point_recorded():
    cfg = replace(small(), solver=replace(small().solver, max_iterations=1))
    res = sweep_input_power(cfg, 0, 10, 10)
    assert len(res.rows) == 2
    assert not any(r.settled for r in res.rows)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=10, unique=True))
def test_sweep_result_order(xs):
    rows = tuple(SweepRow(x, 0.0, 0.0, True) for x in xs)
    if xs == sorted(xs):
        SweepResult("power", rows)
    else:
        with pytest.raises(ValueError):
            SweepResult("power", rows)

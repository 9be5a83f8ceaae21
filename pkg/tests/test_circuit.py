"""DC operating points and the diode law."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bisect, series_parallel
from rectenna.circuit import (
    ConvergenceError,
    DCSource,
    Diode,
    DiodeModel,
    MNASystem,
    Netlist,
    Resistor,
    SineSource,
    SolverOptions,
    StructuralError,
    Capacitor,
    diode_current,
    solve_dc,
)

MODEL = DiodeModel(1e-8, 1.05, thermal_voltage=0.02585)


def test_divider():
    nl = Netlist((DCSource("v", "in", "0", 1.0), Resistor("r1", "in", "mid", 1e3), Resistor("r2", "mid", "0", 1e3)))
    v = solve_dc(nl)
    assert abs(v["mid"] - 0.5) < 1e-9
    assert v["in"] == 1.0 and v["0"] == 0.0


def test_all_sources_zero():
    nl = Netlist((
        DCSource("v", "a", "0", 0.0), Resistor("r1", "a", "b", 10.0),
        Diode("d", "b", "c", MODEL), Resistor("r2", "c", "0", 5.0),
        SineSource("s", "e", "0", 3.0, 1e3, 0.0, 50.0), Resistor("r3", "e", "0", 1.0),
    ))
    assert all(abs(x) < 1e-12 for x in solve_dc(nl).values())


def test_diode_operating_point_against_bisection():
    nl = Netlist((DCSource("v", "in", "0", 1.0), Resistor("r", "in", "a", 1e3), Diode("d", "a", "0", MODEL)))
    v = solve_dc(nl)["a"]
    nvt = 1.05 * 0.02585
    ref = bisect(lambda x: 1e-8 * math.expm1(x / nvt) - (1 - x) / 1e3, 0.0, 1.0)
    # gmin across the junction shifts the root by ~ gmin * v / g_d, far below the tolerance
    assert abs(v - ref) < 1e-9


def test_diode_with_series_resistance():
    m = DiodeModel(1e-8, 1.05, series_resistance=20.0, thermal_voltage=0.02585)
    nl = Netlist((DCSource("v", "in", "0", 2.0), Resistor("r", "in", "a", 100.0), Diode("d", "a", "0", m)))
    v = solve_dc(nl)["a"]
    nvt = 1.05 * 0.02585

    def kcl(i):  # current through the branch
        vj = 2.0 - i * 120.0
        return 1e-8 * math.expm1(vj / nvt) - i

    i = bisect(kcl, 0.0, 2.0 / 120)
    assert abs(v - (2.0 - 100.0 * i)) < 1e-9


def test_diode_current_examples():
    assert diode_current(MODEL, 0.0) == 0.0
    v = MODEL.ideality * MODEL.thermal_voltage * math.log(2.0)
    assert diode_current(MODEL, v) == pytest.approx(1e-8, rel=1e-14)


def test_diode_current_extended_precision():
    mpmath.mp.dps = 50
    ref = mpmath.mpf("1e-8") * (mpmath.exp(mpmath.mpf("0.2") / (mpmath.mpf("1.05") * mpmath.mpf("0.02585"))) - 1)
    got = diode_current(MODEL, 0.2)
    assert abs(got - float(ref)) <= 1e-12 * abs(float(ref))


@given(st.floats(-5, 5), st.floats(1e-6, 0.1))
def test_diode_current_increasing(v, dv):
    lo, hi = diode_current(MODEL, v), diode_current(MODEL, v + dv)
    assert hi >= lo
    if v > -0.5:  # deep reverse bias saturates to -Is in floating point
        assert hi > lo


def test_diode_current_clamped_not_overflowing():
    i = diode_current(MODEL, 100.0)
    assert math.isfinite(i) and i > 0
    assert diode_current(MODEL, 101.0) > i


def test_floating_node_named():
    nl = Netlist((DCSource("v", "a", "0", 1.0), Capacitor("c", "a", "b", 1e-9), Resistor("r", "b", "c", 1.0)))
    with pytest.raises(StructuralError) as info:
        solve_dc(nl)
    assert info.value.node in ("b", "c")


def test_nonconvergence_reports_residual():
    nl = Netlist((DCSource("v", "in", "0", 5.0), Resistor("r", "in", "a", 1.0), Diode("d", "a", "0", MODEL)))
    with pytest.raises(ConvergenceError) as info:
        solve_dc(nl, SolverOptions(max_iterations=2))
    assert math.isfinite(info.value.residual)


def test_kcl_residual_below_tolerance():
    nl = Netlist((
        DCSource("v", "in", "0", 3.0), Resistor("r1", "in", "a", 220.0),
        Diode("d1", "a", "b", MODEL), Resistor("r2", "b", "0", 1e3), Diode("d2", "a", "0", MODEL),
    ))
    _, x = solve_dc(nl, return_state=True)
    sys = MNASystem(nl, SolverOptions())
    r = sys.kcl_residual(x, 0.0)
    assert np.max(np.abs(r[:sys.n_nodes])) < 1e-9


def test_deterministic():
    nl = Netlist((DCSource("v", "in", "0", 1.0), Resistor("r", "in", "a", 1e3), Diode("d", "a", "0", MODEL)))
    assert solve_dc(nl) == solve_dc(nl)


# random series-parallel resistor networks against their closed-form equivalents

def trees(depth):
    leaf = st.floats(1.0, 1e5).map(float)
    if depth == 0:
        return leaf
    return st.one_of(leaf, st.tuples(st.sampled_from("sp"), st.lists(trees(depth - 1), min_size=2, max_size=3)))


def build(tree, a, b, comps, counter):
    if isinstance(tree, float):
        counter[0] += 1
        comps.append(Resistor(f"r{counter[0]}", a, b, tree))
        return
    kind, kids = tree
    if kind == "p":
        for k in kids:
            build(k, a, b, comps, counter)
        return
    nodes = [a] + [f"n{counter[0]}_{i}_{id(k)}" for i, k in enumerate(kids[:-1])] + [b]
    for k, (x, y) in zip(kids, zip(nodes, nodes[1:])):
        build(k, x, y, comps, counter)


@settings(max_examples=60, deadline=None)
@given(trees(3), st.floats(1.0, 1e4), st.floats(-10, 10))
def test_linear_networks(tree, r_top, v):
    comps = [DCSource("v", "in", "0", v), Resistor("rtop", "in", "out", r_top)]
    build(tree, "out", "0", comps, [0])
    out = solve_dc(Netlist(tuple(comps)))["out"]
    r_eq = series_parallel(tree)
    expect = v * r_eq / (r_eq + r_top)
    assert out == pytest.approx(expect, rel=1e-9, abs=1e-12)

"""Minimal nonlinear circuit solver (MNA + Newton-Raphson)."""

from .netlist import (
    GROUND,
    Capacitor,
    CircuitError,
    DCSource,
    Diode,
    DiodeModel,
    Netlist,
    NetlistSyntaxError,
    Resistor,
    SineSource,
    StructuralError,
    format_netlist,
    load_diode_model,
    parse_netlist,
)
from .solver import (
    ConvergenceError,
    MNASystem,
    SolverOptions,
    SteadyStateError,
    diode_current,
    periodic_steady_state,
    power_balance,
    run_transient,
    solve_dc,
)
from .waveform import Waveform, extract_steady_state, fundamental_phasor

__all__ = [
    "GROUND", "Capacitor", "CircuitError", "ConvergenceError", "DCSource", "Diode",
    "DiodeModel", "MNASystem", "Netlist", "NetlistSyntaxError", "Resistor", "SineSource",
    "SolverOptions", "SteadyStateError", "StructuralError", "Waveform", "diode_current",
    "extract_steady_state", "format_netlist", "fundamental_phasor", "load_diode_model",
    "parse_netlist", "periodic_steady_state", "power_balance", "run_transient", "solve_dc",
]

"""Villard (Cockcroft-Walton) voltage-doubler ladders.

Canonical stage ``k`` (``k = 1..n``), with ``stage0_ac = in`` and
``stage0_dc = 0``::

    stage<k-1>_ac --||-- stage<k>_ac          pump capacitor  c<k>a
    stage<k-1>_dc --|>|- stage<k>_ac          clamp diode     d<k>a
    stage<k>_ac   --|>|- stage<k>_dc          series diode    d<k>b
    stage<k-1>_dc --||-- stage<k>_dc          storage cap     c<k>b

The RF source ``vrf`` (with its series resistance R0) drives ``in`` and the
load ``rload`` sits from ``stage<n>_dc`` to ground. Under light load the
stage-``k`` DC node approaches ``2 k`` times the drive amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


from .circuit import (
    Capacitor,
    Diode,
    DiodeModel,
    Netlist,
    Resistor,
    SineSource,
    SolverOptions,
    SteadyStateError,
    extract_steady_state,
    fundamental_phasor,
    load_diode_model,
    periodic_steady_state,
)

DEFAULT_STAGE_CAPACITANCE = 100e-12
SOURCE_NAME = "vrf"
INPUT_NODE = "in"
LOAD_NAME = "rload"


@dataclass(frozen=True)
class SourceSpec:
    amplitude: float = 0.1
    frequency: float = 900e6
    series_resistance: float = 50.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("source amplitude must be >= 0")
        if not self.frequency > 0:
            raise ValueError("source frequency must be > 0")
        if not self.series_resistance >= 0:
            raise ValueError("source series resistance must be >= 0")


@dataclass(frozen=True)
class DoublerConfig:
    stages: int = 7
    diode: DiodeModel = field(default_factory=lambda: load_diode_model("SMS7621"))
    stage_capacitance: float = DEFAULT_STAGE_CAPACITANCE
    load_resistance: float = 22e3
    source: SourceSpec = field(default_factory=SourceSpec)
    half_stage: bool = False

    def __post_init__(self):
        if int(self.stages) != self.stages or self.stages < 1:
            raise ValueError("stages must be a positive integer")
        if not self.stage_capacitance > 0:
            raise ValueError("stage_capacitance must be > 0")
        if not self.load_resistance > 0:
            raise ValueError("load_resistance must be > 0")

    def with_source(self, **kw):
        return replace(self, source=replace(self.source, **kw))

    @property
    def output_node(self):
        return output_node(self.stages, self.half_stage)


def output_node(stages, half_stage=False):
    if not half_stage:
        return f"stage{stages}_dc"
    k = (stages + 1) // 2
    return f"stage{k}_ac" if stages % 2 else f"stage{k}_dc"


def ladder_components(config):
    """The diode/capacitor ladder and load, without the source."""
    c, d = config.stage_capacitance, config.diode
    comps = []

    def ac(k):
        return "in" if k == 0 else f"stage{k}_ac"

    def dc(k):
        return "0" if k == 0 else f"stage{k}_dc"

    if not config.half_stage:
        for k in range(1, config.stages + 1):
            comps += [
                Capacitor(f"c{k}a", ac(k - 1), ac(k), c),
                Diode(f"d{k}a", dc(k - 1), ac(k), d),
                Diode(f"d{k}b", ac(k), dc(k), d),
                Capacitor(f"c{k}b", dc(k - 1), dc(k), c),
            ]
    else:
        for j in range(1, config.stages + 1):
            k = (j + 1) // 2
            if j % 2:
                comps += [Capacitor(f"c{k}a", ac(k - 1), ac(k), c), Diode(f"d{k}a", dc(k - 1), ac(k), d)]
            else:
                comps += [Diode(f"d{k}b", ac(k), dc(k), d), Capacitor(f"c{k}b", dc(k - 1), dc(k), c)]
    comps.append(Resistor(LOAD_NAME, config.output_node, "0", config.load_resistance))
    return comps


def _source(config, amplitude=None):
    s = config.source
    amp = s.amplitude if amplitude is None else amplitude
    return SineSource(SOURCE_NAME, INPUT_NODE, "0", amp, s.frequency, 0.0, s.series_resistance)


def build_doubler_ladder(config):
    """Netlist of the source-driven ladder described in the module docstring."""
    title = f"{config.stages}-{'half-' if config.half_stage else ''}stage Villard ladder"
    return Netlist((_source(config), *ladder_components(config)), title)


def analytic_output(n, v0, r0, r_l):
    """Ideal n-stage output ``n v0 r_l / (n r0 + r_l)``.

    ``v0`` is the per-stage open-circuit contribution and ``r0`` the per-stage
    source resistance; the stages add in series into ``r_l``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not r_l > 0:
        raise ValueError("r_l must be > 0")
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    # written so each floating-point operation is monotone in r_l
    return n * v0 / (1.0 + n * r0 / r_l)


def simulate(config, steps_per_period=64, options=None, periods=3, x0=None, node=None):
    """Steady-state run of the ladder.

    Returns ``(summary, waveform)``; ``summary`` has ``dc``, ``ripple`` and
    ``settled`` for ``node`` (the output by default).
    """
    netlist = build_doubler_ladder(config)
    period = 1.0 / config.source.frequency
    wf = periodic_steady_state(netlist, period, steps_per_period, options, periods=periods, x0=x0)
    rtol = (options or SolverOptions()).settle_rtol
    summary = extract_steady_state(wf, period, node or config.output_node, rtol=rtol)
    return summary, wf


def stage_voltages(config, waveform):
    """Mean DC-column voltage of every stage over the final period."""
    period = 1.0 / config.source.frequency
    out = {}
    for k in range(1, config.stages + 1):
        name = f"stage{k}_dc"
        if name in waveform.node_names:
            out[k] = extract_steady_state(waveform, period, name)["dc"]
    return out


def estimate_input_impedance(config, probe_amplitude=0.1, steps_per_period=64, max_periods=20,
                             options=None, network=None):
    """Input impedance at the fundamental, from a steady-state probe run.

    The ladder (or ``network``, a list of components hanging off node
    ``"in"``, used as a test hook) is driven through R0 at
    ``probe_amplitude``; the fundamental phasors of the port voltage and
    current are extracted over the last whole periods.
    """
    if not probe_amplitude > 0:
        raise ValueError("probe_amplitude must be > 0")
    comps = ladder_components(config) if network is None else list(network)
    netlist = Netlist((_source(config, probe_amplitude), *comps))
    f = config.source.frequency
    period = 1.0 / f
    opts = options or SolverOptions()
    wf = periodic_steady_state(netlist, period, steps_per_period, opts, periods=3, max_periods=max_periods)
    check = extract_steady_state(wf, period, INPUT_NODE, rtol=opts.settle_rtol, atol=1e-9 * probe_amplitude)
    if not check["settled"]:
        raise SteadyStateError("input-impedance probe did not reach steady state", settled=False)
    v = fundamental_phasor(wf.node(INPUT_NODE), wf.dt, f)
    i = fundamental_phasor(wf.current(SOURCE_NAME), wf.dt, f)
    return complex(v / i)


def reference_drive_for_stage1(config, target=48.2e-3, steps_per_period=64, options=None, bracket=(1e-3, 2.0)):
    """Drive amplitude at which the stage-1 DC node sits at ``target`` volts."""
    from scipy.optimize import brentq

    def err(amp):
        cfg = config.with_source(amplitude=amp)
        _, wf = simulate(cfg, steps_per_period, options)
        return stage_voltages(cfg, wf)[1] - target

    return brentq(err, *bracket, xtol=1e-6, rtol=1e-6)

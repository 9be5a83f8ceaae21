"""End-to-end harvesting chain: antennas, combiner tree, matched rectifier.

Signal path for one operating point::

    per-element received power (override or Friis)
      x antenna mismatch fraction
      -> coherent in-phase combining through a binary tree of 2-way Wilkinsons
      -> resistive match at the root (R = Re Z_in of the converter)
      -> sine source of amplitude sqrt(8 P R) behind R, P the available power
      -> rectifier steady state -> DC output

The linear delivered-power prediction for the chosen resistor is kept in the
match report; the junction ledger line records what the rectifier actually
draws.

Every stage appends a :class:`LedgerEntry`; each satisfies
``input = delivered + reflected + dissipated``.
"""

from __future__ import annotations

import functools
import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import CircuitError, SolverOptions, power_balance
from .combiner import combine, design_wilkinson
from .matching import match_report
from .rectifier import (
    LOAD_NAME,
    SOURCE_NAME,
    DoublerConfig,
    build_doubler_ladder,
    estimate_input_impedance,
    simulate,
)
from .rf_link import antenna_at, dbm_to_watts, default_antenna, friis_received_power, mismatch_fraction

log = logging.getLogger(__name__)

REFERENCE_IMPEDANCE = 50.0


class ChainError(Exception):
    """A chain stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class LinkSpec:
    """How much RF reaches each element.

    ``mode="override"``: ``incident_power_dbm`` is the power a 0 dBi element
    would deliver; the element gain scales it. ``mode="friis"``: free-space
    link from a transmitter at ``distance``.
    """

    mode: str = "override"
    incident_power_dbm: float = 10.0
    transmit_power_dbm: float = 30.0
    distance: float = 1.0
    transmit_gain_dbi: float = 0.0

    def __post_init__(self):
        if self.mode not in ("override", "friis"):
            raise ValueError(f"link mode must be 'override' or 'friis', got {self.mode!r}")
        if not self.distance > 0:
            raise ValueError("distance must be > 0")

    @property
    def swept_dbm(self):
        return self.incident_power_dbm if self.mode == "override" else self.transmit_power_dbm

    def with_power(self, dbm):
        if self.mode == "override":
            return replace(self, incident_power_dbm=dbm)
        return replace(self, transmit_power_dbm=dbm)


@dataclass(frozen=True)
class ChainConfig:
    antenna: object = field(default_factory=default_antenna)
    elements: int = 4
    frequency: float = 9e9
    rectifier: DoublerConfig = field(default_factory=DoublerConfig)
    link: LinkSpec = field(default_factory=LinkSpec)
    antenna_impedance: float = REFERENCE_IMPEDANCE
    combiner_f0: float = None
    match: bool = True
    probe_amplitude: float = 0.1
    efficiency_reference: float = REFERENCE_IMPEDANCE
    efficiency_convention: str = "rms"
    steps_per_period: int = 64
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        e = self.elements
        if int(e) != e or e < 1 or (e & (e - 1)):
            raise ValueError(f"element count must be a power of 2, got {e!r}")
        if not self.antenna.f_min <= self.frequency <= self.antenna.f_max:
            raise ValueError(f"frequency {self.frequency:g} Hz outside the antenna table")
        if self.efficiency_convention not in ("rms", "peak"):
            raise ValueError("efficiency_convention must be 'rms' or 'peak'")
        if not self.antenna_impedance > 0 or not self.efficiency_reference > 0:
            raise ValueError("reference impedances must be > 0")

    @property
    def tree_depth(self):
        return int(round(math.log2(self.elements)))

    def with_power(self, dbm):
        return replace(self, link=self.link.with_power(dbm))

    def with_load(self, ohms):
        return replace(self, rectifier=replace(self.rectifier, load_resistance=ohms))

    def digest(self):
        return hashlib.sha256(repr(self).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class LedgerEntry:
    stage: str
    input_w: float
    delivered_w: float
    reflected_w: float = 0.0
    dissipated_w: float = 0.0

    @property
    def imbalance_w(self):
        return self.input_w - (self.delivered_w + self.reflected_w + self.dissipated_w)

    def balanced(self, rtol=1e-6, atol=1e-18):
        return abs(self.imbalance_w) <= rtol * abs(self.input_w) + atol


@dataclass(frozen=True)
class ChainResult:
    v_dc: float
    efficiency_pct: float
    settled: bool
    ledger: tuple
    match: object
    drive_amplitude: float
    source_resistance: float
    reference_power_w: float
    state: np.ndarray = None

    def stage(self, name):
        for e in self.ledger:
            if e.stage == name:
                return e
        raise KeyError(name)


def reference_input_voltage(p_w, z_ref=REFERENCE_IMPEDANCE, convention="rms"):
    """Source voltage corresponding to power ``p_w`` into ``z_ref``."""
    v_rms = math.sqrt(p_w * z_ref)
    return v_rms if convention == "rms" else math.sqrt(2.0) * v_rms


def efficiency(v_dc, v_in):
    """Conversion efficiency in percent, ``100 v_dc / v_in``."""
    if not v_in > 0:
        raise ValueError(f"v_in must be > 0, got {v_in!r}")
    if v_dc < 0:
        raise ValueError(f"v_dc must be >= 0, got {v_dc!r}")
    return 100.0 * v_dc / v_in


def combiner_tree(config, r_match):
    """One design per tree level, leaves first; the root sees ``r_match``."""
    f0 = config.combiner_f0 or config.frequency
    z = config.antenna_impedance
    levels = []
    for level in range(config.tree_depth):
        root = level == config.tree_depth - 1
        levels.append(design_wilkinson(2, z, r_match if root else z, f0))
    return levels


@functools.lru_cache(maxsize=256)
def _converter_impedance(rectifier, probe_amplitude, steps_per_period, solver):
    return estimate_input_impedance(rectifier, probe_amplitude, steps_per_period, options=solver)


def element_power(config):
    """Power reaching one element's terminals before mismatch, in watts."""
    link = config.link
    gain = antenna_at(config.antenna, config.frequency)["gain_dbi"]
    if link.mode == "override":
        return dbm_to_watts(link.incident_power_dbm) * 10.0 ** (gain / 10.0)
    p_t = dbm_to_watts(link.transmit_power_dbm)
    return friis_received_power(p_t, link.transmit_gain_dbi, gain, config.frequency, link.distance)


def run_chain(config, x0=None):
    """Simulate one operating point; see the module docstring for the path."""
    f = config.frequency
    rect = replace(config.rectifier, source=replace(config.rectifier.source, frequency=f,
                                                    series_resistance=config.antenna_impedance))
    ledger = []

    # antennas
    p_elem = element_power(config)
    rl_db = antenna_at(config.antenna, f)["return_loss_db"]
    mf = mismatch_fraction(rl_db)
    p_in_total = config.elements * p_elem
    ledger.append(LedgerEntry("antenna", p_in_total, p_in_total * mf, p_in_total * (1.0 - mf)))

    # converter impedance and the match at the root of the tree
    try:
        z_in = _converter_impedance(rect, config.probe_amplitude, config.steps_per_period, config.solver)
    except CircuitError as exc:
        raise ChainError("converter impedance probe", exc) from exc
    if config.match:
        report = match_report(z_in)
        r_src = report.chosen_resistor
    else:
        r_src = config.antenna_impedance
        report = None

    # coherent combining
    z0 = config.antenna_impedance
    waves = [math.sqrt(2.0 * z0 * p_elem * mf) + 0j] * config.elements
    for depth, design in enumerate(combiner_tree(config, r_src), 1):
        outs, acc = [], np.zeros(4)
        for k in range(0, len(waves), 2):
            res = combine(waves[k:k + 2], design, f)
            outs.append(res["output"])
            acc += [res["input_power"], res["output_power"], res["reflected_power"], res["dissipated_in_isolation"]]
        ledger.append(LedgerEntry(f"combiner_level_{depth}", *acc))
        waves = outs
    p_avail = abs(waves[0]) ** 2 / (2.0 * (r_src if config.tree_depth else z0))

    # rectifier, driven by the junction's available power; the mismatch at the
    # junction is whatever the nonlinear simulation draws, not the linear guess
    amp = math.sqrt(8.0 * p_avail * r_src)
    rect = rect.with_source(amplitude=amp, series_resistance=r_src)
    try:
        summary, wf = simulate(rect, config.steps_per_period, config.solver, x0=x0)
    except CircuitError as exc:
        raise ChainError("rectifier", exc) from exc
    v_dc = summary["dc"]
    n = config.steps_per_period
    pb = power_balance(build_doubler_ladder(rect), wf, len(wf) - 1 - n, len(wf) - 1, config.solver)
    p_port = -(pb[SOURCE_NAME] + pb.get(f"{SOURCE_NAME}.rs", 0.0))
    p_load = pb[LOAD_NAME]
    p_internal = sum(v for k, v in pb.items() if k not in (SOURCE_NAME, f"{SOURCE_NAME}.rs", LOAD_NAME))
    ledger.append(LedgerEntry("junction", p_avail, p_port, p_avail - p_port))
    ledger.append(LedgerEntry("rectifier", p_port, p_load, 0.0, p_internal))

    p_ref = dbm_to_watts(config.link.swept_dbm)
    v_in = reference_input_voltage(p_ref, config.efficiency_reference, config.efficiency_convention)
    eff = efficiency(max(v_dc, 0.0), v_in) if v_in > 0 else 0.0
    return ChainResult(
        v_dc=v_dc,
        efficiency_pct=eff,
        settled=summary["settled"],
        ledger=tuple(ledger),
        match=report,
        drive_amplitude=amp,
        source_resistance=r_src,
        reference_power_w=p_ref,
        state=wf.state(-1),
    )


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepRow:
    x: float
    v_dc: float
    efficiency_pct: float
    settled: bool


@dataclass(frozen=True)
class SweepResult:
    kind: str
    rows: tuple
    config_hash: str = ""

    def __post_init__(self):
        xs = [r.x for r in self.rows]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("sweep x values must be strictly increasing")

    @property
    def x(self):
        return np.array([r.x for r in self.rows])

    @property
    def v_dc(self):
        return np.array([r.v_dc for r in self.rows])

    @property
    def efficiency_pct(self):
        return np.array([r.efficiency_pct for r in self.rows])

    def argmax(self):
        """x of the highest efficiency row (first on ties)."""
        eff = self.efficiency_pct
        return float(self.x[int(np.nanargmax(eff))])

    def to_csv(self):
        lines = [f"# sweep={self.kind} config_hash={self.config_hash}", "x,v_dc_V,efficiency_pct,settled"]
        for r in self.rows:
            lines.append(f"{r.x:.6g},{r.v_dc:.6g},{r.efficiency_pct:.6g},{str(bool(r.settled)).lower()}")
        return "\n".join(lines) + "\n"


def power_grid(from_dbm, to_dbm, step_db):
    if not from_dbm < to_dbm:
        raise ValueError("from_dbm must be < to_dbm")
    if not step_db > 0:
        raise ValueError("step_db must be > 0")
    count = int(math.floor((to_dbm - from_dbm) / step_db + 1e-9)) + 1
    return [from_dbm + k * step_db for k in range(count)]


def _point(config):
    try:
        r = run_chain(config)
        return r.v_dc, r.efficiency_pct, r.settled
    except ChainError as exc:
        log.warning("sweep point failed: %s", exc)
        return math.nan, math.nan, False


def _sweep(configs, xs, kind, digest, workers):
    rows = []
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point, configs))
        rows = [SweepRow(x, *res) for x, res in zip(xs, results)]
    else:
        state = None
        for x, cfg in zip(xs, configs):
            try:
                r = _warm_run(cfg, state)
                state = r.state
                rows.append(SweepRow(x, r.v_dc, r.efficiency_pct, r.settled))
            except ChainError as exc:
                log.warning("sweep point x=%g failed: %s", x, exc)
                rows.append(SweepRow(x, math.nan, math.nan, False))
    return SweepResult(kind, tuple(rows), digest)


def _warm_run(config, state):
    if state is not None:
        try:
            return run_chain(config, x0=state)
        except ChainError:
            pass
    return run_chain(config)


def sweep_input_power(config, from_dbm=-40.0, to_dbm=40.0, step_db=10.0, workers=None):
    """One chain run per swept power level (dBm)."""
    xs = power_grid(from_dbm, to_dbm, step_db)
    return _sweep([config.with_power(x) for x in xs], xs, "power", config.digest(), workers)


def sweep_load(config, loads, workers=None):
    """One chain run per load resistance; ``argmax()`` gives the best load."""
    loads = [float(r) for r in loads]
    if not loads:
        raise ValueError("no loads given")
    if any(r <= 0 for r in loads):
        raise ValueError("loads must be > 0")
    if any(b <= a for a, b in zip(loads, loads[1:])):
        raise ValueError("loads must be strictly increasing")
    return _sweep([config.with_load(r) for r in loads], loads, "load", config.digest(), workers)


def log_grid(lo, hi, per_decade):
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), n)]

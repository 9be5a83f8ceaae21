"""Circuit description: components, diode models and the netlist text format.

Text format, one component per line::

    # comment
    .model SMS7621 is=40n n=1.05 rs=12 cj0=0.1p vt=25.852m
    R    rload  out  0    22k
    C    c1     a    b    100p
    D    d1     a    k    SMS7621
    VDC  vbias  p    0    1.5
    VSIN vrf    src  0    0.5 900meg [phase_rad [series_ohms]]

Ground is node ``0``. Values accept SI suffixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

from ..si import format_si, parse_si

GROUND = "0"
THERMAL_VOLTAGE_300K = 0.025852


class CircuitError(Exception):
    """Base class for netlist and solver failures."""


class StructuralError(CircuitError):
    """The circuit topology cannot be solved (floating node, source loop)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NetlistSyntaxError(CircuitError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class DiodeModel:
    """Shockley diode parameters.

    Junction capacitance is a constant (zero-bias) value placed across the
    intrinsic junction, i.e. inside the series resistance.
    """

    saturation_current: float
    ideality: float = 1.0
    series_resistance: float = 0.0
    junction_capacitance: float = 0.0
    thermal_voltage: float = THERMAL_VOLTAGE_300K
    name: str = "D"

    def __post_init__(self):
        checks = [
            (self.saturation_current > 0, "saturation_current must be > 0"),
            (1.0 <= self.ideality <= 2.0, "ideality must lie in [1, 2]"),
            (self.series_resistance >= 0, "series_resistance must be >= 0"),
            (self.junction_capacitance >= 0, "junction_capacitance must be >= 0"),
            (self.thermal_voltage > 0, "thermal_voltage must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"diode model {self.name!r}: {msg}")
        for v in (self.saturation_current, self.ideality, self.series_resistance,
                  self.junction_capacitance, self.thermal_voltage):
            if not math.isfinite(v):
                raise ValueError(f"diode model {self.name!r}: non-finite parameter")

    @property
    def emission_voltage(self):
        """ideality * thermal_voltage."""
        return self.ideality * self.thermal_voltage


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    resistance: float

    @property
    def terminals(self):
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    capacitance: float

    @property
    def terminals(self):
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Diode:
    name: str
    anode: str
    cathode: str
    model: DiodeModel

    @property
    def terminals(self):
        return (self.anode, self.cathode)


@dataclass(frozen=True)
class DCSource:
    name: str
    pos: str
    neg: str
    voltage: float

    @property
    def terminals(self):
        return (self.pos, self.neg)

    def value(self, t):
        return self.voltage


@dataclass(frozen=True)
class SineSource:
    """``amplitude * sin(2 pi f t + phase)`` behind an optional series resistance."""

    name: str
    pos: str
    neg: str
    amplitude: float
    frequency: float
    phase: float = 0.0
    series_resistance: float = 0.0

    @property
    def terminals(self):
        return (self.pos, self.neg)

    @property
    def period(self):
        return 1.0 / self.frequency

    def value(self, t):
        return self.amplitude * math.sin(2 * math.pi * self.frequency * t + self.phase)


SOURCES = (DCSource, SineSource)


@dataclass(frozen=True)
class Netlist:
    """Immutable flat circuit. Construction validates every invariant."""

    components: tuple
    title: str = ""
    nodes: tuple = field(init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        seen = set()
        nodes = []
        for c in comps:
            if c.name in seen:
                raise ValueError(f"duplicate component name {c.name!r}")
            seen.add(c.name)
            for n in c.terminals:
                if not isinstance(n, str) or not n:
                    raise ValueError(f"{c.name}: bad node identifier {n!r}")
                if n != GROUND and n not in nodes:
                    nodes.append(n)
            _check_values(c)
        object.__setattr__(self, "nodes", (GROUND, *nodes))
        if comps:
            _check_grounded(comps, nodes)

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, name):
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def of_kind(self, kind):
        return [c for c in self.components if isinstance(c, kind)]

    def replace(self, name, component):
        """Return a copy with component ``name`` swapped for ``component``."""
        if name not in {c.name for c in self.components}:
            raise KeyError(name)
        comps = [component if c.name == name else c for c in self.components]
        return Netlist(tuple(comps), self.title)

    def sources(self):
        return [c for c in self.components if isinstance(c, SOURCES)]

    def to_text(self):
        return format_netlist(self)


def _check_values(c):
    if isinstance(c, Resistor):
        v, what = c.resistance, "resistance"
    elif isinstance(c, Capacitor):
        v, what = c.capacitance, "capacitance"
    else:
        v = None
    if v is not None and not (math.isfinite(v) and v > 0):
        raise ValueError(f"{c.name}: {what} must be positive and finite, got {v!r}")
    if isinstance(c, DCSource) and not math.isfinite(c.voltage):
        raise ValueError(f"{c.name}: voltage must be finite")
    if isinstance(c, SineSource):
        if not (math.isfinite(c.amplitude) and math.isfinite(c.phase)):
            raise ValueError(f"{c.name}: amplitude and phase must be finite")
        if not (math.isfinite(c.frequency) and c.frequency > 0):
            raise ValueError(f"{c.name}: frequency must be positive")
        if not (math.isfinite(c.series_resistance) and c.series_resistance >= 0):
            raise ValueError(f"{c.name}: series resistance must be >= 0")
    if isinstance(c, Diode) and not isinstance(c.model, DiodeModel):
        raise ValueError(f"{c.name}: diode needs a DiodeModel")
    if c.terminals[0] == c.terminals[1]:
        raise ValueError(f"{c.name}: both terminals on node {c.terminals[0]!r}")


def _components_graph(comps, predicate=lambda c: True):
    parent = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    find(GROUND)
    for c in comps:
        a, b = c.terminals
        find(a), find(b)
        if predicate(c):
            parent[find(a)] = find(b)
    return find


def _check_grounded(comps, nodes):
    find = _components_graph(comps)
    for n in nodes:
        if find(n) != find(GROUND):
            raise StructuralError(f"node {n!r} is not connected to ground", node=n)


def dc_floating_nodes(netlist):
    """Nodes with no DC path to ground once capacitors are opened."""
    find = _components_graph(netlist.components, lambda c: not isinstance(c, Capacitor))
    return [n for n in netlist.nodes[1:] if find(n) != find(GROUND)]


# --------------------------------------------------------------------------
# text format

_MODEL_KEYS = {
    "is": "saturation_current",
    "n": "ideality",
    "rs": "series_resistance",
    "cj0": "junction_capacitance",
    "cjo": "junction_capacitance",
    "vt": "thermal_voltage",
}


def parse_model_line(line, lineno=None):
    """Parse ``.model NAME key=value ...`` into a DiodeModel."""
    tokens = line.split()
    if len(tokens) < 2 or tokens[0].lower() != ".model":
        raise NetlistSyntaxError(f"expected '.model NAME key=value...', got {line!r}", lineno)
    kwargs = {"name": tokens[1]}
    for tok in tokens[2:]:
        if "=" not in tok:
            raise NetlistSyntaxError(f"model parameter {tok!r} lacks '='", lineno)
        key, val = tok.split("=", 1)
        key = key.lower()
        if key not in _MODEL_KEYS:
            raise NetlistSyntaxError(f"unknown model parameter {key!r}", lineno)
        try:
            kwargs[_MODEL_KEYS[key]] = parse_si(val)
        except ValueError as exc:
            raise NetlistSyntaxError(str(exc), lineno) from None
    if "saturation_current" not in kwargs:
        raise NetlistSyntaxError(f"model {tokens[1]!r} needs is=", lineno)
    try:
        return DiodeModel(**kwargs)
    except ValueError as exc:
        raise NetlistSyntaxError(str(exc), lineno) from None


def format_model(model):
    return (f".model {model.name} is={format_si(model.saturation_current)} "
            f"n={format_si(model.ideality)} rs={format_si(model.series_resistance)} "
            f"cj0={format_si(model.junction_capacitance)} vt={format_si(model.thermal_voltage)}")


def parse_netlist(text, models=None, title=""):
    """Parse netlist text. ``models`` pre-seeds diode models by name."""
    models = dict(models or {})
    comps = []
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith(".model"):
            m = parse_model_line(line, lineno)
            models[m.name] = m
            continue
        tokens = line.split()
        kind = tokens[0].upper()
        if len(tokens) < 5:
            raise NetlistSyntaxError(f"too few fields in {line!r}", lineno)
        _, name, n1, n2, *vals = tokens
        try:
            if kind == "R":
                comps.append(Resistor(name, n1, n2, _one(vals, lineno)))
            elif kind == "C":
                comps.append(Capacitor(name, n1, n2, _one(vals, lineno)))
            elif kind == "VDC":
                comps.append(DCSource(name, n1, n2, _one(vals, lineno)))
            elif kind == "VSIN":
                if not 2 <= len(vals) <= 4:
                    raise NetlistSyntaxError("VSIN takes amplitude frequency [phase [series]]", lineno)
                nums = [parse_si(v) for v in vals]
                comps.append(SineSource(name, n1, n2, *nums))
            elif kind == "D":
                if len(vals) != 1:
                    raise NetlistSyntaxError("D takes exactly one model name", lineno)
                pending.append((len(comps), lineno))
                comps.append((name, n1, n2, vals[0]))
            else:
                raise NetlistSyntaxError(f"unknown component kind {tokens[0]!r}", lineno)
        except NetlistSyntaxError:
            raise
        except ValueError as exc:
            raise NetlistSyntaxError(str(exc), lineno) from None
    # diodes resolve after the whole file so .model may follow its use
    for idx, lineno in pending:
        name, a, k, model_name = comps[idx]
        if model_name not in models:
            raise NetlistSyntaxError(f"unknown diode model {model_name!r}", lineno)
        comps[idx] = Diode(name, a, k, models[model_name])
    try:
        return Netlist(tuple(comps), title)
    except StructuralError:
        raise
    except ValueError as exc:
        raise NetlistSyntaxError(str(exc)) from None


def _one(vals, lineno):
    if len(vals) != 1:
        raise NetlistSyntaxError("expected exactly one value", lineno)
    return parse_si(vals[0])


def format_netlist(netlist):
    lines = []
    if netlist.title:
        lines.append(f"# {netlist.title}")
    models = []
    for d in netlist.of_kind(Diode):
        if d.model not in models:
            models.append(d.model)
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ValueError("distinct diode models share a name")
    lines.extend(format_model(m) for m in models)
    for c in netlist.components:
        if isinstance(c, Resistor):
            lines.append(f"R {c.name} {c.n1} {c.n2} {format_si(c.resistance)}")
        elif isinstance(c, Capacitor):
            lines.append(f"C {c.name} {c.n1} {c.n2} {format_si(c.capacitance)}")
        elif isinstance(c, Diode):
            lines.append(f"D {c.name} {c.anode} {c.cathode} {c.model.name}")
        elif isinstance(c, DCSource):
            lines.append(f"VDC {c.name} {c.pos} {c.neg} {format_si(c.voltage)}")
        elif isinstance(c, SineSource):
            lines.append(f"VSIN {c.name} {c.pos} {c.neg} {format_si(c.amplitude)} "
                         f"{format_si(c.frequency)} {format_si(c.phase)} "
                         f"{format_si(c.series_resistance)}")
    return "\n".join(lines) + "\n"


def load_diode_model(name_or_path):
    """Load a bundled diode model by name (e.g. ``"SMS7621"``) or a file path."""
    from pathlib import Path

    path = Path(str(name_or_path))
    if path.is_file():
        text = path.read_text()
    else:
        pkg = resources.files("rectenna.data")
        candidate = pkg / f"{name_or_path}.model"
        if not candidate.is_file():
            raise FileNotFoundError(f"no diode model named {name_or_path!r}")
        text = candidate.read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line.lower().startswith(".model"):
            return parse_model_line(line, lineno)
    raise NetlistSyntaxError(f"no .model line in {name_or_path!r}")

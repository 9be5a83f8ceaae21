"""Wilkinson power combiners.

Port convention for the two-way network: port 1 is the common (sum) port
terminated in ``load_impedance``; ports 2 and 3 are the branch ports, each
terminated in ``source_impedance``. Each branch reaches the common junction
through a quarter-wave line of impedance ``sqrt(N R_L R_S)`` and reaches a
floating star point through an isolation resistor ``R = R_L``. For N = 2 the
two star resistors form the familiar ``2 R`` bridge between branch ports.

S-parameters use power waves normalised to each port's real reference
impedance, so a matched design has ``S11 = 0`` even when ``R_S != R_L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C0 = 299_792_458.0
ETA0 = 376.730313668


@dataclass(frozen=True)
class WilkinsonDesign:
    n_ways: int
    source_impedance: float
    load_impedance: float
    quarter_wave_impedance: float
    isolation_resistor: float
    center_frequency: float

    @property
    def port_impedances(self):
        return (self.load_impedance,) + (self.source_impedance,) * self.n_ways


@dataclass(frozen=True)
class SMatrix:
    frequency: float
    entries: np.ndarray
    port_impedances: tuple = None

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i - 1, j - 1]

    def db(self, i, j):
        return 20.0 * math.log10(max(abs(self[i, j]), 1e-300))


def design_wilkinson(n_ways, r_s, r_l, f0):
    """Quarter-wave impedance ``sqrt(N R_L R_S)`` and isolation resistor ``R_L``."""
    if int(n_ways) != n_ways or n_ways < 2:
        raise ValueError(f"n_ways must be an integer >= 2, got {n_ways!r}")
    for name, v in (("r_s", r_s), ("r_l", r_l), ("f0", f0)):
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive and finite, got {v!r}")
    return WilkinsonDesign(
        n_ways=int(n_ways),
        source_impedance=r_s,
        load_impedance=r_l,
        quarter_wave_impedance=math.sqrt(n_ways * r_l * r_s),
        isolation_resistor=r_l,
        center_frequency=f0,
    )


def _abcd_to_s(abcd, z1, z2):
    (A, B), (C, D) = abcd
    den = A * z2 + B + C * z1 * z2 + D * z1
    k = 2.0 * math.sqrt(z1 * z2)
    return np.array([
        [(A * z2 + B - C * z1 * z2 - D * z1) / den, k * (A * D - B * C) / den],
        [k / den, (-A * z2 + B - C * z1 * z2 + D * z1) / den],
    ])


def electrical_length(design, f):
    return 0.5 * math.pi * f / design.center_frequency


def sparams(design, f):
    """Ideal S-matrix at ``f`` by even/odd-mode decomposition (two-way only)."""
    if design.n_ways != 2:
        raise NotImplementedError("S-parameters are implemented for two-way combiners only")
    if not f > 0:
        raise ValueError("frequency must be positive")
    z, r = design.quarter_wave_impedance, design.isolation_resistor
    rs, rl = design.source_impedance, design.load_impedance
    th = electrical_length(design, f)
    c, s = math.cos(th), math.sin(th)
    line = ((c, 1j * z * s), (1j * s / z, c))
    # even mode: branch port -> line -> half of the common port (2 R_L)
    se = _abcd_to_s(line, rs, 2.0 * rl)
    # odd mode: star point and common junction sit at virtual ground;
    # the branch port sees R in parallel with a shorted stub
    zstub = 1j * z * s
    zo = r * zstub / (r * c + zstub)
    go = (zo - rs) / (zo + rs)
    s11 = se[1, 1]
    s21 = se[0, 1] / math.sqrt(2.0)
    s22 = 0.5 * (se[0, 0] + go)
    s23 = 0.5 * (se[0, 0] - go)
    m = np.array([[s11, s21, s21], [s21, s22, s23], [s21, s23, s22]], dtype=complex)
    return SMatrix(f, m, design.port_impedances)


def port_power(v, z):
    """Incident power of a peak-voltage wave ``v`` on reference ``z``."""
    return abs(v) ** 2 / (2.0 * z)


def combine(inputs, design, f):
    """Combine incident branch-port waves.

    ``inputs`` are incident voltage-wave phasors (peak volts) at the branch
    ports, referenced to ``source_impedance``. Returns the outgoing wave at
    the common port (volts on ``load_impedance``), the power dissipated in
    the isolation resistors, and the powers for bookkeeping.
    """
    inputs = np.asarray(inputs, dtype=complex)
    if inputs.shape != (design.n_ways,):
        raise ValueError(f"expected {design.n_ways} input phasors, got {inputs.shape}")
    S = sparams(design, f).entries
    rs, rl = design.source_impedance, design.load_impedance
    a = np.concatenate([[0.0], inputs / math.sqrt(rs)])
    b = S @ a
    out = b[0] * math.sqrt(rl)
    # branch-port voltages give the current through the 2R bridge directly
    v = np.sqrt(rs) * (a[1:] + b[1:])
    dissipated = abs(v[0] - v[1]) ** 2 / (4.0 * design.isolation_resistor)
    return {
        "output": complex(out),
        "dissipated_in_isolation": float(dissipated),
        "input_power": float(np.sum(np.abs(a[1:]) ** 2) / 2.0),
        "output_power": float(abs(b[0]) ** 2 / 2.0),
        "reflected_power": float(np.sum(np.abs(b[1:]) ** 2) / 2.0),
    }


# --------------------------------------------------------------------------
# microstrip

def microstrip_analysis(width, eps_r, height):
    """Quasi-static Z0 and effective permittivity (Hammerstad-Jensen)."""
    u = width / height
    a = 1 + math.log((u**4 + (u / 52) ** 2) / (u**4 + 0.432)) / 49 + math.log(1 + (u / 18.1) ** 3) / 18.7
    b = 0.564 * ((eps_r - 0.9) / (eps_r + 3)) ** 0.053
    eeff = (eps_r + 1) / 2 + (eps_r - 1) / 2 * (1 + 10 / u) ** (-a * b)
    fu = 6 + (2 * math.pi - 6) * math.exp(-((30.666 / u) ** 0.7528))
    z0 = ETA0 / (2 * math.pi * math.sqrt(eeff)) * math.log(fu / u + math.sqrt(1 + (2 / u) ** 2))
    return z0, eeff


def _wheeler_width_ratio(z0, eps_r):
    A = z0 / 60 * math.sqrt((eps_r + 1) / 2) + (eps_r - 1) / (eps_r + 1) * (0.23 + 0.11 / eps_r)
    u = 8 * math.exp(A) / (math.exp(2 * A) - 2)
    if u <= 2:
        return u
    B = 377 * math.pi / (2 * z0 * math.sqrt(eps_r))
    return 2 / math.pi * (B - 1 - math.log(2 * B - 1)
                          + (eps_r - 1) / (2 * eps_r) * (math.log(B - 1) + 0.39 - 0.61 / eps_r))


def microstrip_synthesis(z0, eps_r, substrate_height, f0):
    """Strip width, effective permittivity and quarter-wave length for ``z0``.

    The closed-form Wheeler/Hammerstad width seeds a root search on the
    Hammerstad-Jensen analysis so synthesis and analysis agree.
    """
    from scipy.optimize import brentq

    if not 10 <= z0 <= 200:
        raise ValueError(f"z0 must lie in [10, 200] ohms, got {z0!r}")
    if not eps_r >= 1:
        raise ValueError("eps_r must be >= 1")
    if not substrate_height > 0 or not f0 > 0:
        raise ValueError("substrate_height and f0 must be positive")
    u0 = _wheeler_width_ratio(z0, eps_r)

    def err(logu):
        return microstrip_analysis(math.exp(logu) * substrate_height, eps_r, substrate_height)[0] - z0

    lo, hi = math.log(u0) - 0.5, math.log(u0) + 0.5
    while err(lo) < 0:
        lo -= 0.5
    while err(hi) > 0:
        hi += 0.5
    u = math.exp(brentq(err, lo, hi, xtol=1e-12))
    width = u * substrate_height
    _, eeff = microstrip_analysis(width, eps_r, substrate_height)
    return {
        "width": width,
        "effective_eps": eeff,
        "quarter_wave_length": C0 / (4 * f0 * math.sqrt(eeff)),
        "closed_form_width": u0 * substrate_height,
    }


# --------------------------------------------------------------------------
# Touchstone-style export

def write_touchstone(smatrices, path=None, comment=None):
    """Serialise S-matrices as Touchstone v1 text (Hz, RI).

    All ports share one reference in Touchstone v1; the common-port
    reference is written to the option line and per-port references as
    a comment.
    """
    smatrices = list(smatrices)
    if not smatrices:
        raise ValueError("no S-matrices to write")
    n = smatrices[0].entries.shape[0]
    z = smatrices[0].port_impedances or (50.0,) * n
    lines = []
    if comment:
        lines += [f"! {c}" for c in comment.splitlines()]
    lines.append("! port reference impedances (ohm): " + " ".join(f"{v:.6g}" for v in z))
    lines.append(f"# HZ S RI R {z[0]:.6g}")
    for sm in smatrices:
        e = sm.entries
        for i in range(n):
            pairs = " ".join(f"{e[i, j].real:.12g} {e[i, j].imag:.12g}" for j in range(n))
            lines.append(f"{float(sm.frequency)!r} {pairs}" if i == 0 else f"    {pairs}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_touchstone(text, n_ports):
    """Parse text written by :func:`write_touchstone` back into SMatrix objects."""
    nums = []
    unit = 1.0
    zref = None
    for raw in text.splitlines():
        line = raw.split("!", 1)[0].strip()
        if not line:
            if "reference impedances" in raw:
                zref = tuple(float(v) for v in raw.split(":", 1)[1].split())
            continue
        if line.startswith("#"):
            tok = line[1:].upper().split()
            unit = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}[tok[0]]
            if tok[1] != "S" or tok[2] != "RI":
                raise ValueError("only S-parameters in RI format are supported")
            continue
        nums.extend(float(v) for v in line.split())
    per = 1 + 2 * n_ports * n_ports
    if len(nums) % per:
        raise ValueError("truncated Touchstone data")
    out = []
    for k in range(0, len(nums), per):
        block = np.array(nums[k + 1:k + per]).reshape(n_ports, n_ports, 2)
        out.append(SMatrix(nums[k] * unit, block[..., 0] + 1j * block[..., 1], zref))
    return out

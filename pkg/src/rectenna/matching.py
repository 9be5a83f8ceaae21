"""Resistive matching of the converter input at the combiner branch."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MatchReport:
    converter_impedance: complex
    chosen_resistor: float
    predicted_delivered_fraction: float

    def __post_init__(self):
        if not self.chosen_resistor > 0:
            raise ValueError("chosen_resistor must be > 0")
        if not 0.0 <= self.predicted_delivered_fraction <= 1.0:
            raise ValueError("delivered fraction must lie in [0, 1]")

    CSV_HEADER = "z_in_real_ohm,z_in_imag_ohm,resistor_ohm,delivered_fraction"

    def csv_row(self):
        z = self.converter_impedance
        return f"{z.real:.6g},{z.imag:.6g},{self.chosen_resistor:.6g},{self.predicted_delivered_fraction:.6g}"

    def pretty(self):
        z = self.converter_impedance
        return "\n".join([
            f"converter input impedance : {z.real:.6g} {'+' if z.imag >= 0 else '-'} j{abs(z.imag):.6g} ohm",
            f"branch resistor           : {self.chosen_resistor:.6g} ohm",
            f"predicted delivered power : {100 * self.predicted_delivered_fraction:.6g} %",
        ])


def matching_resistor(z_in):
    """Resistor to mount for a converter input impedance ``z_in``.

    A resistor cannot cancel reactance, so only the real part is matched;
    the leftover mismatch shows up in :func:`match_report`.
    """
    z_in = complex(z_in)
    if not z_in.real > 0:
        raise ValueError(f"converter impedance needs a positive real part, got {z_in}")
    return z_in.real


def delivered_power_fraction(z_source, z_load):
    """``1 - |Gamma|^2`` for the power-wave reflection coefficient."""
    zs, zl = complex(z_source), complex(z_load)
    if not zs.real > 0:
        raise ValueError("source impedance needs a positive real part")
    if math.isinf(abs(zl)):
        return 0.0
    if not zl.real > 0:
        raise ValueError("load impedance needs a positive real part")
    gamma = (zl - zs.conjugate()) / (zl + zs)
    return max(0.0, min(1.0, 1.0 - abs(gamma) ** 2))


def match_report(z_in):
    r = matching_resistor(z_in)
    return MatchReport(complex(z_in), r, delivered_power_fraction(r, z_in))

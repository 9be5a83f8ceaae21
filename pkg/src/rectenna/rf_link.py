"""Front-end modelling: power units, free-space link and antenna lookup."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

C0 = 299_792_458.0

DEFAULT_RETURN_LOSS_DB = -15.0
DEFAULT_GAIN_DBI = 2.0
# measured resonances of the 2x2 coplanar monopole array
MEASURED_RESONANCES_HZ = (900e6, 1.29e9, 4.1e9, 5.6e9, 6.8e9, 9e9)


def dbm_to_watts(p_dbm):
    if np.ndim(p_dbm):
        return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w):
    if np.ndim(p_w):
        return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0
    if p_w <= 0:
        return -math.inf
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def friis_received_power(p_t, g_t, g_r, f, d):
    """Received power in watts; gains in dBi, ``f`` in Hz, ``d`` in metres."""
    if not d > 0 or not f > 0:
        raise ValueError("distance and frequency must be positive")
    lam = C0 / f
    return p_t * db_to_linear(g_t) * db_to_linear(g_r) * (lam / (4.0 * math.pi * d)) ** 2


def mismatch_fraction(return_loss_db):
    """Fraction of incident power accepted, ``1 - |Gamma|^2``."""
    if return_loss_db > 0:
        raise ValueError(f"return loss must be <= 0 dB, got {return_loss_db}")
    gamma2 = 10.0 ** (return_loss_db / 10.0)
    return 1.0 - gamma2


@dataclass(frozen=True)
class Band:
    frequency: float
    return_loss_db: float = DEFAULT_RETURN_LOSS_DB
    gain_dbi: float = DEFAULT_GAIN_DBI


@dataclass(frozen=True)
class AntennaModel:
    bands: tuple

    def __post_init__(self):
        bands = tuple(self.bands)
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise ValueError("antenna table is empty")
        f = [b.frequency for b in bands]
        if any(hi <= lo for lo, hi in zip(f, f[1:])):
            raise ValueError("antenna frequencies must be strictly increasing")
        for b in bands:
            if b.return_loss_db > 0:
                raise ValueError(f"return loss at {b.frequency:g} Hz must be <= 0 dB")
            if not (math.isfinite(b.frequency) and b.frequency > 0):
                raise ValueError("antenna frequencies must be positive")

    @property
    def frequencies(self):
        return np.array([b.frequency for b in self.bands])

    @property
    def f_min(self):
        return self.bands[0].frequency

    @property
    def f_max(self):
        return self.bands[-1].frequency

    def with_gain_offset(self, delta_db):
        return AntennaModel(tuple(Band(b.frequency, b.return_loss_db, b.gain_dbi + delta_db) for b in self.bands))

    def to_csv(self):
        rows = ["freq_hz,return_loss_db,gain_dbi"]
        rows += [f"{b.frequency!r},{b.return_loss_db!r},{b.gain_dbi!r}" for b in self.bands]
        return "\n".join(rows) + "\n"


def default_antenna():
    """The measured resonances with placeholder depth and gain per band."""
    return AntennaModel(tuple(Band(f) for f in MEASURED_RESONANCES_HZ))


def load_antenna_csv(path):
    """Read ``freq_hz,return_loss_db,gain_dbi`` rows (header required)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"antenna table not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
        need = {"freq_hz", "return_loss_db", "gain_dbi"}
        if reader.fieldnames is None or not need <= set(f.strip() for f in reader.fieldnames):
            raise ValueError(f"{path}: header must be freq_hz,return_loss_db,gain_dbi")
        bands = [Band(float(r["freq_hz"]), float(r["return_loss_db"]), float(r["gain_dbi"])) for r in reader]
    return AntennaModel(tuple(bands))


def bundled_antenna_csv():
    return resources.files("rectenna.data") / "antenna_measured.csv"


def antenna_at(model, f):
    """Linearly interpolated gain and return loss at ``f``."""
    if not model.f_min <= f <= model.f_max:
        raise ValueError(f"{f:g} Hz outside antenna table [{model.f_min:g}, {model.f_max:g}] Hz")
    for b in model.bands:
        if b.frequency == f:
            return {"gain_dbi": b.gain_dbi, "return_loss_db": b.return_loss_db}
    fs = model.frequencies
    k = int(np.searchsorted(fs, f)) - 1
    lo, hi = model.bands[k], model.bands[k + 1]
    t = (f - lo.frequency) / (hi.frequency - lo.frequency)
    return {
        "gain_dbi": lo.gain_dbi + t * (hi.gain_dbi - lo.gain_dbi),
        "return_loss_db": lo.return_loss_db + t * (hi.return_loss_db - lo.return_loss_db),
    }

"""Sampled transient results and the post-processing done on them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Waveform:
    """Node voltages and source currents sampled every ``dt``.

    ``source_currents`` are the currents delivered out of each source's
    positive terminal. Node names containing ``:`` are solver-internal
    (diode junctions, source series-resistance taps).
    """

    dt: float
    node_names: tuple
    voltages: np.ndarray
    source_names: tuple = ()
    source_currents: np.ndarray = None
    t0: float = 0.0
    integration: str = "trapezoidal"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        v = np.asarray(self.voltages, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[1] != len(self.node_names):
            raise ValueError("one voltage column per node required")
        object.__setattr__(self, "voltages", v)
        cur = self.source_currents
        cur = np.zeros((len(v), 0)) if cur is None else np.asarray(cur, dtype=float)
        if cur.ndim == 1:
            cur = cur[:, None]
        if cur.shape != (len(v), len(self.source_names)):
            raise ValueError("source current samples must match voltage samples")
        object.__setattr__(self, "source_currents", cur)

    def __len__(self):
        return len(self.voltages)

    @property
    def time(self):
        return self.t0 + self.dt * np.arange(len(self))

    def node(self, name):
        if name == "0":
            return np.zeros(len(self))
        return self.voltages[:, self.node_names.index(name)]

    def current(self, source):
        return self.source_currents[:, self.source_names.index(source)]

    def state(self, k=-1):
        """Raw MNA unknown vector at sample ``k`` (node voltages then branch currents)."""
        return np.concatenate([self.voltages[k], -self.source_currents[k]])

    def public_nodes(self):
        return [n for n in self.node_names if ":" not in n]

    def to_csv(self, nodes=None, digits=9):
        nodes = self.public_nodes() if nodes is None else list(nodes)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s"] + [f"node_{n}_V" for n in nodes])
        cols = [self.node(n) for n in nodes]
        for k, t in enumerate(self.time):
            w.writerow([f"{t:.{digits}g}"] + [f"{c[k]:.{digits}g}" for c in cols])
        return buf.getvalue()


def samples_per_period(dt, period):
    n = period / dt
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-6 * n:
        raise ValueError(f"period {period} is not a whole number of dt={dt} steps")
    return k


def extract_steady_state(waveform, period, node=None, rtol=1e-4, atol=1e-12):
    """DC level, ripple and settling flag from the last whole periods.

    ``waveform`` may be a :class:`Waveform` (``node`` selects the trace) or a
    bare 1-D array sampled at ``dt`` given by a ``(array, dt)`` tuple.
    """
    if isinstance(waveform, Waveform):
        if node is None:
            raise ValueError("node name required for a multi-node waveform")
        y, dt = waveform.node(node), waveform.dt
    else:
        y, dt = waveform
        y = np.asarray(y, dtype=float)
    n = samples_per_period(dt, period)
    if len(y) < 3 * n:
        raise ValueError(f"waveform spans fewer than 3 periods ({len(y)} samples, {n} per period)")
    last = y[len(y) - n:]
    prev = y[len(y) - 2 * n:len(y) - n]
    dc = float(np.mean(last))
    dc_prev = float(np.mean(prev))
    ripple = float(np.max(last) - np.min(last))
    settled = abs(dc - dc_prev) <= rtol * max(abs(dc), abs(dc_prev)) + atol
    return {"dc": dc, "ripple": ripple, "settled": bool(settled)}


def fundamental_phasor(y, dt, frequency, periods=None):
    """Single-bin DFT of ``y`` at ``frequency`` over whole periods at the end.

    Returns the peak-amplitude complex phasor ``A`` such that
    ``y ~ Re(A exp(j 2 pi f t))`` with ``t`` measured from the first sample.
    """
    y = np.asarray(y, dtype=float)
    n = samples_per_period(dt, 1.0 / frequency)
    k = len(y) // n if periods is None else periods
    if k < 1 or k * n > len(y):
        raise ValueError("not enough samples for one period")
    seg = y[len(y) - k * n:]
    t = dt * np.arange(len(y) - k * n, len(y))
    return 2.0 / len(seg) * np.sum(seg * np.exp(-2j * np.pi * frequency * t))

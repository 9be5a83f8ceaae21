"""``rectenna`` command-line driver.

Every command reads an optional ``--config`` file (see :mod:`rectenna.config`)
plus ``--set section.key=value`` overrides, prints a CSV table (6 significant
digits) and, with ``--out DIR``, writes it to ``DIR/<command>.csv`` instead.
``--plot`` adds an SVG next to the CSV for the sweep commands.

Exit status: 0 success, 2 bad configuration or arguments, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .chain import ChainError, log_grid, run_chain, sweep_input_power, sweep_load
from .circuit import CircuitError
from .combiner import design_wilkinson, microstrip_synthesis, sparams
from .config import ConfigError, chain_config, doubler_config, dump_config, load_config, solver_options
from .matching import MatchReport, match_report
from .rectifier import estimate_input_impedance, simulate, stage_voltages

log = logging.getLogger("rectenna")

COMMANDS = ("design-combiner", "microstrip", "simulate-rectifier", "zin", "match",
            "sweep-power", "sweep-load", "chain")


class SolverFailure(Exception):
    pass


def _g(x):
    return f"{x:.6g}"


def _table(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _g(v) for v in r))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands; each returns (csv_text, plot_spec or None)

def cmd_design_combiner(cfg):
    c = cfg["combiner"]
    d = design_wilkinson(c["n_ways"], c["source_impedance"], c["load_impedance"], c["f0"])
    rows = [
        ("n_ways", d.n_ways),
        ("source_impedance_ohm", d.source_impedance),
        ("load_impedance_ohm", d.load_impedance),
        ("quarter_wave_impedance_ohm", d.quarter_wave_impedance),
        ("isolation_resistor_ohm", d.isolation_resistor),
        ("center_frequency_hz", d.center_frequency),
    ]
    text = _table(("quantity", "value"), rows)
    if d.n_ways == 2:
        n = c["points"]
        fs = [c["f_start"] + k * (c["f_stop"] - c["f_start"]) / max(n - 1, 1) for k in range(n)]
        srows = []
        for f in fs:
            s = sparams(d, f)
            srows.append((f, s.db(1, 1), s.db(2, 1), s.db(3, 1), s.db(2, 3)))
        text += "\n" + _table(("freq_hz", "s11_db", "s21_db", "s31_db", "s23_db"), srows)
    return text, None


def cmd_microstrip(cfg):
    m = cfg["microstrip"]
    r = microstrip_synthesis(m["z0"], m["eps_r"], m["height"], m["f0"])
    rows = [
        ("z0_ohm", m["z0"]),
        ("eps_r", m["eps_r"]),
        ("height_m", m["height"]),
        ("width_m", r["width"]),
        ("closed_form_width_m", r["closed_form_width"]),
        ("effective_eps", r["effective_eps"]),
        ("quarter_wave_length_m", r["quarter_wave_length"]),
    ]
    return _table(("quantity", "value"), rows), None


def cmd_simulate_rectifier(cfg):
    rc = doubler_config(cfg)
    try:
        summary, wf = simulate(rc, cfg["chain"]["steps_per_period"], solver_options(cfg))
    except CircuitError as exc:
        raise SolverFailure(f"rectifier: {exc}") from exc
    rows = [("dc_V", summary["dc"]), ("ripple_V", summary["ripple"]),
            ("settled", str(summary["settled"]).lower())]
    rows += [(f"stage{k}_dc_V", v) for k, v in stage_voltages(rc, wf).items()]
    return _table(("quantity", "value"), rows), None


def _zin(cfg):
    rc = doubler_config(cfg)
    try:
        return estimate_input_impedance(rc, cfg["chain"]["probe_amplitude"], cfg["chain"]["steps_per_period"],
                                        options=solver_options(cfg))
    except CircuitError as exc:
        raise SolverFailure(f"input impedance probe: {exc}") from exc


def cmd_zin(cfg):
    z = _zin(cfg)
    rows = [(cfg["rectifier"]["frequency"], z.real, z.imag)]
    return _table(("freq_hz", "z_in_real_ohm", "z_in_imag_ohm"), rows), None


def cmd_match(cfg):
    rep = match_report(_zin(cfg))
    return MatchReport.CSV_HEADER + "\n" + rep.csv_row() + "\n", None


def cmd_sweep_power(cfg):
    s = cfg["sweep"]
    res = sweep_input_power(chain_config(cfg), s["power_from_dbm"], s["power_to_dbm"], s["power_step_db"],
                            workers=s["workers"])
    return res.to_csv(), (res, "input power (dBm)", False)


def cmd_sweep_load(cfg):
    s = cfg["sweep"]
    config = chain_config(cfg).with_power(s["load_power_dbm"])
    res = sweep_load(config, log_grid(s["load_from"], s["load_to"], s["loads_per_decade"]), workers=s["workers"])
    log.info("load sweep argmax %.6g ohm (hardware reference 22 kohm)", res.argmax())
    return res.to_csv(), (res, "load resistance (ohm)", True)


def cmd_chain(cfg):
    try:
        r = run_chain(chain_config(cfg))
    except ChainError as exc:
        raise SolverFailure(str(exc)) from exc
    text = _table(("quantity", "value"), [
        ("v_dc_V", r.v_dc),
        ("efficiency_pct", r.efficiency_pct),
        ("settled", str(r.settled).lower()),
        ("source_resistance_ohm", r.source_resistance),
        ("drive_amplitude_V", r.drive_amplitude),
    ])
    text += "\n" + _table(("stage", "input_W", "delivered_W", "reflected_W", "dissipated_W"),
                          [(e.stage, e.input_w, e.delivered_w, e.reflected_w, e.dissipated_w) for e in r.ledger])
    return text, None


HANDLERS = {
    "design-combiner": cmd_design_combiner,
    "microstrip": cmd_microstrip,
    "simulate-rectifier": cmd_simulate_rectifier,
    "zin": cmd_zin,
    "match": cmd_match,
    "sweep-power": cmd_sweep_power,
    "sweep-load": cmd_sweep_load,
    "chain": cmd_chain,
}


# --------------------------------------------------------------------------
# plotting

def write_svg(path, result, xlabel, logx, csv_text):
    """Efficiency and DC output against ``x``; the CSV is embedded as a comment."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "rectenna"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(result.x, result.v_dc, "o-", color="C0")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("DC output (V)", color="C0")
    ax2 = ax.twinx()
    ax2.plot(result.x, result.efficiency_pct, "s--", color="C1")
    ax2.set_ylabel("efficiency (%)", color="C1")
    if logx:
        ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = Path(path).read_text()
    head, sep, rest = svg.partition("?>")
    comment = "\n<!-- data\n" + csv_text.replace("--", "- -") + "-->"
    Path(path).write_text(head + sep + comment + rest if sep else comment + svg)


# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="rectenna", description="Rectenna design and simulation tool.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="run configuration file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--out", type=Path, help="write <command>.csv (and .svg) into this directory")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot (sweeps only)")
    p.add_argument("--seedless", action="store_true",
                   help="no-op: every computation is deterministic and uses no random numbers")
    p.add_argument("--format", choices=("csv",), default="csv")
    p.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    return p


def _setup_logging():
    level = os.environ.get("RECTENNA_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return 0
        text, plot = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"rectenna: config error: {exc}", file=sys.stderr)
        return 2
    except (SolverFailure, CircuitError, ChainError) as exc:
        print(f"rectenna: solver failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, NotImplementedError) as exc:
        print(f"rectenna: invalid input: {exc}", file=sys.stderr)
        return 2

    stem = args.command.replace("-", "_")
    if args.out is None:
        sys.stdout.write(text)
        if args.plot:
            log.warning("--plot needs --out; no SVG written")
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / f"{stem}.csv").write_text(text)
    if args.plot and plot is not None:
        write_svg(args.out / f"{stem}.svg", *plot, csv_text=text)
    elif args.plot:
        log.warning("%s has no plot", args.command)
    print(args.out / f"{stem}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())

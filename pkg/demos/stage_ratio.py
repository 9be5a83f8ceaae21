"""Stage voltages up a seven-stage doubler driven so stage 1 sits at 48.2 mV."""

from rectenna.rectifier import DoublerConfig, reference_drive_for_stage1, simulate, stage_voltages

for load in (22e3, 1e6, 10e6):
    cfg = DoublerConfig(stages=7, load_resistance=load)
    amp = reference_drive_for_stage1(cfg, target=48.2e-3)
    c = cfg.with_source(amplitude=amp)
    _, wf = simulate(c)
    v = stage_voltages(c, wf)
    ladder = "  ".join(f"{v[k] * 1e3:6.1f}" for k in sorted(v))
    print(f"R_L {load:>8.0f} ohm  drive {amp * 1e3:6.1f} mV  stages (mV): {ladder}  ratio {v[7] / v[1]:.2f}")

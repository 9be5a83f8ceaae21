"""Power and load sweeps of the full chain at 9 GHz (default configuration)."""

import numpy as np

from rectenna.chain import ChainConfig, log_grid, sweep_input_power, sweep_load

cfg = ChainConfig()

power = sweep_input_power(cfg, -40.0, 40.0, 10.0)
print("input power sweep")
for r in power.rows:
    print(f"  {r.x:+5.0f} dBm  v_dc {r.v_dc:10.4g} V  efficiency {r.efficiency_pct:9.4g} %")

load = sweep_load(cfg.with_power(10.0), log_grid(100.0, 1e6, 3))
print("\nload sweep at +10 dBm")
for r in load.rows:
    print(f"  {r.x:10.4g} ohm  v_dc {r.v_dc:8.4g} V  efficiency {r.efficiency_pct:8.4g} %")
print(f"argmax {load.argmax():.4g} ohm; efficiency rises monotonically: {bool(np.all(np.diff(load.efficiency_pct) > 0))}")

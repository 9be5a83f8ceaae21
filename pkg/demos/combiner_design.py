"""Two-way Wilkinson for the 2x2 array: design values, band response, FR4 trace."""

import numpy as np

from rectenna.combiner import design_wilkinson, microstrip_synthesis, sparams

d = design_wilkinson(2, 50.0, 50.0, 9e9)
print(f"quarter-wave line {d.quarter_wave_impedance:.4f} ohm, isolation resistor {d.isolation_resistor:g} ohm")

print("\n  f (GHz)   S11 dB   S21 dB   S23 dB")
for f in np.linspace(4.5e9, 13.5e9, 7):
    s = sparams(d, f)
    print(f"  {f / 1e9:7.2f} {s.db(1, 1):8.2f} {s.db(2, 1):8.3f} {s.db(2, 3):8.2f}")

for z0 in (50.0, d.quarter_wave_impedance):
    m = microstrip_synthesis(z0, 4.4, 1.6e-3, 9e9)
    print(f"\n{z0:.2f} ohm on 1.6 mm FR4: width {m['width'] * 1e3:.3f} mm, "
          f"quarter wave {m['quarter_wave_length'] * 1e3:.3f} mm")

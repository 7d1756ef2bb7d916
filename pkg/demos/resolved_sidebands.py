"""Resolved-sideband cooling: square well against Morse against harmonic.

With nu above the linewidth the laser can be tuned onto a single red
sideband.  For the anharmonic square well every transition n -> n-k has its
own frequency, which shows up as extra dips in the cooling curve.

    python3 demos/resolved_sidebands.py
"""

import numpy as np

from sideband import presets as P
from sideband.cooling import cooling_curve, harmonic_reference, optimal_detuning, populations

cfg = P.preset("well-resolved")
nu = cfg["potential"]["nu"]
basis = P.fixed_basis(cfg)
curve = cooling_curve(basis, P.laser_params(cfg), P.delta_grid(cfg))
opt = optimal_detuning(curve)
print(f"square well, nu = {nu:.4f}, {basis.n_levels} levels")
print(f"  coldest: delta/nu = {opt.delta / nu:.3f}, mbar = {opt.mbar:.4f}")
y = curve.mbar
dips = [curve.delta[i] / nu for i in range(1, len(y) - 1) if y[i - 1] > y[i] < y[i + 1]]
print("  local minima at delta/nu =", ", ".join(f"{d:.2f}" for d in dips))
print("  level differences E_m - E_n in units of nu (E_n = (n+1)^2 nu):")
for n, m in [(0, 1), (0, 3), (1, 4), (2, 5)]:
    print(f"    {n} -> {m}: {basis.transition_frequency(n, m) / nu:.1f}")

cfg = P.preset("morse-resolved")
morse = P.fixed_basis(cfg)
w01 = morse.transition_frequency(0, 1)
p = P.laser_params(cfg, delta=-w01)
print(f"\nMorse well, {morse.n_levels} bound states, omega_01 = {w01:.4f}")
print(f"  mbar at delta = -omega_01:   {populations(morse, p).mbar:.5f}")
print(f"  harmonic trap with nu = omega_01: {harmonic_reference(p, w01).mbar:.5f}")

"""Doppler cooling in a wide square well.

The trap frequency nu = gamma/30 is far below the linewidth, so many motional
levels are populated and the truncation has to grow until the mean
occupation settles.  The script sweeps the detuning, locates the coldest
point and prints the blue sideband ladder at that detuning.

    python3 demos/doppler_square_well.py
"""

import warnings

import numpy as np

from sideband import presets as P
from sideband.cooling import converge_truncation, cooling_curve, optimal_detuning, populations
from sideband.spectrum import sideband_peaks

cfg = P.preset("well-doppler")
nu = cfg["potential"]["nu"]
laser = P.laser_params(cfg)
factory, _ = P.build_basis_factory(cfg)

res = converge_truncation(factory, laser, n_start=10, step=10, tol=1e-6, n_max=100)
print("truncation history (levels, mbar):")
for n, m in res.history:
    print(f"  {n:4d}  {m:.6f}")
print("converged" if res.converged else "not converged at the cap; results carry that error")

curve = cooling_curve(res.basis, laser, P.delta_grid(cfg))
opt = optimal_detuning(curve)
print(f"\ncoldest point: delta = {opt.delta:.4f}, mbar = {opt.mbar:.4f}")

p = laser.replace(delta=opt.delta)
pops = populations(res.basis, p)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    peaks = {(pk.n, pk.m): pk for pk in sideband_peaks(res.basis, p, pops)}
print("\nblue sidebands n -> n+1 (bare frequency (2n+3) nu):")
print("   n   w/nu      shift/nu     half width    weight")
for n in range(6):
    pk = peaks[(n, n + 1)]
    print(f"  {n:2d}  {pk.omega0 / nu:6.2f}  {(pk.position - pk.omega0) / nu:+.3e}  "
          f"{pk.width:.4e}  {abs(pk.weight):.4e}")

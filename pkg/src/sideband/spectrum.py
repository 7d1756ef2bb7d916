"""Motional sidebands of the elastic fluorescence peak.

Each pair of motional levels (n, m) with ``X_nm != 0`` contributes a peak
at ``w - w_L = w~_nm`` with half width ``gamma_nm``:

    S(w) = Re sum_{n != m} weight_nm / (i (w - w_L - w~_nm) + gamma_nm)

``w~_nm = w_nm + shift1 + shift2`` contains the first- and second-order
corrections in ``eta``.  The weight is
``X_nm^2 [p_m |r~(w_nm)|^2 + (p_n - p_m) r~(w_nm) q(w_nm)]``.  Dropping
the ``q`` term, which is higher order in the drive, gives the
``low_intensity`` mode: a sum of positive Lorentzians.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import MotionalBasis
from .cooling import Populations, harmonic_reference
from .internal import LaserParams, q_func, r_tilde, s_func, s_regular

__all__ = [
    "SidebandPeak",
    "SpectrumCurve",
    "HarmonicSpectrum",
    "RegimeReport",
    "first_order_shift",
    "second_order_correction",
    "level_sums",
    "sideband_peaks",
    "sideband_spectrum",
    "harmonic_sideband_spectrum",
    "default_grid",
    "evaluate_peaks",
    "dipole_gauss_legendre",
    "validate_regime",
    "nondegenerate",
]

HEIGHT_FLOOR = 1e-12
TAIL_FRACTION = 0.01
# peaks below this fraction of the tallest get no window in the default grid
GRID_FLOOR = 1e-6


@dataclass(frozen=True)
class SidebandPeak:
    n: int
    m: int
    omega0: float
    shift1: float
    shift2: float
    width: float
    weight: complex

    @property
    def position(self) -> float:
        """Renormalized peak position ``w~_nm`` relative to the laser."""
        return self.omega0 + self.shift1 + self.shift2

    @property
    def height(self) -> float:
        """Curve value at the peak centre, ``Re(weight) / width``."""
        return self.weight.real / self.width

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "omega0": self.omega0, "shift1": self.shift1,
                "shift2": self.shift2, "width": self.width,
                "weight_re": self.weight.real, "weight_im": self.weight.imag}


@dataclass(frozen=True)
class SpectrumCurve:
    omega_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("omega_grid", "values"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not np.all(np.isfinite(self.values)):
            raise ArithmeticError("spectrum contains non-finite values")


# eigenvalue corrections -------------------------------------------------------

def first_order_shift(basis: MotionalBasis, p: LaserParams, n: int, m: int) -> float:
    """First-order peak shift ``gamma omega^2 eta cos(phi) / (4N) (X_nn - X_mm)``.

    It vanishes for potentials with a parity symmetry, where ``X_nn = 0``.
    """
    if n == m:
        raise ValueError("first-order shift needs n != m")
    pref = p.gamma * p.omega**2 * p.eta * p.cos_phi / (4.0 * p.normalization)
    x = basis.x_elem
    return float(pref * (x[n, n] - x[m, m]))


@dataclass(frozen=True)
class LevelSums:
    """Per-level sums over intermediate states entering shifts and widths.

    ``half_rate[n] = 1/2 sum_j [2 Re s(w_jn) + D] X_jn^2`` and
    ``im_sum[n] = sum_j Im s(w_jn) X_jn^2``, both including ``j = n`` with
    the pole-free ``s`` at zero frequency.  ``tail`` is the share of either
    sum carried by the top 10% of intermediate levels.
    """

    half_rate: np.ndarray
    im_sum: np.ndarray
    a0: float
    tail: np.ndarray


def level_sums(basis: MotionalBasis, p: LaserParams) -> LevelSums:
    n = basis.n_levels
    X2 = basis.x_elem**2
    s_mat = np.zeros((n, n), dtype=complex)
    off = ~np.eye(n, dtype=bool) & (X2 != 0.0)
    if np.any(off):
        s_mat[off] = s_func(p, basis.omega[off])  # s(w_jn) at [j, n]
    s0 = complex(s_regular(p, 0.0))
    s_mat[np.diag_indices(n)] = s0
    rate = (2.0 * s_mat.real + p.diffusion) * X2
    im = s_mat.imag * X2
    k = max(1, int(math.ceil(0.1 * n)))
    with np.errstate(invalid="ignore", divide="ignore"):
        tail_r = np.abs(rate[-k:]).sum(0) / np.abs(rate).sum(0)
        tail_i = np.abs(im[-k:]).sum(0) / np.abs(im).sum(0)
    tail = np.fmax(np.nan_to_num(tail_r), np.nan_to_num(tail_i))
    return LevelSums(0.5 * rate.sum(0), im.sum(0), 2.0 * s0.real + p.diffusion, tail)


def _pair_corrections(basis, p, sums: LevelSums, n, m):
    x = basis.x_elem
    pref = p.delta * p.omega**2 * (p.eta * p.cos_phi) ** 2 / (4.0 * p.normalization)
    shift2 = pref * (basis.x2_diag[n] - basis.x2_diag[m]) - (sums.im_sum[n] - sums.im_sum[m])
    # grouped so that the result is bit-for-bit symmetric in n and m
    width = (sums.half_rate[n] + sums.half_rate[m]) - sums.a0 * (x[n, n] * x[m, m])
    return float(shift2), float(width)


def second_order_correction(basis: MotionalBasis, p: LaserParams, n: int, m: int,
                            sums: LevelSums | None = None) -> tuple[float, float]:
    """Second-order peak shift and half width ``gamma_nm``.

    ``shift2 = delta omega^2 eta^2 cos^2(phi)/(4N) (x2_nn - x2_mm)
    - sum_j [Im s(w_jn) X_jn^2 - Im s(w_jm) X_jm^2]`` and
    ``gamma_nm = 1/2 sum_j (A_jn + A_jm) - A_0 X_nn X_mm`` with
    ``A_0 = 2 Re s(0) + D`` and the diagonal terms ``A_jj = A_0 X_jj^2``
    kept in the sums.  Both follow from the second-order eigenvalue
    correction; the shift is antisymmetric and the width symmetric in n, m.
    """
    if n == m:
        raise ValueError("second-order correction needs n != m")
    if sums is None:
        sums = level_sums(basis, p)
    for lvl in (n, m):
        if sums.tail[lvl] > TAIL_FRACTION:
            warnings.warn(f"level {lvl}: top 10% of intermediate states carry "
                          f"{100 * sums.tail[lvl]:.1f}% of the second-order sums; "
                          "enlarge the basis", RuntimeWarning, stacklevel=2)
    return _pair_corrections(basis, p, sums, n, m)


# spectrum assembly -------------------------------------------------------------

def sideband_peaks(basis: MotionalBasis, p: LaserParams, pops: Populations,
                   mode: str = "full") -> list[SidebandPeak]:
    """All peaks with nonzero matrix element, before any height floor."""
    if mode not in ("full", "low_intensity"):
        raise ValueError(f"unknown mode {mode!r}")
    pv = np.asarray(pops.p)
    if pv.size != basis.n_levels:
        raise ValueError("populations and basis differ in size")
    sums = level_sums(basis, p)
    X = basis.x_elem
    pairs = [(n, m) for n in range(basis.n_levels) for m in range(basis.n_levels)
             if n != m and X[n, m] != 0.0]
    if not pairs:
        return []
    w = np.array([basis.omega[n, m] for n, m in pairs])
    rt = np.asarray(r_tilde(p, w))
    q = np.asarray(q_func(p, w)) if mode == "full" else np.zeros_like(rt)
    peaks = []
    for k, (n, m) in enumerate(pairs):
        weight = X[n, m] ** 2 * (pv[m] * abs(rt[k]) ** 2 + (pv[n] - pv[m]) * rt[k] * q[k])
        shift2, width = _pair_corrections(basis, p, sums, n, m)
        peaks.append(SidebandPeak(n, m, float(w[k]), first_order_shift(basis, p, n, m),
                                  shift2, width, complex(weight)))
    return peaks


def nondegenerate(peaks, rtol: float = 1e-9) -> list[SidebandPeak]:
    """Peaks whose bare frequency no other retained pair shares.

    The perturbative corrections assume non-degenerate transition
    frequencies; coinciding pairs (for instance (0,3) and (6,7) in a square
    well) mix, and their individual shifts and widths are not meaningful.
    """
    w = np.array([pk.omega0 for pk in peaks])
    if w.size == 0:
        return []
    tol = rtol * max(1.0, float(np.max(np.abs(w))))
    return [pk for pk in peaks if np.sum(np.abs(w - pk.omega0) <= tol) == 1]


def default_grid(peaks, points_per_peak: int = 400, half_windows: float = 20.0) -> np.ndarray:
    """Union of windows ``w~ +- 20 gamma`` around every peak, sorted."""
    if not peaks:
        raise ValueError("no peaks to build a grid around")
    parts = [np.linspace(pk.position - half_windows * pk.width,
                         pk.position + half_windows * pk.width, points_per_peak)
             for pk in peaks]
    return np.unique(np.concatenate(parts))


def evaluate_peaks(peaks, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    out = np.zeros_like(grid)
    for pk in peaks:
        out += np.real(pk.weight / (1j * (grid - pk.position) + pk.width))
    return out


def dipole_gauss_legendre(points: int = 16):
    """Nodes and weights for ``int_{-1}^{1} du (3/8)(1 + u^2) f(u)``."""
    u, wts = np.polynomial.legendre.leggauss(points)
    return u, wts * 0.375 * (1.0 + u**2)


def _floor(peaks, floor: float = HEIGHT_FLOOR):
    if not peaks:
        return []
    top = max(abs(pk.height) for pk in peaks)
    return [pk for pk in peaks if abs(pk.height) >= floor * top]


def _warn_tails(basis, p, peaks):
    if not peaks:
        return
    sums = level_sums(basis, p)
    top = max(abs(pk.height) for pk in peaks)
    bad = sorted({(pk.n, pk.m) for pk in peaks if abs(pk.height) > 1e-3 * top
                  and max(sums.tail[pk.n], sums.tail[pk.m]) > TAIL_FRACTION})
    if bad:
        warnings.warn(f"second-order sums not converged in the basis for peaks {bad[:5]}"
                      + (" ..." if len(bad) > 5 else ""), RuntimeWarning, stacklevel=3)


def sideband_spectrum(basis: MotionalBasis, p: LaserParams, pops: Populations,
                      grid=None, mode: str = "full", psi_average: bool = False,
                      points_per_peak: int = 400):
    """Sideband spectrum on a grid of offsets ``w - w_L``.

    Parameters
    ----------
    grid : array, optional
        Frequency offsets.  By default a union of windows around every
        peak taller than ``1e-6`` of the tallest.
    mode : {"full", "low_intensity"}
    psi_average : bool
        Average over the detection direction with the dipole pattern
        ``(3/8)(1 + u^2)``, ``u = cos(psi)``.  The spectrum is quadratic in
        ``cos(psi)`` so 16-point Gauss-Legendre is exact.  The returned peak
        list then holds the averaged weights.

    Returns
    -------
    (SpectrumCurve, list of SidebandPeak)
        Peaks below ``1e-12`` of the tallest are left out of the list but
        still contribute to the curve.
    """
    if psi_average:
        u, wts = dipole_gauss_legendre()
        runs = [sideband_peaks(basis, p.replace(cos_psi=float(ui)), pops, mode) for ui in u]
        peaks = [SidebandPeak(pk.n, pk.m, pk.omega0, pk.shift1, pk.shift2, pk.width,
                              complex(sum(w * r[k].weight for w, r in zip(wts, runs))))
                 for k, pk in enumerate(runs[0])]
    else:
        peaks = sideband_peaks(basis, p, pops, mode)
    if grid is None:
        grid = default_grid(_floor(peaks, GRID_FLOOR), points_per_peak)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("frequency grid is empty")
    _warn_tails(basis, p, peaks)
    values = evaluate_peaks(peaks, grid)
    return SpectrumCurve(grid, values), _floor(peaks)


@dataclass(frozen=True)
class HarmonicSpectrum:
    curve: SpectrumCurve
    nu_tilde: float
    width: float
    weight_blue: complex
    weight_red: complex
    mbar: float


def harmonic_sideband_spectrum(p: LaserParams, nu: float, mbar: float | None = None,
                               grid=None, points: int = 801) -> HarmonicSpectrum:
    """Two-peak sideband spectrum of a harmonic trap.

    The peaks sit at ``+-nu~`` with
    ``nu~ = nu + Im[s(nu) + s(-nu)] - delta omega^2 eta^2 cos^2(phi) / (2N)``.
    Their common half width is ``(A_- - A_+)/2``: half the cooling rate,
    since an amplitude (coherence) decays at half the rate at which the
    mean occupation relaxes.  The blue peak at ``+nu~`` has weight
    ``mbar |r~(nu)|^2 + r~(nu) q(nu)``, the red one at ``-nu~`` has
    ``(mbar+1) |r~(-nu)|^2 - r~(-nu) q(-nu)``.
    """
    ref = harmonic_reference(p, nu)
    if ref.heating:
        raise ArithmeticError("heating regime: A_- <= A_+, no harmonic steady state")
    if mbar is None:
        mbar = ref.mbar
    width = 0.5 * ref.cooling_rate
    nu_t = (nu + float(np.imag(s_func(p, nu) + s_func(p, -nu)))
            - p.delta * p.omega**2 * (p.eta * p.cos_phi) ** 2 / (2.0 * p.normalization))
    rp, rm = r_tilde(p, nu), r_tilde(p, -nu)
    qp, qm = q_func(p, nu), q_func(p, -nu)
    w_blue = mbar * abs(rp) ** 2 + rp * qp
    w_red = (mbar + 1.0) * abs(rm) ** 2 - rm * qm
    if grid is None:
        grid = np.union1d(np.linspace(nu_t - 20 * width, nu_t + 20 * width, points),
                          np.linspace(-nu_t - 20 * width, -nu_t + 20 * width, points))
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("frequency grid is empty")
    vals = (np.real(w_blue / (1j * (grid - nu_t) + width))
            + np.real(w_red / (1j * (grid + nu_t) + width)))
    return HarmonicSpectrum(SpectrumCurve(grid, vals), float(nu_t), float(width),
                            complex(w_blue), complex(w_red), float(mbar))


# regime check --------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    ratio: float
    min_gap: float
    degenerate: bool
    occupancy_proxy: float
    ok: bool
    messages: tuple


def validate_regime(basis: MotionalBasis, p: LaserParams, mbar: float = 0.0,
                    ratio_limit: float = 0.1, occupancy_limit: float = 0.3) -> RegimeReport:
    """Check the conditions behind the perturbative treatment.

    ``ratio = eta omega / min |w_nn'|`` must be small for the laser-induced
    level splitting to stay below the motional level spacing, and the
    wavepacket ``eta sqrt(2 mbar + 1)`` must be small for the expansion in
    ``eta`` to hold.  An equidistant spectrum is flagged as degenerate.
    """
    e = np.sort(basis.energies)
    gaps = np.diff(e)
    min_gap = float(np.min(np.abs(basis.omega[~np.eye(basis.n_levels, dtype=bool)])))
    degenerate = bool(gaps.size > 1 and np.allclose(gaps, gaps[0], rtol=1e-9, atol=0.0))
    ratio = p.eta * p.omega / min_gap if min_gap > 0 else math.inf
    proxy = p.eta * math.sqrt(2.0 * mbar + 1.0)
    msgs = []
    if ratio > ratio_limit:
        msgs.append(f"eta*Omega/min|w_nn'| = {ratio:.3g} exceeds {ratio_limit}")
    if proxy > occupancy_limit:
        msgs.append(f"eta*sqrt(2*mbar+1) = {proxy:.3g} exceeds {occupancy_limit}")
    for msg in msgs:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if degenerate:
        msgs.append("equidistant spectrum: transition frequencies are degenerate")
    return RegimeReport(float(ratio), min_gap, degenerate, float(proxy),
                        not (ratio > ratio_limit or proxy > occupancy_limit), tuple(msgs))

"""Brute-force reference: the master equation on internal x motional space.

The generator is assembled densely from Kronecker products and then
treated without any perturbative reduction.  Its steady state and its
quantum-regression spectrum give reference values against which the rate
equations and the perturbative sideband formulas are checked as
``eta -> 0``.

Vectorization is column stacking, ``vec(A rho B) = (B^T kron A) vec(rho)``.
Composite states are ordered ``kron(internal, motional)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import curve_fit
from scipy.special import eval_hermite, gammaln

from .basis import MotionalBasis, PotentialKind, build_square_well
from .cooling import Populations, populations, worker_count
from .internal import SIGMA_MINUS, SIGMA_PLUS, LaserParams, coupling_w1, coupling_w2
from .spectrum import SpectrumCurve, dipole_gauss_legendre, nondegenerate, sideband_peaks

__all__ = [
    "MAX_LEVELS",
    "FullLiouvillian",
    "OracleState",
    "OracleMode",
    "assemble_full",
    "consistent_basis",
    "full_steady_state",
    "regression_spectrum",
    "oracle_modes",
    "match_modes",
    "fit_lorentzian",
    "exponential_matrix",
    "verify_oracle",
]

MAX_LEVELS = 12


def _spre(a):
    return np.kron(np.eye(a.shape[0]), a)


def _spost(a):
    return np.kron(a.T, np.eye(a.shape[0]))


@dataclass(frozen=True)
class FullLiouvillian:
    matrix: np.ndarray
    n_levels: int
    params: LaserParams
    orders: frozenset
    basis: MotionalBasis
    exact_recoil: bool = False

    @property
    def dim(self) -> int:
        """Hilbert-space dimension ``2 n_levels``."""
        return 2 * self.n_levels

    def trace_defect(self) -> float:
        t = np.eye(self.dim).flatten(order="F")
        return float(np.max(np.abs(t @ self.matrix)))


def consistent_basis(basis: MotionalBasis) -> MotionalBasis:
    """Copy of ``basis`` with ``x2_diag = diag(X @ X)`` of the truncated X.

    The oracle works in the truncated space, where ``x^2`` is ``X @ X``; the
    perturbative formulas must use the same second moments for a like-for-
    like comparison.
    """
    x2 = np.einsum("ij,ji->i", basis.x_elem, basis.x_elem)
    return MotionalBasis(basis.label, basis.energies, basis.x_elem, x2, basis.xi_natural,
                         dict(basis.parameters, x2="truncated"))


# exact recoil ---------------------------------------------------------------

def _wavefunctions(basis: MotionalBasis, nodes: int = 400):
    """Basis wavefunctions on Gauss-Legendre nodes, position in units of xi."""
    n = basis.n_levels
    if basis.label is PotentialKind.SQUARE_WELL:
        half = 0.5 / basis.xi_natural  # L/2 in units of xi
        u, w = np.polynomial.legendre.leggauss(nodes)
        y = half * u
        w = w * half
        k = np.arange(n)[:, None] + 1.0
        phi = np.sin(k * np.pi * (y[None, :] / (2 * half) + 0.5)) / math.sqrt(half)
        # match the sign convention of the closed-form matrix elements
        ref = build_square_well(max(n, 2)).x_elem[:n, :n]
        phi = _align_signs(phi, y, w, ref)
        return y, w, phi
    if basis.label is PotentialKind.HARMONIC:
        # oscillator length ell = sqrt(2) xi; grid covers the classical region generously
        reach = math.sqrt(2.0) * (math.sqrt(2 * n + 1) + 8.0)
        u, w = np.polynomial.legendre.leggauss(nodes)
        y = reach * u
        w = w * reach
        z = y / math.sqrt(2.0)
        phi = np.empty((n, y.size))
        for j in range(n):
            lognorm = -0.5 * (j * math.log(2.0) + gammaln(j + 1.0) + 0.5 * math.log(math.pi))
            phi[j] = eval_hermite(j, z) * np.exp(-0.5 * z * z + lognorm) / 2.0**0.25
        return y, w, phi
    raise NotImplementedError("exact recoil is available for square-well and harmonic bases")


def _align_signs(phi, y, w, ref):
    for j in range(1, phi.shape[0]):
        # flip state j when its coupling to a lower state opposes the reference
        i = j - 1
        val = np.sum(w * phi[i] * y * phi[j])
        if ref[i, j] != 0 and np.sign(val) != np.sign(ref[i, j]):
            phi[j:j + 1] *= -1
    return phi


def exponential_matrix(basis: MotionalBasis, kappa: float, nodes: int = 400) -> np.ndarray:
    """``<n| exp(i kappa x) |m>`` with x in units of xi, by quadrature."""
    y, w, phi = _wavefunctions(basis, nodes)
    return (phi * (w * np.exp(1j * kappa * y))) @ phi.T


# assembly --------------------------------------------------------------------

def assemble_full(basis: MotionalBasis, p: LaserParams, orders=(0, 1, 2),
                  exact_recoil: bool = False) -> FullLiouvillian:
    """Dense generator of the expanded (or exact-recoil) master equation.

    Orders select the contributions in ``eta``:

    * 0: internal dynamics, motional energies and spontaneous emission;
    * 1: the first-order coupling ``W1 x``;
    * 2: the second-order coupling ``W2 x^2`` and the recoil diffusion.

    With ``exact_recoil`` the laser coupling keeps ``exp(+-i eta cos(phi) x)``
    and the emission recoil is averaged over the dipole pattern with
    16-point Gauss-Legendre; ``orders`` is then ignored.
    """
    n = basis.n_levels
    if n > MAX_LEVELS:
        raise ValueError(f"oracle supports at most {MAX_LEVELS} motional levels, got {n}")
    orders = frozenset(int(o) for o in orders)
    if not orders <= {0, 1, 2} or 0 not in orders:
        raise ValueError("orders must be a subset of {0, 1, 2} containing 0")

    i2, i_n = np.eye(2), np.eye(n)
    X = basis.x_elem.astype(complex)
    X2 = X @ X
    sp = np.kron(SIGMA_PLUS, i_n)
    sm = np.kron(SIGMA_MINUS, i_n)
    h_int = -p.delta * SIGMA_PLUS @ SIGMA_MINUS
    H = np.kron(h_int, i_n) + np.kron(i2, np.diag(basis.energies).astype(complex))

    if exact_recoil:
        ex = exponential_matrix(basis, p.eta * p.cos_phi)
        H = H + 0.5 * p.omega * (np.kron(SIGMA_PLUS, ex) + np.kron(SIGMA_MINUS, ex.conj().T))
        u, wts = dipole_gauss_legendre()
        jump = np.zeros((4 * n * n, 4 * n * n), dtype=complex)
        loss = np.zeros((2 * n, 2 * n), dtype=complex)
        for ui, wi in zip(u, wts):
            c = np.kron(i2, exponential_matrix(basis, -p.eta * ui)) @ sm
            jump += wi * _spre(c) @ _spost(c.conj().T)
            # the truncated exponential is not exactly unitary; pairing the
            # loss term with the same operators keeps the trace exact
            loss += wi * c.conj().T @ c
        L = -1j * (_spre(H) - _spost(H))
        L += p.gamma * (jump - 0.5 * (_spre(loss) + _spost(loss)))
        orders = frozenset({0, 1, 2})
    else:
        H = H + np.kron(0.5 * p.omega * (SIGMA_PLUS + SIGMA_MINUS), i_n)
        if 1 in orders:
            H = H + np.kron(coupling_w1(p), X)
        if 2 in orders:
            H = H + np.kron(coupling_w2(p), X2)
        L = -1j * (_spre(H) - _spost(H))
        L += 0.5 * p.gamma * (2.0 * _spre(sm) @ _spost(sp) - _spre(sp @ sm) - _spost(sp @ sm))
        if 2 in orders:
            xf = np.kron(i2, X)
            x2f = np.kron(i2, X2)
            dx = 2.0 * _spre(xf) @ _spost(xf) - _spre(x2f) - _spost(x2f)
            L += 0.5 * p.alpha * p.gamma * p.eta**2 * _spre(sm) @ dx @ _spost(sp)

    full = FullLiouvillian(L, n, p, orders, basis, exact_recoil)
    defect = full.trace_defect()
    if defect > 1e-13 * max(1.0, np.max(np.abs(L))):
        raise ArithmeticError(f"assembled generator is not trace preserving (defect {defect:.3g})")
    return full


# steady state ----------------------------------------------------------------

@dataclass(frozen=True)
class OracleState:
    rho: np.ndarray
    residual: float
    hermiticity_defect: float
    min_eigenvalue: float
    n_levels: int

    @property
    def internal(self) -> np.ndarray:
        r = self.rho.reshape(2, self.n_levels, 2, self.n_levels)
        return np.einsum("injn->ij", r)

    @property
    def motional(self) -> np.ndarray:
        r = self.rho.reshape(2, self.n_levels, 2, self.n_levels)
        return np.einsum("imin->mn", r)

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.motional)).copy()


def full_steady_state(full: FullLiouvillian, kernel_tol: float = 1e-12) -> OracleState:
    """Normalized kernel of the generator, reshaped to a density matrix."""
    L = full.matrix
    d = full.dim
    sv = sla.svdvals(L)
    if np.sum(sv <= kernel_tol * sv[0]) != 1:
        raise ArithmeticError(f"kernel dimension is not one (two smallest singular values "
                              f"{sv[-1]:.3g}, {sv[-2]:.3g}); is eta > 0?")
    t = np.eye(d).flatten(order="F")
    K = L.copy()
    K[0, :] = t
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    v = sla.solve(K, rhs)
    residual = float(np.max(np.abs(L @ v)))
    if residual > 1e-10 * np.max(np.abs(L)):
        raise ArithmeticError(f"oracle steady-state residual {residual:.3g} too large")
    rho = v.reshape(d, d, order="F")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    min_eig = float(np.min(np.linalg.eigvalsh(rho)))
    if min_eig < -1e-8:
        raise ArithmeticError(f"oracle steady state is not positive (eigenvalue {min_eig:.3g})")
    return OracleState(rho, residual, herm, min_eig, full.n_levels)


# spectra ---------------------------------------------------------------------

def _dipole_ops(full: FullLiouvillian):
    p = full.params
    n = full.n_levels
    xf = np.kron(np.eye(2), full.basis.x_elem)
    d_minus = np.kron(SIGMA_MINUS, np.eye(n)) @ (np.eye(2 * n) - 1j * p.eta * p.cos_psi * xf)
    return d_minus, d_minus.conj().T


def _source(full, state):
    d_minus, d_plus = _dipole_ops(full)
    mean = np.trace(d_minus @ state.rho)
    b = (d_minus @ state.rho - mean * state.rho).flatten(order="F")
    t = d_plus.flatten(order="C")  # Tr{D+ X} = t . vec(X)
    return t, b, mean


@dataclass(frozen=True)
class RegressionSpectrum:
    curve: SpectrumCurve
    coherent_weight: float
    failed: tuple = field(default_factory=tuple)


def regression_spectrum(full: FullLiouvillian, grid, state: OracleState | None = None,
                        threads: int | None = None) -> RegressionSpectrum:
    """Incoherent spectrum ``Re Tr{D+ (i w - L)^{-1} (D- rho - <D-> rho)}``.

    ``w`` is the offset from the laser frequency.  The coherent (elastic)
    part, a delta function at ``w = 0`` with weight ``|<D->|^2``, is removed
    from the source and reported separately.  One dense solve per grid
    point; points whose solve fails are recorded in ``failed`` and set to
    NaN.
    """
    if state is None:
        state = full_steady_state(full)
    grid = np.asarray(grid, dtype=float)
    t, b, mean = _source(full, state)
    L = full.matrix
    eye = np.eye(L.shape[0])

    def point(w):
        try:
            x = sla.solve(1j * w * eye - L, b, check_finite=True)
            return float(np.real(t @ x))
        except (sla.LinAlgError, ValueError):
            return math.nan

    nthreads = worker_count(threads)
    if nthreads > 1 and grid.size > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            vals = np.array(list(pool.map(point, grid)))
    else:
        vals = np.array([point(w) for w in grid])
    failed = tuple(float(w) for w, v in zip(grid, vals) if not np.isfinite(v))
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return RegressionSpectrum(SpectrumCurve(grid, vals), float(abs(mean) ** 2), failed)


@dataclass(frozen=True)
class OracleMode:
    eigenvalue: complex
    weight: complex

    @property
    def position(self) -> float:
        return float(self.eigenvalue.imag)

    @property
    def width(self) -> float:
        return float(-self.eigenvalue.real)


def oracle_modes(full: FullLiouvillian, state: OracleState | None = None,
                 max_decay: float | None = None) -> list[OracleMode]:
    """Damping-basis decomposition of the incoherent spectrum.

    Each eigenvalue ``lam`` of the generator contributes
    ``Re[weight / (i w - lam)]`` with ``weight = Tr{D+ R} <L|b> / <L|R>``
    from the right and left eigenvectors.  Modes decaying faster than
    ``max_decay`` (default ``gamma/4``, which removes the internal ones) are
    dropped.
    """
    if state is None:
        state = full_steady_state(full)
    if max_decay is None:
        max_decay = 0.25 * full.params.gamma
    t, b, _ = _source(full, state)
    lam, vl, vr = sla.eig(full.matrix, left=True, right=True)
    modes = []
    for k in np.nonzero(-lam.real < max_decay)[0]:
        norm = vl[:, k].conj() @ vr[:, k]
        if abs(norm) == 0:
            continue
        wt = (t @ vr[:, k]) * (vl[:, k].conj() @ b) / norm
        modes.append(OracleMode(complex(lam[k]), complex(wt)))
    return modes


def match_modes(modes, peaks, window: float | None = None):
    """Pair each perturbative peak with the heaviest oracle mode near it.

    ``window`` defaults to half the smallest separation between distinct
    peak positions.  Peaks without a candidate map to ``None``.
    """
    pos = np.array(sorted({round(pk.omega0, 12) for pk in peaks}))
    if window is None:
        window = 0.5 * np.min(np.diff(pos)) if pos.size > 1 else np.inf
    out = []
    for pk in peaks:
        cands = [m for m in modes if abs(m.position - pk.omega0) < window and m.width > 0]
        out.append((pk, max(cands, key=lambda m: abs(m.weight)) if cands else None))
    return out


def _lorentzian(x, amp, x0, width, offset):
    return amp * width / (width**2 + (x - x0) ** 2) + offset


def fit_lorentzian(grid, values, center: float, width: float):
    """Least-squares Lorentzian ``amp*g/(g^2 + (x-x0)^2) + c``.

    Returns ``(x0, g, amp, offset)``.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmin(np.abs(grid - center)))
    amp0 = (values[i] - np.min(values)) * width
    popt, _ = curve_fit(_lorentzian, grid, values,
                        p0=(amp0, center, width, float(np.min(values))), maxfev=20000)
    amp, x0, g, c = popt
    return float(x0), float(abs(g)), float(amp), float(c)



# convergence report ------------------------------------------------------------

def verify_oracle(eta_values=(0.2, 0.1, 0.05), n_levels: int = 8, nu: float = 1.0 / 30.0,
                  delta: float = -0.6, omega: float = 0.2, peak_eta: float = 0.05,
                  peak_omega: float = 0.05) -> dict:
    """Compare the rate equations and sideband formulas with the oracle.

    Square well in the Doppler regime.  Populations are compared at each
    ``eta``; peak positions and widths of all non-degenerate sidebands
    (weight above 1e-3 of the largest) at ``peak_eta``, ``peak_omega``.
    Position and width errors are in units of the predicted width.
    """
    basis = consistent_basis(build_square_well(n_levels, nu))
    l1 = []
    for eta in eta_values:
        p = LaserParams(delta, omega, eta=eta)
        state = full_steady_state(assemble_full(basis, p))
        l1.append(float(np.sum(np.abs(state.populations - populations(basis, p).p))))

    p = LaserParams(delta, peak_omega, eta=peak_eta)
    full = assemble_full(basis, p)
    state = full_steady_state(full)
    peaks = sideband_peaks(basis, p, Populations(state.populations), "full")
    top = max(abs(pk.weight) for pk in peaks)
    keep = [pk for pk in nondegenerate(peaks) if abs(pk.weight) > 1e-3 * top]
    pos_err, width_err, pairs = [], [], []
    for pk, mode in match_modes(oracle_modes(full, state), keep):
        if mode is None:
            pos_err.append(math.inf)
            width_err.append(math.inf)
        else:
            pos_err.append(abs(mode.position - pk.position) / pk.width)
            width_err.append(abs(mode.width - pk.width) / pk.width)
        pairs.append([pk.n, pk.m])
    ratio = l1[0] / l1[-1] if l1[-1] > 0 else math.inf
    return {
        "eta_values": list(eta_values),
        "population_l1_errors": l1,
        "population_error_ratio": ratio,
        "observed_order": math.log(ratio) / math.log(eta_values[0] / eta_values[-1]),
        "peak_eta": peak_eta,
        "peak_pairs": pairs,
        "peak_position_errors": pos_err,
        "width_errors": width_err,
        "passed": bool(ratio >= 3.0 and max(pos_err) < 0.5 and max(width_err) < 0.1),
    }

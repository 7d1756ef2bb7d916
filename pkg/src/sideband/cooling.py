"""Rate equations for the motional populations and their steady state.

Second-order perturbation theory in ``eta`` reduces the motional dynamics
to a classical master equation with rates

    A_nm = [2 Re s(w_nm) + D] X_nm^2        (rate m -> n)

where ``s`` is the internal fluctuation spectrum and ``D`` the recoil
diffusion.  The steady state is the normalized null vector of the rate
matrix.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import connected_components

from .basis import MotionalBasis
from .internal import LaserParams, s_regular

__all__ = [
    "RateCoefficients",
    "Populations",
    "ReducibleRateMatrixError",
    "SteadyStateError",
    "transition_rates",
    "rate_matrix",
    "steady_populations",
    "populations",
    "CoolingCurve",
    "cooling_curve",
    "Optimum",
    "optimal_detuning",
    "HarmonicReference",
    "harmonic_reference",
    "TruncationResult",
    "converge_truncation",
    "worker_count",
]

log = logging.getLogger(__name__)

NEGATIVE_TOL = 1e-12
HEATING_MASS = 0.01


class SteadyStateError(ArithmeticError):
    """The rate equations have no acceptable normalized steady state."""


class ReducibleRateMatrixError(SteadyStateError):
    """The rate graph has more than one closed class of levels."""

    def __init__(self, components):
        self.components = [list(map(int, c)) for c in components]
        super().__init__("rate graph is reducible; closed level classes: "
                         + "; ".join(str(c) for c in self.components))


@dataclass(frozen=True)
class RateCoefficients:
    """``A[n, m]`` is the rate from level m to level n; ``A[n, n] = 0``."""

    A: np.ndarray
    D: float

    def __post_init__(self):
        a = np.array(self.A, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("A must be square")
        if np.any(a < 0):
            raise ValueError("transition rates must be nonnegative")
        np.fill_diagonal(a, 0.0)
        a.setflags(write=False)
        object.__setattr__(self, "A", a)


@dataclass(frozen=True)
class Populations:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def mbar(self) -> float:
        """Mean occupation ``sum_n n p_n``."""
        return float(np.arange(self.p.size) @ self.p)

    @property
    def top_level_mass(self) -> float:
        """Population held by the top 10% of retained levels (at least one)."""
        k = max(1, int(math.ceil(0.1 * self.p.size)))
        return float(self.p[-k:].sum())

    @property
    def heating(self) -> bool:
        """True when the distribution piles up against the truncation."""
        return self.top_level_mass > HEATING_MASS


def transition_rates(basis: MotionalBasis, p: LaserParams) -> RateCoefficients:
    """Rates ``A_nm = [2 Re s(w_nm) + D] X_nm^2``.

    ``Re s`` is regular at zero frequency, so the pole-free ``s_regular`` is
    used for all pairs.
    """
    n = basis.n_levels
    X = basis.x_elem
    iu = np.nonzero(~np.eye(n, dtype=bool) & (X != 0.0))
    omega = basis.omega[iu]
    res = np.real(np.asarray(s_regular(p, omega)))
    A = np.zeros((n, n))
    A[iu] = (2.0 * res + p.diffusion) * X[iu] ** 2
    # Re s > 0 analytically; clip rounding noise at far-detuned frequencies
    return RateCoefficients(np.maximum(A, 0.0), p.diffusion)


def rate_matrix(rc: RateCoefficients) -> np.ndarray:
    """Generator of the rate equation ``dp/dt = M p``.

    Off-diagonal entries of every column are rounded onto a common binary
    grid coarse enough that their sum is exact in double precision.  The
    diagonal is then minus that sum, so each column adds up to exactly zero
    in any summation order.  The rounding perturbs rates by about
    ``n * 2^-52`` relative to the column maximum.
    """
    A = np.array(rc.A, dtype=float)
    n = A.shape[0]
    np.fill_diagonal(A, 0.0)
    extra = max(1, math.ceil(math.log2(n))) + 1
    for j in range(n):
        col = A[:, j]
        top = col.max()
        if top == 0.0:
            continue
        # the floor keeps the unit nonzero for subnormal rates
        unit = math.ldexp(1.0, max(math.frexp(top)[1] - 53 + extra, -1074))
        col[:] = np.round(col / unit) * unit
        A[j, j] = -math.fsum(col)
    return A


def _closed_classes(M: np.ndarray):
    adj = (M != 0.0) & ~np.eye(M.shape[0], dtype=bool)
    # edge m -> n whenever M[n, m] > 0
    ncomp, labels = connected_components(adj.T.astype(int), directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.nonzero(labels == c)[0]
        outside = np.setdiff1d(np.arange(M.shape[0]), members)
        if not adj[np.ix_(outside, members)].any():
            closed.append(members)
    return closed


def steady_populations(M: np.ndarray) -> Populations:
    """Normalized null vector of a rate matrix by row replacement and LU."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 1:
        return Populations(np.ones(1))
    closed = _closed_classes(M)
    if len(closed) != 1:
        raise ReducibleRateMatrixError(closed)

    K = M.copy()
    K[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        lu = sla.lu_factor(K, check_finite=True)
        p = sla.lu_solve(lu, rhs)
    except (ValueError, sla.LinAlgError) as exc:
        raise SteadyStateError(f"LU solve failed: {exc}") from exc

    scale = np.max(np.abs(M))
    resid = np.max(np.abs(M @ p))
    if not np.isfinite(resid) or resid > 1e-10 * scale:
        raise SteadyStateError(f"steady-state residual {resid:.3g} exceeds tolerance")
    if p.min() < -NEGATIVE_TOL:
        raise SteadyStateError(f"negative population {p.min():.3g} beyond tolerance")
    p = np.clip(p, 0.0, None)
    return Populations(p / math.fsum(p))


def populations(basis: MotionalBasis, p: LaserParams) -> Populations:
    """Steady-state motional populations for one parameter set."""
    return steady_populations(rate_matrix(transition_rates(basis, p)))


# sweeps ---------------------------------------------------------------------

def worker_count(default: int | None = None) -> int:
    """Thread count, capped by the ``SIDEBAND_THREADS`` environment variable."""
    n = default or os.cpu_count() or 1
    env = os.environ.get("SIDEBAND_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            log.warning("ignoring non-integer SIDEBAND_THREADS=%r", env)
    return max(1, n)


@dataclass
class CoolingCurve:
    """Mean occupation against detuning; failed points hold NaN."""

    delta: np.ndarray
    mbar: np.ndarray
    top_level_mass: np.ndarray
    ok: np.ndarray
    errors: dict = field(default_factory=dict)
    basis: MotionalBasis | None = None
    template: LaserParams | None = None

    @property
    def converged(self) -> np.ndarray:
        """Point solved and no significant population at the truncation edge."""
        return self.ok & (self.top_level_mass <= HEATING_MASS)

    def rows(self):
        for d, m, t, c in zip(self.delta, self.mbar, self.top_level_mass, self.converged):
            yield float(d), float(m), float(t), bool(c)

    def evaluate(self, delta: float) -> float:
        """Recompute m-bar at a single detuning with the stored setup."""
        if self.basis is None or self.template is None:
            raise ValueError("curve carries no basis/template to re-evaluate")
        return populations(self.basis, self.template.replace(delta=delta)).mbar


def _point(basis, template, delta):
    try:
        pops = populations(basis, template.replace(delta=float(delta)))
        return pops.mbar, pops.top_level_mass, None
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return math.nan, math.nan, f"{type(exc).__name__}: {exc}"


def cooling_curve(basis: MotionalBasis, template: LaserParams, delta_grid,
                  threads: int | None = None) -> CoolingCurve:
    """Sweep the detuning; each point is solved independently.

    A failing point is recorded in ``errors`` and left as NaN instead of
    aborting the sweep.  Results are ordered by the (sorted) grid.
    """
    grid = np.sort(np.asarray(delta_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ValueError("detuning grid is empty")
    nthreads = worker_count(threads)
    if nthreads > 1 and grid.size > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(lambda d: _point(basis, template, d), grid))
    else:
        results = [_point(basis, template, d) for d in grid]
    mbar = np.array([r[0] for r in results])
    top = np.array([r[1] for r in results])
    errors = {float(d): r[2] for d, r in zip(grid, results) if r[2] is not None}
    ok = np.array([r[2] is None for r in results])
    return CoolingCurve(grid, mbar, top, ok, errors, basis, template)


@dataclass(frozen=True)
class Optimum:
    delta: float
    mbar: float
    boundary: bool
    refined: bool


def optimal_detuning(curve: CoolingCurve, evaluate: Callable[[float], float] | None = None,
                     xtol: float = 1e-5) -> Optimum:
    """Grid argmin followed by golden-section refinement.

    The refinement runs inside the two grid cells around the minimum and
    needs a way to evaluate m-bar off the grid: ``evaluate`` if given,
    otherwise the basis/template stored on the curve.  A minimum on the
    grid boundary is returned unrefined with ``boundary=True``.
    """
    good = np.nonzero(np.isfinite(curve.mbar))[0]
    if good.size < 3:
        raise ValueError("need at least three finite curve points")
    d, m = curve.delta[good], curve.mbar[good]
    i = int(np.argmin(m))
    if i == 0 or i == d.size - 1:
        return Optimum(float(d[i]), float(m[i]), True, False)
    f = evaluate
    if f is None and curve.basis is not None:
        f = curve.evaluate
    if f is None:
        return Optimum(float(d[i]), float(m[i]), False, False)
    # xtol is relative to |delta|, as in scipy's golden-section routine
    res = minimize_scalar(f, bracket=(d[i - 1], d[i], d[i + 1]), method="golden",
                          options={"xtol": xtol})
    if not (d[i - 1] <= res.x <= d[i + 1]) or res.fun > m[i]:
        return Optimum(float(d[i]), float(m[i]), False, False)
    return Optimum(float(res.x), float(res.fun), False, True)


# harmonic reference -----------------------------------------------------------

@dataclass(frozen=True)
class HarmonicReference:
    a_plus: float
    a_minus: float
    nu: float

    @property
    def heating(self) -> bool:
        return not self.a_minus > self.a_plus

    @property
    def mbar(self) -> float:
        if self.heating:
            return math.inf
        return self.a_plus / (self.a_minus - self.a_plus)

    @property
    def cooling_rate(self) -> float:
        return self.a_minus - self.a_plus

    def thermal(self, n_levels: int) -> np.ndarray:
        """Thermal occupations ``mbar^n / (mbar+1)^(n+1)`` for n < n_levels."""
        if self.heating:
            raise SteadyStateError("heating regime: no thermal steady state")
        m = self.mbar
        ratio = m / (m + 1.0)
        return ratio ** np.arange(n_levels) / (m + 1.0)


def harmonic_reference(p: LaserParams, nu: float) -> HarmonicReference:
    """Rates per unit ``X^2`` of a harmonic trap: ``A_pm = 2 Re s(-+nu) + D``."""
    a_plus = 2.0 * np.real(s_regular(p, -nu)) + p.diffusion
    a_minus = 2.0 * np.real(s_regular(p, nu)) + p.diffusion
    ref = HarmonicReference(float(a_plus), float(a_minus), float(nu))
    if ref.heating:
        log.info("harmonic reference at delta=%g is heating", p.delta)
    return ref


# truncation ----------------------------------------------------------------

@dataclass(frozen=True)
class TruncationResult:
    basis: MotionalBasis
    populations: Populations
    converged: bool
    history: tuple


def converge_truncation(build: Callable[[int], MotionalBasis], p: LaserParams,
                        n_start: int = 10, step: int = 10, tol: float = 1e-6,
                        n_max: int = 100) -> TruncationResult:
    """Grow the basis until m-bar moves by less than ``tol`` per ``step`` levels.

    ``history`` lists ``(n_levels, mbar)``.  When ``n_max`` is reached first
    the last basis is returned with ``converged=False``.
    """
    n = n_start
    basis = build(n)
    pops = populations(basis, p)
    history = [(n, pops.mbar)]
    while n + step <= n_max:
        n += step
        nb = build(n)
        npops = populations(nb, p)
        history.append((n, npops.mbar))
        delta = abs(npops.mbar - pops.mbar)
        basis, pops = nb, npops
        if delta < tol:
            return TruncationResult(basis, pops, True, tuple(history))
    return TruncationResult(basis, pops, False, tuple(history))

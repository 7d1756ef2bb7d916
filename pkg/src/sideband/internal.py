"""Driven two-level atom: Liouvillian, steady state and correlation functions.

Density matrices are 2x2 arrays indexed (g, e).  Superoperators act on the
column-stacked vector ``vec(rho) = rho.flatten('F')`` whose components are
ordered ``(gg, eg, ge, ee)``, where ``eg`` stands for ``|e><g|``.

Three correlation functions carry the internal dynamics into the motional
problem:

* ``s(w)``: fluctuation spectrum of the first-order coupling, source of the
  cooling and heating rates and of the second-order frequency shifts.
* ``r(w)`` and ``q(w)``: amplitudes that set the spectral weight of a
  motional sideband.

Each is available from a dense 4x4 resolvent solve (the reference path) and
from rational closed forms.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LaserParams",
    "SingularResolventError",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "TRACE_FUNCTIONAL",
    "vec",
    "unvec",
    "liouvillian_matrix",
    "internal_steady_state",
    "coupling_w1",
    "coupling_w2",
    "resolvent_apply",
    "s_func",
    "s_regular",
    "r_func",
    "q_func",
    "r_tilde",
    "s_low_intensity",
    "verify_internal",
]

SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
TRACE_FUNCTIONAL = np.array([1.0, 0.0, 0.0, 1.0])

_COND_LIMIT = 1e12


class SingularResolventError(ArithmeticError):
    """Raised when ``z`` coincides (numerically) with a Liouvillian eigenvalue."""


@dataclass(frozen=True)
class LaserParams:
    """Laser, geometry and Lamb-Dicke parameters.

    All frequencies share one unit (usually ``gamma = 1``).  ``alpha`` is the
    second moment of the spontaneous-emission pattern projected on the trap
    axis; 2/5 corresponds to a dipole pattern ``(3/8)(1 + u^2)``.
    """

    delta: float
    omega: float
    gamma: float = 1.0
    cos_phi: float = 1.0
    cos_psi: float = 0.0
    eta: float = 0.1
    alpha: float = 0.4

    def __post_init__(self):
        for name in ("delta", "omega", "gamma", "cos_phi", "cos_psi", "eta", "alpha"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if self.omega <= 0:
            raise ValueError("omega (Rabi frequency) must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not -1.0 <= self.cos_phi <= 1.0:
            raise ValueError("cos_phi must lie in [-1, 1]")
        if not -1.0 <= self.cos_psi <= 1.0:
            raise ValueError("cos_psi must lie in [-1, 1]")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.eta > 0.3:
            warnings.warn(f"eta = {self.eta} is outside the Lamb-Dicke regime",
                          RuntimeWarning, stacklevel=3)

    @property
    def delta_tilde(self) -> complex:
        return complex(self.delta, 0.5 * self.gamma)

    @property
    def normalization(self) -> float:
        """``N = gamma^2/4 + delta^2 + omega^2/2``."""
        return 0.25 * self.gamma**2 + self.delta**2 + 0.5 * self.omega**2

    @property
    def diffusion(self) -> float:
        """Recoil diffusion ``alpha gamma eta^2 omega^2 / (4 N)``."""
        return self.alpha * self.gamma * self.eta**2 * self.omega**2 / (4.0 * self.normalization)

    def replace(self, **changes) -> "LaserParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(2, 2, order="F")


def liouvillian_matrix(p: LaserParams) -> np.ndarray:
    """Internal Liouvillian on ``(gg, eg, ge, ee)``.

    The Hamiltonian in the laser frame is ``-delta s+ s- + (omega/2)(s+ + s-)``
    and spontaneous emission enters at rate ``gamma``.  Rows 0 and 3 sum to
    zero entry by entry, so trace preservation holds exactly.
    """
    om, g = p.omega, p.gamma
    dt = p.delta_tilde
    return 0.5 * np.array([
        [0.0, -1j * om, 1j * om, 2.0 * g],
        [-1j * om, 2j * dt, 0.0, 1j * om],
        [1j * om, 0.0, -2j * dt.conjugate(), -1j * om],
        [0.0, 1j * om, -1j * om, -2.0 * g],
    ], dtype=complex)


def internal_steady_state(p: LaserParams) -> np.ndarray:
    om, n = p.omega, p.normalization
    dt = p.delta_tilde
    return np.array([
        [abs(dt) ** 2 + om**2 / 4, dt * om / 2],
        [dt.conjugate() * om / 2, om**2 / 4],
    ], dtype=complex) / n


def coupling_w1(p: LaserParams) -> np.ndarray:
    """First-order coupling per unit position ``i(omega/2) eta cos(phi) (s+ - s-)``."""
    return 0.5j * p.omega * p.eta * p.cos_phi * (SIGMA_PLUS - SIGMA_MINUS)


def coupling_w2(p: LaserParams) -> np.ndarray:
    """Second-order coupling per unit ``x^2``: ``-(omega/4) eta^2 cos^2(phi) (s+ + s-)``."""
    return -0.25 * p.omega * (p.eta * p.cos_phi) ** 2 * (SIGMA_PLUS + SIGMA_MINUS)


# resolvents ----------------------------------------------------------------

def _solve(mats: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched solve with an explicit conditioning check."""
    cond = np.linalg.cond(mats)
    if np.any(~np.isfinite(cond) | (cond > _COND_LIMIT)):
        raise SingularResolventError(
            f"resolvent is singular (condition number {np.max(cond):.3g})")
    return np.linalg.solve(mats, rhs[..., None])[..., 0]


def resolvent_apply(p: LaserParams, z, v) -> np.ndarray:
    """Solve ``(z - L_I) x = v`` by dense LU.

    ``z`` may be an array; the result then carries a leading axis.
    """
    L = liouvillian_matrix(p)
    z = np.asarray(z, dtype=complex)
    mats = z[..., None, None] * np.eye(4) - L
    rhs = np.broadcast_to(np.asarray(v, dtype=complex), z.shape + (4,))
    return _solve(mats, rhs)


def _regular_solve(p: LaserParams, z, v, sign: int) -> np.ndarray:
    """Solve ``(z + sign L_I) x = Q v`` restricted to traceless ``x``.

    ``Q`` removes the steady-state component of ``v``.  The trace row
    replaces the (gg) equation, which is redundant on the traceless
    subspace, so the system stays regular at ``z = 0``.
    """
    L = liouvillian_matrix(p)
    rho = vec(internal_steady_state(p))
    v = np.asarray(v, dtype=complex)
    qv = v - (TRACE_FUNCTIONAL @ v) * rho
    z = np.asarray(z, dtype=complex)
    mats = z[..., None, None] * np.eye(4) + sign * L
    mats = np.array(mats)
    mats[..., 0, :] = TRACE_FUNCTIONAL
    rhs = np.array(np.broadcast_to(qv, z.shape + (4,)))
    rhs[..., 0] = 0.0
    return _solve(mats, rhs)


def _tr(op: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``Tr{op X}`` for a batch of vectorized ``X``."""
    return x @ np.asarray(op).flatten(order="C")


def _as_output(val, omega):
    return complex(val) if np.ndim(omega) == 0 else val


# s(w) ----------------------------------------------------------------------

def _mean_force(p: LaserParams) -> float:
    """``Tr{W1 rho_st}``; real, it is the light force per unit position."""
    return float(np.real(np.trace(coupling_w1(p) @ internal_steady_state(p))))


def _s_resolvent(p, w):
    w1 = coupling_w1(p)
    x = resolvent_apply(p, -1j * w, -vec(w1 @ internal_steady_state(p)))
    # (iw + L)^{-1} = -(z - L)^{-1} at z = -iw
    return -_tr(w1, x)


def _s_closed(p, w, I=1j):
    G, D, Om = p.gamma, p.delta, p.omega
    N = p.normalization
    a2 = D**2 + G**2 / 4
    num = (G**3 * Om**2 / (4 * N) + (G * (D - 1.5 * I * G) + I * G**2 * a2 / N) * w
           + (I * D * a2 / N - 1.5 * G - 2 * I * D) * w**2 + I * w**3)
    den = -I * G * N * w - (1.25 * G**2 + D**2 + Om**2) * w**2 + 2 * I * G * w**3 + w**4
    return 0.25 * Om**2 * (p.eta * p.cos_phi) ** 2 * num / den


def s_func(p: LaserParams, omega, method: str = "resolvent"):
    """Fluctuation spectrum ``s(w) = -Tr{W1 (iw + L_I)^{-1} W1 rho_st}``.

    ``Re s`` is regular and positive.  ``Im s`` has a pole ``i F^2 / w`` at
    zero frequency, with ``F = Tr{W1 rho_st}``, so ``w = 0`` raises
    :class:`SingularResolventError`; use :func:`s_regular` there.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0.0):
        raise SingularResolventError("s(w) has a pole at w = 0; use s_regular")
    if method == "resolvent":
        val = _s_resolvent(p, w)
    elif method == "closed":
        val = _s_closed(p, w.astype(complex))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _as_output(val, omega)


def s_regular(p: LaserParams, omega=0.0):
    """``s(w)`` with the zero-frequency pole ``i F^2 / w`` removed.

    Well defined at ``w = 0``, where it supplies the diagonal (j = n) terms
    of the second-order eigenvalue corrections.
    """
    w = np.asarray(omega, dtype=float)
    w1 = coupling_w1(p)
    x = _regular_solve(p, 1j * w, vec(w1 @ internal_steady_state(p)), +1)
    return _as_output(-_tr(w1, x), omega)


def s_low_intensity(p: LaserParams, omega):
    """Leading order of ``s`` in ``omega/gamma``: a shifted Lorentzian."""
    w = np.asarray(omega, dtype=float)
    d = w + p.delta
    val = (0.25 * p.omega**2 * (p.eta * p.cos_phi) ** 2
           * (0.5 * p.gamma + 1j * d) / (0.25 * p.gamma**2 + d**2))
    return _as_output(val, omega)


# r(w) and q(w) ---------------------------------------------------------------

def _r_resolvent(p, w):
    w1 = coupling_w1(p)
    rho = internal_steady_state(p)
    x = resolvent_apply(p, 1j * w, vec(w1 @ rho - rho @ w1))
    return _tr(SIGMA_PLUS, x)


def _r_closed(p, w, I=1j):
    G, D, Om = p.gamma, p.delta, p.omega
    N = p.normalization
    dt = complex(D, 0.5 * G) if I == 1j else complex(D, -0.5 * G)
    a2 = D**2 + G**2 / 4
    num = G * N * dt + I * ((dt + I * G) * a2 + D * Om**2) * w - I * a2 * w**2
    den = (G * N**2 + I * (1.25 * G**2 + D**2 + Om**2) * N * w - 2 * G * N * w**2
           - I * N * w**3)
    return 0.5 * Om * p.eta * p.cos_phi * num / den


def r_func(p: LaserParams, omega, method: str = "resolvent"):
    """``r(w) = Tr{s+ (iw - L_I)^{-1} [W1, rho_st]}``."""
    w = np.asarray(omega, dtype=float)
    if method == "resolvent":
        val = _r_resolvent(p, w)
    elif method == "closed":
        val = _r_closed(p, w.astype(complex))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _as_output(val, omega)


def _q_resolvent(p, w):
    # The zero-frequency poles of the two terms cancel; dropping the
    # steady-state components before solving keeps w = 0 regular.
    w1 = coupling_w1(p)
    rho = internal_steady_state(p)
    a = _regular_solve(p, 1j * w, vec(SIGMA_MINUS @ rho), -1)
    b = _regular_solve(p, 1j * w, vec(rho @ w1), +1)
    return _tr(w1, a) - _tr(SIGMA_MINUS, b)


def _q_closed(p, w, I=1j):
    G, D, Om = p.gamma, p.delta, p.omega
    N = p.normalization
    dt = complex(D, 0.5 * G) if I == 1j else complex(D, -0.5 * G)
    dc = dt.conjugate()
    B = 0.75 * G**2 - D**2 - Om**2
    num = (I * G**3 * N * dc - G**2 * dc * N * w
           + (G**2 * (B + Om**2) - I * G * B * dc) * w**2 + B * dc * w**3
           + (B - I * G * dt) * w**4 + dc * w**5 + w**6)
    den = (2 * G**2 * N**3 * w
           + (G**2 * (9 * G**2 / 8 - 3 * D**2 + Om**2) + 2 * (D**2 + Om**2) ** 2) * N * w**3
           + 4 * B * N * w**5)
    return 0.5 * Om**3 * p.eta * p.cos_phi * num / den


def q_func(p: LaserParams, omega, method: str = "resolvent"):
    """``q(w) = Tr{W1 (iw - L_I)^{-1} s- rho_st} - Tr{s- (iw + L_I)^{-1} rho_st W1}``.

    The rational closed form (``method="closed"``) is kept for comparison
    only.  It does not reproduce the resolvent expression: it carries a
    ``1/w`` pole that the resolvent form does not have.  Downstream code
    always uses the resolvent path.
    """
    w = np.asarray(omega, dtype=float)
    if method == "resolvent":
        val = _q_resolvent(p, w)
    elif method == "closed":
        if np.any(w == 0.0):
            raise SingularResolventError("closed-form q has a pole at w = 0")
        val = _q_closed(p, w.astype(complex))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _as_output(val, omega)


def r_tilde(p: LaserParams, omega):
    """``r(w) - eta cos(psi) Tr{s+ rho_st}``, the sideband amplitude."""
    shift = p.eta * p.cos_psi * p.delta_tilde * p.omega / (2.0 * p.normalization)
    return r_func(p, omega) - shift


# cross-checks -------------------------------------------------------------------

def _max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b) / scale))


def verify_internal(params, omegas=None) -> dict:
    """Maximum relative deviation between closed-form and resolvent paths.

    Returns a dict with keys ``r``, ``q``, ``s`` (worst case over all
    parameter sets and frequencies) plus ``trace_defect``, the largest
    ``|Tr L_I x|`` over unit vectors, and ``steady_residual``.
    """
    if isinstance(params, LaserParams):
        params = [params]
    if omegas is None:
        omegas = np.linspace(-20.0, 20.0, 401)
    omegas = np.asarray(omegas, dtype=float)
    omegas = omegas[omegas != 0.0]
    out = {"r": 0.0, "q": 0.0, "s": 0.0, "trace_defect": 0.0, "steady_residual": 0.0}
    for p in params:
        w = omegas * p.gamma
        out["r"] = max(out["r"], _max_rel(r_func(p, w, "closed"), r_func(p, w)))
        out["q"] = max(out["q"], _max_rel(q_func(p, w, "closed"), q_func(p, w)))
        out["s"] = max(out["s"], _max_rel(s_func(p, w, "closed"), s_func(p, w)))
        L = liouvillian_matrix(p)
        out["trace_defect"] = max(out["trace_defect"], float(np.max(np.abs(TRACE_FUNCTIONAL @ L))))
        res = np.max(np.abs(L @ vec(internal_steady_state(p))))
        out["steady_residual"] = max(out["steady_residual"], float(res))
    return out

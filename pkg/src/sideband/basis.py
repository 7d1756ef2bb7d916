"""Motional eigensystems of one-dimensional trapping potentials.

Every builder returns a :class:`MotionalBasis` whose position matrix
elements are expressed in units of the ground-state position uncertainty
``xi``.  The wavenumber of the light then only enters through ``eta = k*xi``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import digamma, gammaln, polygamma

__all__ = [
    "PotentialKind",
    "MotionalBasis",
    "build_square_well",
    "build_morse",
    "build_harmonic",
    "build_numeric",
    "morse_bound_states",
    "transition_frequency",
]


class PotentialKind(str, Enum):
    SQUARE_WELL = "SquareWell"
    MORSE = "Morse"
    HARMONIC = "Harmonic"
    NUMERIC = "Numeric"


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MotionalBasis:
    """Truncated eigensystem of the external Hamiltonian.

    Attributes
    ----------
    label : PotentialKind
    energies : (n,) array
        Eigenenergies (frequencies, hbar = 1).
    x_elem : (n, n) array
        ``<n|x|m> / xi``, real symmetric.
    x2_diag : (n,) array
        ``<n|x^2|n> / xi^2`` from the complete (untruncated) eigensystem.
    xi_natural : float
        ``xi`` in the natural length unit of the potential.
    parameters : dict
        Builder arguments, kept for serialization.
    """

    label: PotentialKind
    energies: np.ndarray
    x_elem: np.ndarray
    x2_diag: np.ndarray
    xi_natural: float
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "label", PotentialKind(self.label))
        object.__setattr__(self, "energies", _frozen(self.energies))
        object.__setattr__(self, "x_elem", _frozen(self.x_elem))
        object.__setattr__(self, "x2_diag", _frozen(self.x2_diag))
        n = self.energies.shape[0]
        if self.x_elem.shape != (n, n) or self.x2_diag.shape != (n,):
            raise ValueError("inconsistent basis array shapes")

    @property
    def n_levels(self) -> int:
        return int(self.energies.shape[0])

    @property
    def omega(self) -> np.ndarray:
        """Matrix of transition frequencies ``omega[n, m] = E[m] - E[n]``."""
        e = self.energies
        return e[None, :] - e[:, None]

    @property
    def x_diag(self) -> np.ndarray:
        return np.diag(self.x_elem).copy()

    def transition_frequency(self, n: int, m: int) -> float:
        return transition_frequency(self, n, m)

    def completeness_defect(self) -> np.ndarray:
        """``|<n|x^2|n> - sum_j |X_nj|^2|`` per level; zero for a complete basis."""
        return np.abs(self.x2_diag - np.sum(self.x_elem**2, axis=1))

    def truncated(self, n_levels: int) -> "MotionalBasis":
        if not 1 <= n_levels <= self.n_levels:
            raise ValueError(f"cannot truncate {self.n_levels} levels to {n_levels}")
        params = dict(self.parameters, n_levels=n_levels)
        return MotionalBasis(self.label, self.energies[:n_levels],
                             self.x_elem[:n_levels, :n_levels],
                             self.x2_diag[:n_levels], self.xi_natural, params)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "parameters": dict(self.parameters),
            "energies": [float(v) for v in self.energies],
            "x_elem": [[float(v) for v in row] for row in self.x_elem],
            "x2_diag": [float(v) for v in self.x2_diag],
            "xi_natural": float(self.xi_natural),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotionalBasis":
        return cls(PotentialKind(d["label"]), d["energies"], d["x_elem"],
                   d["x2_diag"], float(d["xi_natural"]), dict(d.get("parameters", {})))

    def to_json(self, **kwargs) -> str:
        # json emits repr(float), the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, s: str) -> "MotionalBasis":
        return cls.from_dict(json.loads(s))


def transition_frequency(basis: MotionalBasis, n: int, m: int) -> float:
    """``omega_nm = E_m - E_n``; positive when m lies above n."""
    for i in (n, m):
        if not 0 <= i < basis.n_levels:
            raise IndexError(f"level index {i} out of range for {basis.n_levels} levels")
    return float(basis.energies[m] - basis.energies[n])


# infinite square well ----------------------------------------------------

def _square_well_xi() -> float:
    """Ground-state width of the well in units of its length L."""
    return math.sqrt((math.pi**2 - 6.0) / 3.0) / (2.0 * math.pi)


def build_square_well(n_levels: int, nu: float = 1.0) -> MotionalBasis:
    """Infinite square well of length L with ``E_n = (n+1)^2 nu``.

    Position is measured from the centre of the well.
    """
    if n_levels < 2:
        raise ValueError("square well needs n_levels >= 2")
    k = np.arange(n_levels) + 1.0
    kn, km = np.meshgrid(k, k, indexing="ij")
    odd = (kn + km) % 2 == 1
    num = -8.0 * kn * km
    sign = np.where(odd, (-1.0) ** (((kn + km - 1) // 2) % 2), 0.0)
    den = np.where(odd, math.pi**2 * (kn**2 - km**2) ** 2, 1.0)
    x_L = np.where(odd, num * sign / den, 0.0)

    xi = _square_well_xi()
    x2_L = (1.0 - 6.0 / (k**2 * math.pi**2)) / 12.0
    return MotionalBasis(PotentialKind.SQUARE_WELL, k**2 * nu, x_L / xi, x2_L / xi**2,
                         xi, {"n_levels": n_levels, "nu": nu})


# Morse potential ---------------------------------------------------------

def morse_bound_states(a: float) -> int:
    """Number of normalizable bound states of a Morse potential."""
    if a <= 0.5:
        raise ValueError("Morse parameter a must exceed 1/2")
    n_top = math.floor(a - 0.5)
    if 2 * a - 2 * n_top - 1 <= 0:
        # a - 1/2 integer: the top index sits exactly at threshold
        n_top -= 1
    return n_top + 1


def _morse_moments(a: float, n: int) -> tuple[float, float]:
    """First and second moments of x in state n (units of 1/kappa).

    With ``zeta = 2a exp(-kappa x)`` and ``b = 2a - 2n - 1`` the moments
    follow from the generating function

        M(s) = int dzeta zeta^(b+s) exp(-zeta) [L_n^b(zeta)]^2
             = sum_k C(s, n-k)^2 Gamma(b+s+k+1) / k!

    differentiated analytically at ``s = -1``.  There
    ``C(-1+e, j)^2 = exp(-2 e H_j - e^2 H2_j)`` with the harmonic numbers
    ``H_j`` and ``H2_j = sum 1/i^2``, so every term carries the positive
    weight ``Gamma(b+k)/k!`` and no cancellation occurs.  The weights are
    handled in log space.
    """
    b = 2.0 * a - 2.0 * n - 1.0
    k = np.arange(n + 1, dtype=float)
    inv = 1.0 / np.arange(1, n + 1, dtype=float)
    h1 = np.concatenate(([0.0], np.cumsum(inv)))[::-1]  # H_{n-k}
    h2 = np.concatenate(([0.0], np.cumsum(inv * inv)))[::-1]
    logw = gammaln(b + k) - gammaln(k + 1.0)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    u = digamma(b + k) - 2.0 * h1
    log_zeta = float(w @ u)  # <log zeta>
    log_zeta2 = float(w @ (u * u + polygamma(1, b + k) - 2.0 * h2))
    c = math.log(2.0 * a)
    return c - log_zeta, c * c - 2.0 * c * log_zeta + log_zeta2


def _morse_offdiag(a: float, n_levels: int) -> np.ndarray:
    x = np.zeros((n_levels, n_levels))
    for n in range(n_levels):
        for m in range(n + 1, n_levels):
            lg = 0.5 * (gammaln(m + 1.0) + gammaln(2 * a - m) + math.log(2 * a - 2 * n - 1)
                        + math.log(2 * a - 2 * m - 1) - gammaln(n + 1.0) - gammaln(2 * a - n))
            val = (-1.0) ** (n + m) / ((n - m) * (2 * a - n - m - 1)) * math.exp(lg)
            x[n, m] = x[m, n] = val
    return x


def build_morse(a: float, nu: float = 1.0, n_levels: int | None = None) -> MotionalBasis:
    """Bound states of ``V(x) = U (1 - exp(-kappa x))^2``.

    ``a = sqrt(2 M U) / kappa`` sets the number of bound states and
    ``nu = kappa sqrt(2U/M)`` the frequency scale.  The default keeps every
    bound state.
    """
    n_bound = morse_bound_states(a)
    if n_levels is None:
        n_levels = n_bound
    if not 1 <= n_levels <= n_bound:
        raise ValueError(f"a={a} supports {n_bound} bound states, requested {n_levels}")

    k = np.arange(n_levels) + 0.5
    energies = (k - k**2 / (2.0 * a)) * nu
    x = _morse_offdiag(a, n_levels)
    x2 = np.empty(n_levels)
    for n in range(n_levels):
        x[n, n], x2[n] = _morse_moments(a, n)

    xi = math.sqrt(polygamma(1, 2.0 * a - 1.0))
    return MotionalBasis(PotentialKind.MORSE, energies, x / xi, x2 / xi**2, xi,
                         {"a": a, "nu": nu, "n_levels": n_levels})


# harmonic oscillator -----------------------------------------------------

def build_harmonic(n_levels: int, nu: float = 1.0) -> MotionalBasis:
    """Harmonic oscillator with the zero-point energy dropped."""
    if n_levels < 2:
        raise ValueError("harmonic basis needs n_levels >= 2")
    off = np.sqrt(np.arange(1, n_levels, dtype=float))
    x = np.diag(off, 1) + np.diag(off, -1)
    n = np.arange(n_levels, dtype=float)
    # xi = sqrt(1/(2 M nu)) in units of the oscillator length sqrt(1/(M nu))
    return MotionalBasis(PotentialKind.HARMONIC, n * nu, x, 2.0 * n + 1.0,
                         1.0 / math.sqrt(2.0), {"n_levels": n_levels, "nu": nu})


# arbitrary potential on a grid ------------------------------------------

def build_numeric(x, v, mass: float, n_levels: int) -> MotionalBasis:
    """Diagonalize ``p^2/2M + V`` by second-order finite differences.

    Parameters
    ----------
    x : array
        Uniform, strictly increasing grid.  The wavefunction vanishes just
        outside both ends.
    v : array
        Potential sampled on ``x``.
    mass : float
        Mass in units consistent with ``hbar = 1``.
    n_levels : int
        Number of lowest eigenpairs retained.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.shape != v.shape:
        raise ValueError("x and v must be 1D arrays of equal length")
    if x.size < 3 or n_levels < 1 or n_levels >= x.size:
        raise ValueError("grid too small for the requested number of levels")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise ValueError("grid must be strictly increasing")
    h = dx.mean()
    if np.max(np.abs(dx - h)) > 1e-9 * h:
        raise ValueError("grid must be uniform")
    if mass <= 0:
        raise ValueError("mass must be positive")

    kin = 1.0 / (2.0 * mass * h * h)
    try:
        e, psi = eigh_tridiagonal(2.0 * kin + v, -kin * np.ones(x.size - 1),
                                  select="i", select_range=(0, n_levels - 1))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-solver failed: {exc}") from exc

    band_edge = 4.0 * kin
    if e[-1] - v.min() > 0.9 * band_edge:
        warnings.warn("highest retained level lies within 10% of the grid band edge; "
                      "refine the grid", RuntimeWarning, stacklevel=2)

    psi = psi / math.sqrt(h)
    for i in range(n_levels):
        col = psi[:, i]
        # sign convention: outermost lobe on the right is positive
        idx = np.nonzero(np.abs(col) > 1e-3 * np.abs(col).max())[0][-1]
        if col[idx] < 0:
            psi[:, i] = -col

    xm = h * (psi.T * x) @ psi
    xm = 0.5 * (xm + xm.T)
    x2 = h * np.einsum("in,i,in->n", psi, x * x, psi)
    xi = math.sqrt(x2[0] - xm[0, 0] ** 2)
    return MotionalBasis(PotentialKind.NUMERIC, e, xm / xi, x2 / xi**2, xi,
                         {"n_levels": n_levels, "mass": mass, "grid_points": int(x.size),
                          "grid_spacing": float(h)})

import math

import numpy as np
import pytest

from sideband.basis import build_harmonic, build_morse, build_square_well
from sideband.cooling import Populations, populations
from sideband.internal import LaserParams, internal_steady_state
from sideband.oracle import (MAX_LEVELS, assemble_full, consistent_basis, exponential_matrix,
                             fit_lorentzian, full_steady_state, match_modes, oracle_modes,
                             regression_spectrum, verify_oracle)
from sideband.spectrum import nondegenerate, sideband_peaks

# population l1 errors of the rate equations against the oracle, square well
# n = 8, nu = 1/30, delta = -0.6, omega = 0.2, frozen from the first run
FROZEN_L1 = [0.0057691502832921855, 0.001532943018068942, 0.0003890544291912743]


def doppler_well(n=6):
    return consistent_basis(build_square_well(n, 1 / 30))


def trace_rows(n):
    return np.kron(np.eye(2), np.eye(n)).flatten(order="F")


@pytest.mark.parametrize("orders", [(0,), (0, 1), (0, 2), (0, 1, 2)])
def test_trace_preserved_by_every_order(orders):
    full = assemble_full(doppler_well(), LaserParams(-0.6, 0.2, eta=0.1), orders)
    assert np.max(np.abs(trace_rows(6) @ full.matrix)) < 1e-13
    assert full.trace_defect() < 1e-13 and full.dim == 12


@pytest.mark.parametrize("basis", [build_square_well(6, 0.2), build_harmonic(6, 0.2)])
def test_exact_recoil_trace_preserved(basis):
    full = assemble_full(basis, LaserParams(-0.6, 0.2, eta=0.1), exact_recoil=True)
    assert np.max(np.abs(trace_rows(6) @ full.matrix)) < 1e-13


def test_exact_recoil_needs_wavefunctions():
    with pytest.raises(NotImplementedError):
        assemble_full(build_morse(7.0), LaserParams(-0.6, 0.2), exact_recoil=True)


def test_zeroth_order_decouples():
    """Without the couplings every motional state is stationary with the internal steady state."""
    b = doppler_well(4)
    p = LaserParams(-0.6, 0.2)
    full = assemble_full(b, p, orders=(0,))
    rho_i = internal_steady_state(p)
    for k in range(4):
        proj = np.zeros((4, 4))
        proj[k, k] = 1.0
        rho = np.kron(rho_i, proj)
        assert np.max(np.abs(full.matrix @ rho.flatten(order="F"))) < 1e-15
    with pytest.raises(ArithmeticError, match="kernel"):
        full_steady_state(full)


def test_dimension_guard_and_orders():
    p = LaserParams(-0.6, 0.2)
    with pytest.raises(ValueError):
        assemble_full(build_square_well(MAX_LEVELS + 1, 0.1), p)
    with pytest.raises(ValueError):
        assemble_full(build_square_well(4, 0.1), p, orders=(1, 2))


def test_oracle_steady_state_is_a_density_matrix():
    full = assemble_full(doppler_well(), LaserParams(-0.6, 0.2, eta=0.1))
    st = full_steady_state(full)
    assert np.trace(st.rho).real == pytest.approx(1.0, abs=1e-13)
    assert st.hermiticity_defect < 1e-12 and st.min_eigenvalue > -1e-12
    assert st.residual < 1e-12
    assert st.populations.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.trace(st.internal), 1.0, atol=1e-13)
    np.testing.assert_allclose(np.diag(st.motional).real, st.populations, atol=1e-15)


def test_consistent_basis_uses_truncated_square():
    b = build_square_well(5, 1.0)
    c = consistent_basis(b)
    np.testing.assert_allclose(c.x2_diag, np.diag(b.x_elem @ b.x_elem))
    assert np.all(c.x2_diag <= b.x2_diag + 1e-15)


def test_harmonic_exponential_ground_state():
    b = build_harmonic(30, 1.0)
    kappa = 0.3
    ex = exponential_matrix(b, kappa)
    assert ex[0, 0].real == pytest.approx(math.exp(-kappa**2 / 2), rel=1e-10)
    np.testing.assert_allclose(ex[:5] @ ex[:5].conj().T, np.eye(5), atol=1e-3)


# convergence to the rate equations --------------------------------------------------

def test_population_errors_shrink_quadratically():
    b = consistent_basis(build_square_well(8, 1 / 30))
    l1 = []
    for eta in (0.2, 0.1, 0.05):
        p = LaserParams(-0.6, 0.2, eta=eta)
        st = full_steady_state(assemble_full(b, p))
        l1.append(np.abs(st.populations - populations(b, p).p).sum())
    np.testing.assert_allclose(l1, FROZEN_L1, rtol=1e-6)
    assert l1[0] / l1[-1] > 3.0


def test_exact_recoil_close_to_expansion():
    b = consistent_basis(build_square_well(8, 1 / 30))
    p = LaserParams(-0.6, 0.2, eta=0.05)
    exact = full_steady_state(assemble_full(b, p, exact_recoil=True)).populations
    expanded = full_steady_state(assemble_full(b, p)).populations
    rate = populations(b, p).p
    assert np.abs(exact - expanded).sum() < np.abs(expanded - rate).sum() + 1e-3


def test_regression_spectrum_equals_mode_sum():
    b = doppler_well(5)
    p = LaserParams(-0.6, 0.05, eta=0.05)
    full = assemble_full(b, p)
    st = full_steady_state(full)
    grid = np.linspace(-0.3, 0.3, 13) + 1e-3
    direct = regression_spectrum(full, grid, st, threads=2)
    modes = oracle_modes(full, st, max_decay=np.inf)
    summed = sum(np.real(m.weight / (1j * grid - m.eigenvalue)) for m in modes)
    np.testing.assert_allclose(direct.curve.values, summed, rtol=1e-8,
                               atol=1e-12 * np.abs(summed).max())
    assert direct.failed == ()
    assert direct.coherent_weight > 0


def test_oracle_peaks_match_perturbation_theory():
    b = consistent_basis(build_square_well(8, 1 / 30))
    p = LaserParams(-0.6, 0.05, eta=0.05)
    full = assemble_full(b, p)
    st = full_steady_state(full)
    peaks = sideband_peaks(b, p, Populations(st.populations))
    top = max(abs(pk.weight) for pk in peaks)
    keep = [pk for pk in nondegenerate(peaks) if abs(pk.weight) > 1e-3 * top]
    matched = match_modes(oracle_modes(full, st), keep)
    assert len(matched) >= 10
    for pk, mode in matched:
        assert mode is not None
        assert abs(mode.position - pk.position) < 0.5 * pk.width
        assert abs(mode.width - pk.width) < 0.02 * pk.width


def test_fit_lorentzian_recovers_parameters():
    x = np.linspace(-1, 1, 801)
    y = 2.0 * 0.05 / (0.05**2 + (x - 0.1) ** 2) + 0.3
    x0, g, amp, off = fit_lorentzian(x, y, 0.12, 0.07)
    assert (x0, g, amp, off) == pytest.approx((0.1, 0.05, 2.0, 0.3), rel=1e-6)


def test_verify_oracle_report():
    rep = verify_oracle()
    assert rep["passed"]
    assert set(rep) >= {"eta_values", "population_l1_errors", "peak_position_errors",
                        "width_errors"}
    np.testing.assert_allclose(rep["population_l1_errors"], FROZEN_L1, rtol=1e-6)
    assert 1.8 < rep["observed_order"] < 2.1

"""System-model tests: fluxes, equilibrium variables, inversions, speeds."""

import numpy as np
import pytest

from fluxglobal.systems import (
    EquilibriumSolveError,
    NozzleModel,
    NozzleParams,
    TwoLayerModel,
    TwoLayerParams,
    VacuumStateError,
)
from conftest import bisect_root, nozzle_energy, two_layer_real_extremes


def _nozzle(sigma_fn=lambda x: np.ones_like(x), kappa=1.0, gamma=1.4):
    return NozzleModel(NozzleParams(kappa, gamma, sigma_fn))


def _two_layer(g=10.0, r=0.98):
    return TwoLayerModel(TwoLayerParams(g, r, lambda x: np.zeros_like(x)))


def _random_two_layer_states(rng, n, vel=2.0):
    U = np.empty((4, n))
    U[0] = rng.uniform(0.3, 3.0, n)
    U[2] = rng.uniform(0.3, 3.0, n)
    U[1] = U[0] * rng.uniform(-vel, vel, n)
    U[3] = U[2] * rng.uniform(-vel, vel, n)
    return U


# ---------------------------------------------------------------------------
# fluxes and equilibrium variables
# ---------------------------------------------------------------------------

def test_nozzle_flux_at_rest():
    model = _nozzle()
    U = np.array([[1.0], [0.0]])
    F = model.flux(U, np.array([1.0]))
    assert F[:, 0] == pytest.approx([0.0, 1.0], abs=1e-15)  # p = kappa rho^gamma = 1


def test_two_layer_flux_hydrostatic():
    model = _two_layer(g=10.0)
    U = np.array([[1.0], [0.0], [1.0], [0.0]])
    F = model.flux(U)
    assert F[:, 0] == pytest.approx([0.0, 5.0, 0.0, 5.0], abs=1e-15)


def test_two_layer_flux_generic_values():
    model = _two_layer(g=1.0)
    U = np.array([[1.0], [2.0], [1.0], [0.0]])
    F = model.flux(U)
    assert F[:, 0] == pytest.approx([2.0, 4.5, 0.0, 0.5], rel=1e-15)


def test_nozzle_equilibrium_at_rest():
    model = _nozzle()
    U = np.array([[1.0], [0.0]])
    E = model.equilibrium(U, np.array([1.0]))
    assert E[1, 0] == pytest.approx(3.5, rel=1e-15)  # kappa gamma / (gamma - 1)


def test_two_layer_equilibrium_values():
    model = _two_layer(g=1.0, r=0.98)
    U = np.array([[1.0], [0.0], [1.0], [0.0]])
    z = np.array([-2.0])
    E = model.equilibrium(U, z)
    assert E[1, 0] == pytest.approx(0.0, abs=1e-15)
    assert E[3, 0] == pytest.approx(-0.02, rel=1e-12)


def test_example4_depths_reproduce_constant_equilibrium():
    # the tabulated discontinuous steady state balances with g = 10
    model = _two_layer(g=10.0, r=0.98)
    left = np.array([[1.22373355048230], [12.0], [0.968329515483846], [10.0]])
    right = np.array([[1.44970064153589], [12.0], [1.12439026921484], [10.0]])
    El = model.equilibrium(left, np.array([-2.0]))
    Er = model.equilibrium(right, np.array([-1.0]))
    assert El[1, 0] == pytest.approx(Er[1, 0], abs=1e-10)
    assert El[3, 0] == pytest.approx(Er[3, 0], abs=1e-10)
    assert El[1, 0] == pytest.approx(50.0, abs=1e-10)
    assert El[3, 0] == pytest.approx(55.0, abs=1e-10)


def test_vacuum_states_rejected():
    model = _two_layer()
    U = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(VacuumStateError):
        model.equilibrium(U, np.zeros(2))
    noz = _nozzle()
    with pytest.raises(VacuumStateError):
        noz.equilibrium(np.array([[0.0], [1.0]]), np.array([1.0]))


# ---------------------------------------------------------------------------
# equilibrium inversion
# ---------------------------------------------------------------------------

def test_two_layer_round_trip(rng):
    model = _two_layer()
    U = _random_two_layer_states(rng, 300)
    z = rng.uniform(-2.0, 0.5, 300)
    E = model.equilibrium(U, z)
    back = model.invert_equilibrium(E, z, U)
    Eb = model.equilibrium(back, z)
    assert np.max(np.abs(Eb - E)) <= 1e-12
    assert np.array_equal(back[1], E[0])  # discharges copied through exactly
    assert np.array_equal(back[3], E[2])


def test_nozzle_round_trip(rng):
    model = _nozzle(sigma_fn=lambda x: 1.0 + 0.3 * np.sin(x))
    n = 300
    sigma = 1.0 + 0.3 * rng.uniform(-1, 1, n)
    U = np.empty((2, n))
    U[0] = sigma * rng.uniform(0.5, 4.0, n)
    U[1] = U[0] * rng.uniform(-2.0, 2.0, n)
    E = model.equilibrium(U, sigma)
    back = model.invert_equilibrium(E, sigma, U)
    Eb = model.equilibrium(back, sigma)
    assert np.max(np.abs(Eb - E)) <= 1e-12
    assert np.array_equal(back[1], E[0])


def test_nozzle_zero_discharge_closed_form():
    kappa, gamma = 1.0, 1.4
    model = _nozzle(kappa=kappa, gamma=gamma)
    sigma = np.array([1.7])
    E = np.array([[0.0], [12.0]])
    guess = np.array([[1.0], [0.0]])
    U = model.invert_equilibrium(E, sigma, guess)
    expected = sigma * (12.0 * (gamma - 1.0) / (kappa * gamma)) ** (1.0 / (gamma - 1.0))
    assert U[0, 0] == pytest.approx(expected[0], rel=1e-14)


def test_nozzle_subsonic_inversion_matches_bisection_oracle():
    # convergent-duct inflow state: q = 8, E = 58.3367745090349 at x = 0
    kappa, gamma = 1.0, 1.4
    sigma = 0.976 - 0.748 * np.tanh(-4.0)
    q, e_eq = 8.0, 58.3367745090349
    phi = lambda m: nozzle_energy(m, q, sigma, kappa, gamma) - e_eq
    m_sonic = (q * q / (kappa * gamma * sigma ** (1.0 - gamma) / (gamma - 1.0) * (gamma - 1.0))) ** (
        1.0 / (gamma + 1.0)
    )
    oracle = bisect_root(phi, m_sonic, 1e6)
    assert oracle == pytest.approx(1954.7743380238, rel=1e-12)  # frozen from the oracle
    model = _nozzle(kappa=kappa, gamma=gamma)
    U = model.invert_equilibrium(
        np.array([[q], [e_eq]]), np.array([sigma]), np.array([[2000.0], [q]])
    )
    assert U[0, 0] == pytest.approx(oracle, rel=1e-13)


def test_nozzle_supersonic_branch_selected_by_guess():
    kappa, gamma = 1.0, 1.4
    sigma = np.array([1.5])
    q, e_eq = 8.0, 30.0
    model = _nozzle(kappa=kappa, gamma=gamma)
    c = kappa * gamma / (gamma - 1.0) * sigma[0] ** (1.0 - gamma)
    m_sonic = (q * q / (c * (gamma - 1.0))) ** (1.0 / (gamma + 1.0))
    lo_guess = np.array([[0.3 * m_sonic], [q]])
    hi_guess = np.array([[10.0 * m_sonic], [q]])
    targets = np.array([[q], [e_eq]])
    u_super = model.invert_equilibrium(targets, sigma, lo_guess)
    u_sub = model.invert_equilibrium(targets, sigma, hi_guess)
    assert u_super[0, 0] < m_sonic < u_sub[0, 0]
    for m in (u_super[0, 0], u_sub[0, 0]):
        assert nozzle_energy(m, q, sigma[0], kappa, gamma) == pytest.approx(e_eq, abs=1e-12)


def test_nozzle_no_root_below_sonic_minimum():
    model = _nozzle()
    with pytest.raises(EquilibriumSolveError):
        model.invert_equilibrium(
            np.array([[8.0], [1.0]]), np.array([1.0]), np.array([[5.0], [8.0]])
        )


def test_round_trip_at_steady_guess_stays_put():
    # feeding the exact solution back as the guess may polish it by at most
    # a few ulps (the solver keeps the best residual it sees)
    model = _two_layer()
    U = np.array([[1.22373355048230], [12.0], [0.968329515483846], [10.0]])
    z = np.array([-2.0])
    E = model.equilibrium(U, z)
    back = model.invert_equilibrium(E, z, U)
    assert np.max(np.abs(back - U) / np.abs(U)) <= 5e-15
    assert np.array_equal(back[1], U[1]) and np.array_equal(back[3], U[3])


def test_hat_states_bitwise_equal_for_equal_equilibrium_data(rng):
    # identical (E, geometry, guess) lanes must produce identical outputs
    model = _two_layer()
    U = _random_two_layer_states(rng, 50)
    z = rng.uniform(-1.0, 0.0, 50)
    E = model.equilibrium(U, z)
    E2 = np.concatenate([E, E], axis=1)
    z2 = np.concatenate([z, z])
    g2 = np.concatenate([U, U], axis=1)
    out = model.invert_equilibrium(E2, z2, g2)
    assert np.array_equal(out[:, :50], out[:, 50:])


# ---------------------------------------------------------------------------
# local speeds
# ---------------------------------------------------------------------------

def test_nozzle_speeds_closed_form_at_rest():
    model = _nozzle()
    U = np.array([[1.0], [0.0]])
    am, ap = model.speeds(U, U, np.array([1.0]), np.array([1.0]))
    assert ap[0] == pytest.approx(np.sqrt(1.4), rel=1e-14)
    assert am[0] == pytest.approx(-np.sqrt(1.4), rel=1e-14)


def test_nozzle_speeds_supersonic_clamps_left_speed_to_zero():
    model = _nozzle()
    U = np.array([[1.0], [10.0]])
    am, ap = model.speeds(U, U, np.array([1.0]), np.array([1.0]))
    assert am[0] == 0.0
    assert ap[0] == pytest.approx(10.0 + np.sqrt(1.4), rel=1e-14)


def test_two_layer_rest_speeds_match_quartic_oracle():
    model = _two_layer(g=10.0, r=0.98)
    U = np.array([[1.0], [0.0], [1.0], [0.0]])
    lmin, lmax = model.eigen_bounds(U)
    expected = np.sqrt(10.0 + 10.0 * np.sqrt(0.98))
    assert lmax[0] == pytest.approx(expected, rel=1e-12)
    assert lmin[0] == pytest.approx(-expected, rel=1e-12)
    omin, omax = two_layer_real_extremes(1.0, 0.0, 1.0, 0.0, 10.0, 0.98)
    assert lmax[0] == pytest.approx(omax, rel=1e-12)
    assert lmin[0] == pytest.approx(omin, rel=1e-12)


def test_two_layer_speeds_match_roots_oracle_randomized(rng):
    model = _two_layer(g=10.0, r=0.98)
    U = _random_two_layer_states(rng, 200, vel=3.0)
    lmin, lmax = model.eigen_bounds(U)
    for k in range(U.shape[1]):
        omin, omax = two_layer_real_extremes(U[0, k], U[1, k], U[2, k], U[3, k], 10.0, 0.98)
        assert lmax[k] == pytest.approx(omax, rel=1e-10, abs=1e-10)
        assert lmin[k] == pytest.approx(omin, rel=1e-10, abs=1e-10)


def test_speeds_ordering_and_exchange_symmetry(rng):
    model = _two_layer()
    Um = _random_two_layer_states(rng, 100)
    Up = _random_two_layer_states(rng, 100)
    am, ap = model.speeds(Um, Up)
    am2, ap2 = model.speeds(Up, Um)
    assert np.all(am <= 0.0) and np.all(ap >= 0.0)
    assert np.allclose(am, am2, rtol=0, atol=0)
    assert np.allclose(ap, ap2, rtol=0, atol=0)


def test_hyperbolicity_loss_detected_for_sheared_state():
    # the step-state depths with g = 1 carry a complex internal eigenvalue
    # pair (verified against numpy.roots); outer speeds stay real and correct
    model = _two_layer(g=1.0, r=0.98)
    h1, q1, h2, q2 = 1.22373355048230, 12.0, 0.968329515483846, 10.0
    roots = np.sort_complex(
        np.roots(
            np.polymul(
                [1.0, -2 * q1 / h1, (q1 / h1) ** 2 - h1],
                [1.0, -2 * q2 / h2, (q2 / h2) ** 2 - h2],
            )
            - np.array([0, 0, 0, 0, 0.98 * h1 * h2])
        )
    )
    assert np.abs(roots.imag).max() > 1e-3  # genuinely non-hyperbolic state
    U = np.array([[h1], [q1], [h2], [q2]])
    before = model.hyperbolicity_losses
    lmin, lmax = model.eigen_bounds(U)
    assert model.hyperbolicity_losses > before
    omin, omax = two_layer_real_extremes(h1, q1, h2, q2, 1.0, 0.98)
    assert lmax[0] == pytest.approx(omax, rel=1e-10)
    assert lmin[0] == pytest.approx(omin, rel=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        TwoLayerParams(g=10.0, r=1.5, z_of_x=lambda x: x)
    with pytest.raises(ValueError):
        NozzleParams(kappa=-1.0, gamma=1.4, sigma_of_x=lambda x: x)
    with pytest.raises(ValueError):
        NozzleParams(kappa=1.0, gamma=1.8, sigma_of_x=lambda x: x)

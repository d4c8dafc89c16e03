"""Semi-discrete operator accuracy and conservation on manufactured data."""

import numpy as np
import pytest

from fluxglobal.experiments import (
    example1_spec,
    example3_spec,
    perturbation_study,
    run_to,
    setup_scheme,
)
from fluxglobal.seriesio import read_series


def _smooth_state(scheme):
    x = scheme.grid.centers()
    U = np.empty((4, x.size))
    U[0] = 5.0 + np.exp(np.cos(2 * np.pi * x))
    U[1] = 0.0
    U[2] = 5.0 - np.exp(np.cos(2 * np.pi * x)) - np.sin(np.pi * x) ** 2
    U[3] = 0.0
    return U


def _analytic_rhs(x, g=10.0, r=0.98):
    """Exact time derivative of the smooth periodic two-layer data.

    With q = 0: d/dt q_i = -(g h_i^2 / 2)_x + B-row terms; mass rows vanish.
    """
    e = np.exp(np.cos(2 * np.pi * x))
    dh1 = -2 * np.pi * np.sin(2 * np.pi * x) * e
    dh2 = -dh1 - np.pi * np.sin(2 * np.pi * x)
    dz = np.pi * np.sin(2 * np.pi * x)
    h1 = 5.0 + e
    h2 = 5.0 - e - np.sin(np.pi * x) ** 2
    rhs = np.zeros((4, x.size))
    rhs[1] = -g * h1 * dh1 + (-g * h1) * (dh2 + dz)
    rhs[3] = -g * h2 * dh2 + (-r * g * h2) * dh1 + (-g * h2) * dz
    return rhs


@pytest.mark.parametrize("order,floor", [(2, 1.7), (5, 4.6)])
def test_semidiscrete_rhs_convergence_order(order, floor):
    spec = example3_spec()
    errs = []
    for n in (80, 160, 320):
        scheme = setup_scheme(spec, order, dx=1.0 / n)
        dudt, _ = scheme.rhs(_smooth_state(scheme))
        xi = scheme.grid.centers(ghosts=False)
        err = np.abs(dudt[:, scheme.grid.interior] - _analytic_rhs(xi))
        errs.append(err.sum() / n)
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > floor, (errs, rates)


@pytest.mark.parametrize("order", [2, 5])
def test_periodic_total_mass_conserved(order):
    spec = example3_spec()
    scheme = setup_scheme(spec, order, dx=1.0 / 50)
    U0 = _smooth_state(scheme)
    interior = scheme.grid.interior
    m0 = U0[:, interior].sum(axis=1) * scheme.grid.dx
    snaps, _ = run_to(scheme, U0, 0.05)
    m1 = snaps[0.05].sum(axis=1) * scheme.grid.dx
    for row in (0, 2):
        assert abs(m1[row] - m0[row]) <= 1e-12 * abs(m0[row])


def test_example1_series_columns(tmp_path):
    # shrunken run just to pin the CSV column contract of the nozzle series
    spec = example1_spec("convergent", dx=0.5, ref_dx=0.25, snapshot_times=(0.02,))
    perturbation_study(spec, orders=(2,), out_dir=tmp_path)
    x, cols = read_series(tmp_path / "example1_convergent_order2_t0.02.csv")
    assert list(cols) == ["sigma_rho", "q", "rho_minus_rho_eq"]
    assert x.size == 20
    # the difference column is a density, consistent with the conserved mass
    scheme = setup_scheme(spec, 2)
    sigma = scheme.geom[scheme.grid.interior]
    assert np.abs(cols["rho_minus_rho_eq"]).max() < 2e-2
    ref_x, ref_cols = read_series(tmp_path / "example1_convergent_ref_t0.02.csv")
    assert list(ref_cols) == ["sigma_rho", "q", "rho_minus_rho_eq"]

"""Time-integration tests: SSP-RK3 properties and step control."""

import numpy as np
import pytest

from fluxglobal.timestepping import TimeControls, compute_dt, evolve, ssp_rk3_step


def test_rk3_zero_rhs_is_identity():
    u = np.array([1.2345678901234567, -3.25, 0.0])
    out = ssp_rk3_step(u, 0.01, lambda v: np.zeros_like(v))
    assert np.array_equal(out, u)


def test_rk3_linear_ode_reproduces_cubic_taylor():
    # one step of u' = lam u multiplies u by the degree-3 Taylor polynomial
    # of exp(lam dt): 1 + z + z^2/2 + z^3/6 (frozen from the expansion)
    lam, dt, u0 = -2.0, 0.15, 0.7
    z = lam * dt
    expected = u0 * (1.0 + z + z * z / 2.0 + z**3 / 6.0)
    out = ssp_rk3_step(np.array([u0]), dt, lambda v: lam * v)
    assert out[0] == pytest.approx(expected, rel=1e-14)
    assert out[0] == pytest.approx(0.7 * 1.3495 / 1.3495 * (1 - 0.3 + 0.045 - 0.0045), rel=1e-13)


def test_rk3_third_order_convergence_on_decay():
    errs = []
    for steps in (8, 16, 32, 64):
        dt = 1.0 / steps
        u = np.array([1.0])
        for _ in range(steps):
            u = ssp_rk3_step(u, dt, lambda v: -v)
        errs.append(abs(u[0] - np.exp(-1.0)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() > 2.8


def test_rk3_nonfinite_stage_aborts():
    def bad_rhs(v):
        return np.full_like(v, np.nan)

    with pytest.raises(FloatingPointError):
        ctl = TimeControls(t_final=1.0)
        evolve(lambda v: (bad_rhs(v), 1.0), np.ones(3), 0.1, ctl)


def test_compute_dt_formula():
    ctl = TimeControls(t_final=1.0, cfl=0.5)
    assert compute_dt(2.0, 0.1, ctl, gap=1.0) == pytest.approx(0.025, rel=1e-15)


def test_compute_dt_zero_speed_advances_to_next_output():
    ctl = TimeControls(t_final=1.0, cfl=0.5)
    assert compute_dt(0.0, 0.1, ctl, gap=0.37) == 0.37


def test_compute_dt_cap_applies():
    ctl = TimeControls(t_final=1.0, cfl=0.5, dt_cap=0.004)
    assert compute_dt(1.0, 0.1, ctl, gap=1.0) == 0.004


def test_compute_dt_clips_to_gap():
    ctl = TimeControls(t_final=1.0, cfl=0.5)
    assert compute_dt(1e-6, 0.1, ctl, gap=0.02) == 0.02


def test_evolve_hits_output_times_exactly():
    # u' = -u with amax chosen so several steps fit between outputs
    rhs = lambda v: (-v, 4.0)
    ctl = TimeControls(t_final=1.0, cfl=0.5, output_times=(0.3, 0.7))
    snaps, final = evolve(rhs, np.array([1.0]), 0.1, ctl)
    assert set(snaps) == {0.3, 0.7, 1.0}
    for t, s in snaps.items():
        assert s[0] == pytest.approx(np.exp(-t), rel=1e-4)
    assert final[0] == snaps[1.0][0]


def test_controls_validation():
    with pytest.raises(ValueError):
        TimeControls(t_final=1.0, cfl=1.5)
    with pytest.raises(ValueError):
        TimeControls(t_final=-1.0)

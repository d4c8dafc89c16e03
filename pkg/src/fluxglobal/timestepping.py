"""SSP Runge-Kutta time integration with CFL step control."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TimeControls:
    """Step-size policy: CFL number, final time, optional dx^{5/3} cap."""

    t_final: float
    cfl: float = 0.5
    dt_cap: float | None = None  # absolute cap, e.g. C * dx^(5/3)
    output_times: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")


def compute_dt(amax: float, dx: float, controls: TimeControls, gap: float) -> float:
    """CFL step, optionally capped, clipped to land exactly on the next target.

    A flow with no signal speed advances straight to the next output time.
    """
    if gap <= 0.0:
        raise ValueError(f"nonpositive time gap {gap}")
    dt = controls.cfl * dx / amax if amax > 0.0 else np.inf
    if controls.dt_cap is not None:
        dt = min(dt, controls.dt_cap)
    return min(dt, gap)


def _check_finite(u, stage, t):
    if not np.all(np.isfinite(u)):
        raise FloatingPointError(f"non-finite state after RK stage {stage} near t = {t:.6g}")


def ssp_rk3_step(state, dt, rhs_operator):
    """One step of the three-stage, third-order SSP Runge-Kutta scheme.

    Stages are combined in incremental form (state plus weighted increments),
    which is algebraically the classic convex combination but returns the
    state bitwise unchanged at a fixed point of the spatial operator.
    """
    l1 = rhs_operator(state)
    u1 = state + dt * l1
    u2 = state + 0.25 * ((u1 - state) + dt * rhs_operator(u1))
    return state + (2.0 / 3.0) * ((u2 - state) + dt * rhs_operator(u2))


def _step_with_stage1(state, dt, l1, rhs, t):
    u1 = state + dt * l1
    _check_finite(u1, 1, t)
    l2, _ = rhs(u1)
    u2 = state + 0.25 * ((u1 - state) + dt * l2)
    _check_finite(u2, 2, t)
    l3, _ = rhs(u2)
    out = state + (2.0 / 3.0) * ((u2 - state) + dt * l3)
    _check_finite(out, 3, t)
    return out


def evolve(rhs, state, dx, controls: TimeControls, t0: float = 0.0):
    """Advance ``state`` to ``controls.t_final``, snapshotting output times.

    ``rhs(state) -> (dudt, amax)`` supplies both the derivative and the speed
    bound; the step size is recomputed every step from the first stage. Returns
    (snapshots dict keyed by requested time, final state).
    """
    t = t0
    targets = sorted({float(s) for s in controls.output_times} | {float(controls.t_final)})
    targets = [s for s in targets if s > t0]
    snapshots = {}
    for target in targets:
        while t < target:
            l1, amax = rhs(state)
            gap = target - t
            dt = compute_dt(amax, dx, controls, gap)
            state = _step_with_stage1(state, dt, l1, rhs, t)
            t = target if dt >= gap else t + dt
        snapshots[target] = state.copy()
    return snapshots, state

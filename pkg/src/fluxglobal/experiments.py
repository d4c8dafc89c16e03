"""Experiment harness: steady states, perturbation studies, convergence sweeps.

Six canned experiments drive the solver the way the validation studies are
set up: nozzle flows in smooth convergent/divergent ducts (1) and through a
discontinuous duct (2), a two-layer accuracy sweep on periodic data (3), a
discontinuous two-layer steady state with a small perturbation (4),
convergence to a moving two-layer steady state behind a supercritical inflow
(5), and two two-layer Riemann problems over a bottom step (6).

All experiment meshes place geometry jumps exactly on cell interfaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import Scheme
from .grid import BoundarySpec, Grid, build_grid, extend_geometry
from .systems import NozzleModel, NozzleParams, TwoLayerModel, TwoLayerParams
from .timestepping import TimeControls, evolve

GHOST = {2: 2, 5: 5}


# ---------------------------------------------------------------------------
# geometry definitions
# ---------------------------------------------------------------------------

def sigma_convergent(x):
    return 0.976 - 0.748 * np.tanh(0.8 * np.asarray(x, dtype=float) - 4.0)


def sigma_divergent(x):
    return 0.976 + 0.748 * np.tanh(0.8 * np.asarray(x, dtype=float) - 4.0)


def sigma_duct_step(x):
    x = np.asarray(x, dtype=float)
    return np.where((x < 7.5) | (x >= 12.5), 2.0, 1.0)


def z_step(x, left=-2.0, right=-1.0):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0.0, left, right)


def z_sill(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 8.0) & (x <= 12.0), 0.2, 0.0)


def z_periodic_hump(x):
    return np.sin(np.pi * np.asarray(x, dtype=float)) ** 2 - 10.0


# ---------------------------------------------------------------------------
# experiment descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    component: str  # "rho" for the nozzle, "h1"/"h2" for two layers
    amplitude: float
    lo: float
    hi: float


@dataclass(frozen=True)
class ExperimentSpec:
    """Bundled constants of one experiment (geometry, mesh, times, BCs)."""

    name: str
    system: str  # "nozzle" | "two_layer"
    x_min: float
    x_max: float
    dx: float
    ref_dx: float
    snapshot_times: tuple
    bc: BoundarySpec
    geometry: object
    perturbation: PerturbationSpec | None = None
    q_eq: float = 0.0
    e_eq: float = 0.0
    kappa: float = 1.0
    gamma: float = 1.4
    g: float = 10.0
    r: float = 0.98
    wb_t_final: float | None = None
    plot_component: str = "rho"


def example1_spec(variant="convergent", **overrides):
    sigma = sigma_convergent if variant == "convergent" else sigma_divergent
    e_eq = 58.3367745090349 if variant == "convergent" else 21.9230562619897
    base = dict(
        name=f"example1_{variant}",
        system="nozzle",
        x_min=0.0,
        x_max=10.0,
        dx=1.0 / 20.0,
        ref_dx=1.0 / 400.0,
        snapshot_times=(0.1, 0.3, 0.5),
        bc=BoundarySpec("free", "free"),
        geometry=sigma,
        perturbation=PerturbationSpec("rho", 1e-2, 2.9, 3.1),
        q_eq=8.0,
        e_eq=e_eq,
        wb_t_final=0.5,
        plot_component="rho",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def example2_spec(**overrides):
    base = dict(
        name="example2",
        system="nozzle",
        x_min=0.0,
        x_max=20.0,
        dx=1.0 / 10.0,
        ref_dx=1.0 / 100.0,
        snapshot_times=(0.2, 0.6, 1.0),
        bc=BoundarySpec("free", "free"),
        geometry=sigma_duct_step,
        perturbation=PerturbationSpec("rho", 1e-2, 1.0, 2.0),
        q_eq=8.0,
        e_eq=57.13486505,
        wb_t_final=1.0,
        plot_component="rho",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def example3_spec(**overrides):
    base = dict(
        name="example3",
        system="two_layer",
        x_min=0.0,
        x_max=1.0,
        dx=1.0 / 40.0,
        ref_dx=1.0 / 1280.0,
        snapshot_times=(0.1,),
        bc=BoundarySpec("periodic", "periodic"),
        geometry=z_periodic_hump,
        g=10.0,
        r=0.98,
        plot_component="h1",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


# The tabulated two-layer step state only balances with g = 10 (its depths
# reproduce constant E1 = 50, E2 = 55 to 3e-13 then); g = 10 is therefore the
# experiment default here.
EXAMPLE4_LEFT = (1.22373355048230, 12.0, 0.968329515483846, 10.0)
EXAMPLE4_RIGHT = (1.44970064153589, 12.0, 1.12439026921484, 10.0)


def example4_spec(**overrides):
    base = dict(
        name="example4",
        system="two_layer",
        x_min=-1.0,
        x_max=1.0,
        dx=1.0 / 100.0,
        ref_dx=1.0 / 5000.0,
        snapshot_times=(0.02, 0.05, 0.08),
        bc=BoundarySpec("free", "free"),
        geometry=z_step,
        perturbation=PerturbationSpec("h1", 1e-3, -0.6, -0.5),
        g=10.0,
        r=0.98,
        wb_t_final=20.0,
        plot_component="h1",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


EXAMPLE5_INFLOW = (8.0, 119.0, 4.0, 60.0)  # (h1, q1, h2, q2) ghost data


def example5_spec(**overrides):
    base = dict(
        name="example5",
        system="two_layer",
        x_min=0.0,
        x_max=25.0,
        dx=1.0 / 5.0,
        ref_dx=1.0 / 20.0,
        snapshot_times=(0.2, 0.6, 1.0),
        bc=BoundarySpec("free", "free"),  # perturbation phase; spin-up BC below
        geometry=z_sill,
        perturbation=PerturbationSpec("h1", 1e-4, 2.0, 2.25),
        g=10.0,
        r=0.98,
        wb_t_final=1.0,
        plot_component="h1",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


EXAMPLE5_SPINUP_BC = BoundarySpec("dirichlet", "free", dirichlet_left=EXAMPLE5_INFLOW)
EXAMPLE5_SPINUP_TIME = 100.0

EXAMPLE6_STATES = {
    1: ((1.0, 1.5, 1.0, 1.0), (0.8, 1.2, 1.2, 1.8)),
    2: ((1.5, 1.0, 1.0, 1.5), (1.2, 1.6, 0.9, 1.2)),
}


def example6_spec(test=1, **overrides):
    base = dict(
        name=f"example6_test{test}",
        system="two_layer",
        x_min=-1.0,
        x_max=1.0,
        dx=1.0 / 50.0,
        ref_dx=1.0 / 2000.0,
        snapshot_times=(0.1,),
        bc=BoundarySpec("free", "free"),
        geometry=lambda x: z_step(x, -2.0, -1.5),
        g=10.0,  # gravity unstated for the Riemann tests; matches the others
        r=0.98,
        plot_component="h1",
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def make_model(spec: ExperimentSpec):
    if spec.system == "nozzle":
        return NozzleModel(NozzleParams(spec.kappa, spec.gamma, spec.geometry))
    return TwoLayerModel(TwoLayerParams(spec.g, spec.r, spec.geometry))


def make_grid(spec: ExperimentSpec, dx: float, order: int) -> Grid:
    n = round((spec.x_max - spec.x_min) / dx)
    if abs(n * dx - (spec.x_max - spec.x_min)) > 1e-12 * (spec.x_max - spec.x_min):
        raise ValueError(f"dx = {dx} does not tile [{spec.x_min}, {spec.x_max}]")
    return build_grid(spec.x_min, spec.x_max, n, GHOST[order])


# ---------------------------------------------------------------------------
# steady states and perturbations
# ---------------------------------------------------------------------------

def nozzle_steady_state(model: NozzleModel, grid: Grid, geom, q_eq, e_eq, branch="subsonic"):
    """Nodal steady state with constant discharge and energy.

    Every node is solved on the requested branch with a branch-safe closed
    form as the guess (the zero-velocity inversion for subsonic flow, the
    kinetic-limit mass for supersonic), which re-brackets automatically across
    cross-section jumps. Returns the padded conserved array; verifies that the
    recomputed equilibrium variables are constant to 1e-10.
    """
    kappa, gamma = model.params.kappa, model.params.gamma
    sig = np.asarray(geom, dtype=float)
    if branch == "subsonic":
        guess_m = sig * (e_eq * (gamma - 1.0) / (kappa * gamma)) ** (1.0 / (gamma - 1.0))
    else:
        guess_m = np.full_like(sig, abs(q_eq) / np.sqrt(2.0 * e_eq))
    targets = np.empty((2, sig.size))
    targets[0] = q_eq
    targets[1] = e_eq
    guess = np.empty_like(targets)
    guess[0] = guess_m
    guess[1] = q_eq
    U = model.invert_equilibrium(targets, sig, guess)
    # ulp-ladder polish: the energy map is ~80x stiffer in the mass variable
    # than its own rounding, so scanning a few neighboring floats brings the
    # evaluated nodal energy to within half its granularity of the constant
    # (preservation drift scales with this residual)
    m = U[0]
    step = np.spacing(m)
    best = np.abs(model.equilibrium(U, sig)[1] - e_eq)
    pick = m.copy()
    for k in range(-8, 9):
        if k == 0:
            continue
        trial = U.copy()
        trial[0] = m + k * step
        dev = np.abs(model.equilibrium(trial, sig)[1] - e_eq)
        better = dev < best
        pick = np.where(better, trial[0], pick)
        best = np.where(better, dev, best)
    U[0] = pick
    E = model.equilibrium(U, sig)
    dev = max(np.max(np.abs(E[0] - q_eq)), np.max(np.abs(E[1] - e_eq)))
    if dev > 1e-10:
        j = int(np.argmax(np.abs(E[1] - e_eq)))
        raise RuntimeError(f"steady-state construction failed at node {j}: |dE| = {dev:.3e}")
    return U


def two_layer_step_steady_state(model: TwoLayerModel, grid: Grid, geom):
    """Piecewise-constant steady state of experiment 4 on the given grid.

    Left cells carry the tabulated depths verbatim; the right cells are
    re-solved in double precision from the left state's equilibrium constants
    (the tabulated right-side depths, accurate to their listed digits, serve
    as the guess and are verified to 1e-10).
    """
    h1l, q1, h2l, q2 = EXAMPLE4_LEFT
    h1r, _, h2r, _ = EXAMPLE4_RIGHT
    left = np.array([h1l, q1, h2l, q2])
    zl = z_step(np.array([-1.0]))[0]
    e_const = model.equilibrium(left[:, None], np.array([zl]))[:, 0]
    x = grid.centers()
    U = np.empty((4, x.size))
    U[:] = left[:, None]
    right_mask = x > 0.0
    targets = np.broadcast_to(e_const[:, None], (4, int(right_mask.sum()))).copy()
    guess = np.empty_like(targets)
    guess[0], guess[1], guess[2], guess[3] = h1r, q1, h2r, q2
    solved = model.invert_equilibrium(targets, np.asarray(geom)[right_mask], guess)
    if max(abs(solved[0, 0] - h1r), abs(solved[2, 0] - h2r)) > 1e-10:
        raise RuntimeError("experiment-4 steady state disagrees with the tabulated depths")
    U[:, right_mask] = solved
    return U


def inject_perturbation(model, grid: Grid, geom, U_eq, pert: PerturbationSpec):
    """Bump one primitive component of an equilibrium state on an interval.

    Nozzle runs bump the density and rebuild the momentum with the
    equilibrium velocity; two-layer runs bump a depth and keep discharges.
    Cells are selected by their centers (ghosts included so a restart sees
    consistent data; boundary filling overwrites them anyway).
    """
    x = grid.centers()
    mask = (x >= pert.lo) & (x <= pert.hi)
    U0 = U_eq.copy()
    if pert.amplitude == 0.0:
        return U0
    if model.ncomp == 2:
        if pert.component != "rho":
            raise ValueError(f"unsupported nozzle perturbation {pert.component!r}")
        u_eq = U_eq[1] / U_eq[0]
        m_new = U_eq[0] + np.where(mask, pert.amplitude * np.asarray(geom), 0.0)
        U0[0] = m_new
        U0[1] = m_new * u_eq
        return U0
    row = {"h1": 0, "h2": 2}[pert.component]
    U0[row] = U_eq[row] + np.where(mask, pert.amplitude, 0.0)
    return U0


# ---------------------------------------------------------------------------
# norms, restriction, convergence rates
# ---------------------------------------------------------------------------

def error_norms(a, b, dx):
    """Interior L1 and Linf distances per component."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    return dx * diff.sum(axis=1), diff.max(axis=1)


_MIDPOINT_W = np.array([3.0, -25.0, 150.0, 150.0, -25.0, 3.0]) / 256.0


def restrict_point_values(fine, ratio, periodic=False):
    """Fine-grid point values sampled at the coarse cell centers.

    Odd refinement ratios hit fine centers exactly; even ratios land on fine
    interfaces and use sixth-order symmetric midpoint interpolation. Returns
    (values, valid) where ``valid`` flags coarse nodes whose stencil did not
    touch a clamped boundary (always all-true for periodic data).
    """
    fine = np.asarray(fine)
    nf = fine.shape[-1]
    if nf % ratio:
        raise ValueError(f"fine size {nf} not divisible by ratio {ratio}")
    nc = nf // ratio
    j = np.arange(nc)
    if ratio % 2 == 1:
        return fine[..., ratio * j + (ratio - 1) // 2], np.ones(nc, dtype=bool)
    i0 = ratio * j + ratio // 2 - 1
    vals = np.zeros(fine.shape[:-1] + (nc,))
    valid = np.ones(nc, dtype=bool)
    for k, w in enumerate(_MIDPOINT_W):
        idx = i0 + (k - 2)
        if periodic:
            idx = idx % nf
        else:
            valid &= (idx >= 0) & (idx < nf)
            idx = np.clip(idx, 0, nf - 1)
        vals += w * fine[..., idx]
    return vals, valid


def restrict_cell_averages(fine, ratio):
    """Exact restriction of cell averages: mean over each block of cells."""
    fine = np.asarray(fine)
    nf = fine.shape[-1]
    if nf % ratio:
        raise ValueError(f"fine size {nf} not divisible by ratio {ratio}")
    return fine.reshape(fine.shape[:-1] + (nf // ratio, ratio)).mean(axis=-1)


def restrict(fine, ratio, kind, periodic=False):
    if kind == "average":
        return restrict_cell_averages(fine, ratio), None
    vals, valid = restrict_point_values(fine, ratio, periodic=periodic)
    return vals, (None if valid.all() else valid)


def runge_rates(u_fine, u_mid, u_coarse, dx_fine, kind, periodic=True):
    """Runge error estimate and rate from three nested solutions.

    delta12 and delta24 are L1 norms of consecutive-mesh differences, each
    evaluated on the coarser grid of its pair.
    """
    r12, _ = restrict(u_fine, 2, kind, periodic)
    r24, _ = restrict(u_mid, 2, kind, periodic)
    d12, _ = error_norms(r12, u_mid, 2.0 * dx_fine)
    d24, _ = error_norms(r24, u_coarse, 4.0 * dx_fine)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(d12 == d24, np.inf, d12 * d12 / np.abs(d12 - d24))
        rate = np.where((d12 > 0) & (d24 > 0), np.log2(d24 / np.maximum(d12, 1e-300)), np.nan)
    return {"delta12": d12, "delta24": d24, "error": err, "rate": rate}


def total_variation(v):
    return float(np.abs(np.diff(np.asarray(v, dtype=float))).sum())


# ---------------------------------------------------------------------------
# run helpers
# ---------------------------------------------------------------------------

def setup_scheme(spec: ExperimentSpec, order: int, dx: float | None = None,
                 bc: BoundarySpec | None = None) -> Scheme:
    grid = make_grid(spec, dx if dx is not None else spec.dx, order)
    return Scheme(make_model(spec), grid, bc if bc is not None else spec.bc, order)


def equilibrium_state(spec: ExperimentSpec, scheme: Scheme):
    """The experiment's reference steady state on the scheme's grid."""
    if spec.system == "nozzle":
        return nozzle_steady_state(scheme.model, scheme.grid, scheme.geom, spec.q_eq, spec.e_eq)
    if spec.name.startswith("example4"):
        return two_layer_step_steady_state(scheme.model, scheme.grid, scheme.geom)
    raise ValueError(f"{spec.name} has no closed-form steady state")


def run_to(scheme: Scheme, U0, t_final, snapshot_times=(), cfl=0.5, dt_cap=None, t0=0.0):
    """Evolve a padded state, returning interior snapshots keyed by time."""
    controls = TimeControls(
        t_final=t_final, cfl=cfl, dt_cap=dt_cap, output_times=tuple(snapshot_times)
    )
    snaps, final = evolve(scheme.rhs, U0.copy(), scheme.grid.dx, controls, t0=t0)
    interior = {t: s[:, scheme.grid.interior].copy() for t, s in snaps.items()}
    return interior, final


def spin_up_example5(spec: ExperimentSpec, order: int, dx: float):
    """Drive the sill flow to its discrete steady state by long integration."""
    scheme = Scheme(make_model(spec), make_grid(spec, dx, order), EXAMPLE5_SPINUP_BC, order)
    U0 = np.empty((4, scheme.grid.n_total))
    U0[0], U0[1], U0[2], U0[3] = 8.0, 0.0, 4.0, 0.0
    _, final = run_to(scheme, U0, EXAMPLE5_SPINUP_TIME)
    return scheme, final


def wb_deviation(spec: ExperimentSpec, order: int, U_eq_padded=None, scheme=None,
                 t_final=None):
    """L1 drift per component after evolving an unperturbed steady state."""
    if scheme is None:
        scheme = setup_scheme(spec, order)
    if U_eq_padded is None:
        U_eq_padded = equilibrium_state(spec, scheme)
    t_end = t_final if t_final is not None else spec.wb_t_final
    snaps, _ = run_to(scheme, U_eq_padded, t_end)
    ref = U_eq_padded[:, scheme.grid.interior]
    l1, linf = error_norms(snaps[t_end], ref, scheme.grid.dx)
    return {"l1": l1, "linf": linf, "names": scheme.model.conserved_names}


# ---------------------------------------------------------------------------
# full experiment recipes
# ---------------------------------------------------------------------------

def _repad(interior, grid: Grid):
    """Embed an interior field into a padded array for the given grid."""
    ncomp, n = interior.shape
    if n != grid.n_cells:
        raise ValueError(f"interior has {n} cells, grid expects {grid.n_cells}")
    out = np.empty((ncomp, grid.n_total))
    out[:, grid.interior] = interior
    out[:, : grid.ghost_width] = interior[:, :1]
    out[:, grid.ghost_width + n :] = interior[:, -1:]
    return out


def _series_columns(model, x, fields, eq_fields=None, diff=None, plot_component="h1"):
    cols = {}
    if model.ncomp == 2:
        cols["sigma_rho"] = fields[0]
        cols["q"] = fields[1]
    else:
        for row, name in enumerate(model.conserved_names):
            cols[name] = fields[row]
    if diff is not None:
        name = "rho" if model.ncomp == 2 else plot_component
        cols[f"{name}_minus_{name}_eq"] = diff
    return cols


def _plotted_difference(model, scheme, fields, eq_fields, plot_component):
    """Difference of the plotted primitive from its own-mesh equilibrium."""
    if model.ncomp == 2 and plot_component == "rho":
        sigma = scheme.geom[scheme.grid.interior]
        return (fields[0] - eq_fields[0]) / sigma
    row = {"h1": 0, "q1": 1, "h2": 2, "q2": 3}[plot_component]
    return fields[row] - eq_fields[row]


def _example5_steady(spec, dx, cache_dir=None):
    """Interior steady state for the sill flow at mesh dx (file-cached)."""
    from .seriesio import read_series, write_series

    tag = f"example5_steady_n{round((spec.x_max - spec.x_min) / dx)}.csv"
    if cache_dir is not None:
        path = Path(cache_dir) / tag
        if path.exists():
            _, cols = read_series(path)
            return np.array([cols["h1"], cols["q1"], cols["h2"], cols["q2"]])
    scheme, final = spin_up_example5(spec, 5, dx)
    interior = final[:, scheme.grid.interior]
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        x = scheme.grid.centers(ghosts=False)
        write_series(Path(cache_dir) / tag, x,
                     {n: interior[i] for i, n in enumerate(scheme.model.conserved_names)})
    return interior


def perturbation_study(spec: ExperimentSpec, orders=(2, 5), out_dir=None,
                       steady_interior=None, ref_steady_interior=None):
    """Coarse runs at the requested orders against a fine fifth-order reference.

    Distances are L1 norms of the plotted difference field (solution minus the
    mesh's own equilibrium) against the reference's difference field restricted
    to the coarse centers.
    """
    times = spec.snapshot_times
    t_end = max(times)
    result = {"spec": spec, "orders": {}, "distances": {}, "times": times}

    ref_scheme = setup_scheme(spec, 5, dx=spec.ref_dx)
    if ref_steady_interior is None:
        ref_eq = equilibrium_state(spec, ref_scheme)
    else:
        ref_eq = _repad(ref_steady_interior, ref_scheme.grid)
    ref0 = inject_perturbation(ref_scheme.model, ref_scheme.grid, ref_scheme.geom,
                               ref_eq, spec.perturbation)
    ref_snaps, _ = run_to(ref_scheme, ref0, t_end, snapshot_times=times)
    ref_eq_int = ref_eq[:, ref_scheme.grid.interior]
    ref_diff = {
        t: _plotted_difference(ref_scheme.model, ref_scheme, ref_snaps[t], ref_eq_int,
                               spec.plot_component)
        for t in times
    }
    result["reference"] = {"snapshots": ref_snaps, "eq": ref_eq_int, "diff": ref_diff}

    ratio = round(spec.dx / spec.ref_dx)
    for order in orders:
        scheme = setup_scheme(spec, order)
        if steady_interior is None:
            U_eq = equilibrium_state(spec, scheme)
        else:
            U_eq = _repad(steady_interior, scheme.grid)
        U0 = inject_perturbation(scheme.model, scheme.grid, scheme.geom, U_eq,
                                 spec.perturbation)
        snaps, _ = run_to(scheme, U0, t_end, snapshot_times=times)
        eq_int = U_eq[:, scheme.grid.interior]
        dists = {}
        for t in times:
            diff = _plotted_difference(scheme.model, scheme, snaps[t], eq_int,
                                       spec.plot_component)
            rvals, valid = restrict_point_values(ref_diff[t], ratio)
            sel = valid if not valid.all() else slice(None)
            dists[t] = float(spec.dx * np.abs(diff[sel] - rvals[sel]).sum())
        result["orders"][order] = {"snapshots": snaps, "eq": eq_int, "scheme": scheme}
        result["distances"][order] = dists

    if out_dir is not None:
        _write_perturbation_artifacts(result, out_dir)
    return result


def _write_perturbation_artifacts(result, out_dir):
    from .seriesio import write_report, write_series

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = result["spec"]
    ref_scheme = setup_scheme(spec, 5, dx=spec.ref_dx)
    xr = ref_scheme.grid.centers(ghosts=False)
    for t in result["times"]:
        ref = result["reference"]
        cols = _series_columns(ref_scheme.model, xr, ref["snapshots"][t],
                               diff=ref["diff"][t], plot_component=spec.plot_component)
        write_series(out_dir / f"{spec.name}_ref_t{t:g}.csv", xr, cols)
    for order, data in result["orders"].items():
        scheme = data["scheme"]
        x = scheme.grid.centers(ghosts=False)
        for t in result["times"]:
            diff = _plotted_difference(scheme.model, scheme, data["snapshots"][t],
                                       data["eq"], spec.plot_component)
            cols = _series_columns(scheme.model, x, data["snapshots"][t],
                                   diff=diff, plot_component=spec.plot_component)
            write_series(out_dir / f"{spec.name}_order{order}_t{t:g}.csv", x, cols)
    report = {
        "experiment": spec.name,
        "component": spec.plot_component,
        "l1_distance_to_reference": {
            str(o): {f"{t:g}": d for t, d in result["distances"][o].items()}
            for o in result["distances"]
        },
    }
    if {2, 5} <= set(result["distances"]):
        report["fifth_order_dominates"] = {
            f"{t:g}": bool(result["distances"][5][t] < result["distances"][2][t])
            for t in result["times"]
        }
    write_report(report, out_dir / f"{spec.name}_report.json")


def _example3_initial(scheme):
    x = scheme.grid.centers()
    U0 = np.empty((4, x.size))
    U0[0] = 5.0 + np.exp(np.cos(2.0 * np.pi * x))
    U0[1] = 0.0
    U0[2] = 5.0 - np.exp(np.cos(2.0 * np.pi * x)) - np.sin(np.pi * x) ** 2
    U0[3] = 0.0
    return U0


def calibrate_dt_cap(spec, coarsest_n=40):
    """Constant C of the dt = C dx^(5/3) rule, matched to the CFL step on the
    coarsest sweep mesh at the initial state."""
    dx = (spec.x_max - spec.x_min) / coarsest_n
    scheme = setup_scheme(spec, 5, dx=dx)
    _, amax = scheme.rhs(_example3_initial(scheme))
    return (0.5 * dx / amax) / dx ** (5.0 / 3.0)


def convergence_study(orders=(2, 5), mesh_sizes=(40, 80, 160, 320, 640, 1280),
                      out_dir=None, overrides=None, component_row=0):
    """Accuracy sweep on the periodic two-layer problem with Runge rates."""
    spec = example3_spec(**(overrides or {}))
    t_end = spec.snapshot_times[-1]
    cap_c = calibrate_dt_cap(spec, coarsest_n=mesh_sizes[0])
    solutions = {}
    for order in orders:
        for n in mesh_sizes:
            dx = (spec.x_max - spec.x_min) / n
            scheme = setup_scheme(spec, order, dx=dx)
            dt_cap = cap_c * dx ** (5.0 / 3.0) if order == 5 else None
            snaps, _ = run_to(scheme, _example3_initial(scheme), t_end, dt_cap=dt_cap)
            solutions[order, n] = snaps[t_end]
    report = {"experiment": spec.name, "component": "h1", "dt_cap_constant": cap_c,
              "orders": {}}
    for order in orders:
        kind = "point" if order == 5 else "average"
        rows = []
        for n in mesh_sizes[2:]:
            fine, mid, coarse = solutions[order, n], solutions[order, n // 2], solutions[order, n // 4]
            rr = runge_rates(fine[component_row], mid[component_row], coarse[component_row],
                             (spec.x_max - spec.x_min) / n, kind, periodic=True)
            rows.append({
                "dx": f"1/{n}",
                "delta12": float(rr["delta12"][0]),
                "delta24": float(rr["delta24"][0]),
                "error": float(rr["error"][0]),
                "rate": float(rr["rate"][0]),
            })
        report["orders"][str(order)] = {
            "rows": rows,
            "pass_rate": bool(all(r["rate"] >= 4.6 for r in rows[-2:])) if order == 5
            else bool(all(2.2 <= r["rate"] <= 3.2 for r in rows)),
        }
    if out_dir is not None:
        from .seriesio import write_report

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / f"{spec.name}_report.json")
    report["solutions"] = solutions
    return report


def riemann_study(test=1, orders=(2, 5), out_dir=None, overrides=None):
    """One Riemann problem at both orders plus the fine reference."""
    spec = example6_spec(test, **(overrides or {}))
    left, right = EXAMPLE6_STATES[test]
    t_end = spec.snapshot_times[-1]

    def initial(scheme):
        x = scheme.grid.centers()
        U0 = np.where(x < 0.0, np.asarray(left, dtype=float)[:, None],
                      np.asarray(right, dtype=float)[:, None])
        return U0

    result = {"spec": spec, "test": test, "orders": {}, "distances": {}, "mass": {}}
    ref_scheme = setup_scheme(spec, 5, dx=spec.ref_dx)
    ref_snaps, _ = run_to(ref_scheme, initial(ref_scheme), t_end)
    result["reference"] = ref_snaps[t_end]
    ratio = round(spec.dx / spec.ref_dx)
    for order in orders:
        scheme = setup_scheme(spec, order)
        U0 = initial(scheme)
        interior0 = U0[:, scheme.grid.interior].copy()
        snaps, _ = run_to(scheme, U0, t_end)
        sol = snaps[t_end]
        dx = scheme.grid.dx
        dist = {}
        for name, row in (("h1", 0), ("h2", 2)):
            rvals, valid = restrict_point_values(result["reference"][row], ratio)
            sel = valid if not valid.all() else slice(None)
            dist[name] = float(dx * np.abs(sol[row][sel] - rvals[sel]).sum())
        mass = {}
        for name, hrow, qrow in (("h1", 0, 1), ("h2", 2, 3)):
            m0 = dx * interior0[hrow].sum()
            mt = dx * sol[hrow].sum()
            expected = m0 + t_end * (left[qrow] - right[qrow])
            mass[name] = {"initial": m0, "final": mt, "expected": expected,
                          "rel_defect": abs(mt - expected) / abs(m0)}
        tv = {name: {"initial": total_variation(interior0[row]),
                     "final": total_variation(sol[row])}
              for name, row in (("h1", 0), ("h2", 2))}
        result["orders"][order] = {"solution": sol, "scheme": scheme, "tv": tv}
        result["distances"][order] = dist
        result["mass"][order] = mass
    if out_dir is not None:
        from .seriesio import write_report, write_series

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        xr = ref_scheme.grid.centers(ghosts=False)
        write_series(out / f"{spec.name}_ref_t{t_end:g}.csv", xr,
                     _series_columns(ref_scheme.model, xr, result["reference"]))
        for order, data in result["orders"].items():
            scheme = data["scheme"]
            x = scheme.grid.centers(ghosts=False)
            write_series(out / f"{spec.name}_order{order}_t{t_end:g}.csv", x,
                         _series_columns(scheme.model, x, data["solution"]))
        write_report({
            "experiment": spec.name,
            "l1_distance_to_reference": {str(o): result["distances"][o] for o in orders},
            "mass_accounting": {str(o): result["mass"][o] for o in orders},
        }, out / f"{spec.name}_report.json")
    return result


def run_example(n, orders=(2, 5), out_dir=None, overrides=None, cache_dir=None):
    """Execute one canned experiment end to end; returns the result records."""
    overrides = overrides or {}
    if n == 1:
        return {
            variant: perturbation_study(example1_spec(variant, **overrides), orders, out_dir)
            for variant in ("convergent", "divergent")
        }
    if n == 2:
        return perturbation_study(example2_spec(**overrides), orders, out_dir)
    if n == 3:
        return convergence_study(orders=orders, out_dir=out_dir, overrides=overrides)
    if n == 4:
        return perturbation_study(example4_spec(**overrides), orders, out_dir)
    if n == 5:
        spec = example5_spec(**overrides)
        cache = cache_dir if cache_dir is not None else out_dir
        coarse = _example5_steady(spec, spec.dx, cache)
        ref = _example5_steady(spec, spec.ref_dx, cache)
        return perturbation_study(spec, orders, out_dir, steady_interior=coarse,
                                  ref_steady_interior=ref)
    if n == 6:
        return {t: riemann_study(t, orders, out_dir, overrides) for t in (1, 2)}
    raise ValueError(f"example must be 1..6, got {n}")

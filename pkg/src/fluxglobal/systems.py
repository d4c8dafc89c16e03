"""Balance-law system models: nozzle flow and two-layer shallow water.

Each model exposes the same array-oriented surface over conserved fields of
shape (ncomp, n):

    flux(U, geom)                  physical flux F(U)
    equilibrium(U, geom)           equilibrium variables (discharges and
                                   energy-like quantities, constant at
                                   steady states)
    invert_equilibrium(E, geom, guess)
                                   solve equilibrium(U, geom) = E for U;
                                   discharge rows are copied through
    speeds(Um, Up, gm, gp)         one-sided local propagation bounds
    path_increment / cell_increment_*
                                   momentum-row quadratures of the
                                   nonconservative product (see assembly)

The static geometry field (nozzle cross-section sigma or bottom topography Z)
is carried separately from U; its trivial evolution equation is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import cell_integral_fifth

NEWTON_TOL = 1e-12
NEWTON_CAP = 50
FALLBACK_CAP = 200
_tiny = float(np.finfo(np.float64).tiny)


class VacuumStateError(ValueError):
    """A state with nonpositive mass/depth where velocities are needed."""


class EquilibriumSolveError(RuntimeError):
    """Equilibrium inversion failed; carries the offending flat indices."""

    def __init__(self, message, indices=None, residual=None):
        super().__init__(message)
        self.indices = indices
        self.residual = residual


def _check_positive(arr, what):
    if not np.all(arr > 0.0):
        bad = np.flatnonzero(~(arr > 0.0))
        raise VacuumStateError(
            f"nonphysical {what} <= 0 at {bad.size} node(s), first indices {bad[:5].tolist()}"
        )


@dataclass(frozen=True)
class NozzleParams:
    """Pressure law p = kappa rho^gamma and cross-section sigma(x)."""

    kappa: float
    gamma: float
    sigma_of_x: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 1.0 < self.gamma < 5.0 / 3.0:
            raise ValueError(f"gamma must lie in (1, 5/3), got {self.gamma}")


@dataclass(frozen=True)
class TwoLayerParams:
    """Gravity g, density ratio r = rho_upper/rho_lower, topography Z(x)."""

    g: float
    r: float
    z_of_x: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")


def _bracketed_newton_scalar(f, fp, lo, hi, x, tol, cap):
    """Scalar safeguarded Newton on a sign-changing bracket (fallback path)."""
    flo = f(lo)
    for _ in range(cap):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if (fx > 0) == (flo > 0):
            lo = x
        else:
            hi = x
        d = fp(x)
        xn = x - fx / d if d != 0.0 else 0.5 * (lo + hi)
        if not (min(lo, hi) < xn < max(lo, hi)):
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x
        x = xn
    return x


class NozzleModel:
    """Isentropic nozzle flow: conserved (sigma*rho, q), geometry sigma(x)."""

    ncomp = 2
    conserved_names = ("sigma_rho", "q")
    equilibrium_names = ("q", "E")
    momentum_rows = (1,)

    def __init__(self, params: NozzleParams):
        self.params = params

    def geometry_at(self, x):
        return np.asarray(self.params.sigma_of_x(np.asarray(x, dtype=float)), dtype=float)

    def flux(self, U, sigma):
        kappa, gamma = self.params.kappa, self.params.gamma
        m, q = U[0], U[1]
        u = q / m
        F = np.empty_like(U)
        F[0] = q
        # sigma * p = kappa m^gamma sigma^(1-gamma)
        F[1] = q * u + kappa * m**gamma * sigma ** (1.0 - gamma)
        return F

    def equilibrium(self, U, sigma):
        kappa, gamma = self.params.kappa, self.params.gamma
        m, q = U[0], U[1]
        _check_positive(m, "sigma_rho")
        u = q / m
        E = np.empty_like(U)
        E[0] = q
        E[1] = 0.5 * u * u + (kappa * gamma / (gamma - 1.0)) * (m / sigma) ** (gamma - 1.0)
        return E

    def invert_equilibrium(self, E, sigma, guess):
        """Solve E(m; sigma) = E_target for m = sigma*rho on the guess's branch.

        The residual q^2/(2 m^2) + c m^(gamma-1) - E is strictly convex with a
        single sonic minimum m_s; the root is bracketed on the subsonic
        (m > m_s) or supersonic (m < m_s) branch selected by the guess, then
        found by bisection-safeguarded Newton.
        """
        kappa, gamma = self.params.kappa, self.params.gamma
        q = np.asarray(E[0], dtype=float)
        target = np.asarray(E[1], dtype=float)
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), target.shape)
        c = (kappa * gamma / (gamma - 1.0)) * sigma ** (1.0 - gamma)
        absq = np.abs(q)
        still = absq == 0.0
        if np.any(still) and not np.all(E[1][still] > 0.0):
            raise EquilibriumSolveError(
                "no root: nonpositive energy at zero discharge",
                indices=np.flatnonzero(still & ~(E[1] > 0.0)),
            )
        a2 = 0.5 * q * q
        with np.errstate(divide="ignore", invalid="ignore"):
            m_sonic = (q * q / (c * (gamma - 1.0))) ** (1.0 / (gamma + 1.0))
        m_sonic = np.where(still, 0.0, m_sonic)
        m_safe = np.where(still, 1.0, m_sonic)
        e_min = np.where(still, -np.inf, a2 / (m_safe * m_safe) + c * m_safe ** (gamma - 1.0))
        short = target < e_min - 1e-9 * np.maximum(1.0, np.abs(target))
        if np.any(short & ~still):
            idx = np.flatnonzero(short & ~still)
            raise EquilibriumSolveError(
                f"no root: energy below the sonic minimum at {idx.size} node(s), "
                f"first indices {idx[:5].tolist()}",
                indices=idx,
                residual=float(np.max(e_min[idx] - target[idx])),
            )
        m_closed = sigma * (np.maximum(target, _tiny) * (gamma - 1.0) / (kappa * gamma)) ** (1.0 / (gamma - 1.0))
        subsonic = np.asarray(guess[0], dtype=float) >= m_sonic
        # bracket ends with nonnegative residual away from the sonic point
        lo = np.where(subsonic, m_sonic, np.where(still, m_closed, absq / np.sqrt(2.0 * np.maximum(target, _tiny))))
        hi = np.where(subsonic, np.maximum(m_closed, m_sonic), m_sonic)
        m = np.clip(np.asarray(guess[0], dtype=float), np.minimum(lo, hi), np.maximum(lo, hi))
        m = np.where(still, m_closed, m)
        target_eff = np.maximum(target, e_min)  # absorb roundoff-level sonic shortfalls

        def residual(mm):
            t = mm ** (gamma - 1.0)
            return a2 / (mm * mm) + c * t - target_eff, t

        # bracketed Newton, keeping the best iterate per lane; after every lane
        # meets the tolerance a few polish steps push residuals to the
        # evaluation noise floor (well-balance needs near-ulp constancy)
        f, t = residual(m)
        best = m.copy()
        res_best = np.abs(f)
        polish = 3
        stalled = 0
        for _ in range(NEWTON_CAP + FALLBACK_CAP):
            f_pos = f > 0
            # residual increases with m on the subsonic branch, decreases on the other
            move_hi = f_pos == subsonic
            hi = np.where(move_hi & ~still, m, hi)
            lo = np.where(~move_hi & ~still, m, lo)
            fp = -2.0 * a2 / (m * m * m) + c * (gamma - 1.0) * t / m
            with np.errstate(divide="ignore", invalid="ignore"):
                mn = m - f / fp
            inside = (mn >= np.minimum(lo, hi)) & (mn <= np.maximum(lo, hi))
            m = np.where(still, m, np.where(inside, mn, 0.5 * (lo + hi)))
            f, t = residual(m)
            absf = np.abs(f)
            improved = absf < res_best
            if np.any(improved):
                best = np.where(improved, m, best)
                res_best = np.where(improved, absf, res_best)
                stalled = 0
            else:
                stalled += 1
            if np.all(res_best <= NEWTON_TOL):
                if stalled or polish == 0:
                    break
                polish -= 1
            elif stalled >= 8:
                break
        if not np.all(res_best <= NEWTON_TOL):
            bad = np.flatnonzero(res_best > NEWTON_TOL)
            raise EquilibriumSolveError(
                f"equilibrium inversion did not converge at indices {bad[:5].tolist()}",
                indices=bad,
                residual=float(np.max(res_best)),
            )
        U = np.empty((2, *best.shape))
        U[0] = best
        U[1] = q
        return U

    def hat_geometry(self, gm, gp):
        return 0.5 * (gm + gp)

    def hat_pair(self, U_mid, Em, Ep, geom_hat):
        """Hat states from the midpoint solve plus an exact-Jacobian split.

        ``U_mid`` solves the averaged-geometry system at the mean equilibrium
        data. For small interface jumps, the pair is U_mid -/+ half the
        linearized response; this keeps both residuals within the solve
        tolerance while the two states share one solver noise floor, so
        their difference (the central-upwind diffusion) is noise-free and
        vanishes bitwise for matching data. Lanes flagged not-ok (large
        jumps, near-sonic midpoint) must be solved independently.
        """
        kappa, gamma = self.params.kappa, self.params.gamma
        m = U_mid[0]
        q_mid = U_mid[1]
        dq = Ep[0] - Em[0]
        de = Ep[1] - Em[1]
        c = (kappa * gamma / (gamma - 1.0)) * geom_hat ** (1.0 - gamma)
        fp = -q_mid * q_mid / (m * m * m) + c * (gamma - 1.0) * m ** (gamma - 2.0)
        w = de - (q_mid / (m * m)) * dq
        with np.errstate(divide="ignore", invalid="ignore"):
            s = w / fp
        small = (np.abs(de) <= 1e-7 * (1.0 + np.abs(Em[1]))) & (
            np.abs(dq) <= 1e-7 * (1.0 + np.abs(Em[0]))
        )
        scale_fp = (np.abs(q_mid * q_mid) / (m * m * m) + c * (gamma - 1.0) * m ** (gamma - 2.0))
        ok = small & (np.abs(fp) > 1e-6 * scale_fp) & np.isfinite(s)
        s = np.where(ok, s, 0.0)
        ok = ok & (m - 0.5 * np.abs(s) > 0.0)
        Uhm = np.empty_like(U_mid)
        Uhp = np.empty_like(U_mid)
        Uhm[0] = m - 0.5 * s
        Uhp[0] = m + 0.5 * s
        Uhm[1] = Em[0]
        Uhp[1] = Ep[0]
        return Uhm, Uhp, ok

    def speeds(self, Um, Up, gm, gp):
        kappa, gamma = self.params.kappa, self.params.gamma
        root_kg = np.sqrt(kappa * gamma)
        um = Um[1] / Um[0]
        up = Up[1] / Up[0]
        cm = root_kg * (Um[0] / gm) ** ((gamma - 1.0) / 2.0)
        cp = root_kg * (Up[0] / gp) ** ((gamma - 1.0) / 2.0)
        am = np.minimum(np.minimum(um - cm, up - cp), 0.0)
        ap = np.maximum(np.maximum(um + cm, up + cp), 0.0)
        return am, ap

    def path_increment(self, Um, Up, Em, Ep):
        """Trapezoidal momentum-row quadrature of M(U) dE along the interface path.

        This is the exact jump K+ - K- of the global flux across an interface;
        it vanishes identically when the one-sided equilibrium data agree.
        """
        um = Um[1] / Um[0]
        up = Up[1] / Up[0]
        out = np.empty((1, Um.shape[1]))
        out[0] = 0.5 * (up + um) * (Ep[0] - Em[0]) + 0.5 * (Up[0] + Um[0]) * (Ep[1] - Em[1])
        return out

    def cell_increment_trapezoid(self, Ua, Ub, Ea, Eb):
        """Same quadrature across a cell, from (j-1/2)+ to (j+1/2)- values."""
        ua = Ua[1] / Ua[0]
        ub = Ub[1] / Ub[0]
        out = np.empty((1, Ua.shape[1]))
        out[0] = 0.5 * (ub + ua) * (Eb[0] - Ea[0]) + 0.5 * (Ub[0] + Ua[0]) * (Eb[1] - Ea[1])
        return out

    def cell_increment_quadrature(self, U, E, E_left=None, E_right=None):
        """Fifth-order cell integrals of u q_x + (sigma rho) E_x on all windows.

        ``E_left``/``E_right`` carry the one-sided equilibrium values at each
        cell's two interfaces (plus side on the left, minus side on the
        right); they pin the quadrature endpoints so the global-flux sweep
        telescopes against the interface path increments.
        """
        win = np.lib.stride_tricks.sliding_window_view
        u = U[1] / U[0]
        ends = lambda row: (None, None) if E_left is None else (E_left[row], E_right[row])
        out = np.empty((1, U.shape[1] - 6))
        out[0] = cell_integral_fifth(win(u, 7), win(E[0], 7), *ends(0)) + cell_integral_fifth(
            win(U[0], 7), win(E[1], 7), *ends(1)
        )
        return out


class TwoLayerModel:
    """Two-layer shallow water: conserved (h1, q1, h2, q2), geometry Z(x)."""

    ncomp = 4
    conserved_names = ("h1", "q1", "h2", "q2")
    equilibrium_names = ("q1", "E1", "q2", "E2")
    momentum_rows = (1, 3)

    def __init__(self, params: TwoLayerParams):
        self.params = params
        self.hyperbolicity_losses = 0

    def geometry_at(self, x):
        return np.asarray(self.params.z_of_x(np.asarray(x, dtype=float)), dtype=float)

    def flux(self, U, z=None):
        g = self.params.g
        h1, q1, h2, q2 = U
        F = np.empty_like(U)
        F[0] = q1
        F[1] = q1 * q1 / h1 + 0.5 * g * h1 * h1
        F[2] = q2
        F[3] = q2 * q2 / h2 + 0.5 * g * h2 * h2
        return F

    def equilibrium(self, U, z):
        g, r = self.params.g, self.params.r
        h1, q1, h2, q2 = U
        _check_positive(h1, "h1")
        _check_positive(h2, "h2")
        E = np.empty_like(U)
        E[0] = q1
        E[1] = 0.5 * (q1 / h1) ** 2 + g * (h1 + h2 + z)
        E[2] = q2
        E[3] = 0.5 * (q2 / h2) ** 2 + g * (r * h1 + h2 + z)
        return E

    def invert_equilibrium(self, E, z, guess):
        """Solve the coupled pair of energy relations for (h1, h2).

        Damped Newton from the guess (steps capped to keep depths positive),
        with an alternating per-layer bracketed solve as a fallback for any
        lanes Newton fails on.
        """
        g, r = self.params.g, self.params.r
        q1, e1, q2, e2 = (np.asarray(E[k], dtype=float) for k in range(4))
        z = np.broadcast_to(np.asarray(z, dtype=float), e1.shape)
        a1 = 0.5 * q1 * q1
        a2 = 0.5 * q2 * q2
        h1 = np.array(guess[0], dtype=float)
        h2 = np.array(guess[2], dtype=float)
        # most lanes converge within a few iterations; the stragglers (shock
        # transients, near-critical lanes) continue on a gathered subset and,
        # failing that, in the robust per-lane fallback
        h1, h2, res = self._newton_block(a1, a2, e1, e2, z, h1, h2, 8)
        if not np.all(res <= NEWTON_TOL):
            idx = np.flatnonzero(res > NEWTON_TOL)
            s1, s2, sub = self._newton_block(
                a1[idx], a2[idx], e1[idx], e2[idx], z[idx], h1[idx], h2[idx], NEWTON_CAP
            )
            h1[idx] = s1
            h2[idx] = s2
            res[idx] = sub
            if not np.all(sub <= NEWTON_TOL):
                bad = idx[sub > NEWTON_TOL]
                h1, h2 = self._invert_fallback(bad, q1, e1, q2, e2, z, h1, h2)
        U = np.empty((4, *h1.shape))
        U[0] = h1
        U[1] = q1
        U[2] = h2
        U[3] = q2
        return U

    def _newton_block(self, a1, a2, e1, e2, z, h1, h2, cap):
        """Damped Newton with backtracking and best-iterate tracking.

        Backtracking matters near the internal-critical manifold
        det(J) -> 0, where full Newton steps oscillate; a few polish steps
        after global convergence push residuals to the evaluation noise
        floor (well-balance rests on near-ulp constancy of nodal data).
        """
        g, r = self.params.g, self.params.r

        def residual(x1, x2):
            r1 = a1 / (x1 * x1) + g * (x1 + x2 + z) - e1
            r2 = a2 / (x2 * x2) + g * (r * x1 + x2 + z) - e2
            return r1, r2

        f1, f2 = residual(h1, h2)
        res = np.maximum(np.abs(f1), np.abs(f2))
        res_best = res.copy()
        b1 = h1.copy()
        b2 = h2.copy()
        polish = 3
        stalled = 0
        for _ in range(cap):
            j11 = g - 2.0 * a1 / (h1 * h1 * h1)
            j22 = g - 2.0 * a2 / (h2 * h2 * h2)
            det = j11 * j22 - r * g * g
            with np.errstate(divide="ignore", invalid="ignore"):
                d1 = (j22 * f1 - g * f2) / det
                d2 = (j11 * f2 - r * g * f1) / det
            d1 = np.where(np.isfinite(d1), d1, 0.0)
            d2 = np.where(np.isfinite(d2), d2, 0.0)
            # keep depths within a factor of 10 per step
            d1 = np.clip(d1, -9.0 * h1, 0.9 * h1)
            d2 = np.clip(d2, -9.0 * h2, 0.9 * h2)
            t1 = h1 - d1
            t2 = h2 - d2
            f1, f2 = residual(t1, t2)
            res_try = np.maximum(np.abs(f1), np.abs(f2))
            for _ in range(8):
                shrink = (res_try > res) & (res > NEWTON_TOL)
                if not np.any(shrink):
                    break
                d1 = np.where(shrink, 0.5 * d1, d1)
                d2 = np.where(shrink, 0.5 * d2, d2)
                t1 = np.where(shrink, h1 - d1, t1)
                t2 = np.where(shrink, h2 - d2, t2)
                f1, f2 = residual(t1, t2)
                res_try = np.maximum(np.abs(f1), np.abs(f2))
            h1, h2, res = t1, t2, res_try
            improved = res < res_best
            if np.any(improved):
                b1 = np.where(improved, h1, b1)
                b2 = np.where(improved, h2, b2)
                res_best = np.where(improved, res, res_best)
                stalled = 0
            else:
                stalled += 1
            if np.all(res_best <= NEWTON_TOL):
                if stalled or polish == 0:
                    break
                polish -= 1
            elif stalled >= 4:
                break  # callers route leftover lanes to the fallback
        return b1, b2, res_best

    def _invert_fallback(self, lanes, q1, e1, q2, e2, z, h1, h2):
        """Per-lane reduction to one unknown for the lanes Newton lost.

        The upper-layer relation is solved exactly for h1 at any trial h2
        (bracketed scalar solve on the guess's branch), leaving a single
        residual in h2 that is scanned for the sign-change bracket nearest
        the guess and then bisected. Robust near the internal-critical
        manifold where the coupled Jacobian degenerates.
        """
        g, r = self.params.g, self.params.r
        for i in np.atleast_1d(lanes):
            qa, qb = float(q1[i]), float(q2[i])
            ea, eb = float(e1[i]), float(e2[i])
            zz = float(z[i])
            guess1 = float(h1[i])

            def phi(x2, x1_guess):
                x1 = self._layer_root(qa, ea - g * (x2 + zz), g, x1_guess)
                return 0.5 * qb * qb / (x2 * x2) + g * (r * x1 + x2 + zz) - eb, x1

            factors = np.geomspace(0.2, 5.0, 81)
            trial = float(h2[i]) * factors
            order = np.argsort(np.abs(np.log(factors)))
            vals = {}
            x1_near = guess1
            bracket = None
            for idx in order:
                try:
                    vals[idx], x1_sol = phi(trial[idx], x1_near)
                    x1_near = x1_sol
                except EquilibriumSolveError:
                    vals[idx] = np.nan
                for j in (idx - 1, idx + 1):
                    if j in vals and np.isfinite(vals[j]) and np.isfinite(vals[idx]):
                        if (vals[j] > 0) != (vals[idx] > 0):
                            bracket = (min(trial[j], trial[idx]), max(trial[j], trial[idx]))
                            break
                if bracket:
                    break
            if bracket is None:
                raise EquilibriumSolveError(
                    f"two-layer equilibrium inversion found no admissible root at node {int(i)}",
                    indices=np.array([i]),
                )
            lo, hi = bracket
            flo, x1_sol = phi(lo, guess1)
            fhi, _ = phi(hi, x1_sol)
            x2_sol, fm = lo, flo
            same_side = 0
            for _ in range(80):
                # false position with the Illinois safeguard against one-sided
                # stagnation; falls back to the midpoint when degenerate
                denom = fhi - flo
                mid = (lo * fhi - hi * flo) / denom if denom != 0.0 else 0.5 * (lo + hi)
                if not (min(lo, hi) < mid < max(lo, hi)) or abs(same_side) >= 2:
                    mid = 0.5 * (lo + hi)
                    same_side = 0
                fm, x1_sol = phi(mid, x1_sol)
                x2_sol = mid
                if abs(fm) <= NEWTON_TOL or abs(hi - lo) <= 4.0 * np.spacing(abs(hi)):
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                    same_side = same_side + 1 if same_side >= 0 else 0
                else:
                    hi, fhi = mid, fm
                    same_side = same_side - 1 if same_side <= 0 else 0
            r1 = 0.5 * qa * qa / x1_sol**2 + g * (x1_sol + x2_sol + zz) - ea
            if max(abs(fm), abs(r1)) > NEWTON_TOL:
                raise EquilibriumSolveError(
                    f"two-layer equilibrium inversion failed at node {int(i)} "
                    f"(residual {max(abs(fm), abs(r1)):.3e})",
                    indices=np.array([i]),
                    residual=float(max(abs(fm), abs(r1))),
                )
            h1[i] = x1_sol
            h2[i] = x2_sol
        return h1, h2

    @staticmethod
    def _layer_root(q, rhs, g, guess):
        """Root of q^2/(2 h^2) + g h = rhs on the branch containing guess."""
        a = 0.5 * q * q
        if a == 0.0:
            if rhs <= 0.0:
                raise EquilibriumSolveError("no root: nonpositive single-layer energy")
            return rhs / g
        h_sonic = (2.0 * a / g) ** (1.0 / 3.0)
        f_sonic = a / h_sonic**2 + g * h_sonic
        if rhs < f_sonic - 1e-9 * max(1.0, abs(rhs)):
            raise EquilibriumSolveError("no root: layer energy below critical value")
        rhs = max(rhs, f_sonic)
        phi = lambda h: a / (h * h) + g * h - rhs
        dphi = lambda h: -2.0 * a / (h * h * h) + g
        if guess >= h_sonic:  # subcritical branch, phi increasing
            lo, hi = h_sonic, max(rhs / g, h_sonic)
        else:  # supercritical branch, phi decreasing
            lo, hi = np.sqrt(a / rhs), h_sonic
        x = min(max(guess, min(lo, hi)), max(lo, hi))
        return _bracketed_newton_scalar(phi, dphi, lo, hi, x, NEWTON_TOL, FALLBACK_CAP)

    def hat_geometry(self, gm, gp):
        return 0.5 * (gm + gp)

    def hat_pair(self, U_mid, Em, Ep, geom_hat=None):
        """Hat states by exact-Jacobian splitting around the midpoint solve.

        See the nozzle counterpart; here the response solves the coupled
        2x2 depth system. The determinant g^2 (J11 J22 / g^2 - r) is small
        near criticality (and generically scaled by 1 - r), so ill-conditioned
        lanes are flagged for independent solves.
        """
        g, r = self.params.g, self.params.r
        h1, q1m, h2, q2m = U_mid
        dq1 = Ep[0] - Em[0]
        de1 = Ep[1] - Em[1]
        dq2 = Ep[2] - Em[2]
        de2 = Ep[3] - Em[3]
        j11 = g - q1m * q1m / (h1 * h1 * h1)
        j22 = g - q2m * q2m / (h2 * h2 * h2)
        det = j11 * j22 - r * g * g
        w1 = de1 - (q1m / (h1 * h1)) * dq1
        w2 = de2 - (q2m / (h2 * h2)) * dq2
        with np.errstate(divide="ignore", invalid="ignore"):
            s1 = (j22 * w1 - g * w2) / det
            s2 = (j11 * w2 - r * g * w1) / det
        small = (
            (np.abs(de1) <= 1e-7 * (1.0 + np.abs(Em[1])))
            & (np.abs(de2) <= 1e-7 * (1.0 + np.abs(Em[3])))
            & (np.abs(dq1) <= 1e-7 * (1.0 + np.abs(Em[0])))
            & (np.abs(dq2) <= 1e-7 * (1.0 + np.abs(Em[2])))
        )
        scale_det = np.abs(j11 * j22) + r * g * g
        ok = small & (np.abs(det) > 1e-6 * scale_det) & np.isfinite(s1) & np.isfinite(s2)
        s1 = np.where(ok, s1, 0.0)
        s2 = np.where(ok, s2, 0.0)
        ok = ok & (h1 - 0.5 * np.abs(s1) > 0.0) & (h2 - 0.5 * np.abs(s2) > 0.0)
        Uhm = np.empty_like(U_mid)
        Uhp = np.empty_like(U_mid)
        Uhm[0] = h1 - 0.5 * s1
        Uhp[0] = h1 + 0.5 * s1
        Uhm[2] = h2 - 0.5 * s2
        Uhp[2] = h2 + 0.5 * s2
        Uhm[1] = Em[0]
        Uhp[1] = Ep[0]
        Uhm[3] = Em[2]
        Uhp[3] = Ep[2]
        return Uhm, Uhp, ok

    def _outer_root(self, u1, u2, h1, h2):
        """Largest real root of the coupling quartic, by safeguarded Newton.

        f(x) = ((x-u1)^2 - g h1)((x-u2)^2 - g h2) - r g^2 h1 h2 is negative at
        the largest single-layer root and positive, increasing and convex at
        max(u) + sqrt(g (h1+h2)), so the outermost root always lies between
        those two points regardless of whether the internal pair is real.
        """
        g, r = self.params.g, self.params.r
        lo = np.maximum(u1 + np.sqrt(g * h1), u2 + np.sqrt(g * h2))
        hi = np.maximum(u1, u2) + np.sqrt(g * (h1 + h2))
        hi = np.maximum(hi, lo * (1.0 + 1e-15) + 1e-300)
        rgh = r * g * g * h1 * h2
        x = hi.copy()
        for _ in range(80):
            v1 = (x - u1) ** 2 - g * h1
            v2 = (x - u2) ** 2 - g * h2
            f = v1 * v2 - rgh
            pos = f > 0
            hi = np.where(pos, x, hi)
            lo = np.where(pos, lo, x)
            fp = 2.0 * (x - u1) * v2 + 2.0 * (x - u2) * v1
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - f / fp
            # non-strict bounds: a fixed-point step (xn == x) means converged
            inside = (xn >= lo) & (xn <= hi)
            xn = np.where(inside, xn, 0.5 * (lo + hi))
            if np.all(np.abs(xn - x) <= 1e-13 * (1.0 + np.abs(xn))):
                x = xn
                break
            x = xn
        return x

    def eigen_bounds(self, U):
        """(lambda_min, lambda_max) of the 4x4 quasilinear matrix per state.

        The smallest eigenvalue is the largest of the velocity-reflected
        state, so one batched outer-root solve covers both ends.
        """
        h1, q1, h2, q2 = U
        u1 = q1 / h1
        u2 = q2 / h2
        n = h1.shape[0]
        roots = self._outer_root(
            np.concatenate([u1, -u1]),
            np.concatenate([u2, -u2]),
            np.concatenate([h1, h1]),
            np.concatenate([h2, h2]),
        )
        lmax = roots[:n]
        lmin = -roots[n:]
        self._count_complex_internal(u1, u2, h1, h2, lmin, lmax)
        return lmin, lmax

    def _count_complex_internal(self, u1, u2, h1, h2, lmin, lmax):
        """Diagnostic: detect a complex internal eigenvalue pair by deflation."""
        g, r = self.params.g, self.params.r
        c0 = (u1 * u1 - g * h1) * (u2 * u2 - g * h2) - r * g * g * h1 * h2
        prod = lmin * lmax
        ok = np.abs(prod) > 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            inner_sum = 2.0 * (u1 + u2) - lmin - lmax
            inner_prod = c0 / prod
            disc = inner_sum * inner_sum - 4.0 * inner_prod
        scale = (lmax - lmin) ** 2 + 1.0
        lost = ok & (disc < -1e-12 * scale)
        if np.any(lost):
            self.hyperbolicity_losses += int(np.count_nonzero(lost))

    def speeds(self, Um, Up, gm=None, gp=None):
        both = np.concatenate([Um, Up], axis=1)
        lmin, lmax = self.eigen_bounds(both)
        n = Um.shape[1]
        am = np.minimum(np.minimum(lmin[:n], lmin[n:]), 0.0)
        ap = np.maximum(np.maximum(lmax[:n], lmax[n:]), 0.0)
        return am, ap

    def path_increment(self, Um, Up, Em, Ep):
        u1m = Um[1] / Um[0]
        u1p = Up[1] / Up[0]
        u2m = Um[3] / Um[2]
        u2p = Up[3] / Up[2]
        out = np.empty((2, Um.shape[1]))
        out[0] = 0.5 * (u1p + u1m) * (Ep[0] - Em[0]) + 0.5 * (Up[0] + Um[0]) * (Ep[1] - Em[1])
        out[1] = 0.5 * (u2p + u2m) * (Ep[2] - Em[2]) + 0.5 * (Up[2] + Um[2]) * (Ep[3] - Em[3])
        return out

    def cell_increment_trapezoid(self, Ua, Ub, Ea, Eb):
        u1a = Ua[1] / Ua[0]
        u1b = Ub[1] / Ub[0]
        u2a = Ua[3] / Ua[2]
        u2b = Ub[3] / Ub[2]
        out = np.empty((2, Ua.shape[1]))
        out[0] = 0.5 * (u1b + u1a) * (Eb[0] - Ea[0]) + 0.5 * (Ub[0] + Ua[0]) * (Eb[1] - Ea[1])
        out[1] = 0.5 * (u2b + u2a) * (Eb[2] - Ea[2]) + 0.5 * (Ub[2] + Ua[2]) * (Eb[3] - Ea[3])
        return out

    def cell_increment_quadrature(self, U, E, E_left=None, E_right=None):
        """Per-layer fifth-order cell integrals of u_i (q_i)_x + h_i (E_i)_x.

        Endpoint values per cell (when given) pin the quadrature per layer;
        see the nozzle counterpart for why the sweep needs that.
        """
        win = np.lib.stride_tricks.sliding_window_view
        u1 = U[1] / U[0]
        u2 = U[3] / U[2]
        ends = lambda row: (None, None) if E_left is None else (E_left[row], E_right[row])
        out = np.empty((2, U.shape[1] - 6))
        out[0] = cell_integral_fifth(win(u1, 7), win(E[0], 7), *ends(0)) + cell_integral_fifth(
            win(U[0], 7), win(E[1], 7), *ends(1)
        )
        out[1] = cell_integral_fifth(win(u2, 7), win(E[2], 7), *ends(2)) + cell_integral_fifth(
            win(U[2], 7), win(E[3], 7), *ends(3)
        )
        return out

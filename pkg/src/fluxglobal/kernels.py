"""Interpolation and finite-difference kernels.

Everything here is componentwise and shape-agnostic: inputs may carry any
leading axes, and the five- or seven-point stencil is passed either as
separate arrays (one per node) or along the trailing axis. All kernels are
pure functions.

Constant data propagates bitwise: interpolants and the cell quadrature are
evaluated in offset form (center value plus combinations of differences), so
a constant stencil yields the constant itself and the quadrature of a
nodally-constant derivative argument is exactly zero.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_TINY = float(np.finfo(np.float64).tiny)
_WEIGHT_EPS = 1e-12
_C13 = 13.0 / 12.0
# ideal interpolation weights for the left-biased value at x_{j+1/2}
_D0, _D1, _D2 = 1.0 / 16.0, 10.0 / 16.0, 5.0 / 16.0


def minmod(values, axis=0):
    """Generalized minmod: min if all positive, max if all negative, else 0."""
    v = np.asarray(values, dtype=float)
    if v.shape[axis] == 0:
        raise ValueError("minmod of an empty list")
    pos = np.all(v > 0, axis=axis)
    neg = np.all(v < 0, axis=axis)
    return np.where(pos, v.min(axis=axis), np.where(neg, v.max(axis=axis), 0.0))


def _minmod3(a, b, c):
    """Three-argument minmod without stacking (hot path)."""
    m = np.minimum(np.minimum(a, b), c)
    big = np.maximum(np.maximum(a, b), c)
    pos = m > 0
    neg = big < 0
    return np.where(pos, m, np.where(neg, big, 0.0))


def plr_interface_values(e_prev, e_mid, e_next, theta: float, dx: float):
    """Generalized-minmod piecewise-linear interface values for one cell.

    Returns (slope, value at the cell's right interface, value at its left
    interface); the slope carries 1/dx units.
    """
    if not 1.0 <= theta <= 2.0:
        raise ValueError(f"theta must lie in [1, 2], got {theta}")
    d_lo = np.asarray(e_mid, dtype=float) - e_prev
    d_hi = np.asarray(e_next, dtype=float) - e_mid
    slope = _minmod3(theta * d_hi, 0.5 * (d_lo + d_hi), theta * d_lo) / dx
    half = 0.5 * dx
    return slope, e_mid + half * slope, e_mid - half * slope


def _aiwz_weights(d0, d1, d3, d4):
    """WENO-Z weights from center-offset differences, scale-normalized.

    The Jiang-Shu indicators and the tau = |beta_0 - beta_2| reference are
    divided by their mean (plus a denormal floor), which makes the weights
    invariant under affine rescaling of the data.
    """
    b0 = _C13 * (d0 - 2.0 * d1) ** 2 + 0.25 * (d0 - 4.0 * d1) ** 2
    b1 = _C13 * (d1 + d3) ** 2 + 0.25 * (d1 - d3) ** 2
    b2 = _C13 * (d4 - 2.0 * d3) ** 2 + 0.25 * (d4 - 4.0 * d3) ** 2
    s = (b0 + b1 + b2) * (1.0 / 3.0) + _TINY
    t = np.abs(b0 - b2) / s
    a0 = _D0 * (1.0 + (t / (b0 / s + _WEIGHT_EPS)) ** 2)
    a1 = _D1 * (1.0 + (t / (b1 / s + _WEIGHT_EPS)) ** 2)
    a2 = _D2 * (1.0 + (t / (b2 / s + _WEIGHT_EPS)) ** 2)
    asum = a0 + a1 + a2
    return a0 / asum, a1 / asum, a2 / asum


def aiwenoz_left(fm2, fm1, f0, fp1, fp2):
    """Fifth-order affine-invariant WENO-Z point value at x_{j+1/2}.

    The stencil is the five nodes j-2..j+2 centered on the node to the left
    of the target interface. Candidate quadratic interpolants on
    {j-2,j-1,j}, {j-1,j,j+1}, {j,j+1,j+2} are blended with Z-type nonlinear
    weights around the ideal weights (1/16, 10/16, 5/16).
    """
    d0 = np.asarray(fm2, dtype=float) - f0
    d1 = np.asarray(fm1, dtype=float) - f0
    d3 = np.asarray(fp1, dtype=float) - f0
    d4 = np.asarray(fp2, dtype=float) - f0
    q0 = (3.0 * d0 - 10.0 * d1) * 0.125
    q1 = (3.0 * d3 - d1) * 0.125
    q2 = (6.0 * d3 - d4) * 0.125
    w0, w1, w2 = _aiwz_weights(d0, d1, d3, d4)
    return f0 + (w0 * q0 + w1 * q1 + w2 * q2)


def aiwenoz_right(fm1, f0, fp1, fp2, fp3):
    """Mirror of :func:`aiwenoz_left`: value at x_{j+1/2} seen from node j+1.

    Arguments are the five nodes j-1..j+3; the result is the left kernel
    applied to the reflected stencil.
    """
    return aiwenoz_left(fp3, fp2, fp1, f0, fm1)


def fd_kxx(km2, km1, k0, kp1, kp2, dx: float):
    """Fourth-order approximation of the second derivative at an interface.

    Takes the five interface values j-3/2 .. j+5/2; exact through degree 5.
    """
    return (-(km2 + kp2) + 16.0 * (km1 + kp1) - 30.0 * k0) / (12.0 * dx * dx)


def fd_kxxxx(km2, km1, k0, kp1, kp2, dx: float):
    """Second-order approximation of the fourth derivative at an interface."""
    return ((km2 + kp2) - 4.0 * (km1 + kp1) + 6.0 * k0) / dx**4


def _quadrature_matrices():
    """Value/derivative collocation matrices for the cell quadrature.

    Degree-6 Lagrange basis on the seven unit-spaced nodes -3..3, collocated
    at the five Boole points -1/2, -1/4, 0, 1/4, 1/2 of the center cell.
    Built in exact rational arithmetic.
    """
    nodes = [Fraction(k) for k in range(-3, 4)]
    points = [Fraction(-1, 2), Fraction(-1, 4), Fraction(0), Fraction(1, 4), Fraction(1, 2)]
    value = [[Fraction(0)] * 7 for _ in range(5)]
    deriv = [[Fraction(0)] * 7 for _ in range(5)]
    for i in range(7):
        others = [nodes[m] for m in range(7) if m != i]
        denom = Fraction(1)
        for xm in others:
            denom *= nodes[i] - xm
        for p, x in enumerate(points):
            prod = Fraction(1)
            for xm in others:
                prod *= x - xm
            value[p][i] = prod / denom
            dsum = Fraction(0)
            for k, xk in enumerate(others):
                term = Fraction(1)
                for m, xm in enumerate(others):
                    if m != k:
                        term *= x - xm
                dsum += term
            deriv[p][i] = dsum / denom
    to_float = lambda rows: np.array([[float(c) for c in row] for row in rows])
    return to_float(value), to_float(deriv)


_QUAD_P, _QUAD_D = _quadrature_matrices()
_QUAD_PT = np.ascontiguousarray(_QUAD_P.T)
_QUAD_DT = np.ascontiguousarray(_QUAD_D.T)


def cell_integral_fifth(a_nodes, b_nodes, b_left=None, b_right=None):
    """Boole-rule approximation of the center-cell integral of a(x) b'(x).

    ``a_nodes`` and ``b_nodes`` hold the seven nodal values j-3..j+3 along
    the trailing axis (any leading axes). Both factors are evaluated at the
    five quadrature points from degree-6 polynomial fits, the derivative
    analytically from the fit of b. The dx from the quadrature interval and
    the 1/dx from the derivative cancel, so the result is grid-spacing free.

    ``b_left``/``b_right`` optionally prescribe one-sided values of b at the
    cell's two interfaces. The fit of b is then corrected by the linear ramp
    matching those endpoint values, which adds the cell-mean of a times the
    endpoint-mismatch difference. Global-flux accumulation needs this
    endpoint consistency: the interface jumps manufactured by one-sided
    interpolation must telescope against the cell integrals, or their
    O(dx^5) bias accumulates into an O(dx^4) drift of the global flux.

    Linear in all arguments; exactly zero whenever b is nodally constant and
    the endpoint values equal that constant.
    """
    a = np.asarray(a_nodes, dtype=float)
    b = np.asarray(b_nodes, dtype=float)
    ac = a[..., 3:4]
    bc = b[..., 3:4]
    av = ac + (a - ac) @ _QUAD_PT
    db = (b - bc) @ _QUAD_DT
    w = av * db
    base = (7.0 * (w[..., 0] + w[..., 4]) + 32.0 * (w[..., 1] + w[..., 3]) + 12.0 * w[..., 2]) / 90.0
    if b_left is None and b_right is None:
        return base
    bv = bc + (b - bc) @ _QUAD_PT
    a_mean = (7.0 * (av[..., 0] + av[..., 4]) + 32.0 * (av[..., 1] + av[..., 3]) + 12.0 * av[..., 2]) / 90.0
    mismatch = 0.0
    if b_right is not None:
        mismatch = np.asarray(b_right, dtype=float) - bv[..., 4]
    if b_left is not None:
        mismatch = mismatch - (np.asarray(b_left, dtype=float) - bv[..., 0])
    return base + a_mean * mismatch

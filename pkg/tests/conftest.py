"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fluxglobal.systems import NozzleModel, NozzleParams, TwoLayerModel, TwoLayerParams

CACHE_DIR = Path(__file__).parent / "_cache"


def cached_arrays(name, builder):
    """Disk-memoized dict of arrays for expensive session-level runs.

    Delete tests/_cache to force clean recomputation.
    """
    path = CACHE_DIR / f"{name}.npz"
    if path.exists():
        with np.load(path, allow_pickle=False) as data:
            return {k: data[k] for k in data.files}
    out = builder()
    CACHE_DIR.mkdir(exist_ok=True)
    np.savez(path, **out)
    return out


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def bisect_root(f, lo, hi, iters=200):
    """Plain bisection to ~1e-16 relative; the reference root finder."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lagrange_interp(x_nodes, f_nodes, x):
    """Direct Lagrange interpolation (degree len(nodes)-1)."""
    total = 0.0
    for i, xi in enumerate(x_nodes):
        term = f_nodes[i]
        for m, xm in enumerate(x_nodes):
            if m != i:
                term *= (x - xm) / (xi - xm)
        total += term
    return total


def two_layer_char_roots(h1, q1, h2, q2, g, r):
    """All roots of the two-layer characteristic quartic via numpy.roots."""
    u1, u2 = q1 / h1, q2 / h2
    p1 = np.poly1d([1.0, -2.0 * u1, u1 * u1 - g * h1])
    p2 = np.poly1d([1.0, -2.0 * u2, u2 * u2 - g * h2])
    quart = p1 * p2 - np.poly1d([r * g * g * h1 * h2])
    return np.roots(quart.coeffs)


def two_layer_real_extremes(h1, q1, h2, q2, g, r):
    roots = two_layer_char_roots(h1, q1, h2, q2, g, r)
    scale = 1.0 + np.abs(roots.real).max()
    real = roots[np.abs(roots.imag) < 1e-9 * scale].real
    return real.min(), real.max()


def nozzle_energy(m, q, sigma, kappa, gamma):
    return 0.5 * (q / m) ** 2 + kappa * gamma / (gamma - 1.0) * (m / sigma) ** (gamma - 1.0)


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_layer_model():
    return TwoLayerModel(TwoLayerParams(g=10.0, r=0.98, z_of_x=lambda x: np.zeros_like(x)))


@pytest.fixture
def nozzle_model():
    return NozzleModel(NozzleParams(kappa=1.0, gamma=1.4, sigma_of_x=lambda x: np.ones_like(x)))

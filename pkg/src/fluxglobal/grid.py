"""Uniform 1-D grid with ghost layers and boundary-condition filling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BC_KINDS = ("free", "periodic", "dirichlet")


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of ``n_cells`` cells on [x_min, x_max] plus ghost cells.

    Interior cells are numbered j = 1..N with centers x_j = x_min + (j - 1/2) dx
    and interfaces x_{j+1/2} = x_min + j dx. Ghost cells extend the same
    numbering on both sides. Array storage maps cell j to index j + ghost_width - 1.
    """

    x_min: float
    x_max: float
    n_cells: int
    ghost_width: int
    dx: float = field(init=False)

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise ValueError(f"degenerate interval [{self.x_min}, {self.x_max}]")
        if self.ghost_width < 0:
            raise ValueError(f"ghost_width must be >= 0, got {self.ghost_width}")
        object.__setattr__(self, "dx", (self.x_max - self.x_min) / self.n_cells)

    @property
    def n_total(self) -> int:
        return self.n_cells + 2 * self.ghost_width

    @property
    def interior(self) -> slice:
        return slice(self.ghost_width, self.ghost_width + self.n_cells)

    def center(self, j):
        """Center coordinate of cell j (j may be an array; ghosts allowed)."""
        return self.x_min + (np.asarray(j, dtype=float) - 0.5) * self.dx

    def interface(self, k):
        """Coordinate of interface x_{k+1/2}; k = 0 is the left boundary."""
        return self.x_min + np.asarray(k, dtype=float) * self.dx

    def centers(self, ghosts: bool = True) -> np.ndarray:
        """All cell-center coordinates, exact multiples of dx from x_min."""
        if ghosts:
            j = np.arange(1 - self.ghost_width, self.n_cells + self.ghost_width + 1)
        else:
            j = np.arange(1, self.n_cells + 1)
        return self.x_min + (j - 0.5) * self.dx

    def interfaces(self) -> np.ndarray:
        """The n_cells + 1 interior interface coordinates."""
        return self.x_min + np.arange(self.n_cells + 1) * self.dx


def build_grid(x_min: float, x_max: float, n_cells: int, ghost_width: int) -> Grid:
    return Grid(float(x_min), float(x_max), int(n_cells), int(ghost_width))


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary kinds per side plus Dirichlet data where needed.

    Dirichlet values are per conserved component and fill every ghost cell of
    the corresponding side.
    """

    left: str = "free"
    right: str = "free"
    dirichlet_left: tuple | None = None
    dirichlet_right: tuple | None = None

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in BC_KINDS:
                raise ValueError(f"unknown boundary kind {side!r}; expected one of {BC_KINDS}")
        if (self.left == "periodic") != (self.right == "periodic"):
            raise ValueError("periodic boundaries must be specified on both sides")
        if self.left == "dirichlet" and self.dirichlet_left is None:
            raise ValueError("left dirichlet boundary requires dirichlet_left values")
        if self.right == "dirichlet" and self.dirichlet_right is None:
            raise ValueError("right dirichlet boundary requires dirichlet_right values")


def apply_boundary(fields: np.ndarray, spec: BoundarySpec, grid: Grid) -> np.ndarray:
    """Fill the ghost entries of ``fields`` (ncomp, n_total) in place.

    free:      zeroth-order extrapolation of the nearest interior cell
    periodic:  wrap-around copy (requires ghost_width <= n_cells)
    dirichlet: prescribed component values in every ghost cell of that side
    """
    gw = grid.ghost_width
    if gw == 0:
        return fields
    if fields.shape[-1] != grid.n_total:
        raise ValueError(f"field has {fields.shape[-1]} nodes, grid expects {grid.n_total}")
    n = grid.n_cells
    if spec.left == "periodic":
        if gw > n:
            raise ValueError("periodic boundaries need ghost_width <= n_cells")
        fields[..., :gw] = fields[..., n : n + gw]
        fields[..., n + gw :] = fields[..., gw : 2 * gw]
        return fields
    if spec.left == "free":
        fields[..., :gw] = fields[..., gw : gw + 1]
    else:
        fields[..., :gw] = np.asarray(spec.dirichlet_left, dtype=float)[:, None]
    if spec.right == "free":
        fields[..., n + gw :] = fields[..., n + gw - 1 : n + gw]
    else:
        fields[..., n + gw :] = np.asarray(spec.dirichlet_right, dtype=float)[:, None]
    return fields


def extend_geometry(geom: np.ndarray, spec: BoundarySpec, grid: Grid) -> np.ndarray:
    """Fill ghost entries of the static geometry field (sigma or Z).

    Periodic wraps; the other kinds copy the nearest interior value, which
    keeps ghost equilibrium variables constant whenever the interior state is
    at equilibrium (the property the well-balance tests rely on).
    """
    geom = np.array(geom, dtype=float)
    gw, n = grid.ghost_width, grid.n_cells
    if gw == 0:
        return geom
    if spec.left == "periodic":
        geom[:gw] = geom[n : n + gw]
        geom[n + gw :] = geom[gw : 2 * gw]
    else:
        geom[:gw] = geom[gw]
        geom[n + gw :] = geom[n + gw - 1]
    return geom

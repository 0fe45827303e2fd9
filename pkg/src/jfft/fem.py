"""Matrix-free linear-triangle FE kernels on the regular periodic grid.

Each pixel ``(i1, i2)`` is split along its lower-left to upper-right
diagonal into

* a lower triangle with nodes ``(i1, i2), (i1+1, i2), (i1, i2+1)`` and
* an upper triangle with nodes ``(i1+1, i2+1), (i1, i2+1), (i1+1, i2)``

(indices wrap periodically).  P1 shape functions have constant gradients,
so a single centroid quadrature point per triangle integrates the
symmetrized gradient exactly; all quadrature weights equal half the pixel
area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SQRT2, Grid, QuadField, VectorField


@dataclass(frozen=True)
class QuadratureWeights:
    """Centroid-rule weights; every quadrature point carries the same one."""

    grid: Grid
    per_point: float

    @property
    def total(self) -> float:
        return self.per_point * self.grid.n_quad


def quadrature_weights(grid: Grid) -> QuadratureWeights:
    dx1, dx2 = grid.pixel_size
    return QuadratureWeights(grid, dx1 * dx2 / 2.0)


def _dx(a: np.ndarray, dx1: float) -> np.ndarray:
    return (np.roll(a, -1, axis=0) - a) / dx1


def _dy(a: np.ndarray, dx2: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - a) / dx2


def _dx_t(a: np.ndarray, dx1: float) -> np.ndarray:
    # adjoint of _dx: (roll(+1) - identity) / dx1
    return (np.roll(a, 1, axis=0) - a) / dx1


def _dy_t(a: np.ndarray, dx2: float) -> np.ndarray:
    return (np.roll(a, 1, axis=1) - a) / dx2


def _sym_gradient_values(u: np.ndarray, dx1: float, dx2: float) -> np.ndarray:
    """Strain planes (3, 2, n, n) from displacement planes (2, n, n)."""
    dxu1 = _dx(u[0], dx1)
    dyu1 = _dy(u[0], dx2)
    dxu2 = _dx(u[1], dx1)
    dyu2 = _dy(u[1], dx2)
    s = np.empty((3, 2) + u.shape[1:])
    # lower triangle: gradients anchored at the pixel's lower-left node
    s[0, 0] = dxu1
    s[1, 0] = dyu2
    s[2, 0] = (dyu1 + dxu2) / SQRT2
    # upper triangle: the same differences taken along the far pixel edges
    s[0, 1] = np.roll(dxu1, -1, axis=1)
    s[1, 1] = np.roll(dyu2, -1, axis=0)
    s[2, 1] = (np.roll(dyu1, -1, axis=0) + np.roll(dxu2, -1, axis=1)) / SQRT2
    return s


def _sym_gradient_adjoint_values(s: np.ndarray, dx1: float, dx2: float) -> np.ndarray:
    """Exact transpose of :func:`_sym_gradient_values`."""
    f = np.empty((2,) + s.shape[2:])
    f[0] = (_dx_t(s[0, 0] + np.roll(s[0, 1], 1, axis=1), dx1)
            + _dy_t(s[2, 0] + np.roll(s[2, 1], 1, axis=0), dx2) / SQRT2)
    f[1] = (_dy_t(s[1, 0] + np.roll(s[1, 1], 1, axis=0), dx2)
            + _dx_t(s[2, 0] + np.roll(s[2, 1], 1, axis=1), dx1) / SQRT2)
    return f


def sym_gradient(u: VectorField) -> QuadField:
    """Per-triangle constant Mandel strain of a nodal displacement field.

    Linear in ``u``; a rigid translation maps to the zero field.
    """
    dx1, dx2 = u.grid.pixel_size
    return QuadField(u.grid, _sym_gradient_values(u.values, dx1, dx2))


def sym_gradient_adjoint(s: QuadField) -> VectorField:
    """Transpose of :func:`sym_gradient` (no quadrature weights applied).

    Satisfies ``<sym_gradient(u), s> = <u, sym_gradient_adjoint(s)>`` for the
    plain Euclidean pairings; the caller composes with weights.  The result
    always has zero mean per component.
    """
    dx1, dx2 = s.grid.pixel_size
    return VectorField(s.grid, _sym_gradient_adjoint_values(s.values, dx1, dx2))


def cell_average(s: QuadField, weights: QuadratureWeights) -> np.ndarray:
    """Volume average ``(1/|Y|) * sum_Q w_Q s_Q`` per Mandel component."""
    if weights.grid != s.grid:
        raise ValueError("quadrature weights belong to a different grid")
    scale = weights.per_point / s.grid.cell_volume
    return scale * s.values.sum(axis=(1, 2, 3))

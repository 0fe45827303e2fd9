"""The three PCG preconditioners: Green (FFT-diagonalized pseudo-inverse of
the uniform-data reference operator), Jacobi (probed diagonal scaling), and
their symmetric composition Green-Jacobi.

The reference operator ``K_ref = B^T W C_ref B`` is block-circulant on the
periodic grid, so its Fourier transform is block-diagonal with one Hermitian
``2x2`` block per frequency.  The Green operator stores the per-frequency
Moore-Penrose pseudo-inverse of those blocks; rigid translations (the zero
frequency) map to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField, VectorField
from .material import MaterialModel
from .operators import SystemOperator, apply_system, make_operator

PRECONDITIONER_KINDS = ("none", "green", "jacobi", "green-jacobi")

#: Eigenvalues below this fraction of a block's largest eigenvalue are
#: treated as zero when pseudo-inverting.
_EIG_CUTOFF = 1e-12


@dataclass(frozen=True)
class GreenOperator:
    """Per-frequency pseudo-inverse blocks of the reference operator."""

    grid: Grid
    blocks: np.ndarray  # (n, n//2 + 1, 2, 2) complex, Hermitian PSD
    material_ref: MaterialModel


@dataclass(frozen=True)
class JacobiDiagonal:
    """Reciprocal square roots of ``diag(K)``, one per displacement DOF.

    Zero diagonal entries (voids covering a node's whole stencil) are
    replaced by one before inversion.
    """

    grid: Grid
    inv_sqrt: np.ndarray  # (2, n, n), finite and > 0


def assemble_green(grid: Grid, material_ref: MaterialModel) -> GreenOperator:
    """Build the Green operator from impulse responses of ``K_ref``.

    One unit impulse per displacement component is placed at node (0, 0)
    and pushed through the matrix-free reference operator (uniform density
    one).  The FFT of each response column yields the Fourier blocks of
    ``K_ref``, which are Hermitized and pseudo-inverted frequency by
    frequency.  This stays consistent with the chosen triangulation by
    construction.
    """
    ref_op = make_operator(ScalarField.full(grid, 1.0), material_ref)
    n = grid.n
    khat = np.empty((n, n // 2 + 1, Grid.d, Grid.d), dtype=np.complex128)
    for beta in range(Grid.d):
        impulse = VectorField.zeros(grid)
        impulse.values[beta, 0, 0] = 1.0
        response = apply_system(ref_op, impulse)
        khat[:, :, :, beta] = np.moveaxis(
            np.fft.rfftn(response.values, axes=(1, 2)), 0, -1)
    # rigid translations: the zero-frequency block is zero by construction,
    # up to the rounding of the column sums
    khat[0, 0] = 0.0
    khat = 0.5 * (khat + np.conj(np.swapaxes(khat, -1, -2)))
    eigvals, eigvecs = np.linalg.eigh(khat)
    cutoff = _EIG_CUTOFF * np.clip(eigvals[..., -1:], 0.0, None)
    inv_vals = np.where(eigvals > cutoff, 1.0, 0.0) / np.where(
        eigvals > cutoff, eigvals, 1.0)
    blocks = np.einsum("...ab,...b,...cb->...ac", eigvecs, inv_vals,
                       np.conj(eigvecs))
    blocks[0, 0] = 0.0
    return GreenOperator(grid, blocks, material_ref)


def apply_green(green: GreenOperator, r: VectorField) -> VectorField:
    """Apply the Green operator: inverse FFT of block times forward FFT.

    Symmetric positive semi-definite; the output has zero mean per
    component.  Cost O(n_nodes log n_nodes).
    """
    if r.grid != green.grid:
        raise ValueError("residual lives on a different grid")
    rhat = np.fft.rfftn(r.values, axes=(1, 2))
    zhat = np.einsum("xyab,bxy->axy", green.blocks, rhat)
    n = green.grid.n
    return VectorField(green.grid, np.fft.irfftn(zhat, s=(n, n), axes=(1, 2)))


def assemble_jacobi(op: SystemOperator) -> JacobiDiagonal:
    """Probe ``diag(K)`` with d * 2^d = 8 operator applications.

    For each displacement component and each parity offset, a comb vector
    carries ones on every other node in both directions.  The P1 stencil
    radius is one, below the comb spacing of two, so the operator response
    at a comb node is exactly the wanted diagonal entry.
    """
    grid = op.grid
    if grid.n % 2 != 0:
        raise ValueError("diagonal probing requires an even node count")
    diag = np.empty((Grid.d, grid.n, grid.n))
    for alpha in range(Grid.d):
        for o1 in (0, 1):
            for o2 in (0, 1):
                comb = VectorField.zeros(grid)
                comb.values[alpha, o1::2, o2::2] = 1.0
                response = apply_system(op, comb)
                diag[alpha, o1::2, o2::2] = response.values[alpha, o1::2, o2::2]
    if np.any(diag < 0.0) or not np.all(np.isfinite(diag)):
        raise ValueError("probed diagonal has negative or non-finite entries")
    diag[diag == 0.0] = 1.0
    return JacobiDiagonal(grid, 1.0 / np.sqrt(diag))


def apply_jacobi_half(jacobi: JacobiDiagonal, r: VectorField) -> VectorField:
    """Entrywise multiply by ``1/sqrt(diag(K))``."""
    return VectorField(jacobi.grid, jacobi.inv_sqrt * r.values)


def apply_jacobi(jacobi: JacobiDiagonal, r: VectorField) -> VectorField:
    """Entrywise multiply by ``1/diag(K)``, i.e. the half split applied twice."""
    return VectorField(jacobi.grid, jacobi.inv_sqrt * (jacobi.inv_sqrt * r.values))


def apply_green_jacobi(jacobi: JacobiDiagonal, green: GreenOperator,
                       r: VectorField) -> VectorField:
    """Symmetric composition ``J^(1/2) G J^(1/2) r``."""
    z = apply_green(green, apply_jacobi_half(jacobi, r))
    return apply_jacobi_half(jacobi, z)


@dataclass(frozen=True)
class Preconditioner:
    """Tagged preconditioner variant with its assembled state."""

    kind: str
    green: GreenOperator | None = None
    jacobi: JacobiDiagonal | None = None

    def __post_init__(self):
        if self.kind not in PRECONDITIONER_KINDS:
            raise ValueError(f"unknown preconditioner {self.kind!r}; "
                             f"choose one of {PRECONDITIONER_KINDS}")
        if self.kind in ("green", "green-jacobi") and self.green is None:
            raise ValueError(f"{self.kind!r} needs an assembled Green operator")
        if self.kind in ("jacobi", "green-jacobi") and self.jacobi is None:
            raise ValueError(f"{self.kind!r} needs an assembled Jacobi diagonal")

    def apply(self, r: VectorField) -> VectorField:
        if self.kind == "none":
            return VectorField(r.grid, r.values.copy())
        if self.kind == "green":
            return apply_green(self.green, r)
        if self.kind == "jacobi":
            return apply_jacobi(self.jacobi, r)
        return apply_green_jacobi(self.jacobi, self.green, r)


def build_preconditioner(kind: str, op: SystemOperator,
                         green: GreenOperator) -> Preconditioner:
    """Assemble whatever state the requested preconditioner kind needs."""
    jacobi = assemble_jacobi(op) if kind in ("jacobi", "green-jacobi") else None
    used_green = green if kind in ("green", "green-jacobi") else None
    return Preconditioner(kind, green=used_green, jacobi=jacobi)

"""Periodic regular-grid bookkeeping: index maps, field containers, Mandel
algebra, FFT helpers, and the field file format.

Conventions used throughout the package:

* The cell is a 2D rectangle of side lengths ``lengths`` split into ``n``
  pixels per direction.  Nodes and pixels share the index pair ``(i1, i2)``
  with ``i1`` the fastest-running direction; the linear index of a node or
  pixel is ``I = i1 + n * i2``.  Periodicity means node ``(n, j)`` is node
  ``(0, j)``; no boundary layer is duplicated.
* Every pixel is split into two triangles along its lower-left to
  upper-right diagonal, giving two quadrature points per pixel
  (``triangle`` index 0 = lower, 1 = upper).
* Symmetric 2x2 tensors are stored as Mandel vectors ``(a11, a22,
  sqrt(2)*a12)`` so that the Euclidean dot product of two Mandel vectors
  equals the tensor double contraction.
* FFTs use the unnormalized forward transform and put the ``1/N`` factor on
  the inverse (numpy's default), in the real-to-complex layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

#: Number of Mandel components of a symmetric 2x2 tensor.
MANDEL_DIM = 3

SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class Grid:
    """Regular periodic grid with ``n`` nodes (= pixels) per direction."""

    n: int
    lengths: tuple[float, float] = (1.0, 1.0)

    #: Spatial dimension.  Only d = 2 is implemented.
    d = 2

    @property
    def pixel_size(self) -> tuple[float, float]:
        return (self.lengths[0] / self.n, self.lengths[1] / self.n)

    @property
    def n_nodes(self) -> int:
        return self.n ** 2

    @property
    def n_pixels(self) -> int:
        return self.n ** 2

    @property
    def n_quad(self) -> int:
        return 2 * self.n ** 2

    @property
    def cell_volume(self) -> float:
        return self.lengths[0] * self.lengths[1]

    def node_index(self, i1: int, i2: int) -> int:
        """Linear node index with periodic wrap, ``i1`` fastest."""
        return (i1 % self.n) + self.n * (i2 % self.n)

    def node_coords(self, index: int) -> tuple[int, int]:
        """Inverse of :meth:`node_index` for ``0 <= index < n_nodes``."""
        return (index % self.n, index // self.n)

    # Pixels use the same (i1, i2) <-> linear map as nodes.
    pixel_index = node_index
    pixel_coords = node_coords

    def quad_index(self, pixel: int, triangle: int) -> int:
        """Linear quadrature index; triangle-major over pixel planes."""
        return triangle * self.n_pixels + pixel


def make_grid(n: int, lengths: tuple[float, float] = (1.0, 1.0)) -> Grid:
    """Create a validated :class:`Grid`.

    Parameters
    ----------
    n : int
        Nodes (and pixels) per direction, at least 2.
    lengths : (float, float)
        Cell side lengths, strictly positive.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"grid needs n >= 2 nodes per direction, got {n}")
    l1, l2 = (float(lengths[0]), float(lengths[1]))
    if l1 <= 0.0 or l2 <= 0.0:
        raise ValueError(f"cell side lengths must be positive, got {lengths}")
    return Grid(int(n), (l1, l2))


def _as_float_array(values, shape, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{what} has shape {arr.shape}, expected {shape}")
    return arr


@dataclass
class ScalarField:
    """One real value per pixel (densities) or per node, shape ``(n, n)``."""

    grid: Grid
    values: np.ndarray
    site: str = "pixel"

    def __post_init__(self):
        if self.site not in ("pixel", "node"):
            raise ValueError(f"unknown site kind {self.site!r}")
        n = self.grid.n
        self.values = _as_float_array(self.values, (n, n), "scalar field")

    @classmethod
    def zeros(cls, grid: Grid, site: str = "pixel") -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)), site)

    @classmethod
    def full(cls, grid: Grid, value: float, site: str = "pixel") -> "ScalarField":
        return cls(grid, np.full((grid.n, grid.n), float(value)), site)


@dataclass
class VectorField:
    """Nodal displacement-like field, one ``(n, n)`` plane per component."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        self.values = _as_float_array(self.values, (Grid.d, n, n), "vector field")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((Grid.d, grid.n, grid.n)))

    def component_means(self) -> np.ndarray:
        return self.values.mean(axis=(1, 2))


@dataclass
class QuadField:
    """Mandel-vector field at quadrature points, shape ``(3, 2, n, n)``.

    Axis order is (Mandel component, triangle, i1, i2).
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        self.values = _as_float_array(
            self.values, (MANDEL_DIM, 2, n, n), "quadrature field")

    @classmethod
    def zeros(cls, grid: Grid) -> "QuadField":
        return cls(grid, np.zeros((MANDEL_DIM, 2, grid.n, grid.n)))


# ----------------------------------------------------------------------------
# Mandel algebra
# ----------------------------------------------------------------------------

def to_mandel(tensor) -> np.ndarray:
    """Map a symmetric 2x2 tensor to its Mandel vector (11, 22, sqrt2*12)."""
    t = np.asarray(tensor, dtype=np.float64)
    if t.shape != (2, 2):
        raise ValueError(f"expected a 2x2 tensor, got shape {t.shape}")
    if not np.allclose(t[0, 1], t[1, 0], rtol=0.0, atol=1e-14 * max(1.0, abs(t).max())):
        raise ValueError("tensor is not symmetric")
    return np.array([t[0, 0], t[1, 1], SQRT2 * t[0, 1]])


def from_mandel(vec) -> np.ndarray:
    """Inverse of :func:`to_mandel`."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (MANDEL_DIM,):
        raise ValueError(f"expected a length-{MANDEL_DIM} Mandel vector, got {v.shape}")
    off = v[2] / SQRT2
    return np.array([[v[0], off], [off, v[1]]])


# ----------------------------------------------------------------------------
# FFT contract used by the Green preconditioner
# ----------------------------------------------------------------------------

def spectral_shape(grid: Grid) -> tuple[int, int, int]:
    """Shape of the real-to-complex spectrum of a vector field."""
    return (Grid.d, grid.n, grid.n // 2 + 1)


def fft_forward(u: VectorField) -> np.ndarray:
    """Unnormalized forward FFT of each component plane.

    Returns the half-spectrum of the real-to-complex layout; Hermitian
    symmetry of the full spectrum is implied.  A constant field ``c`` maps to
    ``c * n_nodes`` at the zero frequency.
    """
    return np.fft.rfftn(u.values, axes=(1, 2))


def fft_inverse(spectrum: np.ndarray, grid: Grid) -> VectorField:
    """Inverse of :func:`fft_forward` (carries the ``1/N`` normalization)."""
    if spectrum.shape != spectral_shape(grid):
        raise ValueError(
            f"spectrum has shape {spectrum.shape}, expected {spectral_shape(grid)}")
    return VectorField(grid, np.fft.irfftn(spectrum, s=(grid.n, grid.n), axes=(1, 2)))


# ----------------------------------------------------------------------------
# Field file format: JSON header + sibling raw file of little-endian doubles
# ----------------------------------------------------------------------------

_KIND_OF_TYPE = {ScalarField: "scalar", VectorField: "vector", QuadField: "quad"}


def _raw_planes(field) -> list[np.ndarray]:
    # Declared raw order is x1-fastest within each (n, n) plane; planes are
    # component-major (and triangle-major within a Mandel component for quad
    # fields).
    if isinstance(field, ScalarField):
        return [field.values]
    if isinstance(field, VectorField):
        return [field.values[a] for a in range(Grid.d)]
    if isinstance(field, QuadField):
        return [field.values[m, t] for m in range(MANDEL_DIM) for t in range(2)]
    raise TypeError(f"not a field: {type(field).__name__}")


def save_field(basepath, field) -> None:
    """Write ``<basepath>.json`` (header) and ``<basepath>.raw`` (payload)."""
    base = str(basepath)
    header = {
        "kind": _KIND_OF_TYPE[type(field)],
        "d": Grid.d,
        "n": field.grid.n,
        "lengths": list(field.grid.lengths),
        "order": "x1-fastest",
        "dtype": "float64-le",
    }
    with open(base + ".json", "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    payload = np.concatenate([p.ravel(order="F") for p in _raw_planes(field)])
    payload.astype("<f8").tofile(base + ".raw")


def load_field(basepath):
    """Read a field written by :func:`save_field`; scalar fields load as
    pixel-site densities."""
    base = str(basepath)
    with open(base + ".json") as fh:
        header = json.load(fh)
    for key in ("kind", "d", "n", "lengths", "order", "dtype"):
        if key not in header:
            raise ValueError(f"field header {base}.json misses key {key!r}")
    if header["d"] != Grid.d:
        raise ValueError(f"unsupported dimension d={header['d']}")
    if header["order"] != "x1-fastest" or header["dtype"] != "float64-le":
        raise ValueError("unsupported field file layout "
                         f"(order={header['order']!r}, dtype={header['dtype']!r})")
    grid = make_grid(header["n"], tuple(header["lengths"]))
    raw = np.fromfile(base + ".raw", dtype="<f8")
    n = grid.n
    kind = header["kind"]
    if kind == "scalar":
        expected = n * n
        shape_planes = 1
    elif kind == "vector":
        expected = Grid.d * n * n
        shape_planes = Grid.d
    elif kind == "quad":
        expected = MANDEL_DIM * 2 * n * n
        shape_planes = MANDEL_DIM * 2
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    if raw.size != expected:
        raise ValueError(
            f"{base}.raw holds {raw.size} doubles, expected {expected}")
    planes = [raw[k * n * n:(k + 1) * n * n].reshape((n, n), order="F")
              for k in range(shape_planes)]
    if kind == "scalar":
        return ScalarField(grid, planes[0], site="pixel")
    if kind == "vector":
        return VectorField(grid, np.stack(planes))
    values = np.stack(planes).reshape(MANDEL_DIM, 2, n, n)
    return QuadField(grid, values)

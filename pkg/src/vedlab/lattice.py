"""Spectral fields on a periodic lattice.

The lattice [0, L)^dim discretizes R^dim for frequencies between
2*pi/L and pi*n/L.  All transforms are unitary (norm="ortho"), so
Parseval holds as an equality and the physical L^2 norm equals the
weighted l^2 norm of the coefficients.

Conventions, fixed project-wide:

* inverse transform synthesizes with e^{+i xi.x}, hence the
  derivative d/dx_j acts on coefficients as multiplication by
  i*xi_j;
* homogeneous symbols (negative powers of |xi|) send the zero mode
  to zero;
* physical L^p norms use midpoint quadrature with cell volume
  (L/n)^dim, which is exact for L^2 of band-limited fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

Symbol = Callable[[np.ndarray], np.ndarray]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic grid with n points per dimension and period L."""

    dim: int
    n: int
    period: float

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not _is_power_of_two(self.n) or self.n < 8:
            raise ValueError(f"points per dim must be a power of two >= 8, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @cached_property
    def k_int(self) -> np.ndarray:
        """Integer mode numbers, shape (dim, n, ..., n)."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        axes = [k1.reshape((-1,) + (1,) * (self.dim - 1 - i)) for i in range(self.dim)]
        return np.stack(np.broadcast_arrays(*axes))

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency vectors (2*pi/L)*k, shape (dim, n, ..., n)."""
        return (2.0 * np.pi / self.period) * self.k_int

    @cached_property
    def xi_mag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.xi ** 2, axis=0))

    @property
    def xi_min(self) -> float:
        """Smallest nonzero frequency magnitude."""
        return 2.0 * np.pi / self.period

    @property
    def xi_max(self) -> float:
        return self.xi_min * (self.n // 2) * math.sqrt(self.dim)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (all |k_i| <= n/3)."""
        keep = np.ones(self.shape, dtype=bool)
        for a in range(self.dim):
            keep &= np.abs(self.k_int[a]) <= self.n / 3.0
        return keep

    def grid(self) -> np.ndarray:
        """Physical coordinates, shape (dim, n, ..., n)."""
        x1 = np.arange(self.n) * self.spacing
        axes = [x1.reshape((-1,) + (1,) * (self.dim - 1 - i)) for i in range(self.dim)]
        return np.stack(np.broadcast_arrays(*axes))


def _reflect(arr: np.ndarray) -> np.ndarray:
    """Values at -k for an array indexed by fft-ordered k."""
    out = arr
    for a in range(arr.ndim):
        out = np.roll(np.flip(out, axis=a), 1, axis=a)
    return out


@dataclass(frozen=True)
class SpectralField:
    """A scalar field stored by its DFT coefficients.

    hermitian is True iff the physical-space values are real, which
    is equivalent to coeffs(-k) == conj(coeffs(k)).
    """

    lattice: Lattice
    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        if self.coeffs.shape != self.lattice.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match lattice {self.lattice.shape}"
            )

    def physical(self) -> np.ndarray:
        vals = sfft.ifftn(self.coeffs, norm="ortho")
        if self.hermitian:
            return vals.real
        return vals

    def zero_mode(self) -> complex:
        return complex(self.coeffs[(0,) * self.lattice.dim])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_lattice(self, other)
        return SpectralField(self.lattice, self.coeffs + other.coeffs,
                             self.hermitian and other.hermitian)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_lattice(self, other)
        return SpectralField(self.lattice, self.coeffs - other.coeffs,
                             self.hermitian and other.hermitian)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs * c,
                             self.hermitian and not isinstance(c, complex))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.lattice, -self.coeffs, self.hermitian)


def _check_same_lattice(a, b):
    if a.lattice != b.lattice:
        raise ValueError("fields live on different lattices")


@dataclass(frozen=True)
class VectorField:
    """dim spectral components sharing one lattice."""

    components: tuple

    def __post_init__(self):
        lat = self.components[0].lattice
        if len(self.components) != lat.dim:
            raise ValueError(f"expected {lat.dim} components, got {len(self.components)}")
        for c in self.components:
            if c.lattice != lat:
                raise ValueError("components live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.components[0].lattice

    @property
    def hermitian(self) -> bool:
        return all(c.hermitian for c in self.components)

    def __getitem__(self, i: int) -> SpectralField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self, other)))

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(tuple(a * c for a in self))

    __rmul__ = __mul__


@dataclass(frozen=True)
class MatrixField:
    """dim x dim spectral components sharing one lattice."""

    components: tuple  # tuple of rows, each a tuple of SpectralField

    def __post_init__(self):
        lat = self.components[0][0].lattice
        d = lat.dim
        if len(self.components) != d or any(len(row) != d for row in self.components):
            raise ValueError(f"expected a {d}x{d} grid of components")
        for row in self.components:
            for c in row:
                if c.lattice != lat:
                    raise ValueError("components live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.components[0][0].lattice

    @property
    def hermitian(self) -> bool:
        return all(c.hermitian for row in self.components for c in row)

    def __getitem__(self, ij) -> SpectralField:
        i, j = ij
        return self.components[i][j]

    def flat(self):
        for row in self.components:
            yield from row

    def transpose(self) -> "MatrixField":
        d = self.lattice.dim
        return MatrixField(tuple(tuple(self.components[j][i] for j in range(d))
                                 for i in range(d)))

    def _zip(self, other, op):
        d = self.lattice.dim
        return MatrixField(tuple(tuple(op(self.components[i][j], other.components[i][j])
                                       for j in range(d)) for i in range(d)))

    def __add__(self, other: "MatrixField") -> "MatrixField":
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, c: float) -> "MatrixField":
        d = self.lattice.dim
        return MatrixField(tuple(tuple(self.components[i][j] * c for j in range(d))
                                 for i in range(d)))

    __rmul__ = __mul__


def dft_forward(values: np.ndarray, lattice: Lattice) -> SpectralField:
    """Physical samples to spectral coefficients (unitary transform)."""
    if values.shape != lattice.shape:
        raise ValueError(f"value shape {values.shape} does not match lattice {lattice.shape}")
    hermitian = np.isrealobj(values)
    coeffs = sfft.fftn(np.asarray(values, dtype=np.complex128), norm="ortho")
    return SpectralField(lattice, coeffs, hermitian)


def dft_inverse(field: SpectralField) -> np.ndarray:
    return field.physical()


def apply_multiplier(field: SpectralField, symbol: Symbol,
                     hermitian_symbol: bool | None = None) -> SpectralField:
    """Multiply coefficients pointwise by symbol(xi).

    symbol receives the stacked frequency array of shape (dim, n, ..., n)
    and must return a broadcastable array.  A non-finite value at the
    zero mode is replaced by 0 (the convention for homogeneous symbols);
    the symbol must be finite on all nonzero lattice frequencies.

    hermitian_symbol declares whether symbol(-xi) == conj(symbol(xi));
    when None it is checked numerically.
    """
    lat = field.lattice
    with np.errstate(all="ignore"):
        sym = np.asarray(symbol(lat.xi))
    sym = np.broadcast_to(sym, lat.shape).copy()
    origin = (0,) * lat.dim
    if not np.isfinite(sym[origin]):
        sym[origin] = 0.0
    if not np.all(np.isfinite(sym)):
        raise ValueError("symbol is non-finite away from the zero mode")
    if hermitian_symbol is None:
        hermitian_symbol = np.allclose(_reflect(sym), np.conj(sym), rtol=1e-12, atol=1e-14)
    return SpectralField(lat, field.coeffs * sym,
                         field.hermitian and bool(hermitian_symbol))


def lambda_power(field: SpectralField, s: float) -> SpectralField:
    """|xi|^s multiplier; the zero mode goes to 0 for any s != 0."""
    lat = field.lattice
    with np.errstate(all="ignore"):
        sym = lat.xi_mag ** s
        out = field.coeffs * sym
    origin = (0,) * lat.dim
    if s != 0:
        out[origin] = 0.0
    return SpectralField(lat, out, field.hermitian)


def derivative(field: SpectralField, axis: int) -> SpectralField:
    coeffs = field.coeffs * (1j * field.lattice.xi[axis])
    return SpectralField(field.lattice, coeffs, field.hermitian)


def gradient(field: SpectralField) -> VectorField:
    return VectorField(tuple(derivative(field, a) for a in range(field.lattice.dim)))


def jacobian(v: VectorField) -> MatrixField:
    """Matrix of derivatives J_ij = d v^i / d x_j."""
    d = v.lattice.dim
    return MatrixField(tuple(tuple(derivative(v[i], j) for j in range(d))
                             for i in range(d)))


def divergence(v: VectorField) -> SpectralField:
    lat = v.lattice
    out = np.zeros(lat.shape, dtype=np.complex128)
    for a in range(lat.dim):
        out += 1j * lat.xi[a] * v[a].coeffs
    return SpectralField(lat, out, v.hermitian)


def leray_div(v: VectorField) -> SpectralField:
    """d = Lambda^{-1} div v, with coeffs i (xi.v)/|xi| and zero mode 0.

    For a gradient v = grad g this returns -Lambda g.
    """
    lat = v.lattice
    num = np.zeros(lat.shape, dtype=np.complex128)
    for a in range(lat.dim):
        num += 1j * lat.xi[a] * v[a].coeffs
    with np.errstate(all="ignore"):
        out = num / lat.xi_mag
    out[(0,) * lat.dim] = 0.0
    return SpectralField(lat, out, v.hermitian)


def leray_curl(v: VectorField) -> MatrixField:
    """Omega_ij = Lambda^{-1} (d_j v^i - d_i v^j); antisymmetric."""
    lat = v.lattice
    d = lat.dim
    with np.errstate(all="ignore"):
        inv_mag = 1.0 / lat.xi_mag
    inv_mag[(0,) * d] = 0.0
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            c = 1j * (lat.xi[j] * v[i].coeffs - lat.xi[i] * v[j].coeffs) * inv_mag
            row.append(SpectralField(lat, c, v.hermitian))
        rows.append(tuple(row))
    return MatrixField(tuple(rows))


def dealias(field: SpectralField) -> SpectralField:
    """Zero all modes with any |k_i| > n/3 (the 2/3 rule)."""
    return SpectralField(field.lattice, field.coeffs * field.lattice.dealias_mask,
                         field.hermitian)


def _component_list(obj) -> list:
    if isinstance(obj, SpectralField):
        return [obj]
    if isinstance(obj, VectorField):
        return list(obj.components)
    if isinstance(obj, MatrixField):
        return list(obj.flat())
    return list(obj)


def lp_norm(obj, p: float) -> float:
    """Physical L^p norm; multi-component input uses the pointwise
    Euclidean magnitude.  p = inf gives the max norm."""
    comps = _component_list(obj)
    lat = comps[0].lattice
    mag2 = np.zeros(lat.shape)
    for c in comps:
        vals = c.physical()
        mag2 += np.abs(vals) ** 2
    mag = np.sqrt(mag2)
    if p == np.inf:
        return float(np.max(mag))
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    return float(np.sum(mag ** p) ** (1.0 / p) * lat.cell_volume ** (1.0 / p))


def l2_norm_spectral(obj) -> float:
    """L^2 norm evaluated on coefficients (Parseval, exact)."""
    comps = _component_list(obj)
    lat = comps[0].lattice
    total = 0.0
    for c in comps:
        total += float(np.sum(np.abs(c.coeffs) ** 2))
    return math.sqrt(total * lat.cell_volume)


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """Real L^2 inner product via Parseval."""
    _check_same_lattice(f, g)
    val = np.sum(np.conj(f.coeffs) * g.coeffs).real
    return float(val * f.lattice.cell_volume)


def zero_field(lattice: Lattice) -> SpectralField:
    return SpectralField(lattice, np.zeros(lattice.shape, dtype=np.complex128), True)


def field_from_coeffs(lattice: Lattice, coeffs: np.ndarray,
                      hermitian: bool | None = None) -> SpectralField:
    """Wrap raw coefficients; hermitian is checked when not supplied."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if hermitian is None:
        hermitian = bool(np.allclose(_reflect(coeffs), np.conj(coeffs),
                                     rtol=1e-10, atol=1e-12))
    return SpectralField(lattice, coeffs, hermitian)

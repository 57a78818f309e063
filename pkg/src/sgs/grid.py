"""Periodic cubic grid: field containers, spectral calculus, interpolation, I/O.

Internal units set hbar = m = 1; lengths and times are dimensionless. Nodes
sit at ``x_i = (i - n/2) * h`` per axis with ``h = box_length / n``, covering
``[-L/2, L/2)``. Differentiation is spectral: soliton tails decay
exponentially, so periodic-image artifacts are controlled by box size alone.

Binary dump format (little-endian): magic ``SGS1`` (4 bytes), ``n_per_axis``
(u32), ``box_length`` (f64), kind tag (u8: 0 = real, 1 = complex), then
row-major f64 values, re/im interleaved for complex fields.
"""

from dataclasses import dataclass
from functools import lru_cache
import struct

import numpy as np
import scipy.fft as _fft

# pocketfft partitions work over independent transform lines, so results do
# not depend on the worker count; this is a pure speed knob (see cli).
FFT_WORKERS = 1


def fftn(a):
    return _fft.fftn(a, workers=FFT_WORKERS)


def ifftn(a):
    return _fft.ifftn(a, workers=FFT_WORKERS)


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid: ``n_per_axis`` points per axis, side ``box_length``."""

    n_per_axis: int
    box_length: float

    def __post_init__(self):
        n = self.n_per_axis
        if not isinstance(n, (int, np.integer)) or n < 8 or n % 2 != 0:
            raise ValueError(f"n_per_axis must be an even integer >= 8, got {n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def spacing(self):
        return self.box_length / self.n_per_axis

    @property
    def shape(self):
        return (self.n_per_axis,) * 3

    @property
    def cell_volume(self):
        return self.spacing**3

    def axis_coordinates(self):
        """1D node coordinates (identical on all three axes)."""
        n = self.n_per_axis
        return (np.arange(n) - n // 2) * self.spacing

    def meshgrid(self):
        x = self.axis_coordinates()
        return np.meshgrid(x, x, x, indexing="ij")

    def wavenumbers(self):
        """1D angular wavenumbers in FFT layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_per_axis, d=self.spacing)


@lru_cache(maxsize=8)
def _k_squared(spec):
    k = spec.wavenumbers()
    k2 = (
        k[:, None, None] ** 2
        + k[None, :, None] ** 2
        + k[None, None, :] ** 2
    )
    k2.setflags(write=False)
    return k2


def k_squared(spec):
    """|k|^2 on the full grid (cached, read-only)."""
    return _k_squared(spec)


class _Field:
    """Shared container behaviour; treat instances as immutable."""

    _dtype = None

    def __init__(self, spec, values, check=True):
        values = np.asarray(values, dtype=self._dtype)
        if values.shape != spec.shape:
            if values.size == spec.n_per_axis**3:
                values = values.reshape(spec.shape)
            else:
                raise ValueError(
                    f"values shape {values.shape} incompatible with grid {spec.shape}"
                )
        if check and not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.spec = spec
        self.values = values

    def copy(self):
        return type(self)(self.spec, self.values.copy(), check=False)


class ComplexField(_Field):
    """Complex scalar field sampled on a :class:`GridSpec`."""

    _dtype = np.complex128


class RealField(_Field):
    """Real scalar field sampled on a :class:`GridSpec`."""

    _dtype = np.float64


def _wrap(spec, values):
    """Box grid output in the matching field type."""
    if np.iscomplexobj(values):
        return ComplexField(spec, values, check=False)
    return RealField(spec, values, check=False)


def spectral_gradient(f):
    """Cartesian partial derivatives computed in Fourier space.

    Exact (to round-off) for band-limited fields. A real input returns real
    derivative fields.

    Returns
    -------
    (fx, fy, fz) : tuple of fields matching the input type
    """
    spec = f.spec
    fk = fftn(f.values)
    k = spec.wavenumbers()
    real_in = not np.iscomplexobj(f.values)
    out = []
    for axis in range(3):
        shape = [1, 1, 1]
        shape[axis] = spec.n_per_axis
        dk = ifftn(fk * (1j * k.reshape(shape)))
        out.append(_wrap(spec, dk.real if real_in else dk))
    return tuple(out)


def laplacian(f):
    """Spectral Laplacian; multiplier ``-|k|^2``."""
    spec = f.spec
    out = ifftn(fftn(f.values) * (-k_squared(spec)))
    if not np.iscomplexobj(f.values):
        out = out.real
    return _wrap(spec, out)


def l2_norm_sq(f):
    """Riemann-sum squared L2 norm: ``sum |f|^2 * h^3``."""
    v = f.values
    return float(np.sum(v.real**2 + v.imag**2) * f.spec.cell_volume) \
        if np.iscomplexobj(v) else float(np.sum(v**2) * f.spec.cell_volume)


def spectral_norm_sq(f):
    """Squared L2 norm evaluated in wavenumber space (Parseval check)."""
    fk = fftn(f.values)
    n3 = f.spec.n_per_axis**3
    return float(np.sum(np.abs(fk) ** 2) * f.spec.cell_volume / n3)


def interpolate(f, x):
    """Trilinear interpolation at one point or a batch of points.

    Points outside the box wrap periodically.

    Parameters
    ----------
    f : ComplexField or RealField
    x : (3,) or (P, 3) array-like

    Returns
    -------
    scalar for a single point, (P,) ndarray for a batch.
    """
    from . import backend

    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.ascontiguousarray(pts.reshape(-1, 3))
    out = backend.trilinear(f.values, f.spec.box_length, pts)
    return out[0] if single else out


def barycentre(density, spec):
    """Density-weighted mean position (coordinates not unwrapped; callers
    keep structures away from the box boundary)."""
    total = density.sum()
    if total <= 0:
        return np.zeros(3)
    x = spec.axis_coordinates()
    return np.array(
        [
            float(np.sum(density.sum(axis=(1, 2)) * x)),
            float(np.sum(density.sum(axis=(0, 2)) * x)),
            float(np.sum(density.sum(axis=(0, 1)) * x)),
        ]
    ) / total


def rms_radius(density, spec, center=None):
    """Root-mean-square radius of a density about its barycentre."""
    if center is None:
        center = barycentre(density, spec)
    x = spec.axis_coordinates()
    total = density.sum()
    if total <= 0:
        return 0.0
    r2 = (
        np.sum(density.sum(axis=(1, 2)) * (x - center[0]) ** 2)
        + np.sum(density.sum(axis=(0, 2)) * (x - center[1]) ** 2)
        + np.sum(density.sum(axis=(0, 1)) * (x - center[2]) ** 2)
    )
    return float(np.sqrt(r2 / total))


_MAGIC = b"SGS1"
_KIND_REAL = 0
_KIND_COMPLEX = 1


def write_field(path, field):
    """Write a field in the SGS1 binary dump format."""
    kind = _KIND_COMPLEX if isinstance(field, ComplexField) else _KIND_REAL
    header = _MAGIC + struct.pack(
        "<Id B", field.spec.n_per_axis, field.spec.box_length, kind
    )
    with open(path, "wb") as fh:
        fh.write(header)
        if kind == _KIND_COMPLEX:
            inter = np.empty(field.values.size * 2, dtype="<f8")
            flat = field.values.ravel()
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            inter.tofile(fh)
        else:
            field.values.ravel().astype("<f8").tofile(fh)


def read_field(path):
    """Read a field written by :func:`write_field`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not an SGS1 dump: magic {magic!r}")
        n, box_length, kind = struct.unpack("<Id B", fh.read(13))
        spec = GridSpec(int(n), box_length)
        raw = np.fromfile(fh, dtype="<f8")
    if kind == _KIND_COMPLEX:
        if raw.size != 2 * n**3:
            raise ValueError("truncated complex dump")
        values = raw[0::2] + 1j * raw[1::2]
        return ComplexField(spec, values.reshape(spec.shape))
    if raw.size != n**3:
        raise ValueError("truncated real dump")
    return RealField(spec, raw.reshape(spec.shape))

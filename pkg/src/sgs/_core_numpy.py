"""Pure-numpy implementations of the hot kernels.

Same call signatures as the compiled module ``sgs._core``; which one is used
is decided in :mod:`sgs.backend`. Grid nodes sit at ``x_i = (i - n/2) * h``
with ``h = box_length / n``, so the box is ``[-L/2, L/2)`` per axis and
queries wrap periodically.
"""

import numpy as np

NAME = "numpy"


def _corner_indices(points, n, h):
    u = points / h + n / 2.0
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    i0 %= n
    i1 = (i0 + 1) % n
    return i0, i1, frac


def trilinear(values, box_length, points):
    """Trilinear interpolation of a periodic 3D field at many points.

    Parameters
    ----------
    values : (n, n, n) ndarray, real or complex
    box_length : float
    points : (P, 3) float ndarray

    Returns
    -------
    (P,) ndarray with the dtype of ``values``.
    """
    n = values.shape[0]
    h = box_length / n
    i0, i1, f = _corner_indices(points, n, h)
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
    x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
    return (
        values[x0, y0, z0] * (gx * gy * gz)
        + values[x1, y0, z0] * (fx * gy * gz)
        + values[x0, y1, z0] * (gx * fy * gz)
        + values[x0, y0, z1] * (gx * gy * fz)
        + values[x1, y1, z0] * (fx * fy * gz)
        + values[x1, y0, z1] * (fx * gy * fz)
        + values[x0, y1, z1] * (gx * fy * fz)
        + values[x1, y1, z1] * (fx * fy * fz)
    )


def phase_apply(psi, potential, dt):
    """In-place ``psi *= exp(-1j * dt * potential)`` (Strang potential step)."""
    psi *= np.exp(potential * (-1j * dt))
    return psi

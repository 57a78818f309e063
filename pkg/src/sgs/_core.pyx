# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: periodic trilinear gather and split-step phase apply.

Mirrors the signatures (and arithmetic) of ``sgs._core_numpy``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, floor, sin

NAME = "cython"


def trilinear(values, double box_length, double[:, ::1] points):
    if np.iscomplexobj(values):
        return _trilinear_c(np.ascontiguousarray(values, dtype=np.complex128),
                            box_length, points)
    return _trilinear_r(np.ascontiguousarray(values, dtype=np.float64),
                        box_length, points)


cdef _trilinear_c(double complex[:, :, ::1] values, double box_length,
                  double[:, ::1] points):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t npts = points.shape[0]
    cdef double h = box_length / n
    out = np.empty(npts, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t p, x0, y0, z0, x1, y1, z1
    cdef double u, fx, fy, fz, gx, gy, gz
    cdef long ix, iy, iz
    for p in range(npts):
        u = points[p, 0] / h + n / 2.0
        ix = <long>floor(u); fx = u - ix; ix = ix % n
        if ix < 0: ix += n
        u = points[p, 1] / h + n / 2.0
        iy = <long>floor(u); fy = u - iy; iy = iy % n
        if iy < 0: iy += n
        u = points[p, 2] / h + n / 2.0
        iz = <long>floor(u); fz = u - iz; iz = iz % n
        if iz < 0: iz += n
        x0 = ix; y0 = iy; z0 = iz
        x1 = (x0 + 1) % n; y1 = (y0 + 1) % n; z1 = (z0 + 1) % n
        gx = 1.0 - fx; gy = 1.0 - fy; gz = 1.0 - fz
        o[p] = (values[x0, y0, z0] * (gx * gy * gz)
                + values[x1, y0, z0] * (fx * gy * gz)
                + values[x0, y1, z0] * (gx * fy * gz)
                + values[x0, y0, z1] * (gx * gy * fz)
                + values[x1, y1, z0] * (fx * fy * gz)
                + values[x1, y0, z1] * (fx * gy * fz)
                + values[x0, y1, z1] * (gx * fy * fz)
                + values[x1, y1, z1] * (fx * fy * fz))
    return out


cdef _trilinear_r(double[:, :, ::1] values, double box_length,
                  double[:, ::1] points):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t npts = points.shape[0]
    cdef double h = box_length / n
    out = np.empty(npts, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t p, x0, y0, z0, x1, y1, z1
    cdef double u, fx, fy, fz, gx, gy, gz
    cdef long ix, iy, iz
    for p in range(npts):
        u = points[p, 0] / h + n / 2.0
        ix = <long>floor(u); fx = u - ix; ix = ix % n
        if ix < 0: ix += n
        u = points[p, 1] / h + n / 2.0
        iy = <long>floor(u); fy = u - iy; iy = iy % n
        if iy < 0: iy += n
        u = points[p, 2] / h + n / 2.0
        iz = <long>floor(u); fz = u - iz; iz = iz % n
        if iz < 0: iz += n
        x0 = ix; y0 = iy; z0 = iz
        x1 = (x0 + 1) % n; y1 = (y0 + 1) % n; z1 = (z0 + 1) % n
        gx = 1.0 - fx; gy = 1.0 - fy; gz = 1.0 - fz
        o[p] = (values[x0, y0, z0] * (gx * gy * gz)
                + values[x1, y0, z0] * (fx * gy * gz)
                + values[x0, y1, z0] * (gx * fy * gz)
                + values[x0, y0, z1] * (gx * gy * fz)
                + values[x1, y1, z0] * (fx * fy * gz)
                + values[x1, y0, z1] * (fx * gy * fz)
                + values[x0, y1, z1] * (gx * fy * fz)
                + values[x1, y1, z1] * (fx * fy * fz))
    return out


def phase_apply(cnp.ndarray psi_arr, cnp.ndarray pot_arr, double dt):
    """In-place ``psi *= exp(-1j * dt * potential)``."""
    cdef double complex[::1] psi = psi_arr.ravel()
    cdef double[::1] pot = pot_arr.ravel()
    cdef Py_ssize_t i, m = psi.shape[0]
    cdef double a
    for i in range(m):
        a = -dt * pot[i]
        psi[i] = psi[i] * (cos(a) + 1j * sin(a))
    return psi_arr

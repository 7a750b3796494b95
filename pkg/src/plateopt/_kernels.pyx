# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled radial kernels.

Same contract as ``_pykernels``.  The block system is solved by a 2x2 block
Thomas sweep without pivoting; its diagonal blocks ``[[d, -cinv], [-q, d]]``
have determinant ``d**2 - cinv*q > 0`` whenever ``q <= 0`` (all shifts used
by the package), and ``A`` is diagonally dominant.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

IMPLEMENTATION = "cython"


def tridiag_solve(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double m
    out = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] c = np.empty(n)
    cdef double[::1] d = np.empty(n)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * c[i - 1]
        if m == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        c[i] = upper[i] / m
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return out


cdef int _block_factor(const double[::1] lower, const double[::1] diag,
                       const double[::1] upper, const double[::1] cinv,
                       const double[::1] q, double[:, ::1] inv) nogil:
    # inv[i] holds the inverse of the i-th eliminated diagonal block,
    # row-major (a, b, c, e).
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double a, b, c, e, s, det
    for i in range(n):
        a = diag[i]
        b = -cinv[i]
        c = -q[i]
        e = diag[i]
        if i > 0:
            s = lower[i] * upper[i - 1]
            a -= s * inv[i - 1, 0]
            b -= s * inv[i - 1, 1]
            c -= s * inv[i - 1, 2]
            e -= s * inv[i - 1, 3]
        det = a * e - b * c
        if det == 0.0:
            return -1
        inv[i, 0] = e / det
        inv[i, 1] = -b / det
        inv[i, 2] = -c / det
        inv[i, 3] = a / det
    return 0


cdef void _block_solve(const double[::1] lower, const double[::1] upper,
                       double[:, ::1] inv, const double[::1] x,
                       double[::1] ru, double[::1] rz,
                       double[::1] yu, double[::1] yz) nogil:
    cdef Py_ssize_t n = x.shape[0], i
    cdef double tu, tz, bu, bz
    ru[0] = 0.0
    rz[0] = x[0]
    for i in range(1, n):
        tu = inv[i - 1, 0] * ru[i - 1] + inv[i - 1, 1] * rz[i - 1]
        tz = inv[i - 1, 2] * ru[i - 1] + inv[i - 1, 3] * rz[i - 1]
        ru[i] = -lower[i] * tu
        rz[i] = x[i] - lower[i] * tz
    for i in range(n - 1, -1, -1):
        bu = ru[i]
        bz = rz[i]
        if i < n - 1:
            bu -= upper[i] * yu[i + 1]
            bz -= upper[i] * yz[i + 1]
        yu[i] = inv[i, 0] * bu + inv[i, 1] * bz
        yz[i] = inv[i, 2] * bu + inv[i, 3] * bz


def block_solve(const double[::1] lower, const double[::1] diag,
                const double[::1] upper, const double[::1] cinv,
                const double[::1] q, const double[::1] x):
    """One solve of the coupled system, returning ``(u, z)``."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef double[:, ::1] inv = np.empty((n, 4))
    if _block_factor(lower, diag, upper, cinv, q, inv) != 0:
        raise ZeroDivisionError("singular block system")
    u = np.empty(n)
    z = np.empty(n)
    _block_solve(lower, upper, inv, x, np.empty(n), np.empty(n), u, z)
    return u, z


def inverse_power(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] weights,
                  const double[::1] cinv, const double[::1] q, double sigma,
                  x0, double tol, int maxiter):
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double[:, ::1] inv = np.empty((n, 4))
    if _block_factor(lower, diag, upper, cinv, q, inv) != 0:
        raise ZeroDivisionError("singular block system")

    xa = np.array(x0, dtype=np.float64)
    ua = np.empty(n)
    za = np.empty(n)
    cdef double[::1] x = xa
    cdef double[::1] u = ua
    cdef double[::1] z = za
    cdef double[::1] ru = np.empty(n)
    cdef double[::1] rz = np.empty(n)
    cdef double s, theta, lam = np.nan, lam_old = np.nan, res = np.inf
    cdef double nu, d, scale
    cdef int it = 0
    cdef bint converged = False

    s = 0.0
    for i in range(n):
        s += weights[i] * x[i] * x[i]
    s = sqrt(s)
    for i in range(n):
        x[i] /= s

    with nogil:
        for it in range(1, maxiter + 1):
            _block_solve(lower, upper, inv, x, ru, rz, u, z)
            theta = 0.0
            for i in range(n):
                theta += weights[i] * x[i] * u[i]
            lam = sigma + 1.0 / theta
            res = 0.0
            nu = 0.0
            for i in range(n):
                d = u[i] / theta - x[i]
                res += weights[i] * d * d
                nu += weights[i] * u[i] * u[i]
            res = sqrt(res)
            nu = sqrt(nu)
            for i in range(n):
                u[i] /= nu
                z[i] /= nu
            scale = fabs(lam)
            if scale < 1.0:
                scale = 1.0
            if it > 1 and fabs(lam - lam_old) <= tol * scale and res <= tol * scale:
                converged = True
                break
            for i in range(n):
                x[i] = u[i]
            lam_old = lam
    return lam, ua, za, res, it, bool(converged)

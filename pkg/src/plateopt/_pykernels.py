"""Reference (numpy + LAPACK) implementation of the radial hot kernels.

Mirrors ``_kernels.pyx`` function for function; ``plateopt.kernels`` picks
one of the two at import time.

The radial eigen-solves use the split form of the plate operator.  One
shifted inverse-power step solves the coupled system

    A u - cinv * z = 0
    A z - q * u    = x

for ``(u, z)``, where ``A = -Delta_h`` is tridiagonal, ``cinv`` is the
reciprocal stiffness coefficient and ``q = rho + sigma``.  Interleaving the
unknowns as ``(u_0, z_0, u_1, z_1, ...)`` gives a matrix with two sub- and
two super-diagonals, which LAPACK factors once per solve.
"""

import numpy as np
from scipy.linalg import lapack, solve_banded

IMPLEMENTATION = "python"


def tridiag_solve(lower, diag, upper, rhs):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


class BlockFactor:
    """LU factors of the interleaved ``(u, z)`` system."""

    def __init__(self, lower, diag, upper, cinv, q):
        n = diag.size
        m = 2 * n
        kl = ku = 2
        ab = np.zeros((2 * kl + ku + 1, m))
        off = kl + ku

        def put(rows, cols, vals):
            ab[off + rows - cols, cols] = vals

        iu = 2 * np.arange(n)
        iz = iu + 1
        put(iu, iu, diag)
        put(iz, iz, diag)
        put(iu[1:], iu[:-1], lower[1:])
        put(iz[1:], iz[:-1], lower[1:])
        put(iu[:-1], iu[1:], upper[:-1])
        put(iz[:-1], iz[1:], upper[:-1])
        put(iu, iz, -np.asarray(cinv))
        put(iz, iu, -np.asarray(q))
        lu, piv, info = lapack.dgbtrf(ab, kl, ku)
        if info != 0:
            raise ZeroDivisionError(f"singular block system (dgbtrf info={info})")
        self.n = n
        self.lu, self.piv = lu, piv

    def solve(self, x):
        b = np.zeros(2 * self.n)
        b[1::2] = x
        y, info = lapack.dgbtrs(self.lu, 2, 2, b, self.piv)
        if info != 0:
            raise ZeroDivisionError(f"dgbtrs failed (info={info})")
        return y[0::2], y[1::2]


def power_loop(solve, weights, sigma, x0, tol, maxiter):
    """Shifted inverse power iteration driven by a block solver.

    ``solve(x)`` must return ``(u, z)`` with ``u = (M - sigma)^{-1} x``.
    Returns ``(eigenvalue, u, z, residual, iterations, converged)`` with
    ``u`` normalised in the weighted L2 norm.  The residual is the resolvent
    residual ``||(lam - sigma) (M - sigma)^{-1} x - x||`` of the last iterate.
    """
    w = weights
    x = np.array(x0, dtype=float)
    x /= np.sqrt(np.dot(w, x * x))
    lam_old = np.nan
    lam = np.nan
    res = np.inf
    u = z = x
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        u, z = solve(x)
        theta = np.dot(w, x * u)
        lam = sigma + 1.0 / theta
        d = u / theta - x
        res = np.sqrt(np.dot(w, d * d))
        nu = np.sqrt(np.dot(w, u * u))
        u = u / nu
        z = z / nu
        scale = max(1.0, abs(lam))
        if it > 1 and abs(lam - lam_old) <= tol * scale and res <= tol * scale:
            converged = True
            break
        x = u
        lam_old = lam
    return lam, u, z, res, it, converged


def inverse_power(lower, diag, upper, weights, cinv, q, sigma, x0, tol, maxiter):
    factor = BlockFactor(lower, diag, upper, cinv, q)
    return power_loop(factor.solve, weights, sigma, x0, tol, maxiter)

"""Compiled inner loops: law evaluation, projected SOR sweeps, outer shooting."""
import numpy as np
from numba import njit

# shot outcome codes
TYPE_I = 1
TYPE_II = 2            # c reached c_B while still increasing: definitely Type II
TYPE_II_TRUNCATED = 3  # u > 0 and c < c_B on the whole truncated range


@njit(cache=True)
def growth_nb(kind, prm, tx, ty, c):
    if kind == 0:
        return prm[0] if c >= prm[2] else -prm[1]
    if kind == 1:
        return prm[1] * (c - prm[3]) + prm[2] if c >= prm[3] else -prm[0]
    if c < prm[1]:
        return -prm[0]
    return np.interp(c, tx, ty)


@njit(cache=True)
def psi_nb(kind, prm, tx, ty, n):
    if kind == 0:
        return prm[0] if abs(n - 1.0) <= 1e-12 else prm[0] * prm[1]
    if kind == 1:
        return prm[0] * n
    return np.interp(n, tx, ty)


@njit(cache=True)
def psor_sweeps(p, lo, di, up, f, omega, n_sweeps):
    """In-place projected SOR on the tridiagonal system lo/di/up with rhs f.

    ``p`` holds interior unknowns; the Dirichlet data has been folded into f.
    """
    m = p.shape[0]
    for _ in range(n_sweeps):
        for i in range(m):
            s = f[i]
            if i > 0:
                s -= lo[i] * p[i - 1]
            if i < m - 1:
                s -= up[i] * p[i + 1]
            gs = s / di[i]
            v = p[i] + omega * (gs - p[i])
            p[i] = v if v > 0.0 else 0.0


@njit(cache=True)
def _outer_rhs(c, u, n, c_B, sigma, gk, gp, gx, gy, pk, pp, px, py):
    g = growth_nb(gk, gp, gx, gy, c)
    psi = psi_nb(pk, pp, px, py, n)
    return u, (c - c_B) + psi * c, -n * g / sigma


@njit(cache=True)
def shoot_outer(c_R, cp_R, n_R, sigma, c_B, length, dx,
                gk, gp, gx, gy, pk, pp, px, py, record):
    """RK4 integration of c' = u, u' = (c - c_B) + psi(n) c, n' = -n G(c)/sigma.

    Returns (code, z, c_end, u_end, n_end, n_steps, xs, cs, us, ns); the
    trajectory arrays are filled only when ``record`` is true.
    """
    n_max = int(length / dx) + 2
    size = n_max if record else 1
    xs = np.zeros(size)
    cs = np.zeros(size)
    us = np.zeros(size)
    ns = np.zeros(size)
    c, u, n = c_R, cp_R, n_R
    x = 0.0
    if record:
        cs[0] = c
        us[0] = u
        ns[0] = n
    if u <= 0.0:
        return TYPE_I, 0.0, c, u, n, 0, xs, cs, us, ns
    for k in range(1, n_max):
        k1c, k1u, k1n = _outer_rhs(c, u, n, c_B, sigma, gk, gp, gx, gy, pk, pp, px, py)
        k2c, k2u, k2n = _outer_rhs(c + 0.5 * dx * k1c, u + 0.5 * dx * k1u, n + 0.5 * dx * k1n,
                                   c_B, sigma, gk, gp, gx, gy, pk, pp, px, py)
        k3c, k3u, k3n = _outer_rhs(c + 0.5 * dx * k2c, u + 0.5 * dx * k2u, n + 0.5 * dx * k2n,
                                   c_B, sigma, gk, gp, gx, gy, pk, pp, px, py)
        k4c, k4u, k4n = _outer_rhs(c + dx * k3c, u + dx * k3u, n + dx * k3n,
                                   c_B, sigma, gk, gp, gx, gy, pk, pp, px, py)
        c_new = c + dx * (k1c + 2 * k2c + 2 * k3c + k4c) / 6.0
        u_new = u + dx * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
        n_new = n + dx * (k1n + 2 * k2n + 2 * k3n + k4n) / 6.0
        if u_new <= 0.0:
            z = x + dx * u / (u - u_new)
            if record:
                xs[k] = x + dx
                cs[k] = c_new
                us[k] = u_new
                ns[k] = n_new
                return TYPE_I, z, c_new, u_new, n_new, k, xs[:k + 1], cs[:k + 1], us[:k + 1], ns[:k + 1]
            return TYPE_I, z, c_new, u_new, n_new, k, xs, cs, us, ns
        c, u, n = c_new, u_new, n_new
        x += dx
        if record:
            xs[k] = x
            cs[k] = c
            us[k] = u
            ns[k] = n
        if c >= c_B:
            if record:
                return TYPE_II, x, c, u, n, k, xs[:k + 1], cs[:k + 1], us[:k + 1], ns[:k + 1]
            return TYPE_II, x, c, u, n, k, xs, cs, us, ns
        if x >= length:
            if record:
                return TYPE_II_TRUNCATED, x, c, u, n, k, xs[:k + 1], cs[:k + 1], us[:k + 1], ns[:k + 1]
            return TYPE_II_TRUNCATED, x, c, u, n, k, xs, cs, us, ns
    return TYPE_II_TRUNCATED, x, c, u, n, n_max - 1, xs, cs, us, ns

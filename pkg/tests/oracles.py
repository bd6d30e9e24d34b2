"""Independent reference computations used by the tests.

Nothing here calls into the code paths it checks: contractions are explicit
loops, differential operators are finite differences of the scalar Green's
function, and products use the dense matrix.
"""
import cmath
import math

import numpy as np


def mode_product_loops(t, m, mode):
    t = np.asarray(t)
    shape = list(t.shape)
    shape[mode] = m.shape[0]
    out = np.zeros(shape, dtype=complex)
    for idx in np.ndindex(*shape):
        acc = 0j
        for chi in range(t.shape[mode]):
            src = list(idx)
            src[mode] = chi
            acc += t[tuple(src)] * m[idx[mode], chi]
        out[idx] = acc
    return out


def g_scalar(r, mid, k0):
    R = math.dist(r, mid)
    return cmath.exp(-1j * k0 * R) / (4 * math.pi * R)


def fd_hessian(fun, r, h):
    """Second-order central-difference Hessian of a scalar function of a 3-vector."""
    r = np.asarray(r, dtype=float)
    e = np.eye(3) * h
    H = np.zeros((3, 3), dtype=complex)
    f0 = fun(r)
    for a in range(3):
        H[a, a] = (fun(r + e[a]) - 2 * f0 + fun(r - e[a])) / h ** 2
        for b in range(a + 1, 3):
            H[a, b] = H[b, a] = (
                fun(r + e[a] + e[b]) - fun(r + e[a] - e[b]) - fun(r - e[a] + e[b]) + fun(r - e[a] - e[b])
            ) / (4 * h ** 2)
    return H


def fd_gradient(fun, r, h):
    r = np.asarray(r, dtype=float)
    e = np.eye(3) * h
    return np.array([(fun(r + e[a]) - fun(r - e[a])) / (2 * h) for a in range(3)])


def fd_curl_curl(mid, p, w, obs, k0, rel_step=1e-4):
    """curl curl (g p) = grad div (g p) - laplacian (g p), all by finite differences."""
    h = rel_step * math.dist(obs, mid)
    H = fd_hessian(lambda r: g_scalar(r, mid, k0), obs, h)
    p = np.asarray(p, dtype=float)
    return w * (H @ p - np.trace(H) * p)


def fd_curl(mid, p, w, obs, k0, rel_step=1e-4):
    """curl (g p) = grad g x p by central differences."""
    h = rel_step * math.dist(obs, mid)
    grad = fd_gradient(lambda r: g_scalar(r, mid, k0), obs, h)
    return w * np.cross(grad, np.asarray(p, dtype=float))


def random_direction(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_configuration(rng):
    """Random source, direction, weight, observation point and wavenumber."""
    mid = rng.uniform(-1, 1, 3)
    R = 10 ** rng.uniform(-1.3, 0.3)
    obs = mid + R * random_direction(rng)
    return mid, random_direction(rng), rng.uniform(0.01, 0.5), obs, rng.uniform(0.5, 30.0)


def rel_err(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))

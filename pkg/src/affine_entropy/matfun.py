"""Batched matrix exponential and logarithm.

All functions act on arrays of shape ``(..., n, n)``. Three regimes are
distinguished because the integrators call them at every stage:

* nilpotent (unipotent) matrices use the exact terminating series,
* 2x2 upper-triangular matrices use the closed-form logarithm,
* everything else goes through scaling-and-squaring (``scipy.linalg.expm``)
  or inverse scaling-and-squaring with Denman-Beavers square roots.
"""

import numpy as np
import scipy.linalg

from .errors import LogDomainError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def expm_nilpotent(Y, order):
    """Exact exponential of nilpotent matrices with ``Y**order == 0``."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[-1]
    out = np.broadcast_to(np.eye(n), Y.shape).copy()
    term = out.copy()
    for k in range(1, order):
        term = term @ Y / k
        out += term
    return out


def logm_unipotent(G, order):
    """Exact logarithm of ``G`` with ``(G - I)**order == 0``."""
    G = np.asarray(G, dtype=float)
    n = G.shape[-1]
    X = G - np.eye(n)
    out = np.zeros_like(X)
    power = np.broadcast_to(np.eye(n), X.shape).copy()
    for k in range(1, order):
        power = power @ X
        out += ((-1) ** (k + 1) / k) * power
    return out


def expm(Y):
    """Dense exponential by Pade scaling-and-squaring (batched)."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape[-1] == 0:
        return Y.copy()
    return scipy.linalg.expm(Y)


def _log_divided_difference(a, b):
    # (log b - log a) / (b - a), stable for b close to a
    r = b / a - 1.0
    safe = np.where(r == 0.0, 1.0, r)
    ratio = np.where(r == 0.0, 1.0, np.log1p(safe) / safe)
    return ratio / a


def _logm_triangular2(G):
    a, b, d = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    if np.any(a <= 0) or np.any(d <= 0):
        raise LogDomainError("nonpositive diagonal entry; no real logarithm in the identity component")
    out = np.zeros_like(G)
    out[..., 0, 0] = np.log(a)
    out[..., 1, 1] = np.log(d)
    out[..., 0, 1] = b * _log_divided_difference(a, d)
    return out


def _sqrtm_triangular(T):
    n = T.shape[-1]
    diag = np.diagonal(T, axis1=-2, axis2=-1)
    if np.any(diag <= 0):
        raise LogDomainError("nonpositive diagonal entry; no real logarithm in the identity component")
    R = np.zeros_like(T)
    for i in range(n):
        R[..., i, i] = np.sqrt(T[..., i, i])
    for gap in range(1, n):
        for i in range(n - gap):
            j = i + gap
            s = T[..., i, j].copy()
            for k in range(i + 1, j):
                s -= R[..., i, k] * R[..., k, j]
            R[..., i, j] = s / (R[..., i, i] + R[..., j, j])
    return R


def _sqrtm_db(A, max_iter=60):
    n = A.shape[-1]
    Y = A.copy()
    Z = np.broadcast_to(np.eye(n), A.shape).copy()
    for _ in range(max_iter):
        try:
            Yi = np.linalg.inv(Y)
            Zi = np.linalg.inv(Z)
        except np.linalg.LinAlgError as exc:
            raise LogDomainError("singular iterate in matrix square root") from exc
        Y_new = 0.5 * (Y + Zi)
        Z = 0.5 * (Z + Yi)
        delta = np.max(np.abs(Y_new - Y))
        Y = Y_new
        if not np.all(np.isfinite(Y)):
            break
        if delta <= 1e-15 * max(1.0, np.max(np.abs(Y))):
            return Y
    raise LogDomainError("Denman-Beavers square root did not converge")


def logm(G, max_sqrt=64):
    """Real principal logarithm by inverse scaling-and-squaring (batched).

    Raises
    ------
    LogDomainError
        If the square-root iteration fails, typically because ``G`` has
        eigenvalues on the closed negative real axis.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[-1]
    if n == 0:
        return G.copy()
    if not np.all(np.isfinite(G)):
        raise LogDomainError("non-finite matrix")
    triangular = not np.any(np.tril(G, -1))
    if triangular and n == 2:
        return _logm_triangular2(G)
    eye = np.eye(n)
    A = G.copy()
    k = 0
    while np.max(np.linalg.norm(A - eye, axis=(-2, -1))) > 0.25:
        if k >= max_sqrt:
            raise LogDomainError("too many square roots; matrix far from the identity component")
        A = _sqrtm_triangular(A) if triangular else _sqrtm_db(A)
        k += 1
    X = A - eye
    # log(I + X) = int_0^1 X (I + sX)^-1 ds, Gauss-Legendre
    L = np.zeros_like(X)
    for s, w in zip(_GL_NODES, _GL_WEIGHTS):
        L += w * np.linalg.solve(eye + s * X, X)
    L *= 2.0**k
    if not np.all(np.isfinite(L)):
        raise LogDomainError("logarithm produced non-finite values")
    return L


def is_nilpotent_family(mats, tol=1e-12):
    """Order ``p`` such that random combinations ``M`` satisfy ``M**p == 0``, else None."""
    mats = np.asarray(mats, dtype=float)
    if mats.shape[0] == 0:
        return 1
    n = mats.shape[-1]
    rng = np.random.default_rng(12345)
    scale = max(1.0, float(np.max(np.abs(mats))))
    order = 1
    for _ in range(3):
        M = np.tensordot(rng.standard_normal(mats.shape[0]), mats, axes=1) / scale
        P = np.eye(n)
        for p in range(1, n + 1):
            P = P @ M
            if np.max(np.abs(P)) < tol:
                order = max(order, p)
                break
        else:
            return None
    return order



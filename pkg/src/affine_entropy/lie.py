"""Structure-constant Lie algebras with a faithful matrix representation.

Algebra vectors are coordinate arrays of shape ``(..., d)``; group elements
are their images in the matrix representation, arrays of shape ``(..., n, n)``.
Every function broadcasts over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import matfun
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    IndexOutOfRange,
    LogDomainError,
    RepresentationDeficient,
    SeriesDivergence,
)

#: Sign of ``ad`` in the left-trivialised series for the differential of exp.
#: Fixed by comparing against finite differences of :func:`exp_point`.
DEXP_SIGN = -1.0

ALGEBRA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LieAlgebraTable:
    """A real Lie algebra given by sparse structure constants.

    ``structure`` holds zero-based ``(i, j, k, c)`` entries meaning
    ``[e_i, e_j]`` has coefficient ``c`` on ``e_k``; entries are summed, and
    both orderings of a bracket must be listed explicitly.
    """

    dim: int
    structure: tuple
    rep_basis: np.ndarray
    basis_names: tuple = ()
    nilpotency_class: int | None = None
    exp_global: bool = True
    name: str = "custom"
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        rep = np.asarray(self.rep_basis, dtype=float)
        if rep.ndim != 3 or rep.shape[0] != self.dim or rep.shape[1] != rep.shape[2]:
            raise DimensionMismatch(
                f"rep_basis must have shape (dim, n, n) with dim={self.dim}, got {rep.shape}"
            )
        object.__setattr__(self, "rep_basis", rep)
        object.__setattr__(self, "structure", tuple(tuple(e) for e in self.structure))
        if not self.basis_names:
            object.__setattr__(self, "basis_names", tuple(f"e{i + 1}" for i in range(self.dim)))

    @property
    def n(self):
        """Size of the representing matrices."""
        return self.rep_basis.shape[-1]

    @cached_property
    def tensor(self):
        """Dense ``C[i, j, k]`` structure tensor."""
        d = self.dim
        C = np.zeros((d, d, d))
        for entry in self.structure:
            i, j, k, c = entry
            for idx in (i, j, k):
                if not (isinstance(idx, (int, np.integer)) and 0 <= idx < d):
                    raise IndexOutOfRange(f"structure entry {entry} has index outside [0, {d})")
            C[i, j, k] += c
        return C

    @cached_property
    def _coord_pinv(self):
        B = self.rep_basis.reshape(self.dim, -1).T
        if np.linalg.matrix_rank(B) < self.dim:
            raise RepresentationDeficient("rep_basis matrices are linearly dependent")
        return np.linalg.pinv(B)

    @cached_property
    def rep_nilpotent_order(self):
        """``p`` with ``Y**p == 0`` for every ``Y`` in the image, or None."""
        return matfun.is_nilpotent_family(self.rep_basis)

    @cached_property
    def ad_nilpotent_order(self):
        """``p`` with ``ad(y)**p == 0`` for every ``y``, or None."""
        ads = np.stack([ad_matrix(self, e) for e in np.eye(self.dim)]) if self.dim else np.zeros((0, 0, 0))
        return matfun.is_nilpotent_family(ads)

    @property
    def is_abelian(self):
        return not np.any(self.tensor)

    def to_matrix(self, y):
        """Image of algebra vectors in the matrix representation."""
        y = _as_vec(self, y)
        return np.tensordot(y, self.rep_basis, axes=([-1], [0]))

    def coords(self, M, return_residual=False):
        """Least-squares coordinates of matrices in the representation basis."""
        M = np.asarray(M, dtype=float)
        flat = M.reshape(M.shape[:-2] + (-1,))
        y = flat @ self._coord_pinv.T
        if return_residual:
            back = self.to_matrix(y)
            res = np.linalg.norm(M - back, axis=(-2, -1))
            return y, res
        return y

    @property
    def identity(self):
        return np.eye(self.n)


@dataclass
class ValidationReport:
    passed: bool
    residuals: dict
    violations: list

    def __str__(self):
        lines = [f"{'PASS' if self.passed else 'FAIL'}"]
        for key, val in self.residuals.items():
            lines.append(f"  {key:<16s} {val:.3e}")
        lines.extend(f"  violated: {v}" for v in self.violations)
        return "\n".join(lines)


def _as_vec(table, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (table.dim,):
        raise DimensionMismatch(f"expected algebra vectors of length {table.dim}, got shape {x.shape}")
    return x


def validate_algebra(table, tol=ALGEBRA_TOL):
    """Check antisymmetry, the Jacobi identity, and faithfulness of the representation."""
    if table.dim < 1:
        raise DimensionMismatch("dim must be >= 1")
    C = table.tensor
    anti = float(np.max(np.abs(C + C.transpose(1, 0, 2)))) if C.size else 0.0
    # J[i,j,k,l] = sum_m c^m_ij c^l_mk + c^m_jk c^l_mi + c^m_ki c^l_mj
    t1 = np.einsum("ijm,mkl->ijkl", C, C)
    jac = t1 + t1.transpose(1, 2, 0, 3) + t1.transpose(2, 0, 1, 3)
    jacobi = float(np.max(np.abs(jac))) if jac.size else 0.0
    E = table.rep_basis
    comm = np.einsum("iab,jbc->ijac", E, E) - np.einsum("jab,ibc->ijac", E, E)
    expected = np.einsum("ijk,kac->ijac", C, E)
    rep = float(np.max(np.abs(comm - expected))) if comm.size else 0.0
    rank = np.linalg.matrix_rank(E.reshape(table.dim, -1))
    residuals = {"antisymmetry": anti, "jacobi": jacobi, "representation": rep}
    violations = [f"{name} residual {val:.3e} exceeds {tol:g}" for name, val in residuals.items() if not val < tol]
    if rank < table.dim:
        violations.append(f"rep_basis rank {rank} < dim {table.dim}")
    return ValidationReport(not violations, residuals, violations)


def bracket(table, x, y):
    """``[x, y] = sum_ij x_i y_j c_ij^k e_k``."""
    x = _as_vec(table, x)
    y = _as_vec(table, y)
    return np.einsum("...i,...j,ijk->...k", x, y, table.tensor)


def ad_matrix(table, x):
    """Matrix of ``ad(x)``; column ``j`` is ``[x, e_j]``."""
    x = _as_vec(table, x)
    return np.einsum("...i,ijk->...kj", x, table.tensor)


def leibniz_residual(table, D):
    """``max_ij |D[e_i,e_j] - [De_i,e_j] - [e_i,De_j]|``."""
    D = np.asarray(D, dtype=float)
    if D.shape != (table.dim, table.dim):
        raise DimensionMismatch(f"derivation must be {table.dim}x{table.dim}, got {D.shape}")
    C = table.tensor
    lhs = np.einsum("ijm,km->ijk", C, D)
    rhs = np.einsum("mi,mjk->ijk", D, C) + np.einsum("mj,imk->ijk", D, C)
    diff = lhs - rhs
    return float(np.max(np.linalg.norm(diff, axis=-1))) if diff.size else 0.0


def is_derivation(table, D, tol=ALGEBRA_TOL):
    """Return ``(ok, residual)`` for the Leibniz rule on all basis pairs."""
    res = leibniz_residual(table, D)
    return res < tol, res


def derivation_basis(table):
    """Basis of the derivation algebra, shape ``(k, d, d)``."""
    d = table.dim
    C = table.tensor
    eye = np.eye(d)
    # linear map D -> Leibniz defect, as a (d^3, d^2) matrix acting on vec(D)
    lhs = np.einsum("ijm,ka,mb->ijkab", C, eye, eye)
    rhs = np.einsum("ma,ib,mjk->ijkab", eye, eye, C) + np.einsum("ma,jb,imk->ijkab", eye, eye, C)
    A = (lhs - rhs).reshape(d**3, d * d)
    null = scipy.linalg.null_space(A)
    return null.T.reshape(-1, d, d)


def exp_point(table, y):
    """Group element ``exp(y)`` in the matrix representation."""
    Y = table.to_matrix(y)
    order = table.rep_nilpotent_order
    if order is not None:
        return matfun.expm_nilpotent(Y, table.n)
    return matfun.expm(Y)


def log_point(table, g):
    """Algebra coordinates of ``log(g)``; requires a global exponential chart."""
    if not table.exp_global:
        raise LogDomainError(f"algebra {table.name!r} is not flagged exp_global")
    g = np.asarray(g, dtype=float)
    if table.rep_nilpotent_order is not None:
        L = matfun.logm_unipotent(g, table.n)
    else:
        L = matfun.logm(g)
    return table.coords(L)


def group_residual(table, g):
    """Distance of ``log(g)`` from the span of the representation basis."""
    g = np.asarray(g, dtype=float)
    if table.rep_nilpotent_order is not None:
        L = matfun.logm_unipotent(g, table.n)
    else:
        L = matfun.logm(g)
    _, res = table.coords(L, return_residual=True)
    return res


def project_to_group(table, g):
    return exp_point(table, log_point(table, g))


def inverse(g):
    return np.linalg.inv(g)


def _phi1(A):
    """``sum_k A^k / (k+1)!`` by scaled Taylor series and the doubling rule
    ``phi(2A) = phi(A) (e^A + I) / 2``."""
    d = A.shape[-1]
    eye = np.eye(d)
    norm = float(np.max(np.linalg.norm(A, axis=(-2, -1)))) if A.size else 0.0
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    B = A / 2.0**s
    P = eye / math.factorial(16)
    for k in range(14, -1, -1):
        P = B @ P + eye / math.factorial(k + 1)
    for _ in range(s):
        E = eye + B @ P
        P = 0.5 * (P @ (E + eye))
        B = 2.0 * B
    return P


def dexp_apply(table, y, v, tol=1e-17, sign=DEXP_SIGN):
    """Left-trivialised differential of exp.

    Returns ``w = sum_k (sign * ad y)^k v / (k+1)!`` so that
    ``d/ds exp(y + s v)|_{s=0} = exp(y) @ rep(w)`` for ``sign = -1``.
    The series terminates for nilpotent algebras. Otherwise it is an entire
    function of ``ad y`` and is evaluated by scaling and doubling, so there is
    no radius restriction.
    """
    y = _as_vec(table, y)
    v = _as_vec(table, v)
    A = sign * ad_matrix(table, y)
    order = table.ad_nilpotent_order
    if order is not None:
        v = np.broadcast_to(v, np.broadcast_shapes(y.shape, v.shape))
        out = v.copy()
        term = v[..., None]
        for k in range(1, order):
            term = (A @ term) / (k + 1)
            out = out + term[..., 0]
        return out
    out = (_phi1(A) @ v[..., None])[..., 0]
    if not np.all(np.isfinite(out)):
        raise SeriesDivergence("dexp evaluation overflowed")
    return out


def Ad_matrix(table, g, tol=1e-8):
    """Matrix of ``Ad(g)`` in the algebra basis, by least squares."""
    g = np.asarray(g, dtype=float)
    gi = np.linalg.inv(g)
    conj = np.einsum("...ab,jbc,...cd->...jad", g, table.rep_basis, gi)
    y, res = table.coords(conj, return_residual=True)
    scale = np.maximum(1.0, np.linalg.norm(conj, axis=(-2, -1)))
    if np.any(res > tol * scale):
        raise RepresentationDeficient(
            f"Ad(g) leaves the representation span (residual {float(np.max(res)):.2e})"
        )
    # y[..., j, k] is the k-th coordinate of Ad(g) e_j; columns are images
    return np.swapaxes(y, -1, -2)


def modular_function(table, g):
    """``|det Ad(g)|``."""
    return np.abs(np.linalg.det(Ad_matrix(table, g)))


def spectrum(M):
    """Eigenvalues sorted by descending real part, conjugate pairs adjacent."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"spectrum needs a square matrix, got {M.shape}")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        ev = scipy.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = np.lexsort((-ev.imag, -ev.real))
    return ev[order]


def random_derivation(table, rng, scale=1.0):
    """A random element of the derivation algebra (Gaussian coefficients)."""
    basis = derivation_basis(table)
    coef = rng.standard_normal(len(basis)) * scale
    return np.tensordot(coef, basis, axes=1)

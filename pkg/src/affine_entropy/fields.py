"""Linear and affine vector fields on an exponential matrix group.

An affine field is stored as ``(D, z)``: ``D`` is the derivation of its
linear part ``X`` (so ``psi_t(exp y) = exp(e^{tD} y)``) and ``z`` is the
value at the identity of its left-invariant part, ``Z(g) = g rep(z)``.

The second decomposition ``F = X* + Y`` into a linear and a right-invariant
field has ``Y(e) = z`` and derivation ``D* = D + s ad(z)``. The sign ``s`` is
not taken on faith: :func:`dual_decomposition` integrates ``alpha_1(e)``,
differentiates ``g -> alpha_1(e)^-1 psi_1(g) alpha_1(e)`` at the identity by
finite differences and keeps the candidate whose exponential matches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lie, matfun
from .errors import ConventionAmbiguity, DimensionMismatch, StepTooLarge
from .integrate import n_steps_for, rk4

#: Sign ``s`` in ``D* = D + s ad(z)`` under the matrix-commutator bracket.
STAR_SIGN = -1.0

DEFAULT_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class LinearField:
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "D", np.asarray(self.D, dtype=float))


@dataclass(frozen=True, eq=False)
class AffineField:
    D: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if D.ndim != 2 or D.shape != (z.size, z.size):
            raise DimensionMismatch(f"D has shape {D.shape} but z has length {z.size}")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "z", z)

    @property
    def linear(self):
        return LinearField(self.D)


@dataclass
class DualDecomposition:
    """Right decomposition ``F = X* + Y`` together with the oracle evidence."""

    D_star: np.ndarray
    y: np.ndarray
    sign: float
    oracle_residual: float
    rejected_residual: float
    ad_z_norm: float

    def as_record(self):
        return {
            "D_star": self.D_star.tolist(),
            "y": self.y.tolist(),
            "sign": self.sign,
            "oracle_residual": self.oracle_residual,
            "rejected_residual": self.rejected_residual,
        }


def _derivation(field):
    return field.D if isinstance(field, (LinearField, AffineField)) else np.asarray(field, dtype=float)


def linear_field_eval(table, field, g):
    """Tangent matrix of the linear field with derivation ``D`` at ``g``."""
    D = _derivation(field)
    y = lie.log_point(table, g)
    w = lie.dexp_apply(table, y, y @ D.T)
    return np.asarray(g) @ table.to_matrix(w)


def affine_field_eval(table, af, g):
    """``F(g) = X(g) + g rep(z)``."""
    g = np.asarray(g, dtype=float)
    return linear_field_eval(table, af.D, g) + g @ table.to_matrix(af.z)


def linear_flow(table, field, t, g):
    """``psi_t(g) = exp(e^{tD} log g)``; ``t`` may be an array broadcasting against ``g``."""
    D = _derivation(field)
    t = np.asarray(t, dtype=float)
    E = matfun.expm(t[..., None, None] * D)
    y = lie.log_point(table, g)
    return lie.exp_point(table, np.einsum("...ij,...j->...i", E, y))


def identity_orbit(table, af, t, step=DEFAULT_STEP, record_every=None):
    """``alpha_t(e)`` by RK4 integration of the affine field from the identity."""
    n = n_steps_for(t, step)
    h = t / n if n else 0.0
    return rk4(lambda g, _: affine_field_eval(table, af, g), table.identity, h, n,
               record_every=record_every, table=table)


def flow_agreement_tol(step, t, scale=1.0):
    """Allowed gap between two RK4 routes: ``10 step^4`` per unit time, relative to the
    solution size, plus a rounding floor proportional to the number of steps."""
    n = max(1, n_steps_for(t, step))
    return (10.0 * step**4 * max(abs(t), 1.0) + 50.0 * np.finfo(float).eps * n) * scale


def affine_flow(table, af, t, g, step=DEFAULT_STEP, backend="integrate"):
    """Flow ``alpha_t(g)`` of the affine field.

    ``backend="integrate"`` runs RK4 on ``dg/dt = F(g)``; ``"factored"``
    returns ``psi_t(g) alpha_t(e)`` with only the identity orbit integrated;
    ``"both"`` computes the two and raises :class:`StepTooLarge` when they
    disagree beyond :func:`flow_agreement_tol`.
    """
    g = np.asarray(g, dtype=float)
    if backend not in ("integrate", "factored", "both"):
        raise ValueError(f"unknown backend {backend!r}")
    out = None
    if backend in ("integrate", "both"):
        n = n_steps_for(t, step)
        h = t / n if n else 0.0
        out = rk4(lambda x, _: affine_field_eval(table, af, x), g, h, n, table=table)
    if backend in ("factored", "both"):
        fac = linear_flow(table, af.D, t, g) @ identity_orbit(table, af, t, step)
        if out is None:
            return fac
        gap = float(np.max(np.abs(out - fac)))
        tol = flow_agreement_tol(step, t, max(1.0, float(np.max(np.abs(out)))))
        if gap > tol:
            raise StepTooLarge(f"integrated and factored flows differ by {gap:.2e} > {tol:.2e}")
    return out


def differential_at_identity(table, fmap, h=1e-6):
    """Central finite-difference matrix of ``fmap`` at ``e`` in exponential coordinates."""
    d = table.dim
    probes = np.concatenate([np.eye(d) * h, -np.eye(d) * h])
    vals = lie.log_point(table, fmap(lie.exp_point(table, probes)))
    return ((vals[:d] - vals[d:]) / (2.0 * h)).T


def star_candidates(table, af):
    adz = lie.ad_matrix(table, af.z)
    return {s: af.D + s * adz for s in (STAR_SIGN, -STAR_SIGN)}


def psi_star_oracle(table, af, step=DEFAULT_STEP, fd_step=1e-6):
    """Finite-difference ``(d psi*_1)_e`` from ``psi*_1 = C_{alpha_1(e)}^{-1} o psi_1``."""
    a = identity_orbit(table, af, 1.0, step)
    ai = np.linalg.inv(a)
    return differential_at_identity(table, lambda g: ai @ linear_flow(table, af.D, 1.0, g) @ a, fd_step)


def dual_decomposition(table, af, verify=True, step=DEFAULT_STEP, fd_step=1e-6, tol=1e-4):
    """Derivation ``D*`` and right-invariant part ``y`` of ``F = X* + Y``.

    With ``verify=True`` both sign candidates are scored against the
    finite-difference oracle and exactly one must pass ``tol``.
    """
    ok, res = lie.is_derivation(table, af.D, tol=1e-10)
    if not ok:
        raise ValueError(f"D is not a derivation (Leibniz residual {res:.2e})")
    cands = star_candidates(table, af)
    adz_norm = float(np.linalg.norm(lie.ad_matrix(table, af.z)))
    if not verify:
        return DualDecomposition(cands[STAR_SIGN], af.z.copy(), STAR_SIGN, float("nan"), float("nan"), adz_norm)
    fd = psi_star_oracle(table, af, step, fd_step)
    scores = {s: float(np.linalg.norm(fd - matfun.expm(Ds))) for s, Ds in cands.items()}
    passing = [s for s, r in scores.items() if r < tol]
    if adz_norm == 0.0:
        chosen = STAR_SIGN if STAR_SIGN in passing else None
    elif len(passing) == 1:
        chosen = passing[0]
    else:
        chosen = None
    if chosen is None:
        raise ConventionAmbiguity(f"sign oracle scores {scores} with tolerance {tol:g}")
    D_star = cands[chosen]
    ok, res = lie.is_derivation(table, D_star, tol=1e-10)
    if not ok:
        raise ValueError(f"D* failed the Leibniz rule (residual {res:.2e})")
    return DualDecomposition(D_star, af.z.copy(), chosen, scores[chosen], scores[-chosen], adz_norm)


def conjugation_identity_residual(table, af, t, g, step=DEFAULT_STEP, D_star=None):
    """``|psi_t(g) - a psi*_t(g) a^-1|`` with ``a = alpha_t(e)`` integrated."""
    if D_star is None:
        D_star = dual_decomposition(table, af, verify=False).D_star
    a = identity_orbit(table, af, t, step)
    lhs = linear_flow(table, af.D, t, g)
    rhs = a @ linear_flow(table, D_star, t, g) @ np.linalg.inv(a)
    return np.linalg.norm(lhs - rhs, axis=(-2, -1))


def two_expressions_residual(table, af, t, g, step=DEFAULT_STEP, D_star=None):
    """``|R_a psi_t(g) - L_a psi*_t(g)|`` with ``a = alpha_t(e)``."""
    if D_star is None:
        D_star = dual_decomposition(table, af, verify=False).D_star
    a = identity_orbit(table, af, t, step)
    return np.linalg.norm(linear_flow(table, af.D, t, g) @ a - a @ linear_flow(table, D_star, t, g),
                          axis=(-2, -1))

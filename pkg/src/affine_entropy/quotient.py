"""Spectral splitting ``g = g^{+,0} + n`` of ``D*`` and the induced system on ``G/N``.

The quotient is handled in second-kind coordinates ``g = exp(E a) exp(F b)``
where the columns of ``E`` span ``g^{+,0}`` and those of ``F`` span ``n``;
the projection ``G -> G/N`` keeps ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import fields, lie
from .errors import ChartDomainError, ClusterSplitFailure, FDConditioning
from .systems import solve


@dataclass
class EigenCluster:
    value: complex
    multiplicity: int
    basis: np.ndarray  # complex, (d, multiplicity)


@dataclass
class EigenSplit:
    D_star: np.ndarray
    eigenvalues: np.ndarray
    clusters: list
    plus_zero_basis: np.ndarray
    n_basis: np.ndarray
    condition: float
    tol_zero: float
    invariance_residual: float = 0.0
    real_blocks: list = field(default_factory=list)

    @property
    def dims(self):
        return self.plus_zero_basis.shape[1], self.n_basis.shape[1]

    @property
    def plus_eigenvalues(self):
        return self.eigenvalues[self.eigenvalues.real >= -self.tol_zero]


def _echelon(basis):
    """Basis of the same column span, normalised to the identity on pivot rows."""
    if basis.shape[1] == 0:
        return basis
    _, _, piv = scipy.linalg.qr(basis.T, pivoting=True)
    rows = np.sort(piv[: basis.shape[1]])
    out = basis @ np.linalg.inv(basis[rows, :])
    out[np.abs(out) < 1e-14] = 0.0
    return out


def _sorted_schur(M, select, output="real"):
    try:
        T, Z, sdim = scipy.linalg.schur(M, output=output, sort=select)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ClusterSplitFailure(f"Schur reordering failed: {exc}") from exc
    return T, Z, sdim


def _invariance(M, V):
    if V.shape[1] == 0:
        return 0.0
    coeffs = np.linalg.lstsq(V, M @ V, rcond=None)[0]
    return float(np.linalg.norm(M @ V - V @ coeffs))


def eigen_split(D_star, tol_zero=1e-10, cluster_tol=1e-6):
    """Generalized eigenspaces of ``D*`` and the splitting by sign of the real part.

    Eigenvalues with ``|Re| < tol_zero`` count as zero and go to ``g^{+,0}``.
    Invariant subspaces come from reordered Schur forms, so each returned
    subspace is the full sum of the selected generalized eigenspaces.
    """
    D_star = np.asarray(D_star, dtype=float)
    d = D_star.shape[0]
    ev = lie.spectrum(D_star)
    n_plus = int(np.sum(ev.real >= -tol_zero))

    _, Zp, sp = _sorted_schur(D_star, lambda re, im: re >= -tol_zero)
    _, Zn, sn = _sorted_schur(D_star, lambda re, im: re < -tol_zero)
    if sp != n_plus or sn != d - n_plus:
        raise ClusterSplitFailure(
            f"reordering separated {sp}+{sn} eigenvalues, expected {n_plus}+{d - n_plus}"
        )
    plus = _echelon(Zp[:, :sp])
    nb = _echelon(Zn[:, :sn])
    W = np.hstack([plus, nb])
    cond = float(np.linalg.cond(W)) if d else 1.0
    if not np.isfinite(cond) or cond > 1e10:
        raise ClusterSplitFailure(f"g^(+,0) and n are nearly dependent (condition {cond:.2e})")

    scale = max(1.0, float(np.max(np.abs(ev)))) if d else 1.0
    clusters = []
    remaining = list(ev)
    while remaining:
        beta = remaining[0]
        close = [x for x in remaining if abs(x - beta) < cluster_tol * scale]
        remaining = [x for x in remaining if abs(x - beta) >= cluster_tol * scale]
        center = complex(np.mean(close))
        _, Zc, sc = _sorted_schur(D_star.astype(complex), lambda x, c=center: abs(x - c) < cluster_tol * scale,
                                  output="complex")
        if sc != len(close):
            raise ClusterSplitFailure(f"cluster at {center:.6g} has {sc} Schur vectors, expected {len(close)}")
        if abs(center.imag) < cluster_tol * scale:
            center = complex(center.real, 0.0)
        clusters.append(EigenCluster(center, len(close), Zc[:, :sc]))

    # real invariant blocks: one per real eigenvalue, one per conjugate pair
    real_blocks = [(c.value, _echelon(_real_span(c.basis))) for c in clusters if c.value.imag >= 0]
    inv = max([_invariance(D_star, plus), _invariance(D_star, nb)]
              + [_invariance(D_star, B) for _, B in real_blocks])
    return EigenSplit(D_star, ev, clusters, plus, nb, cond, tol_zero, inv, real_blocks)


def _real_span(cbasis):
    """Real basis of ``span(V) + span(conj V)``."""
    stacked = np.hstack([cbasis.real, cbasis.imag])
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 1.0)))
    return u[:, :rank]


def _cbracket(table, x, y):
    return np.einsum("...i,...j,ijk->...k", x, y, table.tensor)


def grading_check(table, split, tol_match=1e-6):
    """Largest component of ``[g_gamma, g_beta]`` outside ``g_{gamma+beta}``.

    When ``gamma + beta`` is not an eigenvalue the whole bracket is the residual.
    """
    clusters = split.clusters
    if not clusters:
        return 0.0
    V = np.hstack([c.basis for c in clusters])
    Vinv = np.linalg.inv(V)
    offsets = np.cumsum([0] + [c.multiplicity for c in clusters])
    scale = max(1.0, float(np.max(np.abs(split.eigenvalues))))
    worst = 0.0
    for a, ca in enumerate(clusters):
        for b, cb in enumerate(clusters):
            target = None
            for k, ck in enumerate(clusters):
                if abs(ck.value - (ca.value + cb.value)) < tol_match * scale:
                    target = k
            w = _cbracket(table, ca.basis.T[:, None, :], cb.basis.T[None, :, :]).reshape(-1, table.dim)
            coef = w @ Vinv.T
            if target is not None:
                coef[:, offsets[target]:offsets[target + 1]] = 0.0
            outside = coef @ V.T
            if outside.size:
                worst = max(worst, float(np.max(np.linalg.norm(outside, axis=-1))))
    return worst


def subalgebra_residual(table, basis):
    """Largest distance of ``[b_i, b_j]`` from ``span(basis)``."""
    k = basis.shape[1]
    if k == 0:
        return 0.0
    Q, _ = np.linalg.qr(basis)
    w = lie.bracket(table, basis.T[:, None, :], basis.T[None, :, :]).reshape(-1, table.dim)
    return float(np.max(np.linalg.norm(w - (w @ Q) @ Q.T, axis=-1)))


@dataclass
class UnimodularityReport:
    vacuous: bool
    trace_max: float
    modular_deviation_max: float
    samples: int
    passed: bool


def unimodularity_check(table, split, samples=50, rng=None, trace_tol=1e-10, modular_tol=1e-8):
    """``tr ad(X) = 0`` and ``Delta_G(exp X) = 1`` for random ``X`` in ``n``."""
    F = split.n_basis
    if F.shape[1] == 0:
        return UnimodularityReport(True, 0.0, 0.0, 0, True)
    rng = np.random.default_rng(0) if rng is None else rng
    X = rng.standard_normal((samples, F.shape[1])) @ F.T
    tr = np.abs(np.trace(lie.ad_matrix(table, X), axis1=-2, axis2=-1))
    dev = np.abs(lie.modular_function(table, lie.exp_point(table, X)) - 1.0)
    tmax, dmax = float(np.max(tr)), float(np.max(dev))
    return UnimodularityReport(False, tmax, dmax, samples, tmax < trace_tol and dmax < modular_tol)


@dataclass(eq=False)
class QuotientChart:
    """Second-kind coordinates ``g = exp(E a) exp(F b)`` adapted to a splitting."""

    table: lie.LieAlgebraTable
    plus_basis: np.ndarray
    n_basis: np.ndarray
    radius: float = 50.0
    newton_tol: float = 1e-13
    max_iter: int = 40

    def __post_init__(self):
        self._W = np.hstack([self.plus_basis, self.n_basis])
        self._Winv = np.linalg.inv(self._W)

    @classmethod
    def from_split(cls, table, split, **kw):
        return cls(table, split.plus_zero_basis, split.n_basis, **kw)

    @property
    def k(self):
        return self.plus_basis.shape[1]

    def lift(self, a):
        """Canonical representative ``exp(E a)`` of the coset with coordinates ``a``."""
        a = np.asarray(a, dtype=float)
        return lie.exp_point(self.table, a @ self.plus_basis.T)

    def compose(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self.lift(a) @ lie.exp_point(self.table, b @ self.n_basis.T)

    def _plus_part(self, a, g):
        inv_lift = lie.exp_point(self.table, -a @ self.plus_basis.T)
        return (lie.log_point(self.table, inv_lift @ g) @ self._Winv.T)[..., : self.k]

    def project(self, g):
        """Quotient coordinates ``a`` of ``g N``."""
        g = np.asarray(g, dtype=float)
        y = lie.log_point(self.table, g)
        if np.any(np.linalg.norm(y, axis=-1) > self.radius):
            raise ChartDomainError(f"|log g| exceeds the chart radius {self.radius:g}")
        a = (y @ self._Winv.T)[..., : self.k]
        if self.k == 0 or self.n_basis.shape[1] == 0:
            return a
        for _ in range(self.max_iter):
            r = self._plus_part(a, g)
            if np.max(np.abs(r)) <= self.newton_tol * max(1.0, float(np.max(np.abs(a)))):
                return a
            h = 1e-7 * np.maximum(1.0, np.max(np.abs(a), axis=-1, keepdims=True))
            J = np.empty(a.shape + (self.k,))
            for j in range(self.k):
                e = np.zeros(self.k)
                e[j] = 1.0
                J[..., :, j] = (self._plus_part(a + h * e, g) - r) / h
            a = a - np.linalg.solve(J, r[..., None])[..., 0]
        raise ChartDomainError("second-kind coordinate solve did not converge")

    def split_coords(self, g):
        """Both second-kind coordinate blocks ``(a, b)``."""
        a = self.project(g)
        rest = lie.exp_point(self.table, -a @ self.plus_basis.T) @ np.asarray(g, dtype=float)
        b = (lie.log_point(self.table, rest) @ self._Winv.T)[..., self.k:]
        return a, b


def induced_solve(system, chart, t, x, u, step=fields.DEFAULT_STEP):
    """Solution of the induced system on ``G/N`` from the coset ``x``."""
    return chart.project(solve(system, t, chart.lift(x), u, step))


def semiconjugation_residual(system, chart, t, g, u, step=fields.DEFAULT_STEP):
    """``|pi(phi(t, g, u)) - Phi(t, pi(g), u)|`` for arbitrary lifts ``g``."""
    lhs = chart.project(solve(system, t, g, u, step))
    rhs = induced_solve(system, chart, t, chart.project(g), u, step)
    return np.linalg.norm(lhs - rhs, axis=-1)


def well_definedness_residual(system, chart, t, x, b, u, step=fields.DEFAULT_STEP):
    """``|pi(phi(t, lift(x) exp(F b), u)) - pi(phi(t, lift(x), u))|``: the induced
    flow does not depend on the representative of the coset."""
    g1 = chart.lift(x)
    g2 = chart.compose(x, b)
    return np.linalg.norm(chart.project(solve(system, t, g2, u, step))
                          - chart.project(solve(system, t, g1, u, step)), axis=-1)


@dataclass
class VolumeGrowth:
    tau: float
    measured: float
    predicted: float

    @property
    def rel_err(self):
        return abs(self.measured - self.predicted) / self.predicted


def volume_growth(system, chart, tau, split=None, h_fd=1e-5, step=fields.DEFAULT_STEP, fd_tol=1e-3):
    """``|det d(Psi*_tau)|`` at the coset of ``e`` by central finite differences.

    ``psi*_tau`` is evaluated as ``alpha_tau(e)^-1 psi_tau(.) alpha_tau(e)``
    with the identity orbit integrated, so the measurement does not use ``D*``;
    the prediction is ``exp(tau * tr D*|g^{+,0})`` from the splitting.
    """
    if not 0 <= tau <= 5:
        raise ValueError("tau must lie in [0, 5]")
    table = system.table
    if split is None:
        split = eigen_split(system.D_star)
    predicted = float(np.exp(tau * np.sum(split.plus_eigenvalues.real)))
    k = chart.k
    if k == 0:
        return VolumeGrowth(tau, 1.0, predicted)
    if tau == 0:
        a_t = table.identity
    else:
        from .systems import _steps

        a_t = system.alpha_e(_steps(tau, step), step)
    a_inv = np.linalg.inv(a_t)

    def induced(a):
        return chart.project(a_inv @ fields.linear_flow(table, system.drift.D, tau, chart.lift(a)) @ a_t)

    E = np.eye(k) * h_fd
    base = induced(np.zeros(k))
    plus = induced(E)
    minus = induced(-E)
    central = ((plus - minus) / (2 * h_fd)).T
    forward = ((plus - base) / h_fd).T
    backward = ((base - minus) / h_fd).T
    det_c = abs(np.linalg.det(central))
    det_f = abs(np.linalg.det(forward))
    det_b = abs(np.linalg.det(backward))
    if abs(det_f - det_b) > fd_tol * max(det_c, 1e-300):
        raise FDConditioning(f"forward/backward determinants {det_f:.6g} vs {det_b:.6g} disagree")
    return VolumeGrowth(tau, float(det_c), predicted)

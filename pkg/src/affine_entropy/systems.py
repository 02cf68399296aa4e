"""Affine control systems with right-invariant control directions.

The system is ``dg/dt = F(g) + sum_j u_j(t) rep(b_j) g`` where ``F`` is an
:class:`~affine_entropy.fields.AffineField`. Right-invariant fields act by
left matrix multiplication in the embedding.

Solutions factor as ``phi(t, g, u) = phi_{t,u} alpha_t(g)``: ``phi_{t,u}`` is
the identity solution of the linear system (drift ``X`` only) and ``alpha_t``
is the control-free flow of ``F``. The factored backend integrates only
``phi_{t,u}`` and the identity orbit ``alpha_t(e)``, which is cached per
system and reused for every control and every initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import fields, lie
from .errors import BackendMismatch, DimensionMismatch, NonAlignedShift
from .fields import AffineField
from .integrate import rk4

ALIGN_TOL = 1e-9
DEFAULT_BLOWUP = 1e6


def _steps(t, step):
    n = t / step
    k = int(round(n))
    if abs(n - k) > ALIGN_TOL * max(1.0, abs(n)):
        raise ValueError(f"t = {t:g} is not a multiple of the step {step:g}")
    return k


@dataclass(frozen=True, eq=False)
class ControlRange:
    """Box ``lo <= u <= hi`` with ``0`` strictly inside."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("range_lo and range_hi must be vectors of equal length")
        if not (np.all(lo < 0) and np.all(hi > 0)):
            raise ValueError("0 not interior to the control range (need lo_j < 0 < hi_j)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def m(self):
        return self.lo.size

    def contains(self, values, tol=1e-12):
        values = np.asarray(values, dtype=float)
        return np.all((values >= self.lo - tol) & (values <= self.hi + tol), axis=-1)

    def levels(self, count):
        """Per-channel lattice, shape ``(m, count)``; contains 0 when ``count`` is odd
        and the box is symmetric."""
        return np.stack([np.linspace(a, b, count) for a, b in zip(self.lo, self.hi)])


@dataclass(frozen=True, eq=False)
class ControlFunction:
    """Piecewise-constant control: ``values[k]`` on ``[k dt, (k+1) dt)``.

    ``values`` has shape ``(N, m)``, or ``(N, ..., m)`` for a batch of
    controls applied to a matching batch of initial states.
    """

    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        object.__setattr__(self, "values", vals)

    @property
    def horizon(self):
        return self.dt * len(self.values)

    @property
    def m(self):
        return self.values.shape[-1]

    def __call__(self, t):
        k = min(int(np.floor(t / self.dt + ALIGN_TOL)), len(self.values) - 1)
        return self.values[k]

    @classmethod
    def constant(cls, value, dt, horizon):
        n = int(round(horizon / dt))
        return cls(dt, np.tile(np.atleast_1d(np.asarray(value, dtype=float)), (n, 1)))

    def step_inputs(self, step, n_steps):
        """Control value held over each integrator step, shape ``(n_steps, m)``."""
        per = _steps(self.dt, step)
        idx = np.arange(n_steps) // per
        if n_steps and idx[-1] >= len(self.values):
            raise ValueError(f"control horizon {self.horizon:g} shorter than requested time")
        return self.values[idx]


def shift(u, t):
    """``(Theta_t u)(s) = u(t + s)`` for ``t`` on the switching grid."""
    if t < 0:
        raise NonAlignedShift("shift time must be nonnegative")
    k = t / u.dt
    if abs(k - round(k)) > ALIGN_TOL * max(1.0, k):
        raise NonAlignedShift(f"t = {t:g} is not a multiple of dt = {u.dt:g}")
    return ControlFunction(u.dt, u.values[int(round(k)):])


@dataclass(frozen=True, eq=False)
class AffineSystem:
    table: lie.LieAlgebraTable
    drift: AffineField
    control_dirs: np.ndarray
    range: ControlRange
    name: str = "system"
    blowup_norm: float = DEFAULT_BLOWUP
    _alpha_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.control_dirs, dtype=float))
        d = self.table.dim
        if dirs.shape[-1] != d:
            raise DimensionMismatch(f"control directions must have length {d}")
        if dirs.shape[0] != self.range.m:
            raise DimensionMismatch(
                f"{dirs.shape[0]} control directions but the range has {self.range.m} channels"
            )
        if self.drift.D.shape != (d, d):
            raise DimensionMismatch(f"drift D must be {d}x{d}")
        ok, res = lie.is_derivation(self.table, self.drift.D, tol=1e-10)
        if not ok:
            raise ValueError(f"drift D is not a derivation (Leibniz residual {res:.2e})")
        object.__setattr__(self, "control_dirs", dirs)

    @property
    def m(self):
        return self.control_dirs.shape[0]

    @cached_property
    def control_matrices(self):
        return self.table.to_matrix(self.control_dirs)

    @cached_property
    def dual(self):
        """Right decomposition of the drift, verified by the sign oracle."""
        return fields.dual_decomposition(self.table, self.drift, verify=True)

    @property
    def D_star(self):
        return self.dual.D_star

    def _controlled(self, g, v):
        if v is None:
            return 0.0
        return np.einsum("...j,jab->...ab", v, self.control_matrices) @ g

    def rhs(self, g, v):
        return fields.affine_field_eval(self.table, self.drift, g) + self._controlled(g, v)

    def linear_rhs(self, g, v):
        return fields.linear_field_eval(self.table, self.drift.D, g) + self._controlled(g, v)

    def alpha_e(self, n_steps, step, record_every=None):
        """Identity orbit of the drift after ``n_steps`` steps (cached)."""
        key = (n_steps, float(step), record_every)
        hit = self._alpha_cache.get(key)
        if hit is None:
            out = rk4(self.rhs, self.table.identity, step, n_steps, record_every=record_every,
                      table=self.table, blowup_norm=self.blowup_norm)
            hit = self._alpha_cache.setdefault(key, out)
        return hit

    def alpha(self, t, g, step):
        """Control-free flow ``alpha_t(g) = psi_t(g) alpha_t(e)``."""
        a = self.alpha_e(_steps(t, step), step)
        return fields.linear_flow(self.table, self.drift.D, t, g) @ a

    def identity_solution(self, inputs, step, record_every=None):
        """``phi_{t,u}`` of the associated linear system from ``e``.

        ``inputs`` has shape ``(n_steps, ..., m)``; extra axes are a batch of controls.
        """
        inputs = np.asarray(inputs, dtype=float)
        batch = inputs.shape[1:-1]
        g0 = np.broadcast_to(self.table.identity, batch + (self.table.n, self.table.n))
        return rk4(self.linear_rhs, g0, step, inputs.shape[0], inputs=inputs,
                   record_every=record_every, table=self.table, blowup_norm=self.blowup_norm)


def solve(system, t, g, u, step=fields.DEFAULT_STEP, backend="factored"):
    """``phi(t, g, u)`` for ``t`` on the step grid and a piecewise-constant ``u``.

    ``backend`` is ``"factored"`` (default), ``"direct"`` or ``"both"``; the
    latter raises :class:`BackendMismatch` if the two disagree by more than
    :func:`~affine_entropy.fields.flow_agreement_tol`.
    """
    g = np.asarray(g, dtype=float)
    if t < 0 or t > u.horizon + ALIGN_TOL:
        raise ValueError(f"t = {t:g} outside the control horizon [0, {u.horizon:g}]")
    if backend not in ("factored", "direct", "both"):
        raise ValueError(f"unknown backend {backend!r}")
    n = _steps(t, step)
    _steps(u.dt, step)
    inputs = u.step_inputs(step, n)
    direct = factored = None
    if backend in ("direct", "both"):
        direct = rk4(system.rhs, g, step, n, inputs=inputs, table=system.table,
                     blowup_norm=system.blowup_norm)
    if backend in ("factored", "both"):
        phi = system.identity_solution(inputs, step)
        factored = phi @ system.alpha(t, g, step)
    if backend == "direct":
        return direct
    if backend == "factored":
        return factored
    gap = float(np.max(np.abs(direct - factored)))
    tol = fields.flow_agreement_tol(step, t, max(1.0, float(np.max(np.abs(direct)))))
    if gap > tol:
        raise BackendMismatch(f"direct and factored solutions differ by {gap:.2e} > {tol:.2e} "
                              f"(t = {t:g}, step = {step:g})")
    return factored


def cocycle_residual(system, t, s, g, u, step=fields.DEFAULT_STEP, backend="factored"):
    """``|phi(t+s, g, u) - phi(t, phi(s, g, u), Theta_s u)|``."""
    lhs = solve(system, t + s, g, u, step, backend)
    mid = solve(system, s, g, u, step, backend)
    rhs = solve(system, t, mid, shift(u, s), step, backend)
    return np.linalg.norm(lhs - rhs, axis=(-2, -1))

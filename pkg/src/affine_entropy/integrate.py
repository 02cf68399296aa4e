"""Fixed-step classical Runge-Kutta on the matrix embedding of a group."""

import numpy as np

from . import lie
from .errors import EscapeError

MONITOR_EVERY = 100
PROJECTION_TOL = 1e-9


def n_steps_for(t, step):
    """Number of equal steps covering ``[0, t]`` with size at most ``step``."""
    if step <= 0:
        raise ValueError("step must be positive")
    return int(np.ceil(abs(t) / step - 1e-9)) if t != 0 else 0


def rk4(rhs, g0, h, n_steps, inputs=None, record_every=None, table=None,
        blowup_norm=None, monitor_every=MONITOR_EVERY):
    """Integrate ``dg/dt = rhs(g, v)`` with fixed step ``h``.

    Parameters
    ----------
    rhs : callable
        ``rhs(g, v)`` returning tangent matrices shaped like ``g``; ``v`` is
        the per-step input (held constant over the step) or None.
    g0 : ndarray, shape (..., n, n)
    inputs : ndarray, optional
        Array whose first axis has length ``n_steps``.
    record_every : int, optional
        When given, also return states at steps ``0, k, 2k, ...``.
    table : LieAlgebraTable, optional
        Enables the group-membership monitor: every ``monitor_every`` steps the
        state is re-projected through ``exp(log(.))`` if its residual exceeds
        ``PROJECTION_TOL``.
    blowup_norm : float, optional
        Raise :class:`EscapeError` once any state exceeds this norm.
    """
    g = np.array(g0, dtype=float, copy=True)
    records = [g.copy()] if record_every else None
    for i in range(n_steps):
        v = None if inputs is None else inputs[i]
        k1 = rhs(g, v)
        k2 = rhs(g + (0.5 * h) * k1, v)
        k3 = rhs(g + (0.5 * h) * k2, v)
        k4 = rhs(g + h * k3, v)
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if table is not None and (i + 1) % monitor_every == 0:
            res = lie.group_residual(table, g)
            if np.any(res > PROJECTION_TOL):
                g = lie.project_to_group(table, g)
        if blowup_norm is not None and np.max(np.abs(g)) > blowup_norm:
            raise EscapeError(f"state norm exceeded {blowup_norm:g} at t = {(i + 1) * h:g}")
        if record_every and (i + 1) % record_every == 0:
            records.append(g.copy())
    if record_every:
        return g, np.stack(records)
    return g

"""Invariant suites run on a configured system; each check yields a residual and a verdict.

The random instances (states, times, controls) all come from one generator,
so a suite is deterministic given the seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import entropy, fields, lie, quotient
from .errors import AffineEntropyError
from .integrate import rk4
from .systems import ControlFunction, cocycle_residual, solve


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tol: float
    passed: bool
    detail: str = ""

    @classmethod
    def below(cls, suite, name, residual, tol, detail=""):
        residual = float(residual)
        return cls(suite, name, residual, tol, bool(residual < tol), detail)


def _random_states(table, rng, count, scale=0.5):
    return lie.exp_point(table, scale * rng.standard_normal((count, table.dim)))


def _random_controls(system, rng, dt, horizon, count):
    n = int(round(horizon / dt))
    lo, hi = system.range.lo, system.range.hi
    return ControlFunction(dt, rng.uniform(lo, hi, size=(n, count, system.m)))


def _grid_times(rng, count, t_max, dt):
    """Random times on the ``dt`` grid in ``(0, t_max]``."""
    k = int(round(t_max / dt))
    return rng.integers(1, k + 1, size=count) * dt


def lie_suite(system, rng, tol=1e-12, count=100):
    table = system.table
    rep = lie.validate_algebra(table, tol)
    out = [Check.below("lie", f"algebra {k}", v, tol) for k, v in rep.residuals.items()
           if k in ("antisymmetry", "jacobi", "representation")]
    scale = max(1.0, float(np.abs(system.drift.D).max()))
    out.append(Check.below("lie", "D is a derivation", lie.leibniz_residual(table, system.drift.D), tol * scale))
    scale = max(1.0, float(np.abs(system.D_star).max()))
    out.append(Check.below("lie", "D* is a derivation", lie.leibniz_residual(table, system.D_star), tol * scale))
    y = 0.8 * rng.standard_normal((count, table.dim))
    rt = np.max(np.linalg.norm(lie.log_point(table, lie.exp_point(table, y)) - y, axis=-1))
    out.append(Check.below("lie", "log(exp y) = y", rt, 1e-10))
    return out


def flow_suite(system, rng, count=100, step=1e-3, t_max=1.0, dt=0.25, tol=1e-6):
    """Flow identities of the drift and the solution structure of the control system.

    Every check uses ``count`` random instances; times are random points of
    the ``dt`` grid up to ``t_max``.
    """
    table, af = system.table, system.drift
    D, D_star = af.D, system.D_star
    out = []
    per = int(round(dt / step))
    n_steps = int(round(t_max / step))
    times = _grid_times(rng, count, t_max, dt)
    pick = np.round(times / dt).astype(int)
    idx = np.arange(count)
    g = _random_states(table, rng, count)
    alpha_e = system.alpha_e(n_steps, step, record_every=per)[1]
    a_t = alpha_e[pick]

    # alpha_t(g) = psi_t(g) alpha_t(e), with alpha_t(g) integrated from g itself
    _, rec = rk4(lambda x, _: fields.affine_field_eval(table, af, x), g, step, n_steps,
                 record_every=per, table=table)
    direct = rec[pick, idx]
    psi = fields.linear_flow(table, D, times, g)
    out.append(Check.below("fields", "alpha_t(g) = psi_t(g) alpha_t(e)",
                           np.max(np.linalg.norm(direct - psi @ a_t, axis=(-2, -1))), tol))
    psi_star = fields.linear_flow(table, D_star, times, g)
    out.append(Check.below("fields", "psi_t(g) alpha_t(e) = alpha_t(e) psi*_t(g)",
                           np.max(np.linalg.norm(psi @ a_t - a_t @ psi_star, axis=(-2, -1))), tol))
    out.append(Check.below("fields", "psi_t = C_alpha_t(e) o psi*_t",
                           np.max(np.linalg.norm(psi - a_t @ psi_star @ np.linalg.inv(a_t), axis=(-2, -1))), tol))

    # direct vs factored solutions under random controls
    u = _random_controls(system, rng, dt, t_max, count)
    inputs = u.step_inputs(step, n_steps)
    _, rec = rk4(system.rhs, g, step, n_steps, inputs=inputs, record_every=per, table=table,
                 blowup_norm=system.blowup_norm)
    _, phi = system.identity_solution(inputs, step, record_every=per)
    factored = phi[pick, idx] @ psi @ a_t
    out.append(Check.below("systems", "direct = factored solution",
                           np.max(np.linalg.norm(rec[pick, idx] - factored, axis=(-2, -1))), tol))

    # cocycle, in groups sharing (t, s)
    groups = np.array_split(idx, 5)
    worst = 0.0
    for grp in groups:
        s = float(_grid_times(rng, 1, t_max / 2, dt)[0])
        t = float(_grid_times(rng, 1, t_max / 2, dt)[0])
        ug = ControlFunction(dt, u.values[:, grp])
        worst = max(worst, float(np.max(cocycle_residual(system, t, s, g[grp], ug, step, "factored"))))
    out.append(Check.below("systems", "cocycle phi(t+s) = phi(t, phi(s), shifted u)", worst, tol))
    return out


def sign_suite(system, step=1e-3, fd_step=1e-6, tol=1e-4, reject=1e-2):
    table, af = system.table, system.drift
    fd = fields.psi_star_oracle(table, af, step, fd_step)
    scores = {s: float(np.linalg.norm(fd - lie.matfun.expm(Ds)))
              for s, Ds in fields.star_candidates(table, af).items()}
    chosen = scores[fields.STAR_SIGN]
    other = scores[-fields.STAR_SIGN]
    out = [Check.below("fields", "locked D* sign matches the FD oracle", chosen, tol)]
    if float(np.linalg.norm(lie.ad_matrix(table, af.z))) > 0:
        out.append(Check("fields", "other D* sign rejected by the FD oracle", other, reject,
                         other > reject, "residual must exceed the tolerance"))
    return out


def structure_suite(system, rng, count=100, step=1e-3, t_max=1.0, dt=0.25, tol=1e-8, tol_zero=1e-10):
    table = system.table
    out = []
    try:
        split = quotient.eigen_split(system.D_star, tol_zero)
    except AffineEntropyError as exc:
        return [Check("quotient", "eigen splitting", float("inf"), 0.0, False, str(exc))]
    out.append(Check.below("quotient", "grading [g_a, g_b] in g_(a+b)", quotient.grading_check(table, split), tol))
    out.append(Check.below("quotient", "n is a subalgebra", quotient.subalgebra_residual(table, split.n_basis), tol))
    uni = quotient.unimodularity_check(table, split, count, rng)
    detail = "vacuous (n = 0)" if uni.vacuous else ""
    out.append(Check.below("quotient", "N unimodular: tr ad(X) = 0 on n", uni.trace_max, tol, detail))
    out.append(Check.below("quotient", "N unimodular: Delta_G = 1 on N", uni.modular_deviation_max, tol, detail))
    chart = quotient.QuotientChart.from_split(table, split)
    g = _random_states(table, rng, count)
    a, b = chart.split_coords(g)
    out.append(Check.below("quotient", "second-kind coordinates round trip",
                           np.max(np.linalg.norm(chart.compose(a, b) - g, axis=(-2, -1))), tol))
    u = _random_controls(system, rng, dt, t_max, count)
    out.append(Check.below("quotient", "semiconjugation pi o phi = Phi o pi",
                           np.max(quotient.semiconjugation_residual(system, chart, t_max, g, u, step)), tol))
    x = 0.5 * rng.standard_normal((count, chart.k))
    nb = 0.5 * rng.standard_normal((count, split.n_basis.shape[1]))
    out.append(Check.below("quotient", "induced flow independent of the lift",
                           np.max(quotient.well_definedness_residual(system, chart, t_max, x, nb, u, step)), tol))
    return out


def volume_suite(system, taus=(0.5, 1.0, 2.0), step=1e-3, tol=1e-4, tol_zero=1e-10):
    split = quotient.eigen_split(system.D_star, tol_zero)
    chart = quotient.QuotientChart.from_split(system.table, split)
    out = []
    for tau in taus:
        try:
            vg = quotient.volume_growth(system, chart, tau, split=split, step=step)
        except AffineEntropyError as exc:
            out.append(Check("quotient", f"volume growth tau={tau:g}", float("inf"), tol, False, str(exc)))
            continue
        out.append(Check.below("quotient", f"volume growth tau={tau:g}", vg.rel_err, tol,
                               f"measured {vg.measured:.10g}, predicted {vg.predicted:.10g}"))
    return out


def entropy_suite(system, rng, tol=1e-10, tol_zero=1e-10):
    D_star = system.D_star
    cf = entropy.closed_form_entropy(D_star, tol_zero)
    top = entropy.topological_entropy_upper(D_star, tol_zero)
    out = [Check.below("entropy", "closed form = topological bound", abs(cf - top), tol)]
    worst = 0.0
    for _ in range(10):
        S = rng.standard_normal(D_star.shape) + 3 * np.eye(len(D_star))
        worst = max(worst, abs(entropy.closed_form_entropy(S @ D_star @ np.linalg.inv(S), tol_zero) - cf))
    out.append(Check.below("entropy", "closed form invariant under similarity", worst, 1e-9))
    return out


def verify_all(cfg, suites=None):
    """Every suite on the configured system; returns ``(checks, timings)``."""
    rng = cfg.rng()
    num = cfg.numerics
    sysm = cfg.system
    dt = cfg.controls["dt"]
    step = num["verify_step"]
    runners = {
        "lie": lambda: lie_suite(sysm, rng),
        "flows": lambda: flow_suite(sysm, rng, num["instances"], step, dt=dt, tol=num["identity_tol"]),
        "sign": lambda: sign_suite(sysm, step, num["fd_step"], num["sign_tol"]),
        "structure": lambda: structure_suite(sysm, rng, num["instances"], step, dt=dt,
                                             tol=num["structure_tol"], tol_zero=num["tol_zero"]),
        "volume": lambda: volume_suite(sysm, num["volume_tau"], step, num["volume_tol"], num["tol_zero"]),
        "entropy": lambda: entropy_suite(sysm, rng, tol_zero=num["tol_zero"]),
    }
    checks, timings = [], {}
    for name in suites or runners:
        t0 = time.perf_counter()
        try:
            checks.extend(runners[name]())
        except AffineEntropyError as exc:
            checks.append(Check(name, "suite raised", float("inf"), 0.0, False, f"{type(exc).__name__}: {exc}"))
        timings[name] = time.perf_counter() - t0
    return checks, timings

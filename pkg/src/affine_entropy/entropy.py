"""Outer invariance entropy: closed form, topological bound and spanning-set estimates.

The empirical side works with finite data throughout. ``K`` is a grid of
samples in a box of log-coordinates, ``Q`` is a box, the metric is the
Euclidean one in log-coordinates, and trajectories are checked at sample
times spaced ``step * thinning`` apart.

The cover relation pairs a candidate control ``u`` with a sample ``x`` when
``phi(t, x, u)`` stays within ``eps`` of ``Q`` at every sample time up to
``tau``. Trajectories are never integrated per pair. Each one is assembled
as ``phi_{t,u} psi_t(x) alpha_t(e)`` from one batched integration over the
candidates and the cached identity orbit.
"""

from __future__ import annotations

import itertools
import heapq
from dataclasses import dataclass, field

import numpy as np

from . import fields, lie, matfun
from .errors import Uncoverable
from .systems import ALIGN_TOL, ControlFunction, _steps

DEFAULT_CAP = 5000
DEFAULT_THINNING = 10
DEFAULT_LEVELS = 9
EXACT_LIMIT = 20
_CHUNK = 200_000


def _positive_cluster_sum(values, tol_zero, cluster_tol=1e-6):
    """Sum of the positive entries, taken cluster by cluster.

    Values closer than ``cluster_tol`` are averaged before the sign test. A
    defective eigenvalue splits into a cluster of computed values spread
    ``O(sqrt(eps))`` around the exact one, but the cluster mean stays
    accurate to ``O(eps)``, so a zero eigenvalue with a Jordan block is not
    counted as ``+1e-8``.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    cuts = np.flatnonzero(np.diff(v) > cluster_tol * np.maximum(1.0, np.abs(v[1:]))) + 1
    total = 0.0
    for chunk in np.split(v, cuts):
        m = float(np.mean(chunk))
        if m >= tol_zero:
            total += m * chunk.size
    return total


def closed_form_entropy(D_star, tol_zero=1e-10):
    """Sum of ``max(Re beta, 0)`` over the eigenvalues of ``D*`` (with multiplicity).

    Real parts below ``tol_zero`` count as zero.
    """
    return _positive_cluster_sum(lie.spectrum(np.asarray(D_star, dtype=float)).real, tol_zero)


def topological_entropy_upper(D_star, tol_zero=1e-10):
    """``sum log|beta|`` over eigenvalues of ``exp(D*)`` with ``|beta| > 1``."""
    D_star = np.asarray(D_star, dtype=float)
    if D_star.size == 0:
        return 0.0
    mods = np.abs(lie.spectrum(matfun.expm(D_star)))
    with np.errstate(divide="ignore"):
        logs = np.log(mods)
    return _positive_cluster_sum(logs, tol_zero)


@dataclass(eq=False)
class AdmissiblePair:
    """Boxes ``K`` and ``Q`` in (log- or chart-) coordinates plus the estimator grid.

    ``delta`` is the spacing of the ``K`` grid, scalar or per coordinate.
    """

    K_lo: np.ndarray
    K_hi: np.ndarray
    Q_lo: np.ndarray
    Q_hi: np.ndarray
    delta: np.ndarray
    eps: tuple = (0.2, 0.1)
    tau: tuple = (2.0, 3.0, 4.0, 5.0, 6.0)

    def __post_init__(self):
        arr = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
        self.K_lo, self.K_hi, self.Q_lo, self.Q_hi = map(arr, (self.K_lo, self.K_hi, self.Q_lo, self.Q_hi))
        k = self.K_lo.size
        self.delta = np.broadcast_to(arr(self.delta), (k,)).copy()
        self.eps = tuple(float(e) for e in self.eps)
        self.tau = tuple(float(t) for t in self.tau)
        problems = []
        if not all(v.shape == (k,) for v in (self.K_hi, self.Q_lo, self.Q_hi)):
            problems.append("K and Q boxes must have the same dimension")
        elif np.any(self.K_lo > self.K_hi) or np.any(self.Q_lo > self.Q_hi):
            problems.append("box bounds must satisfy lo <= hi")
        elif np.any(self.K_lo < self.Q_lo) or np.any(self.K_hi > self.Q_hi):
            problems.append("K must be contained in Q")
        if np.any(self.delta <= 0):
            problems.append("delta must be positive")
        if any(e <= 0 for e in self.eps):
            problems.append("eps values must be positive")
        if any(t < 0 for t in self.tau) or list(self.tau) != sorted(set(self.tau)):
            problems.append("tau grid must be nonnegative and strictly increasing")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def dim(self):
        return self.K_lo.size

    def K_coords(self):
        """Grid points of ``K``; every axis includes both endpoints."""
        axes = []
        for lo, hi, d in zip(self.K_lo, self.K_hi, self.delta):
            n = int(np.floor((hi - lo) / d + 1e-9))
            pts = lo + d * np.arange(n + 1)
            if hi - pts[-1] > 1e-9 * max(1.0, abs(hi)):
                pts = np.append(pts, hi)
            axes.append(pts)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def distance_to_Q(self, y):
        """Euclidean distance from coordinates ``y`` to the box ``Q``."""
        gap = np.maximum(np.maximum(self.Q_lo - y, y - self.Q_hi), 0.0)
        return np.sqrt(np.sum(gap * gap, axis=-1))

    def in_Q(self, y, eps=0.0):
        return self.distance_to_Q(y) <= eps

    @property
    def Q_center(self):
        return 0.5 * (self.Q_lo + self.Q_hi)

    @property
    def Q_halfwidth(self):
        return np.maximum(0.5 * (self.Q_hi - self.Q_lo), 1e-12)


@dataclass(eq=False)
class ControlFamily:
    """Piecewise-constant candidates: ``values[c, k]`` is held on ``[k dt, (k+1) dt)``."""

    dt: float
    values: np.ndarray  # (C, N, m)
    kind: str = "lattice"
    cap: int = DEFAULT_CAP
    full_size: float = 0.0
    truncated: bool = False
    n_seeds: int = 0

    def __len__(self):
        return self.values.shape[0]

    @property
    def horizon(self):
        return self.dt * self.values.shape[1]

    def control(self, i):
        return ControlFunction(self.dt, self.values[i])

    def summary(self):
        out = {"kind": self.kind, "size": len(self), "cap": self.cap,
               "full_size": self.full_size, "truncated": self.truncated}
        if self.kind == "feedback":
            out["seeds"] = self.n_seeds
        return out


def _value_lattice(system, levels):
    per = system.range.levels(levels)
    return np.array(list(itertools.product(*per)), dtype=float)


def _n_switches(horizon, dt):
    return int(np.ceil(horizon / dt - ALIGN_TOL))


def lattice_controls(system, dt, horizon, levels=DEFAULT_LEVELS, cap=DEFAULT_CAP, rng=None):
    """Every lattice-valued control on the ``dt`` grid, or a uniform sample of ``cap`` of them.

    Sampling is without replacement; the result is sorted by lattice index so
    it does not depend on draw order.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    vals = _value_lattice(system, levels)
    V = len(vals)
    N = _n_switches(horizon, dt)
    full = float(V) ** N
    if full <= cap:
        idx = np.array(list(itertools.product(range(V), repeat=N)), dtype=int).reshape(-1, N)
        truncated = False
    else:
        seen = np.empty((0, N), dtype=int)
        while len(seen) < cap:
            draw = rng.integers(0, V, size=(cap - len(seen), N))
            seen = np.unique(np.concatenate([seen, draw]), axis=0)
        idx = seen[np.sort(rng.choice(len(seen), size=cap, replace=False))]
        truncated = True
    return ControlFamily(dt, vals[idx], "lattice", cap, full, truncated)


class _Coords:
    """Coordinates in which ``K`` and ``Q`` are boxes: log-coordinates or a quotient chart."""

    def __init__(self, table, chart=None):
        self.table, self.chart = table, chart

    def of(self, g):
        return lie.log_point(self.table, g) if self.chart is None else self.chart.project(g)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        return lie.exp_point(self.table, x) if self.chart is None else self.chart.lift(x)


def feedback_controls(system, pair, dt, horizon, levels=DEFAULT_LEVELS, cap=DEFAULT_CAP,
                      step=fields.DEFAULT_STEP, chart=None, seeds=None):
    """Lattice-valued controls produced by one-step lookahead from seed states.

    From each seed (by default the ``K`` grid, thinned evenly to ``cap``
    points) the value held on each ``dt`` interval is the lattice value whose
    predicted state at the end of the interval is closest to the centre of
    ``Q`` (distance scaled by the half-widths of ``Q``). Duplicates are
    removed, keeping first occurrences.
    """
    crd = _Coords(system.table, chart)
    vals = _value_lattice(system, levels)
    N = _n_switches(horizon, dt)
    x0 = pair.K_coords() if seeds is None else np.atleast_2d(np.asarray(seeds, dtype=float))
    if len(x0) > cap:
        x0 = x0[np.unique(np.linspace(0, len(x0) - 1, cap).round().astype(int))]
    n_dt = _steps(dt, step)
    a_dt = system.alpha_e(n_dt, step)
    phi_v = system.identity_solution(np.broadcast_to(vals, (n_dt,) + vals.shape), step)
    E = matfun.expm(dt * system.drift.D)
    g = crd.point(x0)
    choice = np.empty((len(x0), N), dtype=int)
    center, hw = pair.Q_center, pair.Q_halfwidth
    for k in range(N):
        base = lie.exp_point(system.table, lie.log_point(system.table, g) @ E.T) @ a_dt
        pred = phi_v[None, :] @ base[:, None]
        cost = np.sum(((crd.of(pred) - center) / hw) ** 2, axis=-1)
        choice[:, k] = np.argmin(cost, axis=1)
        g = pred[np.arange(len(x0)), choice[:, k]]
    _, first = np.unique(choice, axis=0, return_index=True)
    choice = choice[np.sort(first)]
    n_grid = len(pair.K_coords()) if seeds is None else len(x0)
    return ControlFamily(dt, vals[choice], "feedback", cap, float(len(vals)) ** N, len(x0) < n_grid, len(x0))


class _Bank:
    """Sample-time states of every (candidate, sample) pair, assembled on demand."""

    def __init__(self, system, pair, family, tau_max, step, thinning, chart=None):
        self.system, self.pair = system, pair
        self.crd = _Coords(system.table, chart)
        self.h = step * thinning
        self.T = _steps(tau_max, self.h)
        if family.horizon < tau_max - ALIGN_TOL:
            raise ValueError(f"candidate horizon {family.horizon:g} shorter than tau = {tau_max:g}")
        n_steps = self.T * thinning
        held = np.arange(n_steps) // _steps(family.dt, step)
        inputs = np.swapaxes(family.values[:, held], 0, 1)
        self.phi = system.identity_solution(inputs, step, record_every=thinning)[1]
        alpha = system.alpha_e(n_steps, step, record_every=thinning)[1]
        self.x = pair.K_coords()
        y0 = lie.log_point(system.table, self.crd.point(self.x))
        D = system.drift.D
        self.B = np.stack([
            lie.exp_point(system.table, y0 @ matfun.expm(k * self.h * D).T) @ alpha[k]
            for k in range(self.T + 1)
        ])
        self.C, self.S = len(family), len(self.x)

    def index(self, tau):
        return _steps(tau, self.h)

    def inside(self, k, ci, si, eps):
        g = self.phi[k, ci] @ self.B[k, si]
        return self.pair.in_Q(self.crd.of(g), eps)

    def filter(self, ci, si, times, eps):
        for k in times:
            if ci.size == 0:
                break
            keep = np.empty(ci.size, dtype=bool)
            for a in range(0, ci.size, _CHUNK):
                keep[a:a + _CHUNK] = self.inside(k, ci[a:a + _CHUNK], si[a:a + _CHUNK], eps)
            ci, si = ci[keep], si[keep]
        return ci, si

    def survivors(self, taus, eps):
        """Alive pairs at each ``tau`` (pairs within ``eps`` of ``Q`` at all sample times)."""
        idx = [self.index(t) for t in taus]
        out = {}
        first_times = list(range(idx[0], 0, -1))
        block = max(1, _CHUNK // max(1, self.S))
        parts = []
        for c0 in range(0, self.C, block):
            cs = np.arange(c0, min(self.C, c0 + block))
            ci = np.repeat(cs, self.S)
            si = np.tile(np.arange(self.S), cs.size)
            parts.append(self.filter(ci, si, first_times, eps))
        ci = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, int)
        si = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, int)
        out[taus[0]] = (ci, si)
        # later horizons: check the new times, latest first (exits happen late)
        for prev, tau, k in zip(idx, taus[1:], idx[1:]):
            ci, si = self.filter(ci, si, range(k, prev, -1), eps)
            out[tau] = (ci, si)
        return out


def greedy_cover(n_samples, ci, si, n_candidates):
    """Greedy set cover with lowest-index tie-break; returns chosen candidate indices."""
    order = np.lexsort((si, ci))
    ci, si = ci[order], si[order]
    starts = np.searchsorted(ci, np.arange(n_candidates + 1))
    covered = np.zeros(n_samples, dtype=bool)
    heap = [(-(starts[c + 1] - starts[c]), c) for c in range(n_candidates) if starts[c + 1] > starts[c]]
    heapq.heapify(heap)
    chosen, left = [], n_samples
    while left and heap:
        neg, c = heapq.heappop(heap)
        members = si[starts[c]:starts[c + 1]]
        gain = int(np.count_nonzero(~covered[members]))
        if gain == 0:
            continue
        if gain == -neg:
            chosen.append(c)
            covered[members] = True
            left -= gain
        else:
            heapq.heappush(heap, (-gain, c))
    return chosen


def exact_cover(n_samples, ci, si, n_candidates):
    """Minimum set cover by exhaustive search (lexicographically first optimum)."""
    if n_candidates > EXACT_LIMIT:
        raise ValueError(f"exact cover limited to {EXACT_LIMIT} candidates, got {n_candidates}")
    masks = [0] * n_candidates
    for c, s in zip(ci.tolist(), si.tolist()):
        masks[c] |= 1 << s
    full = (1 << n_samples) - 1
    for size in range(0, n_candidates + 1):
        for combo in itertools.combinations(range(n_candidates), size):
            acc = 0
            for c in combo:
                acc |= masks[c]
            if acc == full:
                return list(combo)
    return None


def _cover_size(bank, ci, si, method):
    covered = np.zeros(bank.S, dtype=bool)
    covered[si] = True
    if not covered.all():
        missing = np.flatnonzero(~covered)
        raise Uncoverable([tuple(np.round(bank.x[i], 12)) for i in missing])
    if method == "auto":
        method = "exact" if bank.C <= EXACT_LIMIT else "greedy"
    if method == "exact":
        return len(exact_cover(bank.S, ci, si, bank.C))
    if method == "greedy":
        return len(greedy_cover(bank.S, ci, si, bank.C))
    raise ValueError(f"unknown cover method {method!r}")


def spanning_count(system, pair, tau, eps, candidates, step=fields.DEFAULT_STEP,
                   thinning=DEFAULT_THINNING, method="auto", chart=None):
    """Size of a cover of the ``K`` samples by candidates staying ``eps``-close to ``Q`` up to ``tau``.

    ``method="greedy"`` gives an upper bound on the minimum, ``"exact"``
    the minimum (at most 20 candidates); ``"auto"`` picks exact when allowed.
    """
    bank = _Bank(system, pair, candidates, tau, step, thinning, chart)
    ci, si = bank.survivors([tau], eps)[tau]
    return _cover_size(bank, ci, si, method)


@dataclass
class AdmissibilityReport:
    horizon: float
    passed: np.ndarray  # per sample
    best_control: np.ndarray  # per sample, -1 if no candidate survives at all
    survival_time: np.ndarray  # per sample, longest time in Q over the candidates
    caveat: str = ("surrogate test over a finite candidate family and finite horizon; "
                   "a FAIL does not prove that the pair is inadmissible")

    @property
    def verdict(self):
        return "SURROGATE-PASS" if bool(np.all(self.passed)) else "SURROGATE-FAIL"

    def verdicts(self):
        return np.where(self.passed, "SURROGATE-PASS", "SURROGATE-FAIL")


def _admissibility(bank, horizon):
    k_end = bank.index(horizon)
    ci, si = bank.survivors([horizon], 0.0)[horizon]
    passed = np.zeros(bank.S, dtype=bool)
    passed[si] = True
    best = np.full(bank.S, -1)
    surv = np.zeros(bank.S)
    # lowest surviving candidate for admissible samples
    order = np.lexsort((ci, si))
    first = np.unique(si[order], return_index=True)[1]
    best[si[order][first]] = ci[order][first]
    surv[passed] = horizon
    failing = np.flatnonzero(~passed)
    if failing.size:
        ci = np.repeat(np.arange(bank.C), failing.size)
        si = np.tile(failing, bank.C)
        for k in range(1, k_end + 1):
            keep = bank.inside(k, ci, si, 0.0)
            if not keep.any():
                break
            ci, si = ci[keep], si[keep]
            sel = np.unique(si, return_index=True)
            best[sel[0]] = ci[sel[1]]
            surv[sel[0]] = k * bank.h
    return AdmissibilityReport(horizon, passed, best, surv)


def admissibility_check(system, pair, candidates, horizon=None, step=fields.DEFAULT_STEP,
                        thinning=DEFAULT_THINNING, chart=None):
    """Per ``K`` sample: does some candidate keep the trajectory in ``Q`` up to ``horizon``?"""
    if len(candidates) == 0:
        raise ValueError("candidate family is empty")
    horizon = max(pair.tau) if horizon is None else horizon
    bank = _Bank(system, pair, candidates, horizon, step, thinning, chart)
    return _admissibility(bank, horizon)


@dataclass
class EpsilonFit:
    eps: float
    tau: np.ndarray
    r: np.ndarray
    slope: float
    intercept: float
    r_squared: float

    @property
    def ln_r_over_tau(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.r) / self.tau


@dataclass
class EntropyResult:
    closed_form: float
    upper_bound_top: float
    empirical_slope: float | None = None
    fits: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    admissibility: AdmissibilityReport | None = None
    family: dict = field(default_factory=dict)

    def rows(self):
        """``(tau, eps, r, ln r / tau)`` rows, by eps then tau."""
        out = []
        for fit in self.fits:
            for t, r, q in zip(fit.tau, fit.r, fit.ln_r_over_tau):
                out.append((float(t), fit.eps, int(r), float(q)))
        return out


def _fit(tau, r):
    x = np.asarray(tau, dtype=float)
    y = np.log(np.asarray(r, dtype=float))
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - A @ [slope, icpt]) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(slope), float(icpt), r2


def entropy_estimate(system, pair, candidates, step=fields.DEFAULT_STEP, thinning=DEFAULT_THINNING,
                     method="auto", chart=None, check_admissibility=True, tol_zero=1e-10, D_star=None):
    """Regression slope of ``ln r`` against ``tau`` for every ``eps``; the estimate uses the smallest ``eps``.

    Raises :class:`Uncoverable` if a sample is uncovered at some ``(tau, eps)``.
    """
    if len(pair.tau) < 4:
        raise ValueError("the tau grid needs at least 4 points")
    D_star = system.D_star if D_star is None else D_star
    res = EntropyResult(closed_form_entropy(D_star, tol_zero), topological_entropy_upper(D_star, tol_zero),
                        family=candidates.summary())
    ev = lie.spectrum(D_star)
    if np.any((np.abs(ev.real) < tol_zero) & (np.abs(ev.imag) > tol_zero)):
        res.flags.append("D* has purely imaginary eigenvalues; estimator convergence is unquantified")
    if candidates.truncated and candidates.kind == "feedback":
        res.flags.append(f"feedback seeds thinned to {candidates.n_seeds} (cap {candidates.cap})")
    elif candidates.truncated:
        res.flags.append(f"candidate family sampled: {len(candidates)} of {candidates.full_size:.3g}")
    taus = list(pair.tau)
    bank = _Bank(system, pair, candidates, taus[-1], step, thinning, chart)
    if check_admissibility:
        res.admissibility = _admissibility(bank, taus[-1])
    table = {}
    for eps in sorted(pair.eps, reverse=True):
        alive = bank.survivors(taus, eps)
        r = np.array([_cover_size(bank, *alive[t], method) for t in taus])
        table[eps] = r
        slope, icpt, r2 = _fit(taus, r)
        res.fits.append(EpsilonFit(eps, np.array(taus), r, slope, icpt, r2))
        if np.any(np.diff(r) < 0):
            res.flags.append(f"r not monotone in tau at eps = {eps:g}")
    eps_sorted = sorted(table)
    for a, b in zip(eps_sorted, eps_sorted[1:]):
        if np.any(table[a] < table[b]):
            res.flags.append(f"r not monotone in eps between {a:g} and {b:g}")
    res.fits.sort(key=lambda f: f.eps)
    res.empirical_slope = res.fits[0].slope
    return res

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are the stated ones. Timing is measured around
the computation only (config parsing included), not pytest collection.
"""

import time

import numpy as np
import pytest

from affine_entropy import catalog, config, entropy, fields, lie, matfun, verify
from affine_entropy.fields import AffineField

ALL_SYSTEMS = sorted(config.SYSTEMS)


def _report(capsys, num, ok, msg, seconds, budget):
    ok = ok and seconds < budget
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {msg} ({seconds:.1f}s, budget {budget:g}s)")
    return ok


def test_closed_form_matches_topological_bound(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20261015)
    names = ["rn:1", "rn:2", "rn:3", "heis3", "aff2"]
    worst, count = 0.0, 0
    for k in range(200):
        table = catalog.get_algebra(names[k % len(names)])
        D = lie.random_derivation(table, rng)
        z = rng.standard_normal(table.dim) if k % 2 else np.zeros(table.dim)
        D_star = fields.star_candidates(table, AffineField(D, z))[fields.STAR_SIGN]
        cf = entropy.closed_form_entropy(D_star)
        top = entropy.topological_entropy_upper(D_star)
        worst = max(worst, abs(cf - top))
        count += 1
    dt = time.perf_counter() - t0
    ok = _report(capsys, 1, worst < 1e-10, f"{count} random D*, max |closed - top| = {worst:.2e}", dt, 5)
    assert ok


def test_flow_identities_on_every_system(capsys):
    t0 = time.perf_counter()
    failures, worst = [], {}
    for name in ALL_SYSTEMS:
        cfg = config.system_config(name)
        checks = verify.flow_suite(cfg.system, cfg.rng(), count=100, step=1e-3,
                                   dt=cfg.controls["dt"], tol=1e-6)
        for c in checks:
            worst[c.name] = max(worst.get(c.name, 0.0), c.residual)
            if not c.passed:
                failures.append(f"{name}/{c.name} {c.residual:.2e}")
    dt = time.perf_counter() - t0
    summary = ", ".join(f"{v:.1e}" for v in worst.values())
    ok = _report(capsys, 2, not failures,
                 f"{len(worst)} identities x {len(ALL_SYSTEMS)} systems, worst residuals [{summary}]"
                 + (f"; failing {failures}" if failures else ""), dt, 60)
    assert ok


def test_sign_convention_lock(capsys):
    t0 = time.perf_counter()
    cfg = config.system_config("heis3-demo")
    af = cfg.system.drift
    fd = fields.psi_star_oracle(cfg.table, af, step=1e-3, fd_step=1e-6)
    scores = {s: float(np.linalg.norm(fd - matfun.expm(Ds)))
              for s, Ds in fields.star_candidates(cfg.table, af).items()}
    passing = [s for s, r in scores.items() if r < 1e-4]
    rejected = [s for s, r in scores.items() if r > 1e-2]
    dt = time.perf_counter() - t0
    ok = passing == [fields.STAR_SIGN] and rejected == [-fields.STAR_SIGN]
    ok = _report(capsys, 3, ok,
                 f"locked sign {fields.STAR_SIGN:+g} residual {scores[fields.STAR_SIGN]:.1e}, "
                 f"other {scores[-fields.STAR_SIGN]:.1e}", dt, 10)
    assert ok


def test_volume_growth(capsys):
    t0 = time.perf_counter()
    cases = {"rn2-saddle": 1.0, "heis3-demo": 6.0, "heis3-split": 1.0}
    rows, ok = [], True
    for name, lam in cases.items():
        cfg = config.system_config(name)
        assert entropy.closed_form_entropy(cfg.system.D_star) == pytest.approx(lam, abs=1e-12)
        for c in verify.volume_suite(cfg.system, (0.5, 1.0, 2.0), step=1e-3, tol=1e-4):
            ok = ok and c.passed
            rows.append(c.residual)
    dt = time.perf_counter() - t0
    ok = _report(capsys, 4, ok and len(rows) == 9,
                 f"9 volume ratios, max relative error {max(rows):.1e}", dt, 30)
    assert ok


@pytest.mark.slow
def test_desk_scale_slopes(capsys):
    t0 = time.perf_counter()
    out = {}
    for name in ("rn1-scalar", "rn2-saddle"):
        cfg = config.system_config(name)
        c, num = cfg.controls, cfg.numerics
        assert c["cap"] == 5000
        fam = entropy.feedback_controls(cfg.system, cfg.pair, c["dt"], max(cfg.pair.tau), c["levels"],
                                        c["cap"], num["step"])
        res = entropy.entropy_estimate(cfg.system, cfg.pair, fam, num["step"], num["thinning"])
        out[name] = res
    dt = time.perf_counter() - t0
    s1 = out["rn1-scalar"].empirical_slope
    s2 = out["rn2-saddle"].empirical_slope
    ok = (0.7 <= s1 <= 1.3 and 0.7 <= s2 <= 1.3 and abs(s2 - 3.0) > 0.5
          and out["rn1-scalar"].closed_form == 1.0 and out["rn2-saddle"].closed_form == 1.0)
    finest = {n: min(r.fits, key=lambda f: f.eps) for n, r in out.items()}
    detail = "; ".join(f"{n}: slope {r.empirical_slope:.3f} (R^2 {finest[n].r_squared:.3f}), "
                       f"r = {finest[n].r.tolist()} at eps {finest[n].eps:g}" for n, r in out.items())
    ok = _report(capsys, 5, ok, detail, dt, 600)
    assert ok


def test_affine_is_not_linear(capsys):
    t0 = time.perf_counter()
    table = catalog.get_algebra("aff2")
    D = np.diag([0.0, 2.0])
    X = np.array([1.0, 0.0])
    dec = {}
    for label, z in (("z=0", np.zeros(2)), ("z=X", X)):
        dec[label] = fields.dual_decomposition(table, AffineField(D, z), verify=True)
    spec0 = lie.spectrum(dec["z=0"].D_star)
    spec1 = lie.spectrum(dec["z=X"].D_star)
    h0 = entropy.closed_form_entropy(dec["z=0"].D_star)
    h1 = entropy.closed_form_entropy(dec["z=X"].D_star)
    # prediction from the locked convention D* = D + s ad(z), computed here
    predicted = entropy.closed_form_entropy(D + fields.STAR_SIGN * lie.ad_matrix(table, X)) \
        - entropy.closed_form_entropy(D)
    rng = np.random.default_rng(6)
    g = lie.exp_point(table, 0.5 * rng.standard_normal((20, 2)))
    conj = float(np.max(fields.conjugation_identity_residual(
        table, AffineField(D, X), 1.0, g, step=1e-3, D_star=dec["z=X"].D_star)))
    wrong = float(np.max(fields.conjugation_identity_residual(
        table, AffineField(D, X), 1.0, g, step=1e-3, D_star=D - fields.STAR_SIGN * lie.ad_matrix(table, X))))
    dt = time.perf_counter() - t0
    ok = (not np.allclose(spec0, spec1) and abs((h1 - h0) - predicted) < 1e-12 and h0 != h1
          and conj < 1e-6 and wrong > 1e-2 and dec["z=X"].sign == fields.STAR_SIGN)
    ok = _report(capsys, 6, ok,
                 f"entropy {h0:g} (z=0) vs {h1:g} (z=X), difference {h1 - h0:g} predicted {predicted:g}; "
                 f"conjugation residual {conj:.1e}, other sign {wrong:.1e}", dt, 10)
    assert ok


def test_structure_suite_on_every_system(capsys):
    t0 = time.perf_counter()
    failures, worst = [], {}
    for name in ALL_SYSTEMS:
        cfg = config.system_config(name)
        for c in verify.structure_suite(cfg.system, cfg.rng(), count=100, step=1e-3,
                                        dt=cfg.controls["dt"], tol=1e-8):
            worst[c.name] = max(worst.get(c.name, 0.0), c.residual)
            if not c.passed:
                failures.append(f"{name}/{c.name} {c.residual:.2e} {c.detail}")
    dt = time.perf_counter() - t0
    ok = _report(capsys, 7, not failures,
                 f"{len(worst)} checks x {len(ALL_SYSTEMS)} systems, worst {max(worst.values()):.1e}"
                 + (f"; failing {failures}" if failures else ""), dt, 60)
    assert ok

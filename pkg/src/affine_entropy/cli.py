"""Command-line front end: ``affine-entropy <command> <config> [options]``.

Reports go to standard output, diagnostics to standard error. The exit
status is 0 on success, 1 when a check fails or the input is invalid, and 2
on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import entropy, fields, lie, quotient, verify
from .config import dump_config, parse_config
from .errors import AffineEntropyError, Uncoverable, ValidationError
from .integrate import rk4

COMMANDS = ("validate", "decompose", "spectrum", "entropy-formula", "entropy-estimate",
            "quotient-check", "verify-all")


class Report:
    """Text lines for stdout plus optional CSV rows and a JSON record."""

    def __init__(self):
        self.lines = []
        self.csv_header = None
        self.csv_rows = []
        self.record = {}

    def __call__(self, line=""):
        self.lines.append(line)

    def text(self):
        return "\n".join(self.lines) + "\n"

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header)
        w.writerows(self.csv_rows)
        return buf.getvalue()


def _fmt(x):
    return f"{x:.10g}"


def _spectrum_table(rep, D_star, tol_zero):
    ev = lie.spectrum(D_star)
    rep(f"{'#':>3}  {'Re':>14}  {'Im':>14}  counted")
    for i, b in enumerate(ev, 1):
        counted = b.real if b.real >= tol_zero else 0.0
        rep(f"{i:>3}  {b.real:>14.10g}  {b.imag:>14.10g}  {counted:.10g}")
    return ev


def _cmd_validate(cfg, rep, err):
    report = lie.validate_algebra(cfg.table)
    rep(f"algebra {cfg.table.name}: {'PASS' if report.passed else 'FAIL'}")
    for k, v in report.residuals.items():
        rep(f"  {k:<16s} {v:.3e}")
    ok, res = lie.is_derivation(cfg.table, cfg.D, tol=1e-10)
    rep(f"drift D derivation: {'PASS' if ok else 'FAIL'} (Leibniz residual {res:.3e})")
    rep(f"controls: {cfg.system.m} channel(s), 0 interior to the range")
    rep.record = {"algebra": report.residuals, "leibniz": res, "passed": report.passed and ok}
    return 0 if report.passed and ok else 1


def _cmd_decompose(cfg, rep, err):
    num = cfg.numerics
    dd = fields.dual_decomposition(cfg.table, cfg.system.drift, verify=True, step=num["verify_step"],
                                   fd_step=num["fd_step"], tol=num["sign_tol"])
    rep(f"D* = D {'-' if dd.sign < 0 else '+'} ad(z)")
    for row in dd.D_star:
        rep("  [" + ", ".join(f"{x:>12.8g}" for x in row) + "]")
    rep("y = [" + ", ".join(_fmt(x) for x in dd.y) + "]")
    rep(f"sign oracle residual {dd.oracle_residual:.3e}, rejected sign residual {dd.rejected_residual:.3e}")
    rep.record = dd.as_record()
    return 0


def _cmd_spectrum(cfg, rep, err):
    tz = cfg.numerics["tol_zero"]
    ev = _spectrum_table(rep, cfg.system.D_star, tz)
    total = entropy.closed_form_entropy(cfg.system.D_star, tz)
    rep(f"sum of positive real parts: {total!r}")
    rep.record = {"eigenvalues": [[float(b.real), float(b.imag)] for b in ev], "sum_positive": total}
    return 0


def _cmd_formula(cfg, rep, err):
    tz = cfg.numerics["tol_zero"]
    D_star = cfg.system.D_star
    ev = _spectrum_table(rep, D_star, tz)
    cf = entropy.closed_form_entropy(D_star, tz)
    top = entropy.topological_entropy_upper(D_star, tz)
    rep(f"topological entropy bound: {top!r}")
    rep(f"closed-form entropy: {cf!r}")
    if np.any((np.abs(ev.real) < tz) & (np.abs(ev.imag) > tz)):
        err("note: D* has purely imaginary eigenvalues")
    rep.record = {"closed_form": cf, "topological_upper": top}
    return 0


def _family(cfg, chart):
    c, num = cfg.controls, cfg.numerics
    pair = cfg.pair
    horizon = max(pair.tau)
    if c["family"] == "lattice":
        return entropy.lattice_controls(cfg.system, c["dt"], horizon, c["levels"], c["cap"], cfg.rng())
    return entropy.feedback_controls(cfg.system, pair, c["dt"], horizon, c["levels"], c["cap"],
                                     num["step"], chart=chart)


def _cmd_estimate(cfg, rep, err):
    num = cfg.numerics
    chart = cfg.chart if cfg.uses_quotient else None
    fam = _family(cfg, chart)
    rep(f"# candidates: {fam.kind}, {len(fam)} controls (cap {fam.cap}), K samples: {len(cfg.pair.K_coords())}")
    try:
        res = entropy.entropy_estimate(cfg.system, cfg.pair, fam, num["step"], num["thinning"],
                                       chart=chart, tol_zero=num["tol_zero"])
    except Uncoverable as exc:
        err(f"error: {exc}")
        return 1
    rep(f"{'tau':>6}  {'eps':>6}  {'r':>8}  {'ln r / tau':>12}")
    for t, e, r, q in res.rows():
        rep(f"{t:>6g}  {e:>6g}  {r:>8d}  {q:>12.6f}")
    for fit in res.fits:
        rep(f"eps = {fit.eps:g}: slope {fit.slope:.6f}, R^2 {fit.r_squared:.6f}")
    rep(f"empirical slope (smallest eps): {res.empirical_slope:.6f}")
    rep(f"closed form: {res.closed_form!r}")
    if res.admissibility is not None:
        rep(f"admissibility: {res.admissibility.verdict} "
            f"({int(res.admissibility.passed.sum())}/{res.admissibility.passed.size} samples)")
    for f in res.flags:
        err(f"flag: {f}")
    rep.csv_header = ["tau", "eps", "r", "ln_r_over_tau"]
    rep.csv_rows = [[repr(t), repr(e), r, repr(q)] for t, e, r, q in res.rows()]
    rep.record = {"closed_form": res.closed_form, "topological_upper": res.upper_bound_top,
                  "empirical_slope": res.empirical_slope, "family": res.family, "flags": res.flags,
                  "fits": [{"eps": f.eps, "slope": f.slope, "r_squared": f.r_squared,
                            "tau": f.tau.tolist(), "r": f.r.tolist()} for f in res.fits]}
    return 0


def _cmd_quotient(cfg, rep, err):
    num = cfg.numerics
    split = cfg.split
    table = cfg.table
    _spectrum_table(rep, split.D_star, split.tol_zero)
    k, nd = split.dims
    rep(f"dim g(+,0) = {k}, dim n = {nd}")
    grading = quotient.grading_check(table, split)
    closure = quotient.subalgebra_residual(table, split.n_basis)
    uni = quotient.unimodularity_check(table, split, num["instances"], cfg.rng())
    rep(f"grading residual: {grading:.3e}")
    rep(f"n subalgebra residual: {closure:.3e}")
    rep(f"unimodularity: trace {uni.trace_max:.3e}, modular {uni.modular_deviation_max:.3e}"
        + (" (vacuous)" if uni.vacuous else ""))
    rep(f"{'tau':>6}  {'measured':>16}  {'predicted':>16}  {'rel_err':>10}")
    rows, ok = [], grading < num["structure_tol"] and closure < num["structure_tol"] and uni.passed
    for tau in num["volume_tau"]:
        vg = quotient.volume_growth(cfg.system, cfg.chart, tau, split=split, step=num["verify_step"])
        rep(f"{tau:>6g}  {vg.measured:>16.10g}  {vg.predicted:>16.10g}  {vg.rel_err:>10.3e}")
        rows.append([repr(float(tau)), repr(vg.measured), repr(vg.predicted), repr(vg.rel_err)])
        ok = ok and vg.rel_err < num["volume_tol"]
    rep.csv_header = ["tau", "measured", "predicted", "rel_err"]
    rep.csv_rows = rows
    rep.record = {"dims": [k, nd], "grading": grading, "closure": closure,
                  "unimodular": uni.passed, "volume": rows}
    return 0 if ok else 1


def _cmd_verify(cfg, rep, err):
    checks, timings = verify.verify_all(cfg)
    rep(f"{'suite':<10}  {'check':<48}  {'residual':>10}  {'tol':>8}  result")
    for c in checks:
        rep(f"{c.suite:<10}  {c.name:<48}  {c.residual:>10.3e}  {c.tol:>8.1e}  {'PASS' if c.passed else 'FAIL'}")
        if c.detail and not c.passed:
            err(f"{c.suite}/{c.name}: {c.detail}")
    for name, sec in timings.items():
        err(f"timing {name}: {sec:.2f}s")
    n_fail = sum(not c.passed for c in checks)
    rep(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    rep.csv_header = ["suite", "check", "residual", "tol", "passed"]
    rep.csv_rows = [[c.suite, c.name, repr(c.residual), repr(c.tol), c.passed] for c in checks]
    rep.record = {"checks": [c.__dict__ for c in checks]}
    return 0 if n_fail == 0 else 1


_HANDLERS = {
    "validate": _cmd_validate,
    "decompose": _cmd_decompose,
    "spectrum": _cmd_spectrum,
    "entropy-formula": _cmd_formula,
    "entropy-estimate": _cmd_estimate,
    "quotient-check": _cmd_quotient,
    "verify-all": _cmd_verify,
}


def trace_rows(cfg):
    """Identity solution under the zero control up to the largest horizon: ``t`` then log-coordinates."""
    num = cfg.numerics
    sysm = cfg.system
    horizon = max(cfg.pair.tau)
    step, thin = num["step"], num["thinning"]
    n = int(round(horizon / (step * thin))) * thin
    _, rec = rk4(sysm.rhs, cfg.table.identity, step, n, inputs=np.zeros((n, sysm.m)),
                 record_every=thin, table=cfg.table, blowup_norm=sysm.blowup_norm)
    t = step * np.arange(0, n + 1, thin)
    rows = [[ti] + y.tolist() for ti, y in zip(t, lie.log_point(cfg.table, rec))]
    return rows


def run_command(cmd, cfg, out=None, err=None):
    """Run one subcommand on a parsed config; returns ``(status, report)``."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    rep = Report()
    rep(f"# affine-entropy {cmd}: system {cfg.name}, algebra {cfg.table.name}, seed {cfg.seed}")
    say = lambda msg: print(msg, file=err)
    try:
        status = _HANDLERS[cmd](cfg, rep, say)
    except AffineEntropyError as exc:
        say(f"error: {type(exc).__name__}: {exc}")
        status = 1
    out.write(rep.text())
    return status, rep


def build_parser():
    p = argparse.ArgumentParser(prog="affine-entropy", description=(
        "Invariance entropy of affine control systems on matrix Lie groups."))
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="TOML config file, or system:<name> for a catalog system")
    p.add_argument("--csv", metavar="PATH", help="write the command's table as CSV")
    p.add_argument("--json", metavar="PATH", help="write a JSON record of the results")
    p.add_argument("--trace", metavar="PATH", nargs="?", const="-",
                   help="write the zero-control identity trajectory as CSV (default: stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ValidationError as exc:
        for prob in exc.problems:
            print(f"invalid config: {prob}", file=sys.stderr)
        return 1
    except AffineEntropyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be nonnegative", file=sys.stderr)
            return 2
        cfg.seed = args.seed
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    status, rep = run_command(args.command, cfg)
    if args.csv and rep.csv_header:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.csv_text())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"command": args.command, "seed": cfg.seed, "status": status, **rep.record},
                      fh, indent=2, default=float)
    if args.trace:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + list(cfg.table.basis_names))
        w.writerows([[repr(float(x)) for x in row] for row in trace_rows(cfg)])
        if args.trace == "-":
            sys.stdout.write(buf.getvalue())
        else:
            with open(args.trace, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())

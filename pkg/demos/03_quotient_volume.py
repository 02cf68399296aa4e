"""
The quotient by the stable subgroup
===================================

For ``D* = diag(1, -2, -1)`` on the Heisenberg algebra the stable part ``n``
is two-dimensional (spanned by ``Y`` and the centre) and the unstable part is
spanned by ``X``. Entropy lives on the quotient ``G/N``: volumes there grow
exactly like ``exp(tau * sum of positive real parts)``.
"""

from affine_entropy import config, quotient

cfg = config.system_config("heis3-split")
split = quotient.eigen_split(cfg.system.D_star)
print("dims (g+0, n):", split.dims)
print("g+0 basis:\n", split.plus_zero_basis)
print("n basis:\n", split.n_basis)

# %%
# Structure: the grading [g_a, g_b] in g_(a+b), closure of n, and
# unimodularity of N (trace of ad on n and the modular function).
table = cfg.table
print("grading residual", quotient.grading_check(table, split))
print("n closure residual", quotient.subalgebra_residual(table, split.n_basis))
uni = quotient.unimodularity_check(table, split)
print("unimodular:", uni.passed, "trace", uni.trace_max, "modular", uni.modular_deviation_max)

# %%
# Volume growth of the induced linear flow on the quotient chart, measured by
# a finite-difference Jacobian, against the prediction exp(tau).
chart = quotient.QuotientChart.from_split(table, split)
for tau in (0.5, 1.0, 2.0):
    vg = quotient.volume_growth(cfg.system, chart, tau, split=split)
    print(f"tau {tau}: measured {vg.measured:.10f} predicted {vg.predicted:.10f} rel err {vg.rel_err:.1e}")

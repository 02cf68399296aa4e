"""
Locking the sign of D*
======================

An affine field on a matrix group splits as ``F = X + Z``: a linear field with
derivation ``D`` plus a left-invariant field ``Z``. Entropy depends on the
other split, ``F = X* + Y`` with ``Y`` right-invariant, and two sign
conventions for ``D* = D +/- ad(z)`` circulate. Here a finite-difference
oracle decides between them on the Heisenberg group.
"""

import numpy as np

from affine_entropy import config, entropy, fields, lie, matfun

cfg = config.system_config("heis3-demo")
table, af = cfg.table, cfg.system.drift
print("D =\n", af.D)
print("z =", af.z)

# %%
# psi*_1 is recovered from the integrated flow as C_{alpha_1(e)}^{-1} o psi_1.
# Its differential at the identity, by central differences, must equal
# exp(D*) for the right candidate.
fd = fields.psi_star_oracle(table, af, step=1e-3)
for sign, Ds in fields.star_candidates(table, af).items():
    res = np.linalg.norm(fd - matfun.expm(Ds))
    print(f"sign {sign:+.0f}: |FD - exp(D*)| = {res:.2e}")

# %%
# Only one survives. The package locks it and re-checks it whenever a
# decomposition is requested with verify=True.
dec = fields.dual_decomposition(table, af, verify=True)
print("locked sign", dec.sign)
print("D* =\n", dec.D_star)

# %%
# Both D and D* are derivations; the spectrum of D* gives the entropy.
print("Leibniz residual of D*:", lie.leibniz_residual(table, dec.D_star))
print("eigenvalues:", lie.spectrum(dec.D_star).real)
print("closed-form entropy:", entropy.closed_form_entropy(dec.D_star))

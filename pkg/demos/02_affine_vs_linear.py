"""
Same derivation, different entropy
==================================

On the affine group of the line, keep the derivation ``D = diag(0, 2)`` and
change only the invariant part ``z`` of the drift. The linear system has
entropy 2; adding ``z = X`` lowers it to 1. So the entropy of an affine
system is not a function of ``D`` alone.
"""

import numpy as np

from affine_entropy import catalog, entropy, fields, lie

table = catalog.get_algebra("aff2")
D = np.diag([0.0, 2.0])

for z in (np.zeros(2), np.array([1.0, 0.0])):
    af = fields.AffineField(D, z)
    dec = fields.dual_decomposition(table, af, verify=True)
    h = entropy.closed_form_entropy(dec.D_star)
    print(f"z = {z}: spec D* = {lie.spectrum(dec.D_star).real}, entropy {h:g}")

# %%
# The gap is ad(X) = diag(0, 1) entering with the locked sign. The
# conjugation identity psi_t = C_{alpha_t(e)} o psi*_t certifies the sign on
# random group elements.
af = fields.AffineField(D, np.array([1.0, 0.0]))
rng = np.random.default_rng(0)
g = lie.exp_point(table, 0.5 * rng.standard_normal((10, 2)))
for sign, Ds in fields.star_candidates(table, af).items():
    r = fields.conjugation_identity_residual(table, af, 1.0, g, D_star=Ds)
    print(f"sign {sign:+.0f}: conjugation residual {r.max():.2e}")

"""
Counting spanning controls
==========================

The scalar system ``x' = x + u`` with ``|u| <= 1`` and ``K = Q = [-1/2, 1/2]``
has invariance entropy 1. We build candidate controls, count the smallest
subset that keeps every sample of ``K`` within ``eps`` of ``Q`` up to time
``tau``, and fit ``ln r`` against ``tau``. Takes about 15 seconds.
"""

from affine_entropy import config, entropy

cfg = config.system_config("rn1-scalar")
c, num = cfg.controls, cfg.numerics
pair = cfg.pair

# %%
# The family: piecewise-constant controls on a 9-level lattice, switching
# every 0.25 time units, chosen by a one-step lookahead from K seeds.
fam = entropy.feedback_controls(cfg.system, pair, c["dt"], max(pair.tau), c["levels"], c["cap"], num["step"])
print(fam.summary())

# %%
# Every sample of K must be kept inside Q for the whole horizon by some
# candidate, otherwise the pair is not usable.
adm = entropy.admissibility_check(cfg.system, pair, fam, step=num["step"], thinning=num["thinning"])
print(adm.verdict)

res = entropy.entropy_estimate(cfg.system, pair, fam, num["step"], num["thinning"], check_admissibility=False)
for tau, eps, r, q in res.rows():
    print(f"tau {tau:g} eps {eps:g}: r = {r:4d}  ln r / tau = {q:.3f}")
for fit in res.fits:
    print(f"eps {fit.eps:g}: slope {fit.slope:.3f}, R^2 {fit.r_squared:.3f}")
print("closed form", res.closed_form)

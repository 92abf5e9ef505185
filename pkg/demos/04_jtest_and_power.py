"""Sample-split J-test and a small power table.

The J-test compares non-nested scalar-on-function models: fit both on a
training split, then check on the held-out split whether the alternative
model's predictions explain what the null model missed.  The power table
shows how stage-1 rejection rates climb with signal strength.
"""

from fundrv.dtest import TestKind
from fundrv.jtest import NWSpec, j_test
from fundrv.penreg import FixedLambda
from fundrv.sim import SimConfig, gen_covariates, gen_response, power_study

x = gen_covariates(n=200, seed=31)
y = gen_response(x, beta0=1.5, noise_sd=0.2, seed=32)

res = j_test(y, x, NWSpec(0), NWSpec(1), seed=0)
print("kernel regression on X (null) vs kernel regression on X' (alt):")
print(f"  split {res.n1}/{res.n2}, theta_hat={res.theta_hat:+.3f}, "
      f"t={res.t_stat:+.2f}, p={res.p_value:.3g}")
print("  positive t: the X'-based predictions carry signal the X-based")
print("  model missed, as expected for first-derivative data.\n")

cfg = SimConfig(n=100, reps=100, beta0_grid=(0.0, 0.64, 1.28, 2.56, 5.12),
                noise_sd=0.1, seed=11, lambda_policy=FixedLambda(1e-11))
table = power_study(cfg, TestKind.ZERO_VS_FIRST, n_jobs=4)
print("stage-1 rejection rate for 0v1 as the constant coefficient grows:")
print(f"  {'beta0':>6}  {'reject1':>7}")
for row in table.rows:
    print(f"  {row.beta0:6.2f}  {row.reject1:7.2f}")
print("\nat beta0=0 the rate sits near the 5% level; power rises with beta0.")

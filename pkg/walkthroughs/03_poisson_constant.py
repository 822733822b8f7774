"""The constant behind the random-order single threshold.

If exceedances are Poisson(lam), the threshold picks the maximum with
probability ``sum_k lam^k e^{-lam} / (k k!)``.  Its maximizer sets the
threshold; a Poisson-binomial count is close to Poisson when every ``p_i``
is small.
"""

import numpy as np

from prophet_bench.poissonization import lecam_check, optimize_lambda, poisson_success_series

for lam in (0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0):
    r = poisson_success_series(lam)
    print(f"lam={lam:4.2f}  value {r.value:.6f}  terms {r.truncation_k:3d}")

lam, val = optimize_lambda()
print(f"\nmaximizer {lam:.7f}  value {val:.7f}")

for n in (10, 100, 1000):
    tv, bound = lecam_check(np.full(n, lam / n))
    print(f"n={n:5d}  L1 to Poisson {tv:.2e}   2 sum p^2 = {bound:.2e}")

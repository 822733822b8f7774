"""Optimal stopping for i.i.d. draws by backward induction.

Thresholds live on the quantile scale, so one run serves every atomless
law.  The limit value as n grows is about 0.5801.
"""

import numpy as np

from prophet_bench.distributions import Exponential, Instance, Uniform
from prophet_bench.policies import gm_threshold_quantiles, iid_optimal_policy
from prophet_bench.simulator import estimate

for grid in (1000, 2000, 4000, 8000):
    _, v = gm_threshold_quantiles(1000, grid)
    print(f"grid {grid:5d}: predicted success at n=1000 {v:.6f}")

b, _ = gm_threshold_quantiles(1000, 4000)
print("\nquantile thresholds with m draws left:")
for m in (1, 2, 5, 10, 50, 200):
    x = b[1000 - m - 1]
    lhs = sum((x ** -j - 1) / j for j in range(1, m + 1))
    print(f"  m={m:4d}  b={x:.6f}  indifference sum {lhs:.4f}")

for law in (Uniform(0, 1), Exponential(1.0)):
    pol = iid_optimal_policy(law, 1000)
    e = estimate(Instance.iid(law, 1000), pol, trials=100_000, master_seed=4)
    print(f"\n{law}: DP {pol.predicted_success:.4f}  MC {e.point:.4f} +- {e.stderr:.4f}")

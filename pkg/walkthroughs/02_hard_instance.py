"""Value ``i`` with probability ``1/i``, in index order: no rule beats 1/e by much.

Every position is equally likely to hold the maximum, so only cutoff rules
matter; their exact values come from a harmonic tail.
"""

import math

from prophet_bench.instances import thm2_instance, thm2_optimal_value
from prophet_bench.policies import CutoffPolicy, cutoff_policy_values
from prophet_bench.simulator import estimate, exact_success_small

for n in (10, 100, 1000, 10_000):
    i, v = thm2_optimal_value(n)
    print(f"n={n:6d}  best cutoff {i:5d} (i/n = {i / n:.4f})  value {v:.6f}  gap {v - math.exp(-1):.2e}  2/n {2 / n:.1e}")

# the closed form agrees with brute-force enumeration on tiny instances
n = 6
vals = cutoff_policy_values(n)
enum = [exact_success_small(thm2_instance(n), CutoffPolicy(c)) for c in range(1, n + 1)]
print("\nn=6 closed form :", " ".join(f"{x:.5f}" for x in vals))
print("n=6 enumeration :", " ".join(f"{x:.5f}" for x in enum))

# and with simulation, on the variant whose atoms are smeared over a tiny band
e = estimate(thm2_instance(1000, 1e-6), CutoffPolicy(thm2_optimal_value(1000)[0]), trials=200_000, master_seed=2)
print(f"\nn=1000 Monte Carlo: {e.point:.4f} in [{e.ci_low:.4f}, {e.ci_high:.4f}]")

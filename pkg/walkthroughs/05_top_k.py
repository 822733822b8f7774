"""Landing in the top k with one threshold, and what no algorithm can avoid.

The threshold expects ``gamma k`` exceedances; failure decays like
``exp(-gamma k)``.  On the sparse instance a trap of probability
``exp(-Theta(k))`` defeats every rule.
"""

import math

import numpy as np

from prophet_bench.distributions import Instance, Uniform
from prophet_bench.instances import topk_lb_event_probs, topk_lb_instance
from prophet_bench.poissonization import GAMMA
from prophet_bench.policies import topk_single_threshold
from prophet_bench.simulator import TopK, estimate, estimate_many

ks = [1, 2, 5, 10, 15]
inst = Instance.iid(Uniform(0, 1), 2000)
res = estimate_many(inst, [topk_single_threshold(inst, k) for k in ks], [TopK(k) for k in ks], 100_000, 5)
print(" k  failure   2exp(-gamma k)")
for j, k in enumerate(ks):
    print(f"{k:2d}  {1 - res.estimate(j, j).point:.5f}   {2 * math.exp(-GAMMA * k):.5f}")

print("\nsparse instance n=200: exact trap probability vs measured failure")
for k in (2, 4, 6, 8):
    ev = topk_lb_event_probs(200, k)
    lb = topk_lb_instance(200, k)
    e = estimate(lb, topk_single_threshold(lb, k), TopK(k), 50_000, 6)
    print(f"k={k}  A {ev.p_A:.4f}  B {ev.p_B:.2e}  trap {ev.trap_bound:.2e}  failure {1 - e.point:.4f}")

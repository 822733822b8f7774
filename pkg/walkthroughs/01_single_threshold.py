"""One threshold, chosen so the maximum stays below it with probability 1/e.

Compares that rule with the Poissonized threshold on a few instances and
checks the exactly-one-above identity behind the 1/e guarantee.
"""

import math

import numpy as np

from prophet_bench.distributions import Exponential, Instance, Uniform, above_probs
from prophet_bench.instances import twopoint_heavy_instance
from prophet_bench.policies import pi_single_threshold, prob_exactly_one_above, ps_single_threshold
from prophet_bench.simulator import estimate_many, BEST_CHOICE

instances = {
    "10 iid U(0,1)": Instance.iid(Uniform(0, 1), 10),
    "5 U(0,1) + 5 Exp(1)": Instance((Uniform(0, 1),) * 5 + (Exponential(1.0),) * 5),
    "two-point heavy": twopoint_heavy_instance(),
}

print(f"{'instance':22s} {'tau(1/e)':>10s} {'P[one above]':>13s} {'pi MC':>8s} {'ps MC':>8s}")
for name, inst in instances.items():
    pi, ps = pi_single_threshold(inst), ps_single_threshold(inst)
    tau = pi.thresholds[0]
    # exact chance that exactly one item clears the threshold
    one = prob_exactly_one_above(above_probs(inst.distributions, tau))
    res = estimate_many(inst, [pi, ps], [BEST_CHOICE], 200_000, master_seed=1)
    print(f"{name:22s} {tau.value:10.4f} {one:13.4f} {res.estimate(0).point:8.4f} {res.estimate(1).point:8.4f}")

# the identity: any vector with prod(1 - p) = 1/e has P[exactly one] >= 1/e
rng = np.random.default_rng(0)
worst = min(prob_exactly_one_above(1 - np.exp(-(w := rng.exponential(size=rng.integers(1, 40))) / w.sum()))
            for _ in range(2000))
print(f"\nworst of 2000 random normalized vectors: {worst:.5f}  (1/e = {math.exp(-1):.5f})")

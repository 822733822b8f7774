"""Random order without superstars: bands, groups and a proxy law.

Builds the band grid, the pessimistic proxy law for group maxima, the
proxy-optimal inner thresholds, and runs the resulting rule.  Then shows
the late-superstar rule that takes over when one item dominates.
"""

import warnings

from prophet_bench.instances import named_instance, superstar_instance
from prophet_bench.multithreshold import (
    algorithm2_policy,
    build_grid,
    coupled_discrepancy,
    derive_params,
    lemma_checkers,
    superstar_fallback_policy,
    superstar_probe,
)
from prophet_bench.policies import ps_single_threshold
from prophet_bench.simulator import BEST_CHOICE, estimate, estimate_many

inst = named_instance("iid-uniform:20000")
params = derive_params(0.2, inst.n)
print(params)
grid = build_grid(inst, params)
print(f"grid: {grid.c + 1} edges from {grid.t[0]:.6f} to {grid.t[-1]:.6f}, round trip {grid.roundtrip_error(inst):.1e}")

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    pol = algorithm2_policy(inst, params)
for w in caught:
    print("warning:", w.message)
print(f"proxy success alpha = {pol.alpha:.4f}; inner index thresholds {sorted(set(pol.inner_index.tolist()))}")

e = estimate(inst, pol, trials=10_000, master_seed=7)
r = coupled_discrepancy(inst, pol, 10_000, 7)
print(f"success {e.point:.4f} (skip probability {params.skip_prob:.1f}); coupling gap {r.discrepancy_rate:.4f}")

rep = lemma_checkers(named_instance("mixed-uniform:5000"), derive_params(0.3, 5000), 200, 1)
for k, v in rep.items():
    if isinstance(v, dict) and "fraction" in v:
        print(f"  {k:18s} violations {v['violations']:3d}/{v['checks']}")

star = superstar_instance(10)
print("\nsuperstar probe:", superstar_probe(star, 0.1, seed=1))
fb = superstar_fallback_policy(star, 0.1, seed=1)
res = estimate_many(star, [fb, ps_single_threshold(star)], [BEST_CHOICE], 500_000, 9)
d, se = res.paired_difference(0, 1)
print(f"fallback {res.estimate(0).point:.4f} vs plain {res.estimate(1).point:.4f}: gain {d:.4f} ({d / se:.1f} SE)")

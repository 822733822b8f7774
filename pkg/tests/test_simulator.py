import math

import numpy as np
import pytest

from prophet_bench.distributions import Instance, TwoPoint, Uniform
from prophet_bench.instances import thm2_instance
from prophet_bench.policies import CutoffPolicy, ThresholdPolicy, pi_single_threshold
from prophet_bench.simulator import (
    BEST_CHOICE,
    Goal,
    TopK,
    block_size,
    derive_seed,
    estimate,
    estimate_many,
    exact_success_small,
    realize,
    run_trial,
    wilson_interval,
    _generator,
)
from prophet_bench.errors import TooLarge


class CoinGoal(Goal):
    name = "coin"

    def success(self, real, pos):
        ok = pos >= 0
        aux = real.aux[np.arange(real.rows), np.maximum(pos, 0)]
        return ok & (aux < 0.5)


def test_seed_derivation_stable():
    assert derive_seed(42, 0, 1) == derive_seed(42, 0, 1)
    assert derive_seed(42, 0, 1) != derive_seed(42, 1, 0)
    assert block_size(10) == 65536 and block_size(20000) == 52 and block_size(10 ** 7) == 1


def test_run_trial_examples():
    rng = np.random.default_rng(0)
    out = run_trial(Instance.iid(Uniform(0, 1), 1), ThresholdPolicy.constant(-math.inf, 1), BEST_CHOICE, rng)
    assert out.accepted_position == 0 and out.success and out.rank_of_accepted == 1
    out = run_trial(Instance.iid(Uniform(0, 1), 2), ThresholdPolicy.constant(math.inf, 2), BEST_CHOICE, rng)
    assert out.accepted_position is None and not out.success


def test_estimate_deterministic_case():
    e = estimate(Instance.iid(Uniform(0, 1), 1), ThresholdPolicy.constant(-math.inf, 1), trials=1000)
    assert e.point == 1.0 and e.ci_high == 1.0 and e.ci_low > 0.99


def test_coin_calibration():
    e = estimate(Instance.iid(Uniform(0, 1), 3), ThresholdPolicy.constant(-math.inf, 3), CoinGoal(),
                 trials=100000, master_seed=11)
    assert e.ci_low <= 0.5 <= e.ci_high


def test_same_seed_same_counts_any_workers():
    inst = Instance.iid(Uniform(0, 1), 200)
    pol = pi_single_threshold(inst)
    a = estimate(inst, pol, trials=30000, master_seed=5, workers=1)
    b = estimate(inst, pol, trials=30000, master_seed=5, workers=4)
    c = estimate(inst, pol, trials=30000, master_seed=6, workers=1)
    assert a == b
    assert a.successes != c.successes


def test_thm2_exact_and_mc():
    inst = thm2_instance(3)
    assert exact_success_small(inst, CutoffPolicy(2)) == pytest.approx(0.5, abs=1e-15)
    e = estimate(thm2_instance(3, 1e-6), CutoffPolicy(2), trials=10 ** 6, master_seed=3)
    assert abs(e.point - 0.5) <= 3 * e.stderr + 1e-12


def test_exact_two_twopoints_hand():
    # outcomes (1,1): tie, success 1/2; (1,0),(0,1): success; (0,0): nothing accepted
    inst = Instance((TwoPoint(1, 0.5), TwoPoint(1, 0.5)))
    pol = ThresholdPolicy.constant(0.5, 2)
    assert exact_success_small(inst, pol) == pytest.approx(0.25 * 0.5 + 0.5)
    e = estimate(inst, pol, trials=200000, master_seed=1)
    assert abs(e.point - 0.625) <= 4 * e.stderr
    one = Instance((TwoPoint(1, 0.5),))
    assert exact_success_small(one, ThresholdPolicy.constant(-math.inf, 1)) == 1.0


def test_exact_too_large():
    inst = Instance((TwoPoint(1, 0.5),) * 12)
    with pytest.raises(TooLarge):
        exact_success_small(inst, ThresholdPolicy.constant(0.5, 12))


def test_topk_goal_and_ranks():
    inst = Instance.in_index_order([Uniform(0, 1)] * 5)
    real = realize(inst, 1000, _generator(2, 0), _generator(2, 1), _generator(2, 2))
    pos = np.zeros(1000, dtype=np.int64)
    r = real.ranks(pos)
    assert r.min() >= 1 and r.max() <= 5
    assert np.array_equal(TopK(2).success(real, pos), r <= 2)
    assert np.all(real.ranks(np.full(1000, -1)) == 0)


def test_multi_estimate_paired():
    inst = Instance.iid(Uniform(0, 1), 10)
    p = pi_single_threshold(inst)
    m = estimate_many(inst, [p, p.clone()], [BEST_CHOICE], 20000, 9)
    assert m.paired_difference(0, 1) == (0.0, 0.0)
    assert m.successes[0, 0] == m.successes[1, 0]


def test_wilson():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.1
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi

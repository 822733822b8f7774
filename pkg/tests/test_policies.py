import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from prophet_bench.distributions import Instance, TwoPoint, Uniform, prob_below
from prophet_bench.errors import InfeasibleTarget
from prophet_bench.instances import thm2_instance
from prophet_bench.poissonization import GAMMA, lambda_star
from prophet_bench.policies import (
    CutoffPolicy,
    ThresholdPolicy,
    cutoff_policy_value,
    cutoff_policy_values,
    gm_threshold_quantiles,
    iid_optimal_policy,
    pi_single_threshold,
    prob_exactly_one_above,
    prob_exactly_one_above_bruteforce,
    ps_single_threshold,
    topk_single_threshold,
)
from prophet_bench.simulator import exact_success_small

E = math.exp(1.0)


def test_pi_single_examples():
    assert pi_single_threshold(Instance.iid(Uniform(0, 1), 1)).thresholds[0].value == pytest.approx(1 / E)
    assert pi_single_threshold(Instance.iid(Uniform(0, 1), 4)).thresholds[0].value == pytest.approx(
        math.exp(-0.25), abs=1e-10)
    tau = pi_single_threshold(Instance((Uniform(0, 1), Uniform(0, 2)))).thresholds[0].value
    assert tau == pytest.approx(math.sqrt(2 / E), abs=1e-10)
    assert tau == pytest.approx(0.8578, abs=1e-4)


def test_ps_single_examples():
    lam = lambda_star()
    assert ps_single_threshold(Instance.iid(Uniform(0, 1), 1)).thresholds[0].value == pytest.approx(
        math.exp(-lam), abs=1e-10)
    assert ps_single_threshold(Instance.iid(Uniform(0, 1), 2)).thresholds[0].value == pytest.approx(
        math.exp(-lam / 2), abs=1e-10)


@pytest.mark.parametrize("inst", [
    Instance.iid(Uniform(0, 1), 7),
    Instance((Uniform(0, 1), Uniform(0, 3), TwoPoint(2, 0.4))),
    Instance((TwoPoint(1, 0.5),) * 3),
])
def test_ps_roundtrip(inst):
    tau = ps_single_threshold(inst).thresholds[0]
    prod = math.prod(prob_below(d, tau) for d in inst.distributions)
    assert prod == pytest.approx(math.exp(-lambda_star()), abs=1e-9)


def test_topk_threshold():
    pol = topk_single_threshold(Instance.iid(Uniform(0, 1), 100), 5)
    assert pol.thresholds[0].value == pytest.approx(1 - GAMMA * 5 / 100, abs=1e-10)
    assert pol.thresholds[0].value == pytest.approx(0.98090, abs=1e-5)
    k = math.ceil(10 / GAMMA)
    with pytest.raises(InfeasibleTarget):
        topk_single_threshold(Instance.iid(Uniform(0, 1), 10), k)


def test_prob_exactly_one_examples():
    assert prob_exactly_one_above([0.5, 0.5]) == pytest.approx(0.5)
    assert prob_exactly_one_above([1 - 1 / E]) == pytest.approx(1 - 1 / E)
    assert prob_exactly_one_above([1.0, 0.3]) == pytest.approx(0.7)
    assert prob_exactly_one_above([1.0, 1.0]) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_exactly_one_matches_enumeration(p):
    assert prob_exactly_one_above(p) == pytest.approx(prob_exactly_one_above_bruteforce(p), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=40))
def test_exactly_one_at_least_inv_e(w):
    w = np.array(w)
    p = 1 - np.exp(-w / w.sum())     # prod (1 - p) = 1/e
    assert prob_exactly_one_above(p) >= 1 / E - 1e-12


def test_cutoff_values_small():
    assert cutoff_policy_value(3, 2) == pytest.approx(0.5)
    assert cutoff_policy_value(3, 1) == pytest.approx(1 / 3)
    assert cutoff_policy_value(3, 3) == pytest.approx(1 / 3)
    v = cutoff_policy_values(10 ** 4)
    assert 1 / E <= v.max() <= 1 / E + 2e-4


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_cutoff_matches_enumeration(n):
    inst = thm2_instance(n)
    for i in range(1, n + 1):
        assert exact_success_small(inst, CutoffPolicy(i)) == pytest.approx(cutoff_policy_value(n, i), abs=1e-14)


def test_iid_optimal_small_cases():
    pol = iid_optimal_policy(Uniform(0, 1), 1)
    assert pol.thresholds[0].value == -math.inf
    assert pol.predicted_success == pytest.approx(1.0)
    # accept the first draw iff u >= 1 - u
    two, _ = integrate.quad(lambda u: max(u, 1 - u), 0, 1, points=[0.5])
    assert iid_optimal_policy(Uniform(0, 1), 2).predicted_success == pytest.approx(two, abs=1e-4)


def test_gm_thresholds_indifference():
    # with m draws left, b solves sum_{j=1}^m (b^{-j} - 1)/j = 1
    b, _ = gm_threshold_quantiles(50, 4000)
    for m in (1, 2, 5, 10):
        x = b[50 - m - 1]
        assert sum((x ** -j - 1) / j for j in range(1, m + 1)) == pytest.approx(1.0, abs=2e-3)
    assert np.all(np.diff(b) <= 1e-12)


def test_iid_optimal_rejects_atoms():
    with pytest.raises(ValueError):
        iid_optimal_policy(TwoPoint(1, 0.5), 3)


def test_threshold_policy_decide_matches_block():
    from prophet_bench.simulator import realize, _generator
    inst = Instance.iid(Uniform(0, 1), 8)
    pol = ThresholdPolicy(list(np.linspace(0.9, 0.3, 8)), require_running_max=True)
    real = realize(inst, 300, _generator(1, 0), _generator(1, 1), _generator(1, 2))
    fast = pol.first_accept(real, None)
    slow = Policy_first_accept_scalar(pol, real)
    assert np.array_equal(fast, slow)


def Policy_first_accept_scalar(pol, real):
    from prophet_bench.policies import Policy
    return Policy.first_accept(pol, real, None)

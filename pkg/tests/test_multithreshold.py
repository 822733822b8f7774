import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prophet_bench.distributions import Instance, Uniform
from prophet_bench.errors import IdentityUnavailable, InfeasibleParams
from prophet_bench.instances import named_instance, superstar_instance, thm2_instance
from prophet_bench.multithreshold import (
    Algorithm1Policy,
    Algorithm2Policy,
    MultiThresholdParams,
    ThresholdGrid,
    algorithm2_policy,
    band_probabilities,
    build_dmin,
    build_grid,
    coupled_discrepancy,
    derive_params,
    dmin_optimal_thresholds,
    dmin_threshold_success,
    lemma_checkers,
    lemma_no2_check,
    superstar_fallback_policy,
    superstar_probe,
    trials_for_epsilon,
)
from prophet_bench.policies import ps_single_threshold
from prophet_bench.simulator import BEST_CHOICE, estimate, estimate_many, realize, _generator


def test_derive_params_examples():
    p = derive_params(0.1, 10 ** 6)
    assert (p.lambda0, p.c) == (0.1, 900)
    assert p.rho == pytest.approx(1e-3) and p.q == pytest.approx(5e-3) and p.delta == pytest.approx(2.5e-7)
    assert p.epsilon == pytest.approx(1e-10 / (24 * math.log(200)))
    p = derive_params(0.5, 1000)
    assert (p.c, p.group_size, p.group_count) == (4, 125, 8)
    with pytest.raises(InfeasibleParams):
        derive_params(0.1, 10)


@pytest.mark.parametrize("gamma", np.linspace(0.01, 0.99, 99))
def test_consistency_grid(gamma):
    p = derive_params(float(gamma), 10 ** 9)
    assert p.consistency() >= 0
    # bands never carry more than rho
    assert p.lambda0 + p.c * p.rho >= 1 - 1e-12


def test_group_of_covers_positions():
    p = derive_params(0.3, 5000)
    g = p.group_of(np.arange(1, 5001))
    assert g.min() == 1 and g.max() == p.group_count
    assert np.all(np.diff(g) >= 0)


def test_build_grid_examples():
    inst = Instance.iid(Uniform(0, 1), 10)
    p = derive_params(0.5, 10)
    grid = build_grid(inst, p)
    assert grid.t[0] == pytest.approx(0.5 ** 0.1, abs=1e-9)
    assert grid.t[-1] == 1.0
    assert grid.roundtrip_error(inst) <= 1e-9


@pytest.mark.parametrize("spec,gamma", [("mixed-uniform:5000", 0.3), ("mixed-uexp:400", 0.5),
                                        ("iid-exponential:1000", 0.3)])
def test_grid_roundtrip(spec, gamma):
    inst = named_instance(spec)
    p = derive_params(gamma, inst.n)
    grid = build_grid(inst, p)
    assert grid.roundtrip_error(inst) <= 1e-9
    assert np.all(np.diff(grid.t) > 0)


def test_rounding():
    grid = ThresholdGrid(np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.75, 1.0]))
    assert list(grid.round_index([0.5, 1.0, 2.5, 3.0])) == [-1, 0, 1, 2]
    assert grid.round_down(2.5) == 2.0 and grid.round_down(0.1) == -np.inf


def test_dmin_mass_envelope():
    inst = named_instance("mixed-uniform:2000")
    p = derive_params(0.3, inst.n)
    grid = build_grid(inst, p)
    d = build_dmin(inst, p, grid)
    assert d.masses.sum() <= 1
    band = band_probabilities(inst, grid).sum(axis=0)
    assert np.all(p.q * band <= p.q * p.rho / p.lambda0 * inst.n / (inst.n - 1) + 1e-12)


def _mc_proxy(dmin, T, rows, seed):
    rng = np.random.default_rng(seed)
    D = dmin.sample_index(rng, (rows, len(T)))
    acc = D > np.asarray(T)[None, :]
    hit = acc.any(1)
    pick = D[np.arange(rows), acc.argmax(1)]
    return np.mean(hit & (pick >= D.max(1)) & (pick >= 0))


def test_proxy_dp_matches_mc():
    inst = named_instance("iid-uniform:2000")
    p = derive_params(0.3, inst.n)
    dmin = build_dmin(inst, p, build_grid(inst, p))
    T, val = dmin_optimal_thresholds(dmin, p.group_count)
    assert dmin_threshold_success(dmin, T) == pytest.approx(val, abs=1e-12)
    mc = _mc_proxy(dmin, T, 200000, 1)
    assert abs(mc - val) < 4 * math.sqrt(val * (1 - val) / 200000)


def test_proxy_dp_is_optimal_among_constant_rules():
    inst = named_instance("mixed-uniform:2000")
    p = derive_params(0.3, inst.n)
    dmin = build_dmin(inst, p, build_grid(inst, p))
    _, val = dmin_optimal_thresholds(dmin, p.group_count)
    for c in range(-2, p.c):
        assert dmin_threshold_success(dmin, [c] * p.group_count) <= val + 1e-12


def test_algorithm2_extremes():
    inst = Instance.iid(Uniform(0, 1), 400)
    p = derive_params(0.1, 400)
    grid = build_grid(inst, p)
    never = Algorithm2Policy(p, grid, [np.inf] * p.group_count)
    assert estimate(inst, never, trials=2000, master_seed=1).successes == 0
    low = Algorithm2Policy(p, grid, [grid.t[0]] * p.group_count)
    real = realize(inst, 2000, _generator(1, 0), _generator(1, 1), _generator(1, 2))
    pos = low.first_accept(real, _generator(1, 3))
    # every acceptance is the first unskipped value rounding above t_0
    above = (grid.round_index(real.values) >= 1) & ~low.last_coins
    first = np.where(above.any(1), above.argmax(1), -1)
    assert np.array_equal(pos, first)


def test_algorithm2_skip_rate():
    inst = Instance.iid(Uniform(0, 1), 400)
    p = derive_params(0.1, 400)
    pol = Algorithm2Policy(p, build_grid(inst, p), [np.inf] * p.group_count)
    real = realize(inst, 500, _generator(2, 0), _generator(2, 1), _generator(2, 2))
    pol.first_accept(real, _generator(2, 3))
    rate = pol.last_coins.mean()
    N = pol.last_coins.size
    assert abs(rate - 0.4) < 3 * math.sqrt(0.24 / N)


def test_algorithm2_scalar_matches_block():
    inst = Instance.iid(Uniform(0, 1), 200)
    p = derive_params(0.1, 200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pol = algorithm2_policy(inst, p)
    real = realize(inst, 50, _generator(3, 0), _generator(3, 1), _generator(3, 2))
    fast = pol.first_accept(real, _generator(3, 3))
    # replay the coins through the scalar interface
    coins = iter(pol.last_coins.ravel())

    class Replay:
        def random(self):
            return 0.0 if next(coins) else 1.0

    slow = np.full(50, -1)
    for b in range(50):
        pol.reset(Replay())
        for t in range(200):
            from prophet_bench.distributions import TieBreakObservation
            hit = pol.decide(t + 1, TieBreakObservation(real.values[b, t], real.aux[b, t]))
            if hit:
                slow[b] = t
                for _ in range(t + 1, 200):
                    next(coins)
                break
    assert np.array_equal(fast, slow)


def test_algorithm1_single_group():
    p = MultiThresholdParams(0.1, 5, 0.1, 1e-3, 1.0, 0.0, 0.0, 1, 5, 1)
    grid = ThresholdGrid(np.array([1.0, 2.0]), np.array([0.1, 1.0]))
    a1 = Algorithm1Policy(p, grid, [1.5])
    skip = np.zeros((4, 1), dtype=bool)
    rounded = np.array([[-np.inf], [1.0], [1.5], [2.0]])
    assert list(a1.accept_groups(rounded, skip)) == [-1, -1, -1, 0]
    assert list(a1.accept_groups(np.full((3, 1), -np.inf), skip[:3])) == [-1, -1, -1]


def test_coupled_discrepancy_small():
    inst = Instance.iid(Uniform(0, 1), 2000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pol = algorithm2_policy(inst, derive_params(0.2, 2000))
    r = coupled_discrepancy(inst, pol, 5000, 4)
    assert r.discrepancy_rate <= 0.6
    assert coupled_discrepancy(inst, pol, 5000, 4) == r


def test_superstar_probe_examples():
    assert superstar_probe(Instance.iid(Uniform(0, 1), 50), 0.1) == (1 / 50, 0, True)
    inst = Instance((Uniform(10, 11),) + (Uniform(0, 1),) * 5)
    mp, idx, ok = superstar_probe(inst, 0.5, trials=20000, seed=1)
    assert (mp, idx, ok) == (1.0, 0, False)
    mp, _, _ = superstar_probe(thm2_instance(20), 0.2, trials=100000, seed=2)
    assert abs(mp - 1 / 20) < 0.01
    assert trials_for_epsilon(0.1) > 100


def test_fallback_needs_identities():
    inst = Instance((Uniform(0, 1),) * 4, identities_visible=False)
    with pytest.raises(IdentityUnavailable):
        superstar_fallback_policy(inst, 0.5)


def test_fallback_without_star_is_plain():
    inst = Instance.iid(Uniform(0, 1), 20)
    fb = superstar_fallback_policy(inst, 0.5)
    assert fb.star is None
    m = estimate_many(inst, [fb, ps_single_threshold(inst)], [BEST_CHOICE], 20000, 3)
    assert m.only[0, 1, 0] == 0 and m.only[1, 0, 0] == 0


def test_fallback_eps_one_coverage():
    inst = superstar_instance(10)
    fb = superstar_fallback_policy(inst, 1.0, star=0)
    assert fb.window == 5
    e = estimate(inst, fb, trials=100000, master_seed=8)
    # star is max w.p. s^9 and lands in the last half w.p. 1/2
    s = inst.distributions[0].atoms()[0]
    assert e.point >= 0.5 * s ** 9 - 3 * e.stderr


def test_lemma_checkers_iid_and_hetero():
    rep = lemma_checkers(named_instance("iid-uniform:3000"), derive_params(0.3, 3000), 50, 1)
    assert rep["lemma10_sandwich"]["violations"] == 0
    rep = lemma_checkers(named_instance("mixed-uniform:5000"), derive_params(0.3, 5000), 50, 1)
    for k in ("lemma12", "lemma15_allyprob", "lemma_es"):
        assert rep[k]["violations"] == 0


@pytest.mark.parametrize("seed", range(20))
def test_lemma12_many_instances(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(300, 1500))
    his = rng.uniform(0.5, 3.0, size=4)
    dists = tuple(Uniform(0, float(his[i % 4])) for i in range(n))
    inst = Instance(dists)
    rep = lemma_checkers(inst, derive_params(0.3, n), 5, seed)
    assert rep["lemma12"]["violations"] == 0
    assert rep["lemma15_allyprob"]["violations"] == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=15))
def test_no2(p):
    two, sq = lemma_no2_check(p)
    assert two <= sq + 1e-12

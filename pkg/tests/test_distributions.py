import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from prophet_bench.distributions import (
    CdfPower,
    Discrete,
    Exponential,
    Instance,
    MaxOf,
    ScaledShift,
    TieBreakObservation,
    TwoPoint,
    Uniform,
    ZeroInflated,
    above_probs,
    argmax_probabilities,
    cdf,
    collection_distribution,
    distribution_from_dict,
    geometric_mean_distribution,
    instance_from_dict,
    load_instance,
    nth_root_factorization,
    prob_below,
    quantile_of_max,
    threshold_for_expected_count,
)
from prophet_bench.errors import NoBracket

E = math.exp(1.0)


def test_cdf_examples():
    assert cdf(Uniform(0, 1), 0.3) == pytest.approx(0.3)
    assert cdf(TwoPoint(5, 0.25), 4) == pytest.approx(0.75)
    assert cdf(CdfPower(Uniform(0, 1), 2), 0.5) == pytest.approx(0.25)


@pytest.mark.parametrize("d", [
    Uniform(0, 1), Uniform(-2, 3), Exponential(2.0), TwoPoint(3, 0.4),
    Discrete(((0.0, 0.2), (1.0, 0.3), (2.0, 0.5))), ScaledShift(Uniform(0, 1), 2.0, 1.0),
    CdfPower(Exponential(1.0), 3.0), ZeroInflated(Uniform(1, 2), 0.3),
    MaxOf((Uniform(0, 1), Uniform(0, 2))),
])
def test_cdf_shape(d):
    xs = np.linspace(-5, 10, 801)
    F = d.cdf(xs)
    assert np.all(np.diff(F) >= -1e-15)
    assert d.cdf(-1e9) == pytest.approx(0.0, abs=1e-12)
    assert d.cdf(1e9) == pytest.approx(1.0, abs=1e-12)
    # left limit never exceeds the value; equal away from atoms
    assert np.all(d.cdf_left(xs) <= F + 1e-15)
    # right continuity
    assert np.allclose(d.cdf(xs + 1e-12), F, atol=1e-9)


def test_discrete_masses_sum_to_one():
    with pytest.raises(ValueError):
        Discrete(((0.0, 0.5), (1.0, 0.4)))
    d = Discrete(((0.0, 0.2), (1.0, 0.3), (2.0, 0.5)))
    assert float(np.sum(d.atom_mass(d.atoms()))) == pytest.approx(1.0, abs=1e-12)


def test_cdfpower_max_identity():
    d = CdfPower(Uniform(0, 1), 1.0 / 3)
    xs = np.linspace(0, 1, 50)
    assert np.allclose(d.cdf(xs) ** 3, xs, atol=1e-12)


def test_quantile_of_max_examples():
    assert quantile_of_max([Uniform(0, 1)] * 2, 0.25).value == pytest.approx(0.5, abs=1e-12)
    assert quantile_of_max([Uniform(0, 1)], 1 / E).value == pytest.approx(0.367879441, abs=1e-9)
    assert quantile_of_max([Uniform(0, 1), Uniform(0, 2)], 1 / 8).value == pytest.approx(0.5, abs=1e-12)


def test_quantile_of_max_atoms_use_aux():
    # all mass at 2: threshold sits on the atom and splits it
    d = [TwoPoint(2.0, 1.0)] * 2
    tau = quantile_of_max(d, 0.36)
    assert tau.value == 2.0
    assert prob_below(d[0], tau) ** 2 == pytest.approx(0.36, abs=1e-12)


def test_quantile_bad_p():
    with pytest.raises(ValueError):
        quantile_of_max([Uniform(0, 1)], 1.0)
    with pytest.raises(NoBracket):
        quantile_of_max([], 0.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([Uniform(0, 1), Uniform(0, 2), Exponential(1.0), TwoPoint(1, 0.3),
                                 ZeroInflated(Uniform(1, 2), 0.1), Discrete(((0.0, 0.5), (3.0, 0.5)))]),
                min_size=1, max_size=8),
       st.floats(0.01, 0.99))
def test_quantile_roundtrip(dists, p):
    tau = quantile_of_max(dists, p)
    prod = math.prod(prob_below(d, tau) for d in dists)
    assert prod == pytest.approx(p, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([Uniform(0, 1), Exponential(2.0), TwoPoint(1, 0.5), TwoPoint(2, 0.2)]),
                min_size=2, max_size=10), st.floats(0.05, 0.95))
def test_expected_count_roundtrip(dists, frac):
    target = frac * min(len(dists) - 0.5, sum(1 - prob_below(d, 0.0) for d in dists) + 1e-9)
    if target <= 0:
        return
    try:
        tau = threshold_for_expected_count(dists, target)
    except NoBracket:
        return
    got = sum(1 - prob_below(d, tau) for d in dists)
    assert got == pytest.approx(target, abs=1e-9)


def test_above_probs_examples():
    assert np.allclose(above_probs([Uniform(0, 1)], 0.25), [0.75])
    assert np.allclose(above_probs([TwoPoint(3, 0.5), Uniform(0, 1)], 2.0), [0.5, 0.0])
    tau = quantile_of_max([Uniform(0, 1)] * 4, 1 / E)
    p = np.asarray(above_probs([Uniform(0, 1)] * 4, tau))
    assert np.allclose(p, 1 - math.exp(-0.25), atol=1e-12)
    assert p[0] == pytest.approx(0.2212, abs=1e-4)


def test_collection_distribution():
    d = collection_distribution([Uniform(0, 1), Uniform(0, 1)])
    assert d.cdf(0.5) == pytest.approx(0.25)
    u = Uniform(0, 1)
    assert collection_distribution([u]) is u
    m = collection_distribution([TwoPoint(1, 0.5), TwoPoint(2, 0.5)])
    assert float(m.atom_mass(0.0)) == pytest.approx(0.25)
    assert float(m.atom_mass(1.0)) == pytest.approx(0.25)
    assert float(m.atom_mass(2.0)) == pytest.approx(0.5)


def test_nth_root():
    r = nth_root_factorization(Uniform(0, 1), 2)
    xs = np.linspace(0, 1, 11)
    assert np.allclose(r.cdf(xs), np.sqrt(xs))
    u = Exponential(1.0)
    assert nth_root_factorization(u, 1) is u
    rng = np.random.default_rng(5)
    r4 = nth_root_factorization(Uniform(0, 1), 4)
    maxes = r4.sample(rng, (100000, 4)).max(axis=1)
    direct = rng.random(100000)
    assert stats.ks_2samp(maxes, direct).pvalue > 0.01


def test_geometric_mean_distribution():
    u = Uniform(0, 1)
    assert geometric_mean_distribution([u] * 3) is u
    g = geometric_mean_distribution([Uniform(0, 1), Uniform(0, 2)])
    assert g.cdf(1.0) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    dists = [Uniform(0, 1), Uniform(0, 2), Exponential(1.0)]
    g = geometric_mean_distribution(dists)
    xs = np.linspace(0.01, 3, 20)
    prod = np.prod([d.cdf(xs) for d in dists], axis=0)
    assert np.allclose(g.cdf(xs) ** 3, prod, atol=1e-12)


def test_tiebreak_ordering():
    assert TieBreakObservation(1.0, 0.2) > TieBreakObservation(1.0, 0.1)
    assert TieBreakObservation(2.0, 0.0) > TieBreakObservation(1.0, 0.9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99))
def test_augmented_threshold_hits_any_exceedance(target):
    # an atom at 1 of mass 0.6: split it so exceedance equals the target exactly
    d = Discrete(((0.0, 0.4), (1.0, 0.6)))
    tau = quantile_of_max([d], 1 - target)
    assert 1 - prob_below(d, tau) == pytest.approx(target, abs=1e-12)


def test_json_roundtrip(tmp_path):
    inst = Instance.in_index_order([
        Uniform(0, 1), Exponential(2.0), TwoPoint(3, 0.5), Discrete(((0.0, 0.5), (1.0, 0.5))),
        ScaledShift(Uniform(0, 1), 2, 1), CdfPower(Uniform(0, 1), 0.5), ZeroInflated(Uniform(1, 2), 0.1),
        MaxOf((Uniform(0, 1), Exponential(1.0))),
    ])
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_dict()))
    back = load_instance(path)
    assert back == inst
    assert instance_from_dict(inst.to_dict()).order.permutation == tuple(range(8))
    with pytest.raises(ValueError):
        distribution_from_dict({"kind": "cauchy"})


def test_argmax_probabilities_bounds():
    lo, hi = argmax_probabilities([Uniform(0, 1)] * 4, 2048)
    assert np.all(lo <= 0.25 + 1e-12) and np.all(hi >= 0.25 - 1e-12)
    lo, hi = argmax_probabilities([Uniform(10, 11)] + [Uniform(0, 1)] * 3, 1024)
    assert lo[0] <= 1.0 + 1e-12 <= hi[0] + 2e-12
    assert hi[0] - lo[0] <= 2.0 / 1024
    # two uniforms on different ranges: Pr[X_1 > X_2] for U(0,1) vs U(0,2) is 1/4
    lo, hi = argmax_probabilities([Uniform(0, 1), Uniform(0, 2)], 4096)
    assert lo[0] - 1e-12 <= 0.25 <= hi[0] + 1e-12

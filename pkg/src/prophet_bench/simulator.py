"""Seedable Monte Carlo engine and an exhaustive oracle for small discrete instances.

Trials are grouped into fixed-size blocks.  Block ``b`` of a run with master
seed ``s`` draws from generators seeded by ``derive_seed(s, b, stream)``, with
one stream each for values, auxiliary uniforms, arrival order and policy
coins.  The block size depends only on ``n``, so results are bitwise
reproducible whatever the number of worker threads; the fold over blocks is
an integer sum.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.stats import norm

from .distributions import AdversarialFixed, Instance, _AtomicLaw
from .errors import TooLarge
from .policies import Policy

__all__ = [
    "derive_seed",
    "block_size",
    "Realization",
    "realize",
    "Goal",
    "TopK",
    "BEST_CHOICE",
    "TrialOutcome",
    "McEstimate",
    "MultiEstimate",
    "wilson_interval",
    "run_trial",
    "estimate",
    "estimate_many",
    "exact_success_small",
    "worker_count",
]

MASK64 = (1 << 64) - 1
STREAM_VALUES, STREAM_AUX, STREAM_ORDER, STREAM_POLICY = 0, 1, 2, 3
EXACT_WORK_LIMIT = 10 ** 7


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *keys: int) -> int:
    """Mix a master seed with integer keys into a 64-bit seed (splitmix64 chain)."""
    h = _splitmix64(int(master) & MASK64)
    for k in keys:
        h = _splitmix64(h ^ (int(k) & MASK64))
    return h


def _generator(master: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *keys)))


def block_size(n: int) -> int:
    return max(1, min(65536, 2 ** 20 // max(n, 1)))


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PROPHET_BENCH_THREADS", "1")))
    except ValueError:
        return 1


@numba.njit(cache=True)
def _shuffle_rows(ids, u):
    # Fisher-Yates per row, driven by pre-drawn uniforms
    rows, n = ids.shape
    for r in range(rows):
        for i in range(n - 1, 0, -1):
            j = int(u[r, n - 1 - i] * (i + 1))
            if j > i:
                j = i
            tmp = ids[r, i]
            ids[r, i] = ids[r, j]
            ids[r, j] = tmp


def _random_permutations(rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    ids = np.broadcast_to(np.arange(n, dtype=np.int64), (rows, n)).copy()
    if n > 1:
        _shuffle_rows(ids, rng.random((rows, n - 1)))
    return ids


class Realization:
    """A block of realized trials in arrival order.

    ``values[b, t]`` and ``aux[b, t]`` describe the observation arriving at
    step ``t`` (0-based) of trial ``b``; ``ids[b, t]`` is the index of the
    distribution that produced it.
    """

    def __init__(self, instance: Instance, values, aux, ids=None, order_rng=None):
        self.instance = instance
        self.values = values
        self.aux = aux
        self._ids = ids
        self._order_rng = order_rng

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def ids(self) -> np.ndarray:
        if self._ids is None:
            # i.i.d. values were drawn directly in arrival order, so any
            # labelling independent of the values is exact
            order = self.instance.order
            if isinstance(order, AdversarialFixed):
                self._ids = np.broadcast_to(np.array(order.permutation), self.values.shape)
            else:
                self._ids = _random_permutations(self._order_rng, self.rows, self.n)
        return self._ids

    def ranks(self, pos: np.ndarray) -> np.ndarray:
        """Rank (1 = largest) of the observation at arrival position ``pos`` per row; 0 if none."""
        out = np.zeros(self.rows, dtype=np.int64)
        hit = pos >= 0
        if not hit.any():
            return out
        r = np.nonzero(hit)[0]
        v, a = self.values[r], self.aux[r]
        av = v[np.arange(len(r)), pos[r]][:, None]
        aa = a[np.arange(len(r)), pos[r]][:, None]
        out[r] = 1 + np.sum((v > av) | ((v == av) & (a > aa)), axis=1)
        return out


def realize(instance: Instance, rows: int, rng_values, rng_aux, rng_order) -> Realization:
    n = instance.n
    aux = rng_aux.random((rows, n))
    if instance.is_iid:
        d = instance.groups[0][0]
        values = np.asarray(d.sample(rng_values, (rows, n)), dtype=float)
        return Realization(instance, values, aux, None, rng_order)
    by_index = np.empty((rows, n))
    for (d, _), c in zip(instance.groups, instance.group_columns):
        by_index[:, c] = d.sample(rng_values, (rows, len(c)))
    if isinstance(instance.order, AdversarialFixed):
        ids = np.broadcast_to(np.array(instance.order.permutation), (rows, n))
        values = by_index[:, instance.order.permutation]
    else:
        ids = _random_permutations(rng_order, rows, n)
        values = np.take_along_axis(by_index, ids, axis=1)
    return Realization(instance, values, aux, ids)


# --------------------------------------------------------------------------
# goals


class Goal:
    """Success criterion evaluated on an accepted arrival position."""

    name = "goal"

    def success(self, real: Realization, pos: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class TopK(Goal):
    """Succeed when the accepted observation is among the k largest."""

    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")

    @property
    def name(self) -> str:
        return "best-choice" if self.k == 1 else f"top-k:{self.k}"

    def success(self, real, pos):
        rank = real.ranks(pos)
        return (rank >= 1) & (rank <= self.k)


BEST_CHOICE = TopK(1)


# --------------------------------------------------------------------------
# estimates


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be positive")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = successes / trials
    z2n = z * z / trials
    center = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class McEstimate:
    trials: int
    successes: int
    point: float
    ci_low: float
    ci_high: float
    confidence: float = 0.99

    @classmethod
    def from_counts(cls, successes: int, trials: int, confidence: float = 0.99) -> "McEstimate":
        lo, hi = wilson_interval(successes, trials, confidence)
        return cls(int(trials), int(successes), successes / trials, lo, hi, confidence)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.point * (1.0 - self.point) / self.trials)


@dataclass(frozen=True)
class TrialOutcome:
    accepted_position: int | None
    accepted_index: int | None
    accepted_value: float | None
    rank_of_accepted: int | None
    success: bool


@dataclass
class MultiEstimate:
    """Counts from several policies and goals evaluated on shared realizations.

    ``successes[p, g]`` counts successes; ``only[a, b, g]`` counts trials in
    which policy ``a`` succeeded and policy ``b`` failed under goal ``g``.
    """

    trials: int
    successes: np.ndarray
    only: np.ndarray
    confidence: float = 0.99
    accepted: np.ndarray = field(default=None)

    def estimate(self, p: int = 0, g: int = 0) -> McEstimate:
        return McEstimate.from_counts(int(self.successes[p, g]), self.trials, self.confidence)

    def paired_difference(self, a: int, b: int, g: int = 0) -> tuple[float, float]:
        """Mean of ``success_a - success_b`` and its standard error."""
        N = self.trials
        n_ab, n_ba = int(self.only[a, b, g]), int(self.only[b, a, g])
        mean = (n_ab - n_ba) / N
        second = (n_ab + n_ba) / N
        var = max(second - mean * mean, 0.0)
        return mean, math.sqrt(var / N)


def _run_block(instance, policies, goals, master_seed, bi, rows):
    real = realize(instance, rows,
                   _generator(master_seed, bi, STREAM_VALUES),
                   _generator(master_seed, bi, STREAM_AUX),
                   _generator(master_seed, bi, STREAM_ORDER))
    P, G = len(policies), len(goals)
    wins = np.zeros((P, G, rows), dtype=bool)
    accepted = np.zeros(P, dtype=np.int64)
    for p, pol in enumerate(policies):
        # every policy sees the same coin stream (common random numbers)
        pos = pol.first_accept(real, _generator(master_seed, bi, STREAM_POLICY))
        accepted[p] = int(np.sum(pos >= 0))
        for g, goal in enumerate(goals):
            wins[p, g] = goal.success(real, pos)
    succ = wins.sum(axis=2)
    only = np.sum(wins[:, None] & ~wins[None, :], axis=3)
    return succ, only, accepted


def estimate_many(instance: Instance, policies: Sequence[Policy], goals: Sequence[Goal],
                  trials: int, master_seed: int, confidence: float = 0.99,
                  workers: int | None = None) -> MultiEstimate:
    """Evaluate every policy under every goal on the same realized trials."""
    if trials < 1:
        raise ValueError("trials must be positive")
    B = block_size(instance.n)
    blocks = [(bi, min(B, trials - bi * B)) for bi in range(-(-trials // B))]
    workers = worker_count() if workers is None else workers

    def job(args):
        bi, rows = args
        return _run_block(instance, [p.clone() for p in policies] if workers > 1 else policies,
                          goals, master_seed, bi, rows)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(job, blocks))
    else:
        results = [job(b) for b in blocks]
    P, G = len(policies), len(goals)
    succ = np.zeros((P, G), dtype=np.int64)
    only = np.zeros((P, P, G), dtype=np.int64)
    acc = np.zeros(P, dtype=np.int64)
    for s, o, a in results:
        succ += s
        only += o
        acc += a
    return MultiEstimate(trials, succ, only, confidence, acc)


def estimate(instance: Instance, policy: Policy, goal: Goal = BEST_CHOICE, trials: int = 10000,
             master_seed: int = 0, confidence: float = 0.99, workers: int | None = None) -> McEstimate:
    """Monte Carlo success probability with a Wilson interval."""
    res = estimate_many(instance, [policy], [goal], trials, master_seed, confidence, workers)
    return res.estimate(0, 0)


def run_trial(instance: Instance, policy: Policy, goal: Goal, rng: np.random.Generator) -> TrialOutcome:
    """One trial, all randomness drawn from ``rng``."""
    real = realize(instance, 1, rng, rng, rng)
    pos = policy.first_accept(real, rng)
    p = int(pos[0])
    ok = bool(goal.success(real, pos)[0])
    if p < 0:
        return TrialOutcome(None, None, None, None, False)
    rank = int(real.ranks(pos)[0])
    return TrialOutcome(p, int(real.ids[0, p]), float(real.values[0, p]), rank, ok)


# --------------------------------------------------------------------------
# exhaustive oracle


def exact_success_small(instance: Instance, policy: Policy, goal: Goal = BEST_CHOICE) -> float:
    """Exact success by enumerating every value combination and every arrival order.

    Needs finitely supported laws, a deterministic memoryless policy, and a
    top-k goal.  Ties in value are broken uniformly at random, as the
    auxiliary uniforms do in simulation.
    """
    if not isinstance(goal, TopK):
        raise ValueError("exact enumeration supports top-k goals only")
    rule = policy.exact_rule()
    if rule is None:
        raise ValueError(f"policy {policy.name!r} has no deterministic memoryless rule")
    dists = instance.distributions
    if not all(isinstance(d, _AtomicLaw) for d in dists):
        raise ValueError("exact enumeration needs TwoPoint or Discrete laws")
    n = instance.n
    tables = [[(v, p) for v, p in d.atom_table() if p > 0] for d in dists]
    outcomes = math.prod(len(t) for t in tables)
    if isinstance(instance.order, AdversarialFixed):
        orders = [instance.order.permutation]
    else:
        orders = None
    work = outcomes * (1 if orders else math.factorial(n))
    if work > EXACT_WORK_LIMIT:
        raise TooLarge(f"{work} cases exceed the enumeration limit {EXACT_WORK_LIMIT}")
    if orders is None:
        orders = list(itertools.permutations(range(n)))
    k = goal.k
    total = 0.0
    for combo in itertools.product(*tables):
        vals = [v for v, _ in combo]
        w = math.prod(p for _, p in combo)
        acc = 0.0
        for perm in orders:
            for t, idx in enumerate(perm):
                if rule(t + 1, vals[idx], idx):
                    x = vals[idx]
                    greater = sum(1 for v in vals if v > x)
                    ties = sum(1 for v in vals if v == x)
                    acc += min(max((k - greater) / ties, 0.0), 1.0)
                    break
        total += w * acc / len(orders)
    return total

"""Multi-threshold machinery for random-order arrivals without superstars.

The max-law of the instance is cut into bands of probability ``rho`` above a
floor ``lambda0``; values are rounded down to band edges, and the arrival
sequence is cut into ``1/q`` consecutive groups that behave almost like
i.i.d. draws from a pessimistic discrete proxy law (``DMin``).  A threshold
rule for that proxy is then run on the real stream.

All probabilities in the lemma checkers are exact functions of the CDFs;
only the choice of the random subset ``S`` is sampled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import norm

from .distributions import Instance, argmax_probabilities, quantile_of_max, prob_below
from .errors import IdentityUnavailable, InfeasibleParams
from .policies import Policy, ps_single_threshold
from .simulator import (
    BEST_CHOICE,
    Realization,
    _generator,
    block_size,
    realize,
    STREAM_AUX,
    STREAM_ORDER,
    STREAM_POLICY,
    STREAM_VALUES,
    wilson_interval,
)

__all__ = [
    "MultiThresholdParams",
    "derive_params",
    "ThresholdGrid",
    "build_grid",
    "DMin",
    "build_dmin",
    "dmin_optimal_thresholds",
    "dmin_threshold_success",
    "Algorithm1Policy",
    "Algorithm2Policy",
    "algorithm1_policy",
    "algorithm2_policy",
    "multi_threshold_policy",
    "group_maxima",
    "coupled_discrepancy",
    "SuperstarProbe",
    "superstar_probe",
    "trials_for_epsilon",
    "SuperstarFallbackPolicy",
    "superstar_fallback_policy",
    "lemma_checkers",
    "lemma_no2_check",
]

ROUND_GUARD = 1e-9


# --------------------------------------------------------------------------
# parameters and grid


@dataclass(frozen=True)
class MultiThresholdParams:
    gamma: float
    n: int
    lambda0: float
    rho: float
    q: float
    delta: float
    epsilon: float
    c: int
    group_size: int
    group_count: int

    @property
    def skip_prob(self) -> float:
        return min(1.0, 4.0 * self.gamma)

    def group_of(self, t):
        """Group (1-based) of arrival position ``t`` (1-based); the last group takes the remainder."""
        t = np.asarray(t)
        return np.minimum((t - 1) // self.group_size + 1, self.group_count)

    def consistency(self) -> float:
        """``gamma * lambda0 / (2 rho) - q``, nonnegative by construction."""
        return self.gamma * self.lambda0 / (2.0 * self.rho) - self.q


def derive_params(gamma: float, n: int) -> MultiThresholdParams:
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    lam0, rho, q = gamma, gamma ** 3, gamma ** 2 / 2.0
    delta = gamma ** 6 / 4.0
    eps = gamma ** 10 / (24.0 * math.log(2.0 / gamma ** 2))
    # round c up so that no band carries more than rho
    c = math.ceil((1.0 - lam0) / rho - ROUND_GUARD)
    group_size = math.floor(q * n + ROUND_GUARD)
    if group_size < 1:
        raise InfeasibleParams(f"group size q*n = {q * n:.3g} rounds to zero")
    if c < 1:
        raise InfeasibleParams("threshold grid has no bands")
    return MultiThresholdParams(gamma, n, lam0, rho, q, delta, eps, c, group_size, n // group_size)


@dataclass(frozen=True)
class ThresholdGrid:
    """Band edges ``t_0 < ... < t_c`` with ``Pr[max <= t_i] = probs[i]``."""

    t: np.ndarray
    probs: np.ndarray

    @property
    def c(self) -> int:
        return len(self.t) - 1

    def round_index(self, x):
        """Index of ``x`` rounded down to the grid; -1 marks values below ``t_0``."""
        return np.searchsorted(self.t, x, side="right") - 1

    def round_down(self, x):
        idx = self.round_index(x)
        return np.where(idx >= 0, self.t[np.maximum(idx, 0)], -np.inf)

    def roundtrip_error(self, instance: Instance) -> float:
        errs = []
        for ti, p in zip(self.t[:-1], self.probs[:-1]):
            prod = math.prod(prob_below(d, ti) ** c for d, c in instance.groups)
            errs.append(abs(prod - p))
        return max(errs, default=0.0)


def build_grid(instance: Instance, params: MultiThresholdParams) -> ThresholdGrid:
    """Quantiles of the max-law at ``lambda0 + i rho``; the last edge is the support supremum."""
    probs = np.minimum(params.lambda0 + params.rho * np.arange(params.c + 1), 1.0)
    probs[-1] = 1.0
    t = [quantile_of_max(instance.distributions, float(p)).value for p in probs[:-1]]
    t.append(max(d.support()[1] for d, _ in instance.groups))
    t = np.array(t)
    if np.any(np.diff(t) <= 0):
        raise ValueError("threshold grid is not strictly increasing; atoms in the max-law are not supported")
    return ThresholdGrid(t, probs)


# --------------------------------------------------------------------------
# proxy law


def _item_cdfs(instance: Instance, points, left: bool) -> tuple[np.ndarray, np.ndarray]:
    """Per-group CDF rows at ``points`` plus the group index of every item."""
    rows = np.array([(d.cdf_left(points) if left else d.cdf(points)) for d, _ in instance.groups])
    gidx = np.empty(instance.n, dtype=np.int64)
    for g, cols in enumerate(instance.group_columns):
        gidx[cols] = g
    return rows, gidx


def band_probabilities(instance: Instance, grid: ThresholdGrid) -> np.ndarray:
    """``p[i, b] = Pr[t_b <= x_i < t_{b+1}]`` for every item and band."""
    rows, gidx = _item_cdfs(instance, grid.t, left=True)
    per_group = np.diff(rows, axis=1)
    if not math.isfinite(grid.t[-1]):
        per_group[:, -1] = 1.0 - rows[:, -2]
    return per_group[gidx]


@dataclass(frozen=True)
class DMin:
    """Discrete law taking band edge ``t_b`` with ``masses[b]``, else 0.

    Computations use the index scale: -1 stands for the zero outcome.
    """

    grid: ThresholdGrid
    masses: np.ndarray

    @property
    def zero_mass(self) -> float:
        return max(0.0, 1.0 - float(self.masses.sum()))

    def index_pmf(self) -> np.ndarray:
        """Probabilities over indices -1..c-1 (position 0 is the zero outcome)."""
        return np.concatenate([[self.zero_mass], self.masses])

    def sample_index(self, rng: np.random.Generator, size) -> np.ndarray:
        pmf = self.index_pmf()
        return rng.choice(len(pmf), size=size, p=pmf / pmf.sum()) - 1


def build_dmin(instance: Instance, params: MultiThresholdParams, grid: ThresholdGrid) -> DMin:
    band = band_probabilities(instance, grid).sum(axis=0)
    masses = (1.0 - 3.0 * params.gamma) * params.q * band
    masses = np.maximum(masses, 0.0)
    return DMin(grid, masses)


def dmin_optimal_thresholds(dmin: DMin, m: int) -> tuple[np.ndarray, float]:
    """Optimal best-choice rule for ``m`` i.i.d. draws from the proxy law.

    Ties count as success (the proxy only sees rounded values) but the
    maximum must be nonzero: taking a zero is never a win.  Returns the
    index thresholds ``T_j`` (accept iff index > ``T_j``; ``c`` means never,
    ``-2`` accept anything) and the optimal value.
    """
    pmf = dmin.index_pmf()            # over indices -1..c-1
    K = len(pmf)
    F = np.cumsum(pmf)
    F[-1] = 1.0
    W = np.zeros(K)                    # continuation value by running-max slot
    T = np.empty(m, dtype=np.int64)
    for j in range(m, 0, -1):
        stop = F ** (m - j)
        stop[0] = 0.0
        accept = stop >= W
        if accept.any() and accept[np.argmax(accept):].all():
            T[j - 1] = int(np.argmax(accept)) - 2
        elif accept.any():
            # stopping set not an up-set; keep the highest contiguous run
            last_reject = K - 1 - int(np.argmax(~accept[::-1]))
            T[j - 1] = last_reject - 1
        else:
            T[j - 1] = K - 1
        best = np.maximum(stop, W)
        # W_{j-1}(r) = sum_{v<r} P(v) W_j(r) + sum_{v>=r} P(v) max(stop, W_j)(v)
        tail = np.cumsum((pmf * best)[::-1])[::-1]
        below = np.concatenate([[0.0], F[:-1]])
        W = below * W + tail
    return T, float(W[0])


def dmin_threshold_success(dmin: DMin, T: Sequence[int]) -> float:
    """Exact success of the memoryless rule "accept the first index above ``T_j``"
    on ``len(T)`` i.i.d. proxy draws, ties counted as success, zero never a win."""
    pmf = dmin.index_pmf()
    F = np.cumsum(pmf)
    F[-1] = 1.0
    m = len(T)
    idx = np.arange(-1, len(pmf) - 1)

    def Fi(x):
        x = np.asarray(x)
        return np.where(x < -1, 0.0, F[np.clip(x + 1, 0, len(F) - 1)])

    total = 0.0
    reach = np.ones(len(pmf))   # prod_{s<j} F(min(T_s, v)) for each candidate v
    for j in range(1, m + 1):
        Tj = T[j - 1]
        take = (idx > Tj) & (idx >= 0)
        total += float(np.sum(pmf[take] * reach[take] * F[take] ** (m - j)))
        reach = reach * Fi(np.minimum(Tj, idx))
    return total


# --------------------------------------------------------------------------
# policies


def _as_value_thresholds(grid: ThresholdGrid, T: Sequence[int]) -> np.ndarray:
    out = []
    for Tj in T:
        if Tj < 0:
            out.append(-np.inf)
        elif Tj >= grid.c:
            out.append(np.inf)
        else:
            out.append(grid.t[Tj])
    return np.array(out, dtype=float)


class Algorithm2Policy(Policy):
    """Per observation: skip with probability 4*gamma; reject if the rounded value is
    at most ``t_0``; reject if it is at most the group's inner threshold; else accept."""

    def __init__(self, params: MultiThresholdParams, grid: ThresholdGrid, inner: Sequence[float]):
        inner = np.asarray(inner, dtype=float)
        if len(inner) != params.group_count:
            raise ValueError(f"need {params.group_count} inner thresholds, got {len(inner)}")
        self.params, self.grid, self.inner = params, grid, inner
        self.name = f"multi-threshold:{params.gamma:g}"
        self.alpha: float | None = None
        self.inner_index: np.ndarray | None = None

    def _passes(self, t, x):
        idx = self.grid.round_index(x)
        xr = self.grid.t[np.maximum(idx, 0)]
        tau = self.inner[self.params.group_of(t) - 1]
        return (idx >= 1) & (xr > tau)

    def decide(self, t, obs, identity=None):
        if self._rng.random() < self.params.skip_prob:
            return False
        return bool(self._passes(t, obs.value))

    def first_accept(self, real, rng):
        coins = rng.random(real.values.shape) < self.params.skip_prob
        t = np.arange(1, real.n + 1)[None, :]
        mask = self._passes(t, real.values) & ~coins
        self.last_coins = coins
        hit = mask.any(axis=1)
        return np.where(hit, mask.argmax(axis=1), -1)


class Algorithm1Policy(Policy):
    """The same four rules applied to the stream of rounded group maxima."""

    def __init__(self, params: MultiThresholdParams, grid: ThresholdGrid, inner: Sequence[float]):
        self.params, self.grid = params, grid
        self.inner = np.asarray(inner, dtype=float)
        self.name = "algorithm-1"

    def decide(self, t, obs, identity=None):
        if self._rng.random() < self.params.skip_prob:
            return False
        x = obs.value
        return bool(x > self.grid.t[0] and x > self.inner[t - 1])

    def accept_groups(self, rounded: np.ndarray, skip: np.ndarray) -> np.ndarray:
        """First accepted group per row from rounded maxima (``-inf`` below grid) and skip coins."""
        ok = (rounded > self.grid.t[0]) & (rounded > self.inner[None, : rounded.shape[1]]) & ~skip
        hit = ok.any(axis=1)
        return np.where(hit, ok.argmax(axis=1), -1)

    def first_accept(self, real, rng):
        skip = rng.random(real.values.shape) < self.params.skip_prob
        return self.accept_groups(real.values, skip)


def _inner_from_dmin(instance, params, grid):
    dmin = build_dmin(instance, params, grid)
    T, _ = dmin_optimal_thresholds(dmin, params.group_count)
    return dmin, T


def algorithm2_policy(instance: Instance, params: MultiThresholdParams,
                      inner_thresholds: Sequence[float] | None = None,
                      grid: ThresholdGrid | None = None, check_superstars: bool = True) -> Algorithm2Policy:
    """Algorithm 2 on raw arrivals.  Inner thresholds default to the optimal proxy rule."""
    grid = build_grid(instance, params) if grid is None else grid
    if check_superstars:
        _warn_superstars(instance, params.epsilon)
    dmin = build_dmin(instance, params, grid)
    if inner_thresholds is None:
        T, _ = dmin_optimal_thresholds(dmin, params.group_count)
        pol = Algorithm2Policy(params, grid, _as_value_thresholds(grid, T))
        pol.inner_index = T
        pol.alpha = dmin_threshold_success(dmin, T)
    else:
        pol = Algorithm2Policy(params, grid, inner_thresholds)
        T = np.searchsorted(grid.t, pol.inner, side="right") - 1
        T = np.where(np.isneginf(pol.inner), -2, T)
        pol.inner_index = T
        pol.alpha = dmin_threshold_success(dmin, T)
    pol.dmin = dmin
    return pol


def algorithm1_policy(params: MultiThresholdParams, grid: ThresholdGrid,
                      inner_thresholds: Sequence[float]) -> Algorithm1Policy:
    return Algorithm1Policy(params, grid, inner_thresholds)


def multi_threshold_policy(instance: Instance, gamma: float, **kw) -> Algorithm2Policy:
    return algorithm2_policy(instance, derive_params(gamma, instance.n), **kw)


def group_maxima(real: Realization, params: MultiThresholdParams):
    """Per group: position of the maximum and its value (atomless values, so no ties)."""
    B, n = real.values.shape
    G, gs = params.group_count, params.group_size
    head = real.values[:, : (G - 1) * gs].reshape(B, G - 1, gs)
    pos = np.empty((B, G), dtype=np.int64)
    pos[:, :-1] = head.argmax(axis=2) + np.arange(G - 1) * gs
    pos[:, -1] = real.values[:, (G - 1) * gs:].argmax(axis=1) + (G - 1) * gs
    vals = np.take_along_axis(real.values, pos, axis=1)
    return pos, vals


@dataclass(frozen=True)
class CoupledResult:
    trials: int
    alg1_success: int
    alg2_success: int
    discrepancy: int

    @property
    def discrepancy_rate(self) -> float:
        return self.discrepancy / self.trials


def coupled_discrepancy(instance: Instance, policy: Algorithm2Policy, trials: int,
                        master_seed: int) -> CoupledResult:
    """Run Algorithms 1 and 2 on the same realized trials.

    Algorithm 1's skip coin for group ``j`` is Algorithm 2's coin at the
    position of the group maximum.  Counts the trials where Algorithm 1
    picks a maximal rounded group maximum while Algorithm 2 misses the true
    maximum.  The instance must be atomless.
    """
    if instance.has_atoms:
        raise ValueError("the coupling needs an atomless instance")
    params, grid = policy.params, policy.grid
    alg1 = Algorithm1Policy(params, grid, policy.inner)
    B = block_size(instance.n)
    s1 = s2 = bad = 0
    for bi in range(-(-trials // B)):
        rows = min(B, trials - bi * B)
        real = realize(instance, rows, _generator(master_seed, bi, STREAM_VALUES),
                       _generator(master_seed, bi, STREAM_AUX), _generator(master_seed, bi, STREAM_ORDER))
        pos2 = policy.first_accept(real, _generator(master_seed, bi, STREAM_POLICY))
        ok2 = BEST_CHOICE.success(real, pos2)
        gpos, gval = group_maxima(real, params)
        rounded = grid.round_down(gval)
        skip = np.take_along_axis(policy.last_coins, gpos, axis=1)
        g1 = alg1.accept_groups(rounded, skip)
        picked = np.where(g1 >= 0, rounded[np.arange(rows), np.maximum(g1, 0)], -np.inf)
        ok1 = (g1 >= 0) & (picked >= rounded.max(axis=1))
        s1 += int(ok1.sum())
        s2 += int(ok2.sum())
        bad += int(np.sum(ok1 & ~ok2))
    return CoupledResult(trials, s1, s2, bad)


def _warn_superstars(instance: Instance, epsilon: float) -> None:
    if instance.is_iid and not instance.has_atoms:
        top = 1.0 / instance.n
    elif not instance.has_atoms:
        top = float(argmax_probabilities(instance.distributions, 1024)[1].max())
    else:
        warnings.warn("superstar check skipped for an instance with atoms", stacklevel=3)
        return
    if top > epsilon:
        warnings.warn(f"no-superstars assumption fails: max argmax probability {top:.3g} > epsilon {epsilon:.3g}",
                      stacklevel=3)


# --------------------------------------------------------------------------
# superstars


class SuperstarProbe(NamedTuple):
    max_prob: float
    argmax_index: int
    satisfied: bool


def trials_for_epsilon(epsilon: float, confidence: float = 0.99) -> int:
    """Trials making the Wilson half-width near ``epsilon`` at most ``epsilon/10``."""
    z = float(norm.ppf(0.5 + confidence / 2.0))
    return math.ceil(100.0 * z * z / epsilon)


def argmax_frequencies(instance: Instance, trials: int, seed: int) -> np.ndarray:
    """Counts of ``i = argmax_j x_j`` per distribution index from one sampling pass."""
    counts = np.zeros(instance.n, dtype=np.int64)
    fixed = Instance(instance.distributions, _identity_order(instance.n))
    B = block_size(instance.n)
    for bi in range(-(-trials // B)):
        rows = min(B, trials - bi * B)
        real = realize(fixed, rows, _generator(seed, bi, STREAM_VALUES),
                       _generator(seed, bi, STREAM_AUX), _generator(seed, bi, STREAM_ORDER))
        key = np.lexsort((real.aux, real.values), axis=-1)[:, -1]
        counts += np.bincount(key, minlength=instance.n)
    return counts


def _identity_order(n):
    from .distributions import AdversarialFixed
    return AdversarialFixed(tuple(range(n)))


def superstar_probe(instance: Instance, epsilon: float, trials: int | None = None,
                    seed: int = 0, confidence: float = 0.99) -> SuperstarProbe:
    """Largest ``Pr[i = argmax]`` and whether every one is at most ``epsilon``.

    Exchangeable atomless instances use the exact value ``1/n``; otherwise a
    Monte Carlo pass with Wilson upper bounds decides.
    """
    if instance.is_iid and not instance.has_atoms:
        p = 1.0 / instance.n
        return SuperstarProbe(p, 0, p <= epsilon)
    trials = trials_for_epsilon(epsilon, confidence) if trials is None else trials
    counts = argmax_frequencies(instance, trials, seed)
    i = int(np.argmax(counts))
    upper = wilson_interval(int(counts[i]), trials, confidence)[1]
    return SuperstarProbe(float(counts[i] / trials), i, bool(upper <= epsilon))


class SuperstarFallbackPolicy(Policy):
    """Single threshold, except that the designated item is taken unconditionally
    when it arrives within the last ``window`` positions."""

    needs_identity = True

    def __init__(self, tau, n: int, star: int | None, window: int):
        from .policies import ThresholdPolicy
        self.base = ThresholdPolicy.constant(tau, n)
        self.star, self.window, self.n = star, int(window), n
        self.name = "superstar-fallback"

    def decide(self, t, obs, identity=None):
        if self.star is not None and identity == self.star and t > self.n - self.window:
            return True
        return self.base.decide(t, obs, identity)

    def first_accept(self, real, rng):
        tv, ta = self.base.tau_value[0], self.base.tau_aux[0]
        mask = (real.values > tv) | ((real.values == tv) & (real.aux >= ta))
        if self.star is not None and self.window > 0:
            late = np.zeros(real.n, dtype=bool)
            late[real.n - self.window:] = True
            mask |= (real.ids == self.star) & late[None, :]
        hit = mask.any(axis=1)
        return np.where(hit, mask.argmax(axis=1), -1)


def superstar_fallback_policy(instance: Instance, epsilon: float, tau=None,
                              star: int | None = None, seed: int = 0) -> SuperstarFallbackPolicy:
    """Single threshold (default: the Poissonized one) plus the late-superstar rule.

    The window is ``ceil(epsilon * n / 2)`` positions.  Without an explicit
    ``star`` the probe designates one only when it finds a violation.
    """
    if not instance.identities_visible:
        raise IdentityUnavailable("the fallback rule needs to know which distribution arrives")
    if tau is None:
        tau = ps_single_threshold(instance).thresholds[0]
    if star is None:
        probe = superstar_probe(instance, epsilon, seed=seed)
        star = None if probe.satisfied else probe.argmax_index
    window = math.ceil(epsilon * instance.n / 2.0 - ROUND_GUARD)
    return SuperstarFallbackPolicy(tau, instance.n, star, window)


# --------------------------------------------------------------------------
# lemma checkers


def _at_least_two(p: np.ndarray, axis=-1) -> np.ndarray:
    """``Pr[sum >= 2]`` for independent Bernoullis (last axis)."""
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.log(q)
        p0 = np.exp(np.sum(logq, axis=axis))
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), 0.0)
        p1 = p0 * np.sum(ratio, axis=axis)
    # a certain event contributes prod of the others when it is alone
    sure = np.sum(q <= 0, axis=axis)
    p1 = np.where(sure == 1, np.exp(np.sum(np.where(q > 0, logq, 0.0), axis=axis)), np.where(sure > 1, 0.0, p1))
    return np.clip(1.0 - p0 - p1, 0.0, 1.0)


def _entry(violations: int, checks: int, budget: float | None, deterministic: bool = False):
    frac = violations / checks if checks else 0.0
    ok = violations == 0 if deterministic else (budget is None or frac <= budget)
    return {"violations": int(violations), "checks": int(checks), "fraction": frac,
            "budget": budget, "deterministic": deterministic, "passed": bool(ok)}


def lemma_checkers(instance: Instance, params: MultiThresholdParams, reps: int, seed: int,
                   tol: float = 1e-12) -> dict:
    """Check the concentration lemmas exactly on ``reps`` random subsets of size ``q n``.

    Returns a dict keyed by lemma with violation counts, fractions and budgets.
    Sampled lemmas count a subset as violating when any band fails.
    """
    grid = build_grid(instance, params)
    n, gs = instance.n, params.group_size
    gamma, q, lam0 = params.gamma, params.q, params.lambda0
    t = grid.t
    Fl, gidx = _item_cdfs(instance, t, left=True)       # Pr[x < t_b]
    Fr, _ = _item_cdfs(instance, t, left=False)         # Pr[x <= t_b]
    Fl_items, Fr_items = Fl[gidx], Fr[gidx]
    top = np.isinf(t)
    Fl_items[:, top] = 1.0
    Fr_items[:, top] = 1.0

    band_open = Fl_items[:, 1:] - Fl_items[:, :-1]      # [t_b, t_{b+1})
    band_closed = Fr_items[:, 1:] - Fl_items[:, :-1]    # [t_b, t_{b+1}]
    above = 1.0 - Fl_items                               # x >= t_b
    total_open = band_open.sum(axis=0)
    total_closed = band_closed.sum(axis=0)
    # lambda for band b: 1 - lambda = Pr[max <= t_{b+1}]
    upper_prob = grid.probs[1:]
    band_rho = np.diff(grid.probs)
    lam = 1.0 - upper_prob

    rng = _generator(seed, 0xC0FFEE)
    counts = dict(l10=0, l11_exists=0, l11_two=0, es=0, main=0, sumbound=0)
    for _ in range(reps):
        S = rng.choice(n, size=gs, replace=False)
        with np.errstate(divide="ignore"):
            logFl = np.log(Fl_items[S]).sum(axis=0)
        prodFl = np.exp(logFl)
        # Lemma 10: Pr[t_b <= x_S < t_{b+1}] sandwich
        pS = prodFl[1:] - prodFl[:-1]
        lo10 = (1.0 - 3.0 * gamma) * q * total_open
        hi10 = (1.0 + gamma) * q * total_open
        if np.any(pS < lo10 - tol) or np.any(pS > hi10 + tol):
            counts["l10"] += 1
        # Lemma 11 at every edge whose max-law level is at least lambda0
        exists = 1.0 - prodFl
        two = _at_least_two(above[S].T)
        if np.any(exists > 2.0 * q / lam0 + tol):
            counts["l11_exists"] += 1
        if np.any(two > 4.0 * q * q / lam0 ** 2 + tol):
            counts["l11_two"] += 1
        # per-band quantities on closed bands
        pb = band_closed[S]
        sum_S = pb.sum(axis=0)
        with np.errstate(divide="ignore"):
            ex_S = 1.0 - np.exp(np.log1p(-np.minimum(pb, 1.0)).sum(axis=0))
        es_lo = np.maximum(1.0 - sum_S, 1.0 - band_rho / (1.0 - lam)) * sum_S
        if np.any(ex_S < es_lo - tol) or np.any(ex_S > sum_S + tol):
            counts["es"] += 1
        if np.any(np.abs(sum_S - q * total_closed) >= gamma * q * total_closed):
            counts["sumbound"] += 1
        main_lo = (1.0 - gamma - 2.0 * q * band_rho / (1.0 - (lam + band_rho))) * q * total_closed
        if np.any(ex_S < main_lo - tol) or np.any(ex_S > (1.0 + gamma) * q * total_closed + tol):
            counts["main"] += 1

    report = {
        "lemma10_sandwich": _entry(counts["l10"], reps, gamma ** 3 / 2.0),
        "lemma11_exists": _entry(counts["l11_exists"], reps, params.delta),
        "lemma11_two": _entry(counts["l11_two"], reps, params.delta),
        "lemma_es": _entry(counts["es"], reps, None, deterministic=True),
        "lemma_main": _entry(counts["main"], reps, None),
        "lemma_sumbound": _entry(counts["sumbound"], reps, None),
    }

    # deterministic checks over the full instance
    groups = [(d, c) for d, c in instance.groups]
    full_two = _at_least_two(band_closed.T)
    with np.errstate(divide="ignore"):
        full_exists = 1.0 - np.exp(np.log1p(-np.minimum(band_closed, 1.0)).sum(axis=0))
    v12 = int(np.sum(full_two > band_rho ** 2 / lam0 ** 2 + tol))
    report["lemma12"] = _entry(v12, len(band_rho), 0.0, deterministic=True)
    v15 = int(np.sum((full_exists < band_rho - 1e-9) | (full_exists > band_rho / (1.0 - lam) + 1e-9)))
    report["lemma15_allyprob"] = _entry(v15, len(band_rho), 0.0, deterministic=True)
    if not instance.has_atoms:
        _, amax_hi = argmax_probabilities(instance.distributions, 2048)
        bound = band_closed * (1.0 - (lam + band_rho))[None, :]
        v1 = int(np.sum(bound > amax_hi[:, None] + 1e-9))
        report["lemma_oneyprob"] = _entry(v1, band_closed.size, 0.0, deterministic=True)
        report["max_argmax_prob"] = float(amax_hi.max())
    del groups
    report["params"] = {k: getattr(params, k) for k in
                        ("gamma", "n", "lambda0", "rho", "q", "delta", "epsilon", "c", "group_size", "group_count")}
    report["grid_roundtrip_error"] = grid.roundtrip_error(instance)
    return report


def lemma_no2_check(p) -> tuple[float, float]:
    """Exact ``Pr[sum >= 2]`` by enumeration and ``Pr[any]^2`` for independent Bernoullis."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    pats = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)
    w = np.prod(np.where(pats, p, 1.0 - p), axis=1)
    k = pats.sum(axis=1)
    two = math.fsum(w[k >= 2])
    anyp = math.fsum(w[k >= 1])
    return two, anyp * anyp

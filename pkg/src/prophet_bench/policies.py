"""Online accept/reject rules and the exact values the theory attaches to them.

A policy sees observations one at a time as ``(step, TieBreakObservation,
identity)`` and answers accept or reject.  Besides the scalar ``decide``
interface every policy offers ``first_accept``, which processes a whole block
of realized trials at once and returns the arrival position accepted in each
row (``-1`` for none).  The simulator uses the block form.
"""

from __future__ import annotations

import copy
import math
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    Distribution,
    Instance,
    TieBreakObservation,
    _as_threshold,
    quantile_of_max,
    threshold_for_expected_count,
)
from .errors import InfeasibleTarget
from .poissonization import GAMMA, lambda_star

__all__ = [
    "Policy",
    "ThresholdPolicy",
    "CutoffPolicy",
    "pi_single_threshold",
    "ps_single_threshold",
    "topk_single_threshold",
    "prob_exactly_one_above",
    "prob_exactly_one_above_bruteforce",
    "cutoff_policy_value",
    "cutoff_policy_values",
    "iid_optimal_policy",
    "gm_threshold_quantiles",
]


def _first_true(mask: np.ndarray) -> np.ndarray:
    hit = mask.any(axis=1)
    return np.where(hit, mask.argmax(axis=1), -1)


class Policy:
    """Base class for online stopping rules.

    Subclasses implement ``decide``; ``first_accept`` falls back to calling
    it observation by observation.  ``needs_identity`` marks rules that must
    know which distribution produced each arrival.
    """

    needs_identity = False
    name = "policy"

    def reset(self, rng: np.random.Generator | None = None) -> None:
        self._rng = rng

    def decide(self, t: int, obs: TieBreakObservation, identity: int | None = None) -> bool:
        raise NotImplementedError

    def clone(self) -> "Policy":
        return copy.deepcopy(self)

    def first_accept(self, real, rng: np.random.Generator) -> np.ndarray:
        ids = real.ids if self.needs_identity else None
        out = np.full(real.rows, -1, dtype=np.int64)
        for b in range(real.rows):
            self.reset(rng)
            for t in range(real.n):
                obs = TieBreakObservation(float(real.values[b, t]), float(real.aux[b, t]))
                ident = None if ids is None else int(ids[b, t])
                if self.decide(t + 1, obs, ident):
                    out[b] = t
                    break
        return out

    def exact_rule(self) -> Callable[[int, float, int], bool] | None:
        """A deterministic, memoryless rule ``(t, value, identity) -> accept``.

        Returned only when acceptance depends on nothing but the current
        value and position; used by exhaustive enumeration.
        """
        return None


class ThresholdPolicy(Policy):
    """Accept the first observation at step t with ``(value, aux) >= tau_t``.

    Thresholds may be floats (meaning ``value >= tau``) or tie-break pairs.
    With ``require_running_max`` only observations exceeding every earlier
    one are eligible, which is the shape of the optimal i.i.d. rule.
    """

    name = "threshold"

    def __init__(self, thresholds: Sequence, require_running_max: bool = False):
        taus = [_as_threshold(t) for t in thresholds]
        if not taus:
            raise ValueError("need at least one threshold")
        self.thresholds = taus
        self.tau_value = np.array([t.value for t in taus], dtype=float)
        self.tau_aux = np.array([t.aux for t in taus], dtype=float)
        self.require_running_max = require_running_max
        self.predicted_success: float | None = None
        self.reset()

    @classmethod
    def constant(cls, tau, n: int) -> "ThresholdPolicy":
        return cls([_as_threshold(tau)] * n)

    @property
    def n(self) -> int:
        return len(self.thresholds)

    def reset(self, rng=None):
        super().reset(rng)
        self._best = (-math.inf, -math.inf)

    def decide(self, t, obs, identity=None):
        tau = self.thresholds[t - 1]
        is_max = tuple(obs) >= self._best
        if is_max:
            self._best = tuple(obs)
        if self.require_running_max and not is_max:
            return False
        return tuple(obs) >= tuple(tau)

    def first_accept(self, real, rng):
        if real.n != self.n:
            raise ValueError(f"policy built for n={self.n}, realization has n={real.n}")
        v, a = real.values, real.aux
        tv, ta = self.tau_value[None, :], self.tau_aux[None, :]
        mask = (v > tv) | ((v == tv) & (a >= ta))
        if self.require_running_max:
            best_v = np.full(real.rows, -np.inf)
            best_a = np.full(real.rows, -np.inf)
            for t in range(real.n):
                col_v, col_a = v[:, t], a[:, t]
                is_max = (col_v > best_v) | ((col_v == best_v) & (col_a >= best_a))
                mask[:, t] &= is_max
                best_v = np.where(is_max, col_v, best_v)
                best_a = np.where(is_max, col_a, best_a)
        return _first_true(mask)

    def exact_rule(self):
        if self.require_running_max:
            return None
        tv, ta = self.tau_value, self.tau_aux

        def rule(t, value, identity):
            if value == tv[t - 1] and ta[t - 1] > 0:
                raise ValueError("exact enumeration needs thresholds that do not split an atom")
            return value >= tv[t - 1]

        return rule


class CutoffPolicy(Policy):
    """Reject positions before ``cutoff`` (1-based), then take the first nonzero value."""

    name = "cutoff"

    def __init__(self, cutoff: int):
        if cutoff < 1:
            raise ValueError("cutoff index is 1-based")
        self.cutoff = int(cutoff)

    def decide(self, t, obs, identity=None):
        return t >= self.cutoff and obs.value != 0

    def first_accept(self, real, rng):
        mask = real.values != 0
        mask[:, : self.cutoff - 1] = False
        return _first_true(mask)

    def exact_rule(self):
        c = self.cutoff
        return lambda t, value, identity: t >= c and value != 0


# --------------------------------------------------------------------------
# single-threshold constructions


def pi_single_threshold(instance: Instance) -> ThresholdPolicy:
    """Constant threshold at which the maximum stays below with probability 1/e."""
    tau = quantile_of_max(instance.distributions, math.exp(-1.0))
    pol = ThresholdPolicy.constant(tau, instance.n)
    pol.name = "pi-single"
    return pol


def ps_single_threshold(instance: Instance, lam: float | None = None) -> ThresholdPolicy:
    """Constant threshold with ``Pr[max below] = exp(-lam)``; ``lam`` defaults to the series maximizer."""
    lam = lambda_star() if lam is None else lam
    tau = quantile_of_max(instance.distributions, math.exp(-lam))
    pol = ThresholdPolicy.constant(tau, instance.n)
    pol.name = "ps-single"
    return pol


def topk_single_threshold(instance: Instance, k: int) -> ThresholdPolicy:
    """Constant threshold whose expected number of exceedances is ``gamma * k``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    target = GAMMA * k
    if target >= instance.n:
        raise InfeasibleTarget(f"gamma*k = {target:.4g} is not below n = {instance.n}")
    tau = threshold_for_expected_count(instance.distributions, target)
    pol = ThresholdPolicy.constant(tau, instance.n)
    pol.name = f"topk:{k}"
    return pol


def prob_exactly_one_above(p) -> float:
    """Probability that exactly one independent event fires, ``sum_j p_j prod_{i!=j}(1-p_i)``.

    The ``p_j / (1 - p_j)`` form is used when every ``p_j < 1``; certain
    events are handled as the limit.
    """
    p = np.asarray(p, dtype=float)
    sure = p >= 1.0
    if sure.sum() > 1:
        return 0.0
    if sure.sum() == 1:
        return float(np.prod(1.0 - p[~sure]))
    q = 1.0 - p
    return float(np.prod(q) * math.fsum(p / q))


def prob_exactly_one_above_bruteforce(p) -> float:
    """Sum over all 2^n fire/no-fire patterns with exactly one event (small n)."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    pats = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)
    weights = np.prod(np.where(pats, p, 1.0 - p), axis=1)
    return math.fsum(weights[pats.sum(axis=1) == 1])


def cutoff_policy_values(n: int) -> np.ndarray:
    """Exact success of every cutoff rule on the index-order hard instance.

    Entry ``i-1`` is ``1/n + (i-1)/n * sum_{j=i+1}^n 1/(j-1)``; the harmonic
    tails are accumulated once with compensated summation.
    """
    if n < 1:
        raise ValueError("n must be positive")
    # tail[i] = sum_{j=i+1}^{n} 1/(j-1) = sum_{m=i}^{n-1} 1/m, built from the right
    tail = np.zeros(n + 1)
    s, comp = 0.0, 0.0
    for m in range(n - 1, 0, -1):
        y = 1.0 / m - comp
        t = s + y
        comp = (t - s) - y
        s = t
        tail[m] = s
    i = np.arange(1, n + 1)
    return 1.0 / n + (i - 1) / n * tail[i]


def cutoff_policy_value(n: int, i: int) -> float:
    if not 1 <= i <= n:
        raise ValueError("cutoff index must lie in 1..n")
    return float(cutoff_policy_values(n)[i - 1])


# --------------------------------------------------------------------------
# optimal rule for i.i.d. atomless values


def gm_threshold_quantiles(n: int, grid_size: int = 4000) -> tuple[np.ndarray, float]:
    """Backward induction for the full-information best-choice problem.

    Works on the quantile scale: ``R[s](u)`` is the win probability of
    continuing optimally after step ``s`` while the running maximum has
    quantile ``u``.  A running maximum with quantile ``v`` at step ``s`` is
    accepted iff ``v^(n-s) >= R[s](v)``.  Returns the per-step quantile
    thresholds ``b_1..b_n`` and the predicted success ``R[0](0)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    u = np.linspace(0.0, 1.0, grid_size)
    du = u[1] - u[0]
    R = np.zeros(grid_size)
    b = np.zeros(n)
    for s in range(n, 0, -1):
        k = n - s
        stop = u ** k
        diff = stop - R
        j = int(np.argmax(diff >= 0))
        if j > 0:
            d0, d1 = diff[j - 1], diff[j]
            b[s - 1] = u[j - 1] + du * (-d0) / (d1 - d0)
        # per-cell integral of max(v^k, R(v)): the power is integrated exactly,
        # the continuation value by the trapezoid rule, the crossing cell split at b
        P = u ** (k + 1) / (k + 1)
        cell = np.where(diff[:-1] >= 0, P[1:] - P[:-1], 0.5 * du * (R[1:] + R[:-1]))
        if j > 0:
            c, bs = j - 1, b[s - 1]
            Rb = R[c] + (R[j] - R[c]) * (bs - u[c]) / du
            cell[c] = 0.5 * (bs - u[c]) * (R[c] + Rb) + (u[j] ** (k + 1) - bs ** (k + 1)) / (k + 1)
        integral = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
        R = u * R + integral
    return b, float(R[0])


def iid_optimal_policy(d: Distribution, n: int, grid_size: int = 4000) -> ThresholdPolicy:
    """Optimal stopping rule for ``n`` i.i.d. draws from an atomless law.

    Thresholds are nonincreasing in the step and apply to running maxima only;
    ``predicted_success`` carries the dynamic program's value.
    """
    if not d.is_atomless:
        raise ValueError("the i.i.d. optimal rule needs an atomless law")
    if grid_size < 10:
        raise ValueError("grid_size is too small")
    b, value = gm_threshold_quantiles(n, grid_size)
    taus = np.where(b <= 0.0, -np.inf, d.ppf(np.clip(b, 0.0, 1.0)))
    pol = ThresholdPolicy([float(t) for t in taus], require_running_max=True)
    pol.predicted_success = value
    pol.quantile_thresholds = b
    pol.name = f"iid-optimal:{grid_size}"
    return pol

"""Named instances, the lower-bound constructions and their exact evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .distributions import (
    AdversarialFixed,
    Discrete,
    Exponential,
    Instance,
    TwoPoint,
    Uniform,
    UniformRandom,
    ZeroInflated,
)
from .policies import cutoff_policy_values
from .poissonization import lambda_star

__all__ = [
    "thm2_instance",
    "thm2_optimal_value",
    "topk_lb_law",
    "topk_lb_instance",
    "TopKEventProbs",
    "topk_lb_event_probs",
    "TopKTrialDecomposition",
    "sample_decomposition",
    "superstar_instance",
    "twopoint_heavy_instance",
    "named_instance",
]

THM2_BAND = 1e-6


def thm2_instance(n: int, band: float | None = None) -> Instance:
    """``x_i = i`` with probability ``1/i``, else 0, arriving in index order.

    With ``band`` the point mass at ``i`` is spread uniformly over
    ``[i, i + band]``, which keeps ranks strict in simulation.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if band is None:
        dists = tuple(TwoPoint(float(i), 1.0 / i) for i in range(1, n + 1))
    else:
        dists = tuple(ZeroInflated(Uniform(float(i), i + band), 1.0 / i) for i in range(1, n + 1))
    return Instance(dists, AdversarialFixed(tuple(range(n))))


def thm2_optimal_value(n: int) -> tuple[int, float]:
    """Best cutoff index (1-based) and its exact success on the hard instance."""
    vals = cutoff_policy_values(n)
    i = int(np.argmax(vals))
    return i + 1, float(vals[i])


def topk_lb_law(n: int, k: int) -> ZeroInflated:
    return ZeroInflated(Uniform(1.0, 2.0), k / n)


def _check_lb(n: int, k: int) -> None:
    if n % 2 or not n > 2 * k or k < 1:
        raise ValueError("need n even, k >= 1 and n > 2k")


def topk_lb_instance(n: int, k: int) -> Instance:
    """n i.i.d. draws that are uniform on [1, 2] with probability k/n and 0 otherwise."""
    _check_lb(n, k)
    return Instance.iid(topk_lb_law(n, k), n)


@dataclass(frozen=True)
class TopKEventProbs:
    p_A: float
    p_B: float
    p_Z2_zero: float
    p_Z2_ge_k: float

    @property
    def trap_bound(self) -> float:
        """Failure probability forced on every algorithm."""
        return self.p_A * self.p_B * min(self.p_Z2_zero, self.p_Z2_ge_k)


def topk_lb_event_probs(n: int, k: int) -> TopKEventProbs:
    """Exact probabilities of the events behind the top-k lower bound.

    The half counts are Binomial(n/2, k/n).  The 2k items flagged by the two
    half-permutations have uniformly random relative order, so the first
    half's k items all rank below the second half's with probability
    ``1 / C(2k, k)``.
    """
    _check_lb(n, k)
    half, p = n // 2, k / n
    return TopKEventProbs(
        p_A=float(binom.pmf(k, half, p)),
        p_B=1.0 / math.comb(2 * k, k),
        p_Z2_zero=(1.0 - p) ** half,
        p_Z2_ge_k=float(binom.sf(k - 1, half, p)),
    )


@dataclass
class TopKTrialDecomposition:
    """Vectorized rows of the alternative generating process.

    ``v`` holds sorted latent values, ``pos[:, i]`` the arrival position of
    latent item ``i``, ``sigma1``/``sigma2`` the within-half success orders,
    and ``values`` the resulting observation sequence in arrival order.
    """

    v: np.ndarray
    pos: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    values: np.ndarray
    event_A: np.ndarray
    event_B: np.ndarray


def sample_decomposition(n: int, k: int, rows: int, rng: np.random.Generator) -> TopKTrialDecomposition:
    _check_lb(n, k)
    half = n // 2
    v = np.sort(rng.uniform(1.0, 2.0, (rows, n)), axis=1)
    pos = np.argsort(rng.random((rows, n)), axis=1)      # latent item -> arrival slot
    item_at = np.argsort(pos, axis=1)                     # arrival slot -> latent item
    Z1 = rng.binomial(half, k / n, rows)
    Z2 = rng.binomial(half, k / n, rows)
    sigma1 = np.argsort(rng.random((rows, half)), axis=1) + 1
    sigma2 = np.argsort(rng.random((rows, half)), axis=1) + 1
    on = np.concatenate([sigma1 <= Z1[:, None], sigma2 <= Z2[:, None]], axis=1)
    values = np.where(on, np.take_along_axis(v, item_at, axis=1), 0.0)
    first = np.where(sigma1 <= k, item_at[:, :half], -1).max(axis=1)
    second = np.where(sigma2 <= k, item_at[:, half:], n).min(axis=1)
    return TopKTrialDecomposition(v, pos, Z1, Z2, sigma1, sigma2, values, Z1 == k, first < second)


def superstar_instance(n: int = 10, ratio: float = 0.95) -> Instance:
    """One deterministic item just below the single threshold plus ``n-1`` uniforms.

    The fixed value is ``ratio`` times the threshold ``e^{-lambda*/(n-1)}`` of
    the remaining uniforms, so it is the maximum exactly when no uniform
    exceeds it, and it never clears the threshold.
    """
    if n < 2:
        raise ValueError("need at least two items")
    tau = math.exp(-lambda_star() / (n - 1))
    star = TwoPoint(ratio * tau, 1.0)
    return Instance((star,) + (Uniform(0.0, 1.0),) * (n - 1))


def twopoint_heavy_instance() -> Instance:
    """Ten laws that are mostly point masses, so ties at the threshold matter."""
    dists = (
        (TwoPoint(1.0, 0.5),) * 4
        + (TwoPoint(2.0, 0.2),) * 3
        + (TwoPoint(3.0, 0.05),) * 2
        + (Discrete(((0.0, 0.2), (1.0, 0.3), (2.0, 0.5))),)
    )
    return Instance(dists)


def named_instance(spec: str) -> Instance:
    """Build an instance from ``name:params``.

    ``iid-uniform:N``, ``iid-exponential:N``, ``mixed-uniform:N`` (half U(0,1),
    half U(0,1.2)), ``mixed-uexp:N`` (half U(0,1), half Exp(1)), ``thm2:N``,
    ``thm2-band:N``, ``topk-lb:N:K``, ``superstar:N``, ``twopoint-heavy``.
    """
    name, *args = spec.split(":")
    try:
        nums = [int(a) for a in args]
    except ValueError:
        raise ValueError(f"bad instance parameters in {spec!r}") from None

    def need(count):
        if len(nums) != count:
            raise ValueError(f"instance {name!r} takes {count} parameter(s)")
        if any(x < 1 for x in nums):
            raise ValueError("instance parameters must be positive")

    if name == "iid-uniform":
        need(1)
        return Instance.iid(Uniform(0.0, 1.0), nums[0])
    if name == "iid-exponential":
        need(1)
        return Instance.iid(Exponential(1.0), nums[0])
    if name in ("mixed-uniform", "mixed-uexp"):
        need(1)
        n = nums[0]
        other = Uniform(0.0, 1.2) if name == "mixed-uniform" else Exponential(1.0)
        return Instance((Uniform(0.0, 1.0),) * (n - n // 2) + (other,) * (n // 2), UniformRandom())
    if name == "thm2":
        need(1)
        return thm2_instance(nums[0])
    if name == "thm2-band":
        need(1)
        return thm2_instance(nums[0], THM2_BAND)
    if name == "topk-lb":
        need(2)
        return topk_lb_instance(*nums)
    if name == "superstar":
        need(1)
        return superstar_instance(nums[0])
    if name == "twopoint-heavy":
        need(0)
        return twopoint_heavy_instance()
    raise ValueError(f"unknown named instance {name!r}")


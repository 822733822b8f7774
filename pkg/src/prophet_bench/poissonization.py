"""Poisson success series, Poisson-binomial laws and related tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "GAMMA",
    "PoissonSeriesResult",
    "PoissonBinomial",
    "poisson_success_series",
    "optimize_lambda",
    "lambda_star",
    "poisson_pmf",
    "poisson_binomial_pmf",
    "lecam_check",
    "kl_chernoff_bounds",
    "extremal_comparison",
]

GAMMA = (3.0 - math.sqrt(5.0)) / 2.0
SERIES_TOL = 1e-15
PMF_TAIL_TOL = 1e-15


@dataclass(frozen=True)
class PoissonSeriesResult:
    lam: float
    value: float
    truncation_k: int
    truncation_error_bound: float


def poisson_success_series(lam: float) -> PoissonSeriesResult:
    """Sum ``sum_{k>=1} (1/k) lam^k e^{-lam} / k!``.

    This is the chance that a single threshold picks the maximum when the
    number of exceedances is Poisson(lam).  Terms are accumulated until the
    geometric tail bound on the remainder drops below 1e-15.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    term = math.exp(-lam)  # Poisson pmf at k, updated in place
    total = 0.0
    comp = 0.0
    k = 0
    while True:
        k += 1
        term *= lam / k
        y = term / k - comp
        t = total + y
        comp = (t - total) - y
        total = t
        ratio = lam / (k + 1)
        if ratio < 1:
            tail = term * ratio / (1.0 - ratio)
            if tail < SERIES_TOL:
                return PoissonSeriesResult(float(lam), total, k, tail)


def optimize_lambda(lo: float = 0.5, hi: float = 3.0, tol: float = 1e-8) -> tuple[float, float]:
    """Golden-section search for the maximizer of the success series on ``[lo, hi]``."""
    f = lambda x: poisson_success_series(x).value
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@lru_cache(maxsize=1)
def lambda_star() -> float:
    """Cached maximizer; the single source of this constant for policies."""
    return optimize_lambda()[0]


def poisson_pmf(lam: float, kmax: int | None = None) -> np.ndarray:
    """Poisson pmf by upward recurrence from ``e^{-lam}``.

    Without ``kmax`` the vector runs past the mode until the remaining
    tail is below 1e-15.
    """
    out = [math.exp(-lam)]
    k = 0
    while True:
        if kmax is not None and k >= kmax:
            break
        k += 1
        out.append(out[-1] * lam / k)
        if kmax is None and k > lam and out[-1] * (k + 1) / (k + 1 - lam) < PMF_TAIL_TOL:
            break
    return np.array(out)


@dataclass(frozen=True)
class PoissonBinomial:
    probs: np.ndarray
    pmf: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    @property
    def variance(self) -> float:
        k = np.arange(len(self.pmf))
        return float(np.dot(k * k, self.pmf) - self.mean ** 2)


def poisson_binomial_pmf(probs, truncate: float = 0.0) -> PoissonBinomial:
    """Exact law of a sum of independent Bernoullis by iterated convolution.

    With ``truncate > 0`` the support is cut once trailing masses fall below
    that level, which bounds work by ``O(n K)``.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must form a 1-d vector in [0, 1]")
    pmf = np.zeros(len(p) + 1)
    pmf[0] = 1.0
    top = 0
    for pi in p:
        pmf[1:top + 2] = pmf[1:top + 2] * (1.0 - pi) + pmf[:top + 1] * pi
        pmf[0] *= 1.0 - pi
        top += 1
        if truncate > 0:
            while top > 0 and pmf[top] < truncate:
                top -= 1
    return PoissonBinomial(p, pmf[:top + 1].copy() if truncate > 0 else pmf)


def lecam_check(probs) -> tuple[float, float]:
    """L1 distance between a Poisson-binomial law and the Poisson of equal mean.

    Returns ``(tv_exact, 2 * sum p_i^2)``.  The Poisson mass beyond the
    Poisson-binomial support is added in full.
    """
    p = np.asarray(probs, dtype=float)
    pb = poisson_binomial_pmf(p).pmf
    lam = float(p.sum())
    bound = 2.0 * float(np.dot(p, p))
    if lam == 0:
        return 0.0, bound
    pois = poisson_pmf(lam)
    m = max(len(pb), len(pois))
    a = np.zeros(m)
    b = np.zeros(m)
    a[:len(pb)] = pb
    b[:len(pois)] = pois
    # Poisson mass beyond the computed vector
    tail = max(0.0, 1.0 - math.fsum(pois))
    return math.fsum(np.abs(a - b)) + tail, bound


def kl_chernoff_bounds(k: int, n: int, setting: str = "gamma") -> tuple[float, float]:
    """Closed-form bounds on ``Pr[X(tau)=0]`` and ``Pr[X(tau) >= k]``.

    ``setting='warmup'`` uses intensity k/2 and gives ``(e^{-k/4}, e^{-k/2})``;
    ``setting='gamma'`` uses intensity gamma*k and gives ``e^{-gamma k}`` twice.
    """
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    if setting == "warmup":
        return math.exp(-k / 4.0), math.exp(-k / 2.0)
    if setting == "gamma":
        b = math.exp(-GAMMA * k)
        return b, b
    raise ValueError(f"unknown setting {setting!r}")


def extremal_comparison(probs) -> tuple[float, float, float, float]:
    """Compare independent Bernoullis with the i.i.d. ones at their geometric mean.

    Returns ``(mean_x, mean_y, p0_x, p0_y)``; ``mean_x >= mean_y`` always.
    """
    p = np.asarray(probs, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    n = len(p)
    g = math.exp(np.mean(np.log(p)))
    mean_x = math.fsum(p)
    mean_y = n * g
    p0_x = math.exp(np.sum(np.log1p(-p)))
    p0_y = (1.0 - g) ** n
    assert mean_x >= mean_y * (1 - 1e-12), "AM-GM violated"
    return mean_x, mean_y, p0_x, p0_y

"""Probability laws, instances, and threshold inversion.

Every law exposes a right-continuous CDF, its left limit, a generalized
inverse (``ppf``) and its atoms, so that thresholds can be computed exactly
even when the law has point masses.  Ties at an atom are resolved with an
auxiliary uniform drawn per observation: an observation is the pair
``(value, aux)`` and all comparisons are lexicographic.
"""

from __future__ import annotations

import abc
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoBracket

__all__ = [
    "TieBreakObservation",
    "Distribution",
    "Uniform",
    "Exponential",
    "TwoPoint",
    "Discrete",
    "ScaledShift",
    "CdfPower",
    "ZeroInflated",
    "MaxOf",
    "AdversarialFixed",
    "UniformRandom",
    "Instance",
    "AboveProbVector",
    "cdf",
    "prob_below",
    "prob_at_or_above",
    "quantile_of_max",
    "threshold_for_expected_count",
    "above_probs",
    "collection_distribution",
    "nth_root_factorization",
    "geometric_mean_distribution",
    "argmax_probabilities",
    "distribution_from_dict",
    "instance_from_dict",
    "load_instance",
]

MAX_BISECT_ITER = 200
MAX_DOUBLINGS = 1100
ATOM_TOL = 1e-15


class TieBreakObservation(NamedTuple):
    """An observed value with its tie-breaking uniform.

    Tuple ordering is lexicographic, which is exactly the comparison rule:
    ``(x, y) >= (tau, ybar)`` iff ``x > tau`` or ``x == tau and y >= ybar``.
    Thresholds use the same type; ``aux`` is then the secondary threshold.
    """

    value: float
    aux: float = 0.0


def _as_threshold(tau) -> TieBreakObservation:
    if isinstance(tau, TieBreakObservation):
        return tau
    if isinstance(tau, tuple) and len(tau) == 2:
        return TieBreakObservation(float(tau[0]), float(tau[1]))
    return TieBreakObservation(float(tau), 0.0)


# --------------------------------------------------------------------------
# laws


class Distribution(abc.ABC):
    """A univariate law. Instances are immutable and hashable."""

    @abc.abstractmethod
    def cdf(self, x):
        """``Pr[X <= x]``, elementwise."""

    @abc.abstractmethod
    def cdf_left(self, x):
        """``Pr[X < x]``, elementwise."""

    @abc.abstractmethod
    def ppf(self, u):
        """Generalized inverse ``inf{x : F(x) >= u}``, elementwise."""

    @abc.abstractmethod
    def atoms(self) -> np.ndarray:
        """Locations carrying positive mass (empty for atomless laws)."""

    @abc.abstractmethod
    def support(self) -> tuple[float, float]:
        """Closed hull of the support, possibly infinite."""

    @abc.abstractmethod
    def to_dict(self) -> dict:
        """JSON-ready description using the instance file schema."""

    @property
    def is_atomless(self) -> bool:
        return len(self.atoms()) == 0

    def atom_mass(self, x):
        return np.asarray(self.cdf(x), dtype=float) - np.asarray(self.cdf_left(x), dtype=float)

    def median(self) -> float:
        return float(self.ppf(0.5))

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))


def _check_prob(name: str, p: float) -> None:
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError(f"Uniform needs hi > lo, got [{self.lo}, {self.hi}]")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    cdf_left = cdf

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def atoms(self):
        return np.empty(0)

    def support(self):
        return (float(self.lo), float(self.hi))

    def to_dict(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential rate must be positive")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = -np.expm1(-self.rate * np.maximum(x, 0.0))
        return np.where(x < 0, 0.0, out)

    cdf_left = cdf

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def atoms(self):
        return np.empty(0)

    def support(self):
        return (0.0, math.inf)

    def to_dict(self):
        return {"kind": "exponential", "rate": self.rate}


class _AtomicLaw(Distribution):
    """Shared machinery for finitely supported laws."""

    @abc.abstractmethod
    def atom_table(self) -> tuple[tuple[float, float], ...]:
        """Sorted ``(value, prob)`` pairs."""

    @cached_property
    def _xs(self) -> np.ndarray:
        return np.array([v for v, _ in self.atom_table()], dtype=float)

    @cached_property
    def _cum(self) -> np.ndarray:
        cum = np.cumsum([p for _, p in self.atom_table()])
        cum[-1] = 1.0
        return np.concatenate([[0.0], cum])

    def cdf(self, x):
        return self._cum[np.searchsorted(self._xs, np.asarray(x, dtype=float), side="right")]

    def cdf_left(self, x):
        return self._cum[np.searchsorted(self._xs, np.asarray(x, dtype=float), side="left")]

    def ppf(self, u):
        idx = np.searchsorted(self._cum[1:], np.asarray(u, dtype=float), side="left")
        return self._xs[np.minimum(idx, len(self._xs) - 1)]

    def atoms(self):
        return np.array([v for v, p in self.atom_table() if p > 0], dtype=float)

    def support(self):
        xs = self.atoms()
        return (float(xs.min()), float(xs.max()))


@dataclass(frozen=True)
class TwoPoint(_AtomicLaw):
    """Takes ``value`` with probability ``prob`` and 0 otherwise."""

    value: float
    prob: float

    def __post_init__(self):
        _check_prob("TwoPoint prob", self.prob)

    def atom_table(self):
        if self.value == 0:
            return ((0.0, 1.0),)
        pairs = [(0.0, 1.0 - self.prob), (float(self.value), float(self.prob))]
        return tuple(sorted(pairs))

    def to_dict(self):
        return {"kind": "two_point", "value": self.value, "prob": self.prob}


@dataclass(frozen=True)
class Discrete(_AtomicLaw):
    atoms_: tuple[tuple[float, float], ...] = field(metadata={"json": "atoms"})

    def __post_init__(self):
        pairs = tuple(sorted((float(v), float(p)) for v, p in self.atoms_))
        if not pairs:
            raise ValueError("Discrete law needs at least one atom")
        values = [v for v, _ in pairs]
        if len(set(values)) != len(values):
            raise ValueError("Discrete atom values must be distinct")
        for _, p in pairs:
            _check_prob("Discrete atom prob", p)
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Discrete atom probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms_", pairs)

    def atom_table(self):
        return self.atoms_

    def to_dict(self):
        return {"kind": "discrete", "atoms": [list(a) for a in self.atoms_]}


@dataclass(frozen=True)
class ScaledShift(Distribution):
    """Law of ``scale * X + shift`` for ``X ~ inner``."""

    inner: Distribution
    scale: float
    shift: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("ScaledShift scale must be positive")

    def cdf(self, x):
        return self.inner.cdf((np.asarray(x, dtype=float) - self.shift) / self.scale)

    def cdf_left(self, x):
        return self.inner.cdf_left((np.asarray(x, dtype=float) - self.shift) / self.scale)

    def ppf(self, u):
        return self.scale * self.inner.ppf(u) + self.shift

    def atoms(self):
        return self.scale * self.inner.atoms() + self.shift

    def support(self):
        lo, hi = self.inner.support()
        return (self.scale * lo + self.shift, self.scale * hi + self.shift)

    def to_dict(self):
        return {"kind": "scaled_shift", "inner": self.inner.to_dict(),
                "scale": self.scale, "shift": self.shift}


@dataclass(frozen=True)
class CdfPower(Distribution):
    """Law with CDF ``F_inner(x) ** exponent``.

    With ``exponent = 1/m`` the maximum of ``m`` independent draws has the
    law of ``inner``.
    """

    inner: Distribution
    exponent: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("CdfPower exponent must be positive")

    def cdf(self, x):
        return np.asarray(self.inner.cdf(x), dtype=float) ** self.exponent

    def cdf_left(self, x):
        return np.asarray(self.inner.cdf_left(x), dtype=float) ** self.exponent

    def ppf(self, u):
        return self.inner.ppf(np.asarray(u, dtype=float) ** (1.0 / self.exponent))

    def atoms(self):
        return self.inner.atoms()

    def support(self):
        return self.inner.support()

    def to_dict(self):
        return {"kind": "cdf_power", "inner": self.inner.to_dict(), "exponent": self.exponent}


@dataclass(frozen=True)
class ZeroInflated(Distribution):
    """Draws from ``inner`` with probability ``prob``, else returns 0."""

    inner: Distribution
    prob: float

    def __post_init__(self):
        _check_prob("ZeroInflated prob", self.prob)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 - self.prob) * (x >= 0) + self.prob * self.inner.cdf(x)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 - self.prob) * (x > 0) + self.prob * self.inner.cdf_left(x)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        p = self.prob
        if p == 0:
            return np.zeros_like(u)
        below = p * float(self.inner.cdf_left(0.0))
        upto0 = (1.0 - p) + p * float(self.inner.cdf(0.0))
        low = self.inner.ppf(np.clip(u / p, 0.0, 1.0))
        high = self.inner.ppf(np.clip((u - (1.0 - p)) / p, 0.0, 1.0))
        return np.where(u <= below, low, np.where(u <= upto0, 0.0, high))

    def atoms(self):
        pts = list(self.inner.atoms()) if self.prob > 0 else []
        if self.prob < 1:
            pts.append(0.0)
        return np.unique(np.array(pts, dtype=float))

    def support(self):
        lo, hi = self.inner.support()
        if self.prob == 0:
            return (0.0, 0.0)
        if self.prob == 1:
            return (lo, hi)
        return (min(lo, 0.0), max(hi, 0.0))

    def to_dict(self):
        return {"kind": "zero_inflated", "inner": self.inner.to_dict(), "prob": self.prob}


@dataclass(frozen=True)
class MaxOf(Distribution):
    """Law of the maximum of independent draws from ``members``."""

    members: tuple[Distribution, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("MaxOf needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))

    @cached_property
    def _groups(self) -> list[tuple[Distribution, int]]:
        return _grouped(self.members)

    def cdf(self, x):
        return _product(self._groups, x, left=False)

    def cdf_left(self, x):
        return _product(self._groups, x, left=True)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        if flat.size == 0:
            return u.copy()
        lo, hi = _bracket(lambda x: float(self.cdf(x)), float(np.max(flat)),
                          float(np.min(flat)), self.members)
        lo = np.full(flat.shape, lo)
        hi = np.full(flat.shape, hi)
        for _ in range(MAX_BISECT_ITER):
            mid = lo + 0.5 * (hi - lo)
            ok = self.cdf(mid) >= flat
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return hi.reshape(u.shape)

    def sample(self, rng, size=None):
        draws = [m.sample(rng, size) for m in self.members]
        return np.max(np.stack(draws), axis=0)

    def atoms(self):
        pts = [m.atoms() for m in self.members]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def support(self):
        lows, highs = zip(*(m.support() for m in self.members))
        return (max(lows), max(highs))

    def to_dict(self):
        return {"kind": "max_of", "members": [m.to_dict() for m in self.members]}


def _grouped(dists: Iterable[Distribution]) -> list[tuple[Distribution, int]]:
    counts = Counter(dists)
    return list(counts.items())


def _product(groups, x, left: bool):
    x = np.asarray(x, dtype=float)
    logp = np.zeros(x.shape)
    with np.errstate(divide="ignore"):
        for d, c in groups:
            f = d.cdf_left(x) if left else d.cdf(x)
            logp = logp + c * np.log(f)
    return np.exp(logp)


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class AdversarialFixed:
    """Arrival order fixed in advance: ``permutation[t]`` arrives at step ``t``.

    Indices are 0-based here; the JSON file format uses 1-based indices.
    """

    permutation: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(i) for i in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError("AdversarialFixed permutation must be a bijection on 0..n-1")
        object.__setattr__(self, "permutation", perm)


@dataclass(frozen=True)
class UniformRandom:
    """Uniformly random arrival order, drawn afresh per trial."""


@dataclass(frozen=True)
class Instance:
    distributions: tuple[Distribution, ...]
    order: AdversarialFixed | UniformRandom = UniformRandom()
    identities_visible: bool = True

    def __post_init__(self):
        dists = tuple(self.distributions)
        if not dists:
            raise ValueError("an instance needs at least one distribution")
        for d in dists:
            if not isinstance(d, Distribution):
                raise TypeError(f"not a Distribution: {d!r}")
        if isinstance(self.order, AdversarialFixed) and len(self.order.permutation) != len(dists):
            raise ValueError("permutation length does not match the number of distributions")
        object.__setattr__(self, "distributions", dists)

    @classmethod
    def iid(cls, d: Distribution, n: int, order=None) -> "Instance":
        return cls((d,) * n, UniformRandom() if order is None else order)

    @classmethod
    def in_index_order(cls, dists: Sequence[Distribution]) -> "Instance":
        return cls(tuple(dists), AdversarialFixed(tuple(range(len(dists)))))

    @property
    def n(self) -> int:
        return len(self.distributions)

    @cached_property
    def groups(self) -> list[tuple[Distribution, int]]:
        return _grouped(self.distributions)

    @cached_property
    def group_columns(self) -> list[np.ndarray]:
        """Indices of the distributions belonging to each entry of ``groups``."""
        cols: dict = {}
        for i, d in enumerate(self.distributions):
            cols.setdefault(d, []).append(i)
        return [np.array(cols[d]) for d, _ in self.groups]

    @property
    def is_iid(self) -> bool:
        return len(self.groups) == 1

    @property
    def has_atoms(self) -> bool:
        return any(not d.is_atomless for d, _ in self.groups)

    def to_dict(self) -> dict:
        if isinstance(self.order, UniformRandom):
            order = "uniform_random"
        else:
            order = {"adversarial": [i + 1 for i in self.order.permutation]}
        return {"distributions": [d.to_dict() for d in self.distributions], "order": order}


_KINDS = {
    "uniform": lambda d: Uniform(float(d["lo"]), float(d["hi"])),
    "exponential": lambda d: Exponential(float(d["rate"])),
    "two_point": lambda d: TwoPoint(float(d["value"]), float(d["prob"])),
    "discrete": lambda d: Discrete(tuple((float(v), float(p)) for v, p in d["atoms"])),
    "scaled_shift": lambda d: ScaledShift(distribution_from_dict(d["inner"]),
                                          float(d["scale"]), float(d.get("shift", 0.0))),
    "cdf_power": lambda d: CdfPower(distribution_from_dict(d["inner"]), float(d["exponent"])),
    "zero_inflated": lambda d: ZeroInflated(distribution_from_dict(d["inner"]), float(d["prob"])),
    "max_of": lambda d: MaxOf(tuple(distribution_from_dict(m) for m in d["members"])),
}


def distribution_from_dict(d: dict) -> Distribution:
    kind = d.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind {kind!r}")
    try:
        return _KINDS[kind](d)
    except KeyError as exc:
        raise ValueError(f"{kind} distribution is missing field {exc}") from None


def instance_from_dict(data: dict) -> Instance:
    dists = tuple(distribution_from_dict(d) for d in data["distributions"])
    order = data.get("order", "uniform_random")
    if order == "uniform_random":
        model = UniformRandom()
    elif isinstance(order, dict) and set(order) == {"adversarial"}:
        model = AdversarialFixed(tuple(int(i) - 1 for i in order["adversarial"]))
    else:
        raise ValueError(f"unknown order model {order!r}")
    return Instance(dists, model)


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


# --------------------------------------------------------------------------
# threshold inversion


def cdf(d: Distribution, x):
    return d.cdf(x)


def prob_below(d: Distribution, tau) -> float:
    """``Pr[(X, Y) < (tau, ybar)]`` with ``Y`` an independent uniform."""
    t = _as_threshold(tau)
    left = float(d.cdf_left(t.value))
    if t.aux == 0.0:
        return left
    return left + t.aux * (float(d.cdf(t.value)) - left)


def prob_at_or_above(d: Distribution, tau) -> float:
    return 1.0 - prob_below(d, tau)


def _bracket(G, target_hi, target_lo, members) -> tuple[float, float]:
    """Find ``lo < hi`` with ``G(lo) < target_lo`` and ``G(hi) >= target_hi``.

    Doubles outward from the median of the member with the widest support.
    """
    widths = [(m.support()[1] - m.support()[0], i) for i, m in enumerate(members)]
    width, widest = max(widths)
    center = members[widest].median()
    if not math.isfinite(center):
        raise NoBracket("median of the widest member is not finite")
    base = width if math.isfinite(width) and width > 0 else max(1.0, abs(center))

    hi, step, it = center, base, 0
    while G(hi) < target_hi:
        hi = center + step
        step *= 2
        it += 1
        if it > MAX_DOUBLINGS or not math.isfinite(hi):
            raise NoBracket(f"target {target_hi} never attained above {center}")
    lo, step, it = center, base, 0
    while G(lo) >= target_lo:
        lo = center - step
        step *= 2
        it += 1
        if it > MAX_DOUBLINGS or not math.isfinite(lo):
            raise NoBracket(f"target {target_lo} never undershot below {center}")
    return lo, hi


def _invert(groups, target: float, mode: str) -> TieBreakObservation:
    """Smallest lexicographic threshold whose aggregate below-mass hits ``target``.

    ``mode='product'`` aggregates ``prod F_i`` (compared on the log scale),
    ``mode='sum'`` aggregates ``sum F_i``.
    """
    members = [d for d, _ in groups]

    if mode == "product":
        goal = math.log(target)

        def agg(fs):
            with np.errstate(divide="ignore"):
                return sum(c * math.log(f) if f > 0 else -math.inf for f, (_, c) in zip(fs, groups))
    else:
        goal = target

        def agg(fs):
            return math.fsum(c * f for f, (_, c) in zip(fs, groups))

    def G(x):
        return agg([float(d.cdf(x)) for d in members])

    def G_left(x):
        return agg([float(d.cdf_left(x)) for d in members])

    lo, hi = _bracket(G, goal, goal, members)
    for _ in range(MAX_BISECT_ITER):
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        if G(mid) >= goal:
            hi = mid
        else:
            lo = mid

    tau = hi
    # snap onto an atom when the bisection stopped short of float adjacency
    for d in members:
        for a in d.atoms():
            if lo < a < tau and G(a) >= goal:
                tau = float(a)

    below = [float(d.cdf_left(tau)) for d in members]
    masses = [float(d.cdf(tau)) - b for d, b in zip(members, below)]
    if max(masses, default=0.0) <= ATOM_TOL or agg(below) >= goal:
        return TieBreakObservation(float(tau), 0.0)

    if mode == "sum":
        total_mass = math.fsum(c * m for m, (_, c) in zip(masses, groups))
        ybar = (goal - agg(below)) / total_mass
    else:
        def f(y):
            return agg([b + y * m for b, m in zip(below, masses)]) - goal

        ybar = brentq(f, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps) if f(1.0) > 0 else 1.0
    return TieBreakObservation(float(tau), float(min(max(ybar, 0.0), 1.0)))


def quantile_of_max(dists: Sequence[Distribution], p: float) -> TieBreakObservation:
    """Threshold ``tau`` with ``Pr[max_i X_i < tau] = p`` (tie-broken on atoms).

    For atomless laws ``aux`` is 0 and ``prod_i F_i(tau.value) = p``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    if not dists:
        raise NoBracket("empty collection")
    return _invert(_grouped(dists), p, "product")


def threshold_for_expected_count(dists: Sequence[Distribution], count: float) -> TieBreakObservation:
    """Threshold with ``sum_i Pr[X_i >= tau] = count`` exactly (tie-broken on atoms)."""
    n = len(dists)
    if not 0.0 < count < n:
        raise ValueError(f"expected count must lie in (0, {n}), got {count}")
    return _invert(_grouped(dists), n - count, "sum")


@dataclass(frozen=True)
class AboveProbVector:
    """Per-item exceedance probabilities ``p_i`` for one fixed threshold."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("probabilities must form a 1-d vector in [0, 1]")
        object.__setattr__(self, "probs", arr)

    def __len__(self):
        return len(self.probs)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)


def above_probs(dists: Sequence[Distribution], tau) -> AboveProbVector:
    """``p_i`` for every item; a bare float means strict exceedance ``1 - F_i(tau)``."""
    if isinstance(tau, (TieBreakObservation, tuple)):
        probs = [prob_at_or_above(d, tau) for d in dists]
    else:
        probs = [1.0 - float(d.cdf(tau)) for d in dists]
    return AboveProbVector(np.clip(np.array(probs), 0.0, 1.0))


# --------------------------------------------------------------------------
# constructions


def collection_distribution(dists: Sequence[Distribution]) -> Distribution:
    """Law of ``max_{i in S} X_i``; a singleton collection is the member itself."""
    if not dists:
        raise ValueError("collection must be nonempty")
    if len(dists) == 1:
        return dists[0]
    return MaxOf(tuple(dists))


def nth_root_factorization(d: Distribution, m: int) -> Distribution:
    """Law whose maximum over ``m`` independent copies is ``d``."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return d if m == 1 else CdfPower(d, 1.0 / m)


def geometric_mean_distribution(dists: Sequence[Distribution]) -> Distribution:
    """Law with CDF ``(prod_i F_i) ** (1/n)``; n copies share the original max-law."""
    if not dists:
        raise ValueError("collection must be nonempty")
    if len(set(dists)) == 1:
        return dists[0]
    return CdfPower(MaxOf(tuple(dists)), 1.0 / len(dists))


def argmax_probabilities(dists: Sequence[Distribution], points: int = 4096):
    """Two-sided bounds on ``Pr[i = argmax_j X_j]`` for atomless laws.

    Riemann-Stieltjes sums of ``prod_{j != i} F_j dF_i`` on a grid of
    max-law quantiles; returns ``(lower, upper)`` arrays indexed like ``dists``.
    """
    groups = _grouped(dists)
    if any(not d.is_atomless for d, _ in groups):
        raise ValueError("argmax_probabilities needs atomless laws")
    law = MaxOf(tuple(dists))
    qs = np.arange(1, points) / points
    xs = np.concatenate([[-np.inf], law.ppf(qs), [np.inf]])
    lower_by_group, upper_by_group = {}, {}
    with np.errstate(divide="ignore"):
        logs = {d: np.log(d.cdf(xs)) for d, _ in groups}
    for d, c in groups:
        rest = sum((cc - (e is d)) * logs[e] for e, cc in groups if cc - (e is d) > 0)
        rest = np.exp(rest) if not isinstance(rest, int) else np.ones_like(xs)
        dF = np.diff(d.cdf(xs))
        lower_by_group[d] = float(np.sum(dF * rest[:-1]))
        upper_by_group[d] = float(np.sum(dF * rest[1:]))
    lower = np.array([lower_by_group[d] for d in dists])
    upper = np.array([upper_by_group[d] for d in dists])
    return lower, upper

"""Scalar distribution kinds with analytically declared supports.

Every law used by the risk model (claims, interarrival times, price jumps)
is one of a small set of kinds whose support bounds, means, moments and
moment generating functions are known in closed form or by adaptive
quadrature.  Supports are *declared*, not estimated: the sufficient
conditions checked elsewhere are strict inequalities on exact support
bounds, so the bounds must be analytic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import ModelError

INF = float("inf")

#: Results of adaptive quadrature larger than this are reported as +inf.
_DIVERGENCE_CAP = 1e250
_QUAD_EPSREL = 1e-12


def _quad(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Adaptive quadrature with divergence detection (+inf on blow-up)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=_QUAD_EPSREL, limit=400)
        except Exception:
            return INF
    if not np.isfinite(val) or abs(val) > _DIVERGENCE_CAP:
        return INF
    return float(val)


@dataclass(frozen=True)
class Distribution:
    """Base class; concrete kinds implement sampling and moments."""

    kind = "abstract"

    @property
    def support(self) -> tuple[float, float]:
        """Convex hull (lower, upper) of the support, as extended reals."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def atom(self, x: float) -> float:
        """Point mass P(X = x)."""
        return 0.0

    def expectation(self, f: Callable[[float], float]) -> float:
        """E[f(X)] by closed-form atom sums or adaptive quadrature.

        Returns +inf when the integral diverges.
        """
        raise NotImplementedError

    # -- derived quantities with per-kind overrides where closed forms exist --

    def mgf(self, x: float) -> float:
        """E[e^{xX}]; +inf outside the convergence domain."""
        return self.expectation(lambda t: math.exp(min(x * t, 709.0)))

    def abs_moment(self, p: float) -> float:
        """E[|X|^p]."""
        return self.expectation(lambda t: abs(t) ** p)

    def one_plus_pow(self, theta: float) -> float:
        """E[(1+X)^theta] for laws supported in (-1, inf); +inf if divergent."""
        return self.expectation(lambda t: (1.0 + t) ** theta)

    def min_positive_support(self) -> Optional[float]:
        """inf of the support restricted to (0, inf); None if no positive part."""
        lo, hi = self.support
        if hi <= 0:
            return None
        return max(lo, 0.0)

    def charges_negative(self) -> bool:
        return self.support[0] < 0

    def charges_positive(self) -> bool:
        return self.support[1] > 0


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelError(f"exponential rate must be finite and > 0, got {self.rate}")

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, INF)

    def sample(self, rng, size=None):
        return rng.exponential(scale=1.0 / self.rate, size=size)

    def mean(self) -> float:
        return 1.0 / self.rate

    def mgf(self, x: float) -> float:
        if x >= self.rate:
            return INF
        return self.rate / (self.rate - x)

    def abs_moment(self, p: float) -> float:
        return math.gamma(p + 1.0) / self.rate**p

    def expectation(self, f):
        return _quad(lambda t: f(t) * self.rate * math.exp(-self.rate * t), 0.0, INF)


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float
    rate: float

    kind = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ModelError(f"gamma needs shape > 0 and rate > 0, got {self.shape}, {self.rate}")

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, INF)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, scale=1.0 / self.rate, size=size)

    def mean(self) -> float:
        return self.shape / self.rate

    def mgf(self, x: float) -> float:
        if x >= self.rate:
            return INF
        return (self.rate / (self.rate - x)) ** self.shape

    def abs_moment(self, p: float) -> float:
        return math.gamma(self.shape + p) / (math.gamma(self.shape) * self.rate**p)

    def expectation(self, f):
        norm = self.rate**self.shape / math.gamma(self.shape)

        def integrand(t):
            return f(t) * norm * t ** (self.shape - 1.0) * math.exp(-self.rate * t)

        return _quad(integrand, 0.0, INF)


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float
    hi: float

    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ModelError(f"uniform needs finite lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size=size)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def mgf(self, x: float) -> float:
        if x == 0.0:
            return 1.0
        span = self.hi - self.lo
        return (math.exp(x * self.hi) - math.exp(x * self.lo)) / (x * span)

    def abs_moment(self, p: float) -> float:
        # integral of |x|^p over [lo, hi], split at 0 if the interval straddles it
        def piece(a, b):  # 0 <= a < b
            return (b ** (p + 1.0) - a ** (p + 1.0)) / (p + 1.0)

        lo, hi = self.lo, self.hi
        if lo >= 0:
            raw = piece(lo, hi)
        elif hi <= 0:
            raw = piece(-hi, -lo)
        else:
            raw = piece(0.0, -lo) + piece(0.0, hi)
        return raw / (hi - lo)

    def expectation(self, f):
        return _quad(f, self.lo, self.hi) / (self.hi - self.lo)


@dataclass(frozen=True)
class Deterministic(Distribution):
    value: float

    kind = "deterministic"

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ModelError(f"deterministic value must be finite, got {self.value}")

    @property
    def support(self) -> tuple[float, float]:
        return (self.value, self.value)

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def mean(self) -> float:
        return self.value

    def atom(self, x: float) -> float:
        return 1.0 if x == self.value else 0.0

    def mgf(self, x: float) -> float:
        return math.exp(x * self.value)

    def abs_moment(self, p: float) -> float:
        return abs(self.value) ** p

    def one_plus_pow(self, theta: float) -> float:
        return (1.0 + self.value) ** theta

    def expectation(self, f):
        return f(self.value)


@dataclass(frozen=True)
class TwoPoint(Distribution):
    """P(X = x1) = p1, P(X = x2) = 1 - p1."""

    x1: float
    p1: float
    x2: float

    kind = "two_point"

    def __post_init__(self):
        if not (0.0 < self.p1 < 1.0):
            raise ModelError(f"two_point needs 0 < p1 < 1, got {self.p1}")
        if self.x1 == self.x2:
            raise ModelError("two_point needs distinct atoms")
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ModelError("two_point atoms must be finite")

    @property
    def support(self) -> tuple[float, float]:
        return (min(self.x1, self.x2), max(self.x1, self.x2))

    def sample(self, rng, size=None):
        u = rng.random(size=size)
        out = np.where(u < self.p1, self.x1, self.x2)
        return float(out) if size is None else out

    def mean(self) -> float:
        return self.p1 * self.x1 + (1.0 - self.p1) * self.x2

    def atom(self, x: float) -> float:
        if x == self.x1:
            return self.p1
        if x == self.x2:
            return 1.0 - self.p1
        return 0.0

    def expectation(self, f):
        return self.p1 * f(self.x1) + (1.0 - self.p1) * f(self.x2)

    def mgf(self, x: float) -> float:
        return self.expectation(lambda t: math.exp(x * t))

    def abs_moment(self, p: float) -> float:
        return self.expectation(lambda t: abs(t) ** p)

    def one_plus_pow(self, theta: float) -> float:
        return self.expectation(lambda t: (1.0 + t) ** theta)

    def min_positive_support(self) -> Optional[float]:
        pos = [x for x in (self.x1, self.x2) if x > 0]
        return min(pos) if pos else None


@dataclass(frozen=True)
class Shifted(Distribution):
    """X = base + offset."""

    base: Distribution
    offset: float

    kind = "shifted"

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise ModelError("shift offset must be finite")

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.base.support
        return (lo + self.offset, hi + self.offset)

    def sample(self, rng, size=None):
        return self.base.sample(rng, size) + self.offset

    def mean(self) -> float:
        return self.base.mean() + self.offset

    def atom(self, x: float) -> float:
        return self.base.atom(x - self.offset)

    def mgf(self, x: float) -> float:
        base = self.base.mgf(x)
        return INF if base == INF else math.exp(x * self.offset) * base

    def expectation(self, f):
        return self.base.expectation(lambda t: f(t + self.offset))

    def min_positive_support(self) -> Optional[float]:
        if isinstance(self.base, (Deterministic, TwoPoint)):
            # atoms shift rigidly; the hull bound below would be wrong here
            lo, hi = self.base.support
            cands = [x + self.offset for x in {lo, hi} if self.base.atom(x) > 0 and x + self.offset > 0]
            return min(cands) if cands else None
        lo, hi = self.support
        if hi <= 0:
            return None
        return max(lo, 0.0)


@dataclass(frozen=True)
class Negated(Distribution):
    """X = -base."""

    base: Distribution

    kind = "negated"

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.base.support
        return (-hi, -lo)

    def sample(self, rng, size=None):
        return -self.base.sample(rng, size)

    def mean(self) -> float:
        return -self.base.mean()

    def atom(self, x: float) -> float:
        return self.base.atom(-x)

    def mgf(self, x: float) -> float:
        return self.base.mgf(-x)

    def abs_moment(self, p: float) -> float:
        return self.base.abs_moment(p)

    def expectation(self, f):
        return self.base.expectation(lambda t: f(-t))

    def min_positive_support(self) -> Optional[float]:
        if isinstance(self.base, (Deterministic, TwoPoint)):
            lo, hi = self.base.support
            cands = [-x for x in {lo, hi} if self.base.atom(x) > 0 and -x > 0]
            return min(cands) if cands else None
        lo, hi = self.support
        if hi <= 0:
            return None
        return max(lo, 0.0)


@dataclass(frozen=True)
class Log1pOf(Distribution):
    """X = ln(1 + base); the image of a price-jump law on the log scale."""

    base: Distribution

    kind = "log1p_of"

    def __post_init__(self):
        lo, _ = self.base.support
        if lo < -1.0 or self.base.atom(-1.0) > 0:
            raise ModelError("log1p transform needs base support in (-1, inf)")

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.base.support
        return (math.log1p(lo) if lo > -1.0 else -INF, math.log1p(hi) if hi < INF else INF)

    def sample(self, rng, size=None):
        return np.log1p(self.base.sample(rng, size))

    def mean(self) -> float:
        return self.expectation(lambda t: t)

    def atom(self, x: float) -> float:
        return self.base.atom(math.expm1(x))

    def expectation(self, f):
        return self.base.expectation(lambda t: f(math.log1p(t)))

    def min_positive_support(self) -> Optional[float]:
        base_min = self.base.min_positive_support()
        return None if base_min is None else math.log1p(base_min)


DistributionLike = Union[
    Exponential, Gamma, Uniform, Deterministic, TwoPoint, Shifted, Negated, Log1pOf
]

#: kind tag -> class, for config ingestion (the log1p kind is internal only)
KINDS = {
    cls.kind: cls
    for cls in (Exponential, Gamma, Uniform, Deterministic, TwoPoint, Shifted, Negated)
}


def log_jump_law(jump_law: Distribution) -> Distribution:
    """Law of ln(1+J), in closed form where the kind permits."""
    if isinstance(jump_law, Deterministic):
        return Deterministic(math.log1p(jump_law.value))
    if isinstance(jump_law, TwoPoint):
        return TwoPoint(math.log1p(jump_law.x1), jump_law.p1, math.log1p(jump_law.x2))
    return Log1pOf(jump_law)

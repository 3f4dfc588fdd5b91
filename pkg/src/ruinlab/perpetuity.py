"""Sampling the perpetuity Y = Q + M Y' and estimating its upper tail.

Y is drawn by forward weighted truncation of the series sum W_{m-1} Q_m,
W_m = M_1...M_m.  Samplers are abstract pair sources so the machinery can
be exercised against synthetic oracles; the model-backed sampler wraps the
vectorized block kernel.  The tail report carries the empirical survival
function with binomial errors, a Hill estimate of the tail index, and a
log-log regression slope over a quantile window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .engine import BlockBatch, block_pairs
from .model import RiskModel

DEFAULT_WEIGHT_TOL = 1e-12
DEFAULT_N_TERMS = 10_000
HILL_FRACTIONS = (0.005, 0.01, 0.02)


class PairSampler(Protocol):
    def draw(self, n: int, rng: np.random.Generator) -> BlockBatch: ...


@dataclass(frozen=True)
class ModelPairSampler:
    """(M, Q) pairs of k-claim blocks of a risk model."""

    model: RiskModel
    k: int = 1
    grid_step: float = 1e-3

    def draw(self, n, rng) -> BlockBatch:
        return block_pairs(self.model, self.k, n, rng, need_q=True, grid_step=self.grid_step)


@dataclass(frozen=True)
class ConstantPairSampler:
    """Degenerate sampler, for oracle tests with known series limits."""

    m: float
    q: float

    def draw(self, n, rng) -> BlockBatch:
        return BlockBatch(m=np.full(n, self.m), q=np.full(n, self.q), saturations=0)


@dataclass
class TruncationStats:
    truncations: int = 0
    saturations: int = 0


def sample_Y(
    pair_sampler: PairSampler,
    n_terms: int = DEFAULT_N_TERMS,
    weight_tol: float = DEFAULT_WEIGHT_TOL,
    rng: Optional[np.random.Generator] = None,
    stats: Optional[TruncationStats] = None,
) -> float:
    """One draw of Y, truncated at the first weight below weight_tol."""
    if n_terms < 1 or weight_tol <= 0:
        raise ValueError("need n_terms >= 1 and weight_tol > 0")
    rng = rng if rng is not None else np.random.default_rng()
    y, w = 0.0, 1.0
    for _ in range(n_terms):
        batch = pair_sampler.draw(1, rng)
        if stats is not None:
            stats.saturations += batch.saturations
        y += w * float(batch.q[0])
        w *= float(batch.m[0])
        if w < weight_tol:
            return y
    if stats is not None:
        stats.truncations += 1
    return y


@dataclass
class YSampleBatch:
    y: np.ndarray
    truncations: int
    saturations: int


def sample_y_batch(
    pair_sampler: PairSampler,
    n: int,
    n_terms: int = DEFAULT_N_TERMS,
    weight_tol: float = DEFAULT_WEIGHT_TOL,
    rng: Optional[np.random.Generator] = None,
) -> YSampleBatch:
    """n independent Y draws, iterating the series across the whole batch."""
    rng = rng if rng is not None else np.random.default_rng()
    y = np.zeros(n)
    w = np.ones(n)
    active = np.arange(n)
    saturations = 0
    for _ in range(n_terms):
        batch = pair_sampler.draw(active.size, rng)
        saturations += batch.saturations
        y[active] += w[active] * batch.q
        w[active] *= batch.m
        active = active[w[active] >= weight_tol]
        if active.size == 0:
            break
    return YSampleBatch(y=y, truncations=int(active.size), saturations=saturations)


# ---------------------------------------------------------------------------
# tail estimation
# ---------------------------------------------------------------------------


@dataclass
class HillEstimate:
    index: float
    ci_lo: float
    ci_hi: float
    k_used: int
    fraction: float
    unreliable: bool
    sensitivity: dict[float, float] = field(default_factory=dict)


@dataclass
class SlopeEstimate:
    slope: float
    ci_lo: float
    ci_hi: float
    u_lo: float
    u_hi: float
    n_points: int


@dataclass
class TailEstimate:
    """Empirical survival of Y with tail-index readings."""

    n_samples: int
    grid_u: np.ndarray
    grid_survival: np.ndarray
    grid_se: np.ndarray
    hill: Optional[HillEstimate]
    loglog: Optional[SlopeEstimate]
    sorted_samples: np.ndarray  # ascending; retained for survival_at()

    def survival_at(self, u: float) -> tuple[float, float]:
        """(empirical P(Y > u), binomial SE)."""
        n = self.n_samples
        count = n - int(np.searchsorted(self.sorted_samples, u, side="right"))
        p = count / n
        return p, math.sqrt(p * (1.0 - p) / n)


def tail_estimate(samples, grid, hill_fraction: float = 0.01) -> TailEstimate:
    """Survival estimates on the grid plus Hill and log-log slope readings."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 1:
        raise ValueError("tail estimation needs at least one sample")
    xs = np.sort(samples)
    grid_u = np.asarray(grid, dtype=float)
    counts = n - np.searchsorted(xs, grid_u, side="right")
    survival = counts / n
    se = np.sqrt(survival * (1.0 - survival) / n)

    return TailEstimate(
        n_samples=n,
        grid_u=grid_u,
        grid_survival=survival,
        grid_se=se,
        hill=_hill(xs, hill_fraction),
        loglog=_loglog_slope(xs),
        sorted_samples=xs,
    )


def _hill(xs_sorted: np.ndarray, fraction: float) -> Optional[HillEstimate]:
    """Hill tail-index estimator on the top `fraction` of the sample."""
    pos = xs_sorted[xs_sorted > 0]
    if pos.size < 2:
        return None

    def at_fraction(frac):
        k = min(int(frac * xs_sorted.size), pos.size - 1)
        if k < 1:
            return None, 0
        top = pos[-(k + 1):]
        gamma = float(np.mean(np.log(top[1:]) - math.log(top[0])))
        if gamma <= 0:
            return None, k
        return 1.0 / gamma, k

    index, k = at_fraction(fraction)
    if index is None:
        return HillEstimate(math.nan, math.nan, math.nan, k, fraction, True)
    half = 1.96 * index / math.sqrt(k)
    sens = {}
    for frac in HILL_FRACTIONS:
        val, _ = at_fraction(frac)
        if val is not None:
            sens[frac] = val
    return HillEstimate(
        index=index,
        ci_lo=index - half,
        ci_hi=index + half,
        k_used=k,
        fraction=fraction,
        unreliable=k < 50,
        sensitivity=sens,
    )


def _loglog_slope(xs_sorted: np.ndarray, n_points: int = 25) -> Optional[SlopeEstimate]:
    """OLS slope of ln survival vs ln u between the 90% and 99.9% quantiles."""
    n = xs_sorted.size
    u_lo = float(np.quantile(xs_sorted, 0.9))
    u_hi = float(np.quantile(xs_sorted, 0.999))
    if not (0.0 < u_lo < u_hi):
        return None
    us = np.geomspace(u_lo, u_hi, n_points)
    surv = (n - np.searchsorted(xs_sorted, us, side="right")) / n
    keep = surv > 0
    us, surv = us[keep], surv[keep]
    if us.size < 3:
        return None
    lx, ly = np.log(us), np.log(surv)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    dof = us.size - 2
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    se = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 and sxx > 0 else math.inf
    return SlopeEstimate(
        slope=float(slope),
        ci_lo=float(slope - 1.96 * se),
        ci_hi=float(slope + 1.96 * se),
        u_lo=u_lo,
        u_hi=u_hi,
        n_points=int(us.size),
    )


# ---------------------------------------------------------------------------
# ruin bounds (tail sandwich) and moment conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuinBounds:
    lower: float
    lower_se: float
    upper: float
    upper_se: float


def ruin_bounds(tail: TailEstimate, u: float) -> RuinBounds:
    """Sandwich bounds G(u) <= Psi(u) <= G(u)/G(0) with propagated SEs."""
    g_u, se_u = tail.survival_at(u)
    g_0, se_0 = tail.survival_at(0.0)
    if g_0 == 0.0:
        raise ValueError("upper bound undefined: no mass above 0")
    ratio = g_u / g_0
    n = tail.n_samples
    # events {Y>u}, {Y>0} are nested, so Cov = min(g_u, g_0)(1 - max(..)) / n
    cov = (min(g_u, g_0) - g_u * g_0) / n
    if g_u > 0:
        var = ratio * ratio * (
            (se_u / g_u) ** 2 + (se_0 / g_0) ** 2 - 2.0 * cov / (g_u * g_0)
        )
        upper_se = math.sqrt(max(var, 0.0))
    else:
        upper_se = se_u / g_0
    return RuinBounds(lower=g_u, lower_se=se_u, upper=min(ratio, 1.0), upper_se=upper_se)


@dataclass
class GoldieReport:
    """Monte Carlo reading of the implicit-renewal moment conditions."""

    em_beta: float
    em_beta_se: float
    em_beta_log_plus: float
    eq_beta: float
    em_beta_log_plus_drift: float  # relative change between half and full sample
    eq_beta_drift: float
    degenerate_m: bool
    all_finite_and_em1: bool
    n: int


def goldie_moment_check(
    pair_sampler: PairSampler, beta: float, n: int, rng: np.random.Generator
) -> GoldieReport:
    """Estimate E[M^beta], E[M^beta (ln M)^+], E[|Q|^beta] over 2n draws.

    Finiteness is a heuristic: the estimate on n draws and on the full 2n
    must agree within 10%; E[M^beta] must sit within 4 SE of 1.
    """
    batch = pair_sampler.draw(2 * n, rng)
    m, q = batch.m, batch.q
    a = m**beta
    b = a * np.maximum(np.log(m), 0.0)
    cc = np.abs(q) ** beta

    em = float(a.mean())
    em_se = float(a.std(ddof=1) / math.sqrt(a.size))
    eb, eb_half = float(b.mean()), float(b[:n].mean())
    ec, ec_half = float(cc.mean()), float(cc[:n].mean())

    def drift(half, full):
        scale = max(abs(full), 1e-12)
        return abs(half - full) / scale

    b_drift, c_drift = drift(eb_half, eb), drift(ec_half, ec)
    degenerate = bool(np.all(m == 1.0))
    ok = (
        not degenerate
        and np.isfinite([em, eb, ec]).all()
        and abs(em - 1.0) <= 4.0 * em_se
        and b_drift < 0.1
        and c_drift < 0.1
    )
    return GoldieReport(
        em_beta=em,
        em_beta_se=em_se,
        em_beta_log_plus=eb,
        eq_beta=ec,
        em_beta_log_plus_drift=b_drift,
        eq_beta_drift=c_drift,
        degenerate_m=degenerate,
        all_finite_and_em1=bool(ok),
        n=n,
    )

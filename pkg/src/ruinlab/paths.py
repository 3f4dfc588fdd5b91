"""Event-driven simulation of the logprice, the reserve, and block pairs.

With sigma^2 = 0 the logprice V is piecewise linear between price jumps, so
every integral of exp(-V) over a segment has a closed form and the whole
block evaluation is exact.  With sigma^2 > 0 a fixed-step time grid carries
the Brownian part; the integral is trapezoidal on that grid and first
crossings are only checked at grid nodes (a documented discretization bias).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import RiskModel, logprice_params

INF = float("inf")

#: exponents of e^{-V} beyond this are clipped and counted as saturations
_EXP_CLIP = 700.0

#: default time-grid step for the Brownian part
DEFAULT_GRID_STEP = 1e-3

CLAIM = "claim"
PJUMP = "pjump"


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # CLAIM or PJUMP
    value: float  # claim size xi, or log price jump ln(1+J)


@dataclass
class BrownianSegment:
    """Grid of the Brownian V-increments over one inter-event segment."""

    steps: np.ndarray  # durations, sum = segment length
    increments: np.ndarray  # sigma * sqrt(step) * Z per step


@dataclass
class EventStream:
    """Ordered claim/price-jump events on [0, t_end].

    ``brownian[i]`` (when present) covers the segment ending at event i;
    a final entry covers the tail segment (last event, t_end] when t_end
    lies beyond the last event.
    """

    events: list[Event]
    t_end: float
    brownian: Optional[list[BrownianSegment]] = None

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        if times and not (0.0 < times[0]):
            raise ValueError("event times must be positive")
        if times and self.t_end < times[-1]:
            raise ValueError("t_end must not precede the last event")

    def claim_count(self) -> int:
        return sum(1 for e in self.events if e.kind == CLAIM)


def read_event_stream(path) -> EventStream:
    """Parse the injection format: one event per line, ``<time> claim <xi>``
    or ``<time> pjump <j>`` with j the raw price jump (converted to ln(1+j)).
    """
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3 or parts[1] not in (CLAIM, PJUMP):
                raise ValueError(f"{path}:{lineno}: expected '<time> claim|pjump <value>'")
            t, val = float(parts[0]), float(parts[2])
            if parts[1] == PJUMP:
                if val <= -1.0:
                    raise ValueError(f"{path}:{lineno}: price jump must be > -1, got {val}")
                events.append(Event(t, PJUMP, math.log1p(val)))
            else:
                events.append(Event(t, CLAIM, val))
    if not events:
        raise ValueError(f"{path}: empty event stream")
    return EventStream(events=events, t_end=events[-1].time)


def integral_exp_neg_linear(v0: float, slope: float, dt: float) -> float:
    """Exact integral of exp(-(v0 + slope*s)) for s in [0, dt].

    Equals exp(-v0) * (1 - exp(-slope*dt)) / slope, evaluated through expm1
    for stability; the |slope*dt| < 1e-8 regime falls back to the Taylor
    form dt * (1 - slope*dt/2).
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0.0:
        return 0.0
    x = slope * dt
    front = math.exp(-v0) if v0 > -_EXP_CLIP else math.exp(_EXP_CLIP)
    if abs(x) < 1e-8:
        return front * dt * (1.0 - 0.5 * x)
    try:
        return front * (-math.expm1(-x)) / slope
    except OverflowError:
        return INF


@dataclass(frozen=True)
class PerpetuitySample:
    """One realized block pair: multiplicative factor m and additive term q."""

    m: float
    q: float
    k: int
    saturated: bool = False


@dataclass
class _Taint:
    saturations: int = 0

    def exp_neg(self, v: float) -> float:
        if -v > _EXP_CLIP:
            self.saturations += 1
            return math.exp(_EXP_CLIP)
        return math.exp(-v)


def generate_block_stream(
    model: RiskModel, k: int, rng: np.random.Generator, grid_step: float = DEFAULT_GRID_STEP
) -> EventStream:
    """Draw the events of one block of k claims: interarrivals first, then
    claim sizes, then the price jumps per inter-claim segment, then (when
    sigma > 0) the Brownian grid increments per inter-event segment."""
    if k < 1:
        raise ValueError(f"block size must be >= 1, got {k}")
    lp = logprice_params(model.price)

    gaps = np.atleast_1d(model.interarrival.sample(rng, k)).astype(float)
    claim_times = np.cumsum(gaps)
    xis = np.atleast_1d(model.claims.sample(rng, k)).astype(float)
    events = [Event(float(t), CLAIM, float(x)) for t, x in zip(claim_times, xis)]

    if lp.rho > 0:
        seg_edges = np.concatenate([[0.0], claim_times])
        jump_events = []
        for a, b in zip(seg_edges[:-1], seg_edges[1:]):
            n = rng.poisson(lp.rho * (b - a))
            if n == 0:
                continue
            times = np.sort(rng.uniform(a, b, n))
            dvs = np.atleast_1d(lp.log_jump_law.sample(rng, n))
            jump_events.extend(Event(float(t), PJUMP, float(d)) for t, d in zip(times, dvs))
        events = sorted(events + jump_events, key=lambda e: e.time)

    t_end = float(claim_times[-1])
    brownian = None
    if lp.sigma > 0:
        brownian = []
        prev = 0.0
        for e in events:
            brownian.append(_draw_brownian(prev, e.time, lp.sigma, grid_step, rng))
            prev = e.time
    return EventStream(events=events, t_end=t_end, brownian=brownian)


def _draw_brownian(t0: float, t1: float, sigma: float, grid_step: float, rng) -> BrownianSegment:
    length = t1 - t0
    n_full = int(length / grid_step)
    steps = np.full(n_full + 1, grid_step)
    steps[-1] = length - n_full * grid_step
    if steps[-1] <= 0:
        steps = steps[:-1]
    incs = sigma * np.sqrt(steps) * rng.standard_normal(len(steps))
    return BrownianSegment(steps=steps, increments=incs)


def evaluate_block(mu_v: float, sigma: float, c: float, stream: EventStream, k: int) -> PerpetuitySample:
    """Exact (sigma = 0) or grid (sigma > 0) evaluation of the block pair.

    m = exp(-V_{T_k}) and q = -sum_i exp(-V_{T_i-}) xi_i - c * int_0^{T_k} exp(-V_s) ds,
    consuming the first k claims of the stream and every price jump before them.
    """
    taint = _Taint()
    v = 0.0
    t = 0.0
    integral = 0.0
    claim_sum = 0.0
    claims_seen = 0

    for idx, e in enumerate(stream.events):
        if claims_seen >= k:
            break
        seg = None if stream.brownian is None else stream.brownian[idx]
        v, contrib = _advance_v(v, t, e.time, mu_v, seg, taint)
        integral += contrib
        t = e.time
        if e.kind == CLAIM:
            claim_sum += taint.exp_neg(v) * e.value
            claims_seen += 1
        else:
            v += e.value

    if claims_seen < k:
        raise ValueError(f"stream has {claims_seen} claims, block needs {k}")
    m = taint.exp_neg(v)
    q = -claim_sum - c * integral
    return PerpetuitySample(m=m, q=q, k=k, saturated=taint.saturations > 0)


def _advance_v(v, t0, t1, mu_v, seg: Optional[BrownianSegment], taint) -> tuple[float, float]:
    """Advance V across [t0, t1]; returns (V at t1, integral of e^{-V})."""
    length = t1 - t0
    if seg is None:
        contrib = integral_exp_neg_linear(v, mu_v, length)
        if not (contrib <= 1e290):
            taint.saturations += 1
            contrib = 1e290
        return v + mu_v * length, contrib
    # trapezoid on the Brownian grid; V itself is exact at the nodes
    integral = 0.0
    w_prev = taint.exp_neg(v)
    for h, dz in zip(seg.steps, seg.increments):
        v = v + mu_v * h + dz
        w = taint.exp_neg(v)
        integral += 0.5 * h * (w_prev + w)
        w_prev = w
    return v, integral


def simulate_block(
    model: RiskModel, k: int, rng: np.random.Generator, grid_step: float = DEFAULT_GRID_STEP
) -> PerpetuitySample:
    """Simulate one block of k claims and return its perpetuity pair."""
    lp = logprice_params(model.price)
    stream = generate_block_stream(model, k, rng, grid_step)
    return evaluate_block(lp.mu_v, lp.sigma, model.c, stream, k)


# ---------------------------------------------------------------------------
# reserve paths and ruin
# ---------------------------------------------------------------------------

RUINED = "ruined"
BARRIER = "barrier"
HORIZON = "horizon"


@dataclass(frozen=True)
class Horizon:
    """Truncation policy for the infinite-horizon ruin probability."""

    n_max: int = 1000
    barrier_k: float = 1e4


@dataclass(frozen=True)
class RuinPathResult:
    outcome: str  # RUINED | BARRIER | HORIZON
    tau: Optional[float]
    claims_seen: int


def _crossing_time(x0: float, c: float, mu_v: float, length: float) -> Optional[float]:
    """First s in (0, length] with x0 + c * int_0^s e^{-mu_v r} dr = 0.

    Only possible when c < 0; the integrand map is monotone so the crossing
    is unique and explicit.
    """
    if c >= 0 or x0 <= 0:
        return 0.0 if x0 <= 0 else None
    ratio = x0 / (-c)  # crossing when phi(mu_v, s) reaches this
    arg = mu_v * ratio
    if arg >= 1.0:
        return None  # phi saturates below the required level
    s = ratio if mu_v == 0.0 else -math.log1p(-arg) / mu_v
    return s if 0.0 < s <= length else None


def _advance_reserve(x, length, mu_v, c):
    """Reserve across a jump-free segment (sigma = 0): closed form update."""
    tau = _crossing_time(x, c, mu_v, length)
    if tau is not None:
        return None, tau
    return math.exp(mu_v * length) * (x + c * integral_exp_neg_linear(0.0, mu_v, length)), None


def _advance_reserve_grid(x, length, mu_v, sigma, c, grid_step, rng):
    """Reserve across a segment with Brownian noise; ruin checked at nodes."""
    n_full = int(length / grid_step)
    steps = [grid_step] * n_full + [length - n_full * grid_step]
    if steps[-1] <= 0:
        steps = steps[:-1]
    elapsed = 0.0
    for h in steps:
        dv = mu_v * h + sigma * math.sqrt(h) * rng.standard_normal()
        x = math.exp(dv) * x + c * 0.5 * h * (math.exp(dv) + 1.0)
        elapsed += h
        if x <= 0:
            return None, elapsed
    return x, None


def simulate_ruin_path(
    model: RiskModel,
    u: float,
    horizon: Horizon,
    rng: np.random.Generator,
    grid_step: float = DEFAULT_GRID_STEP,
) -> RuinPathResult:
    """Advance the reserve claim-by-claim until ruin, the barrier K*u, or n_max claims."""
    if u <= 0:
        raise ValueError(f"initial capital must be > 0, got {u}")
    lp = logprice_params(model.price)
    barrier = horizon.barrier_k * u
    x, t = u, 0.0

    for n in range(1, horizon.n_max + 1):
        gap = float(model.interarrival.sample(rng))
        t_claim = t + gap
        n_jumps = rng.poisson(lp.rho * gap) if lp.rho > 0 else 0
        jump_times = np.sort(rng.uniform(t, t_claim, n_jumps)) if n_jumps else []
        dvs = np.atleast_1d(lp.log_jump_law.sample(rng, n_jumps)) if n_jumps else []

        for jt, dv in zip(jump_times, dvs):
            x, tau = _segment_step(x, jt - t, lp, model.c, grid_step, rng)
            if tau is not None:
                return RuinPathResult(RUINED, t + tau, n - 1)
            x *= math.exp(dv)
            t = float(jt)
            if x >= barrier:
                return RuinPathResult(BARRIER, None, n - 1)

        x, tau = _segment_step(x, t_claim - t, lp, model.c, grid_step, rng)
        if tau is not None:
            return RuinPathResult(RUINED, t + tau, n - 1)
        t = t_claim
        x += float(model.claims.sample(rng))
        if x <= 0:
            return RuinPathResult(RUINED, t, n)
        if x >= barrier:
            return RuinPathResult(BARRIER, None, n)
    return RuinPathResult(HORIZON, None, horizon.n_max)


def _segment_step(x, length, lp, c, grid_step, rng):
    if lp.sigma > 0:
        return _advance_reserve_grid(x, length, lp.mu_v, lp.sigma, c, grid_step, rng)
    return _advance_reserve(x, length, lp.mu_v, c)


def ruin_from_stream(
    mu_v: float,
    c: float,
    u: float,
    stream: EventStream,
    horizon: Optional[Horizon] = None,
) -> RuinPathResult:
    """Deterministic replay of a ruin path on an injected stream (sigma = 0)."""
    if u <= 0:
        raise ValueError(f"initial capital must be > 0, got {u}")
    horizon = horizon or Horizon(n_max=10**9, barrier_k=INF)
    barrier = horizon.barrier_k * u
    x, t, claims_seen = u, 0.0, 0

    for e in stream.events:
        x, tau = _advance_reserve(x, e.time - t, mu_v, c)
        if tau is not None:
            return RuinPathResult(RUINED, t + tau, claims_seen)
        t = e.time
        if e.kind == CLAIM:
            claims_seen += 1
            x += e.value
            if x <= 0:
                return RuinPathResult(RUINED, t, claims_seen)
        else:
            x *= math.exp(e.value)
        if x >= barrier:
            return RuinPathResult(BARRIER, None, claims_seen)
        if claims_seen >= horizon.n_max:
            return RuinPathResult(HORIZON, None, claims_seen)

    if stream.t_end > t:
        x, tau = _advance_reserve(x, stream.t_end - t, mu_v, c)
        if tau is not None:
            return RuinPathResult(RUINED, t + tau, claims_seen)
    return RuinPathResult(HORIZON, None, claims_seen)

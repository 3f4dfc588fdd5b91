"""Vectorized Monte Carlo kernels for blocks, perpetuity draws, and ruin paths.

The scalar walkers in :mod:`ruinlab.paths` are the readable reference; these
kernels produce statistically identical output in bulk.  With sigma^2 = 0
a whole batch of blocks reduces to one lexsort of the merged claim/jump
event list plus closed-form segment integrals, so a million blocks cost a
few numpy passes.  With sigma^2 > 0 the kernels fall back to the scalar
grid walkers block by block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import RiskModel, logprice_params
from .paths import Horizon, simulate_block, simulate_ruin_path

_CLIP = 700.0
_CONTRIB_CAP = 1e290


@dataclass
class BlockBatch:
    m: np.ndarray
    q: Optional[np.ndarray]
    saturations: int


@dataclass
class YBatch:
    y: np.ndarray
    truncations: int  # draws cut at n_terms while their weight was still >= tol
    saturations: int


@dataclass
class RuinBatch:
    ruined: int
    barrier: int
    horizon: int
    saturations: int

    @property
    def n(self) -> int:
        return self.ruined + self.barrier + self.horizon


def _exp_clipped(expo: np.ndarray) -> tuple[np.ndarray, int]:
    over = expo > _CLIP
    return np.exp(np.minimum(expo, _CLIP)), int(np.count_nonzero(over))


def _phi_vec(slope: float, dt: np.ndarray) -> np.ndarray:
    """Vectorized integral of exp(-slope*s) over [0, dt]."""
    if slope == 0.0:
        return dt.astype(float)
    x = slope * dt
    small = np.abs(x) < 1e-8
    with np.errstate(over="ignore"):
        core = np.where(small, dt * (1.0 - 0.5 * x), -np.expm1(-np.where(small, 1.0, x)) / slope)
    return core


def block_pairs(
    model: RiskModel,
    k: int,
    n: int,
    rng: np.random.Generator,
    need_q: bool = True,
    grid_step: float = 1e-3,
) -> BlockBatch:
    """Sample n block pairs (M, Q); Q computation can be skipped for speed."""
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    lp = logprice_params(model.price)
    if lp.sigma > 0:
        return _block_pairs_scalar(model, k, n, rng, need_q, grid_step)
    return _block_pairs_exact(model, lp, k, n, rng, need_q)


def _block_pairs_scalar(model, k, n, rng, need_q, grid_step) -> BlockBatch:
    m = np.empty(n)
    q = np.empty(n) if need_q else None
    sat = 0
    for i in range(n):
        s = simulate_block(model, k, rng, grid_step)
        m[i] = s.m
        if need_q:
            q[i] = s.q
        sat += int(s.saturated)
    return BlockBatch(m=m, q=q, saturations=sat)


def _block_pairs_exact(model, lp, k, n, rng, need_q) -> BlockBatch:
    mu_v, rho, c = lp.mu_v, lp.rho, model.c
    saturations = 0

    gaps = np.asarray(model.interarrival.sample(rng, (n, k)), dtype=float)
    claim_t = np.cumsum(gaps, axis=1)
    t_end = claim_t[:, -1]

    if rho > 0:
        counts = rng.poisson(rho * t_end)
        tot = int(counts.sum())
        jb = np.repeat(np.arange(n), counts)
        jt = rng.uniform(size=tot) * t_end[jb]
        dv = np.asarray(lp.log_jump_law.sample(rng, tot), dtype=float)
        jsum = np.bincount(jb, weights=dv, minlength=n)
    else:
        tot = 0
        jsum = np.zeros(n)

    m, over = _exp_clipped(-(mu_v * t_end + jsum))
    saturations += over
    if not need_q:
        return BlockBatch(m=m, q=None, saturations=saturations)

    xi = np.asarray(model.claims.sample(rng, (n, k)), dtype=float)

    if tot:
        ev_b = np.concatenate([np.repeat(np.arange(n), k), jb])
        ev_t = np.concatenate([claim_t.ravel(), jt])
        ev_d = np.concatenate([np.zeros(n * k), dv])
        ev_claim = np.concatenate([np.ones(n * k, dtype=bool), np.zeros(tot, dtype=bool)])
        order = np.lexsort((ev_t, ev_b))
        ev_b, ev_t, ev_d, ev_claim = ev_b[order], ev_t[order], ev_d[order], ev_claim[order]
    else:
        ev_b = np.repeat(np.arange(n), k)
        ev_t = claim_t.ravel()
        ev_d = np.zeros(n * k)
        ev_claim = np.ones(n * k, dtype=bool)

    n_ev = ev_t.size
    first = np.empty(n_ev, dtype=bool)
    first[0] = True
    np.not_equal(ev_b[1:], ev_b[:-1], out=first[1:])

    # cumulative log jumps within each block, after and strictly before each event
    cs = np.cumsum(ev_d)
    start_idx = np.flatnonzero(first)
    base = np.where(start_idx > 0, cs[start_idx - 1], 0.0)
    sizes = np.diff(np.append(start_idx, n_ev))
    cum_after = cs - np.repeat(base, sizes)
    cum_before = cum_after - ev_d

    # discounted claim terms use V at the claim's left limit
    w, over = _exp_clipped(-(mu_v * ev_t[ev_claim] + cum_before[ev_claim]))
    saturations += over
    claim_sum = np.bincount(ev_b[ev_claim], weights=w * xi.ravel(), minlength=n)

    # exact integral of e^{-V}: one closed-form term per inter-event segment
    prev_t = np.concatenate([[0.0], ev_t[:-1]])
    prev_cum = np.concatenate([[0.0], cum_after[:-1]])
    prev_t[first] = 0.0
    prev_cum[first] = 0.0
    v0 = mu_v * prev_t + prev_cum
    front, over = _exp_clipped(-v0)
    saturations += over
    with np.errstate(over="ignore", invalid="ignore"):
        contrib = front * _phi_vec(mu_v, ev_t - prev_t)
    bad = ~(contrib <= _CONTRIB_CAP)
    saturations += int(np.count_nonzero(bad))
    contrib[bad] = _CONTRIB_CAP
    integral = np.bincount(ev_b, weights=contrib, minlength=n)

    q = -claim_sum - c * integral
    return BlockBatch(m=m, q=q, saturations=saturations)


def draw_y(
    model: RiskModel,
    k: int,
    n: int,
    n_terms: int,
    weight_tol: float,
    rng: np.random.Generator,
    grid_step: float = 1e-3,
) -> YBatch:
    """Draw n perpetuity samples by forward weighted truncation.

    Y = sum_m W_{m-1} Q_m with W_m = M_1 ... M_m, cut at the first m where
    W_m < weight_tol or at n_terms (the latter counted as a truncation).
    """
    y = np.zeros(n)
    w = np.ones(n)
    active = np.arange(n)
    saturations = 0
    for _ in range(n_terms):
        batch = block_pairs(model, k, active.size, rng, need_q=True, grid_step=grid_step)
        saturations += batch.saturations
        y[active] += w[active] * batch.q
        w[active] *= batch.m
        active = active[w[active] >= weight_tol]
        if active.size == 0:
            break
    return YBatch(y=y, truncations=int(active.size), saturations=saturations)


def ruin_outcomes(
    model: RiskModel,
    u: float,
    n: int,
    horizon: Horizon,
    rng: np.random.Generator,
    grid_step: float = 1e-3,
) -> RuinBatch:
    """Count {ruined, barrier, horizon} outcomes over n independent paths."""
    if u <= 0:
        raise ValueError(f"initial capital must be > 0, got {u}")
    lp = logprice_params(model.price)
    if lp.sigma > 0:
        counts = {"ruined": 0, "barrier": 0, "horizon": 0}
        for _ in range(n):
            res = simulate_ruin_path(model, u, horizon, rng, grid_step)
            counts[res.outcome] += 1
        return RuinBatch(saturations=0, **counts)
    return _ruin_exact(model, lp, u, n, horizon, rng)


def _ruin_exact(model, lp, u, n, horizon, rng) -> RuinBatch:
    mu_v, rho, c = lp.mu_v, lp.rho, model.c
    barrier = horizon.barrier_k * u

    x = np.full(n, float(u))
    ruined = 0
    barrier_hits = 0

    for _ in range(horizon.n_max):
        n_act = x.size
        if n_act == 0:
            break
        gaps = np.asarray(model.interarrival.sample(rng, n_act), dtype=float)

        if rho > 0:
            counts = rng.poisson(rho * gaps)
            tot = int(counts.sum())
        else:
            counts = np.zeros(n_act, dtype=np.int64)
            tot = 0

        if tot:
            jb = np.repeat(np.arange(n_act), counts)
            jt = rng.uniform(size=tot) * gaps[jb]
            dv = np.asarray(lp.log_jump_law.sample(rng, tot), dtype=float)
            x, exited_ruin, exited_barrier = _interval_step(
                x, gaps, counts, jb, jt, dv, mu_v, c, barrier
            )
        else:
            exited_ruin = _segment_crossings(x, gaps, mu_v, c)
            with np.errstate(over="ignore"):
                x = np.exp(np.minimum(mu_v * gaps, _CLIP)) * (x + c * _phi_vec(mu_v, gaps))
            x[exited_ruin] = np.nan
            exited_barrier = np.zeros(x.size, dtype=bool)

        xi = np.asarray(model.claims.sample(rng, x.size), dtype=float)
        alive = ~(exited_ruin | exited_barrier)
        x = np.where(alive, x + xi, x)
        claim_ruin = alive & (x <= 0)
        claim_barrier = alive & ~claim_ruin & (x >= barrier)

        ruined += int(np.count_nonzero(exited_ruin | claim_ruin))
        barrier_hits += int(np.count_nonzero(exited_barrier | claim_barrier))
        keep = alive & ~claim_ruin & ~claim_barrier
        x = x[keep]

    return RuinBatch(ruined=ruined, barrier=barrier_hits, horizon=int(x.size), saturations=0)


def _segment_crossings(x0: np.ndarray, length: np.ndarray, mu_v: float, c: float) -> np.ndarray:
    """Mask of paths whose reserve crosses 0 inside a jump-free segment."""
    if c >= 0:
        return np.zeros(x0.size, dtype=bool)
    ratio = x0 / (-c)
    arg = mu_v * ratio
    feasible = arg < 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        if mu_v == 0.0:
            s = ratio
        else:
            s = -np.log1p(-np.where(feasible, arg, 0.0)) / mu_v
    return feasible & (s <= length) & (x0 > 0) | (x0 <= 0)


def _interval_step(x, gaps, counts, jb, jt, dv, mu_v, c, barrier):
    """Advance one inter-claim interval with jumps, via per-path prefix affine
    composition over the jump-delimited subsegments.

    Returns the reserve at the claim's left limit plus masks of paths that
    exited by ruin (first continuous crossing) or by the barrier (checked at
    subsegment ends, i.e. after each price jump), preserving event order.
    """
    n_act = gaps.size
    nseg = counts + 1
    n_seg_tot = int(nseg.sum())
    starts = np.concatenate([[0], np.cumsum(nseg)[:-1]])
    seg_path = np.repeat(np.arange(n_act), nseg)

    # slot jump subsegments (sorted by time within path), then the closing one
    order = np.lexsort((jt, jb))
    jt_sorted = jt[order]
    dv_sorted = dv[order]
    jump_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(jt_sorted.size) - np.repeat(jump_starts, counts)
    jump_slots = starts[jb[order]] + local

    end_rel = np.empty(n_seg_tot)
    seg_dv = np.zeros(n_seg_tot)
    end_rel[jump_slots] = jt_sorted
    seg_dv[jump_slots] = dv_sorted
    closing_slots = starts + counts
    end_rel[closing_slots] = gaps

    first = np.zeros(n_seg_tot, dtype=bool)
    first[starts] = True
    prev_end = np.concatenate([[0.0], end_rel[:-1]])
    prev_end[first] = 0.0
    seg_len = end_rel - prev_end

    # X after segment j (and its jump): X_j = P_j (x0 + S_j);  P = prod A,
    # A_j = exp(mu_v L_j + dv_j), B_j = A_j * c * phi(mu_v, L_j)
    log_a = mu_v * seg_len + seg_dv
    cs = np.cumsum(log_a)
    base = np.where(starts > 0, cs[starts - 1], 0.0)
    log_p = cs - np.repeat(base, nseg)
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.exp(np.minimum(log_p, _CLIP))
        a = np.exp(np.minimum(log_a, _CLIP))
        b_over_p = a * c * _phi_vec(mu_v, seg_len) / p
    cs_b = np.cumsum(b_over_p)
    base_b = np.where(starts > 0, cs_b[starts - 1], 0.0)
    s_pref = cs_b - np.repeat(base_b, nseg)

    x0_seg = x[seg_path]
    x_end = p * (x0_seg + s_pref)
    x_start = np.concatenate([[0.0], x_end[:-1]])
    x_start[first] = x[seg_path[first]]

    crossed = _segment_crossings(x_start, seg_len, mu_v, c) if c < 0 else np.zeros(
        n_seg_tot, dtype=bool
    )
    hit_barrier = x_end >= barrier
    hit_barrier[closing_slots] = False  # the closing end is checked after the claim lands

    # first exit of either kind per path, in slot order
    slot_pos = np.arange(n_seg_tot, dtype=float)
    cross_pos = np.where(crossed, slot_pos, np.inf)
    barrier_pos = np.where(hit_barrier, slot_pos + 0.5, np.inf)  # barrier fires after its segment
    first_exit = np.minimum.reduceat(np.minimum(cross_pos, barrier_pos), starts)

    exited = np.isfinite(first_exit)
    exit_is_ruin = exited & (first_exit == np.floor(first_exit))
    exit_is_barrier = exited & ~exit_is_ruin

    return x_end[closing_slots], exit_is_ruin, exit_is_barrier

"""Cumulant generating function of -V sampled at T1, and its root beta.

H(q) = ln E[exp(-q V_{T1})] factors through the Levy exponent of V:
E[exp(theta V_t)] = exp(t kappa_V(theta)), hence H(q) = ln M_T(kappa_V(-q))
with M_T the interarrival MGF.  H is convex with H(0) = 0; its unique
positive root beta is the tail exponent of the ruin probability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from .distributions import Distribution
from .errors import AssumptionError
from .model import PriceModel, RiskModel

logger = logging.getLogger(__name__)

INF = float("inf")

#: |H(beta)| target for the bisection
RESIDUAL_TOL = 1e-10
#: bracket width target for the bisection
WIDTH_TOL = 1e-12
#: geometric probing never goes past this q
PROBE_LIMIT = 1e3


def levy_exponent(price: PriceModel, theta: float) -> float:
    """kappa_V(theta) with E[e^{theta V_t}] = e^{t kappa_V(theta)}.

    kappa_V(theta) = mu_v theta + sigma^2 theta^2 / 2 + rho (E[(1+J)^theta] - 1).
    Returns +inf when the jump moment diverges.
    """
    price.require_simulable()
    val = price.mu_v * theta + 0.5 * price.sigma2 * theta * theta
    rho = price.pi.intensity
    if rho > 0:
        jump_moment = price.pi.jump_law.one_plus_pow(theta)
        if jump_moment == INF:
            logger.warning("jump moment E[(1+J)^%g] diverges; Levy exponent is +inf", theta)
            return INF
        val += rho * (jump_moment - 1.0)
    return val


def mgf_interarrival(dist: Distribution, x: float) -> float:
    """E[e^{x T1}]; +inf outside the convergence domain."""
    if x == INF:
        return INF
    return dist.mgf(x)


def cumulant(model: RiskModel, q: float) -> float:
    """H(q) = ln E[e^{-q V_{T1}}] for q >= 0; +inf when the MGF diverges."""
    if q < 0:
        raise ValueError(f"cumulant defined for q >= 0, got {q}")
    if q == 0.0:
        return 0.0
    m = mgf_interarrival(model.interarrival, levy_exponent(model.price, -q))
    return math.log(m) if m != INF else INF


@dataclass(frozen=True)
class BetaResult:
    """Positive root of H with diagnostics of the search."""

    beta: float
    bracket: tuple[float, float]
    h_at_beta: float
    domain_limit: float  # sup{q : H(q) < inf}; +inf if none found below the probe limit
    iterations: int


def find_beta(model: RiskModel) -> BetaResult:
    """Locate the unique positive root of H by bracketing and bisection.

    H is convex with H(0) = 0, so there is at most one positive root; the
    doubling probe finds the first sign change, i.e. the smallest root.
    Bisection (rather than Newton) is robust against the finite domain
    boundary where H jumps to +inf.
    """
    H = lambda q: cumulant(model, q)

    q0 = 1e-6
    h0 = H(q0)
    if h0 >= 0:
        raise AssumptionError(
            "Assumption 1 fails: no root. H'(0+) >= 0, so H is nonnegative on q > 0 "
            "(the discounted price exp(-V) has supercritical growth)"
        )

    # geometric probing for a sign change or the domain wall
    iterations = 0
    q_lo, q_hi = q0, 2.0 * q0
    wall: Optional[float] = None
    while True:
        iterations += 1
        h_hi = H(q_hi)
        if h_hi == INF:
            wall = q_hi
            break
        if h_hi > 0:
            break
        if q_hi > PROBE_LIMIT:
            raise AssumptionError(
                f"Assumption 1 fails: no root found below probe limit q = {PROBE_LIMIT:g}"
            )
        q_lo, q_hi = q_hi, 2.0 * q_hi

    if wall is not None:
        # shrink toward the wall until either H turns positive (root exists
        # strictly inside the domain) or the gap closes with H still negative
        lo, hi = q_lo, wall
        while hi - lo > WIDTH_TOL * max(1.0, hi):
            iterations += 1
            mid = 0.5 * (lo + hi)
            h_mid = H(mid)
            if h_mid == INF:
                hi = mid
            elif h_mid > 0:
                q_lo, q_hi = lo, mid
                wall = None
                break
            else:
                lo = mid
        if wall is not None:
            raise AssumptionError(
                f"Assumption 1 fails: H(beta+) = +inf (H stays negative up to the "
                f"domain boundary near q = {hi:.6g})"
            )

    # plain bisection on the sign-change bracket
    lo, hi = q_lo, q_hi
    beta = 0.5 * (lo + hi)
    h_beta = H(beta)
    while hi - lo > WIDTH_TOL and abs(h_beta) > RESIDUAL_TOL:
        iterations += 1
        if h_beta == INF or h_beta > 0:
            hi = beta
        else:
            lo = beta
        beta = 0.5 * (lo + hi)
        h_beta = H(beta)

    return BetaResult(
        beta=beta,
        bracket=(lo, hi),
        h_at_beta=h_beta if h_beta != INF else INF,
        domain_limit=_domain_limit(H, beta),
        iterations=iterations,
    )


def _domain_limit(H, beta: float) -> float:
    """Locate sup{q : H(q) < inf} above beta by probing and bisection."""
    q = max(2.0 * beta, 1e-3)
    lo = beta
    while H(q) != INF:
        lo = q
        q *= 2.0
        if q > PROBE_LIMIT:
            return INF
    hi = q
    while hi - lo > 1e-9 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if H(mid) == INF:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AssumptionReport:
    claim_moment: float
    mgf_epsilon: Optional[float]
    mgf_value: float
    ok: bool
    failing: Optional[str] = None


def validate_assumptions(model: RiskModel, beta: float) -> AssumptionReport:
    """Check Assumption 2: E[|xi|^beta] < inf and E[e^{eps T1}] < inf for some eps."""
    claim_moment = model.claims.abs_moment(beta)
    eps, mgf_val = 1.0, INF
    while eps > 2.0**-20:
        mgf_val = mgf_interarrival(model.interarrival, eps)
        if mgf_val != INF:
            break
        eps *= 0.5
    else:
        eps = None

    failing = None
    if not (claim_moment < INF):
        failing = "claim moment E[|xi|^beta] diverges"
    elif eps is None:
        failing = "interarrival MGF diverges for every probed eps > 0"
    return AssumptionReport(
        claim_moment=claim_moment,
        mgf_epsilon=eps,
        mgf_value=mgf_val,
        ok=failing is None,
        failing=failing,
    )

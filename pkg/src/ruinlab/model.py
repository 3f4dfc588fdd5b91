"""Risk model definition: price process, business process, variants.

The reserve follows dX = X dR + dP with R a Levy process (triplet
(a, sigma^2, Pi), finite-activity jumps, Delta R > -1) independent of the
compound renewal business process P_t = c t + sum_{i<=N_t} xi_i.
All derived logprice-level parameters are computed here once, at
construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .distributions import Deterministic, Distribution, TwoPoint, log_jump_law
from .errors import AssumptionError, CapabilityError, ModelError


class Variant(Enum):
    NON_LIFE = "non_life"
    ANNUITY = "annuity"
    MIXED = "mixed"


@dataclass(frozen=True)
class JumpMeasure:
    """Finite-activity jump measure: intensity and jump-size law on (-1, inf)."""

    intensity: float
    jump_law: Distribution

    def __post_init__(self):
        if not (self.intensity >= 0 and math.isfinite(self.intensity)):
            raise ModelError(f"jump intensity must be finite and >= 0, got {self.intensity}")
        lo, _ = self.jump_law.support
        if lo < -1.0 or self.jump_law.atom(-1.0) > 0:
            raise ModelError("price jumps must satisfy J > -1 (jump law support in (-1, inf))")
        if self.jump_law.atom(0.0) > 0:
            raise ModelError("jump law must not charge 0")

    @property
    def charges_negative(self) -> bool:
        return self.intensity > 0 and self.jump_law.charges_negative()

    @property
    def charges_positive(self) -> bool:
        return self.intensity > 0 and self.jump_law.charges_positive()

    def truncated_mean(self) -> float:
        """Pi(h) = intensity * E[J 1{|J|<=1}]."""
        if self.intensity == 0:
            return 0.0
        return self.intensity * self.jump_law.expectation(lambda x: x if abs(x) <= 1.0 else 0.0)


NO_JUMPS = JumpMeasure(0.0, Deterministic(1.0))


@dataclass(frozen=True)
class PriceModel:
    """Levy triplet (a, sigma^2, Pi) of the return process R."""

    a: float
    sigma2: float
    pi: JumpMeasure = NO_JUMPS
    #: declared metadata for classification only; such models cannot be simulated
    infinite_activity: bool = False

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ModelError("price drift must be finite")
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ModelError(f"sigma2 must be finite and >= 0, got {self.sigma2}")
        if self.infinite_activity:
            if self.pi.intensity > 0:
                raise ModelError(
                    "declared infinite-activity models must not carry a finite jump measure"
                )
            return
        if self.sigma2 == 0 and self.pi.intensity == 0:
            raise ModelError("price process must not be deterministic: need sigma2 > 0 or jumps")

    def require_simulable(self) -> None:
        if self.infinite_activity:
            raise CapabilityError(
                "declared infinite-activity price processes are classified but not simulable"
            )

    @property
    def pi_h(self) -> float:
        """Pi(h) with the standard truncation h(x) = x 1{|x|<=1}."""
        return self.pi.truncated_mean()

    @property
    def mu_v(self) -> float:
        """Drift of the logprice in its drift + BM + sum-of-log-jumps form."""
        return self.a - 0.5 * self.sigma2 - self.pi_h

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class LogpriceParams:
    mu_v: float
    sigma: float
    rho: float
    log_jump_law: Distribution
    #: True when Pi(h) came from quadrature rather than a closed form
    numeric_moment: bool


def logprice_params(price: PriceModel) -> LogpriceParams:
    """Parameters of the logprice V: S = S0 e^V, V Levy with image triplet.

    V_t = mu_v t + sigma W_t + sum of ln(1+J_i) over jumps up to t, where
    mu_v = a - sigma^2/2 - Pi(h).
    """
    price.require_simulable()
    numeric = not isinstance(price.pi.jump_law, (Deterministic, TwoPoint))
    return LogpriceParams(
        mu_v=price.mu_v,
        sigma=price.sigma,
        rho=price.pi.intensity,
        log_jump_law=log_jump_law(price.pi.jump_law),
        numeric_moment=numeric and price.pi.intensity > 0,
    )


@dataclass(frozen=True)
class OneSided:
    """Result of the one-sided drift classification of the price jumps."""

    case: str  # "lambda" | "kappa" | "not_one_sided"
    value: Optional[float] = None

    @property
    def is_lambda(self) -> bool:
        return self.case == "lambda"

    @property
    def is_kappa(self) -> bool:
        return self.case == "kappa"


NOT_ONE_SIDED = OneSided("not_one_sided")


def lambda_kappa(price: PriceModel) -> OneSided:
    """Classify the finite-variation one-sided cases and their drift rate.

    lambda := Pi(h) - a when sigma^2 = 0 and the jumps are only positive;
    kappa  := a - Pi(h) when sigma^2 = 0 and the jumps are only negative.
    Both must be strictly positive, otherwise the cumulant cannot have a
    positive root and the standing assumptions are unsatisfiable.
    """
    if price.infinite_activity or price.sigma2 > 0 or price.pi.intensity == 0:
        return NOT_ONE_SIDED
    pos, neg = price.pi.charges_positive, price.pi.charges_negative
    if pos and neg:
        return NOT_ONE_SIDED
    if pos:
        lam = price.pi_h - price.a
        if lam <= 0:
            raise AssumptionError(
                f"Assumption 1 unsatisfiable: positive-jump model needs Pi(h) - a > 0, got {lam}"
            )
        return OneSided("lambda", lam)
    kap = price.a - price.pi_h
    if kap <= 0:
        raise AssumptionError(
            f"Assumption 1 unsatisfiable: negative-jump model needs a - Pi(h) > 0, got {kap}"
        )
    return OneSided("kappa", kap)


@dataclass(frozen=True)
class BusinessModel:
    """Business process P_t = c t + sum claims; claims at renewal times."""

    c: float
    claims: Distribution
    interarrival: Distribution

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ModelError("premium rate must be finite")
        if self.claims.atom(0.0) > 0:
            raise ModelError("claim law must not charge 0")
        lo_t, _ = self.interarrival.support
        if lo_t < 0 or self.interarrival.atom(0.0) > 0:
            raise ModelError("interarrival law must be positive (support >= 0, no atom at 0)")
        lo, hi = self.claims.support
        if self.c >= 0 and lo >= 0:
            raise ModelError("degenerate model: c >= 0 with positive claims, ruin never happens")
        if self.c < 0 and hi <= 0:
            raise ModelError("degenerate model: c < 0 with non-positive claims, ruin happens for sure")

    @property
    def interarrival_inf(self) -> float:
        return self.interarrival.support[0]

    @property
    def interarrival_sup(self) -> float:
        return self.interarrival.support[1]


def classify_variant(business: BusinessModel) -> Variant:
    """Non-life (claims < 0), annuity (c < 0, claims > 0), or mixed."""
    lo, hi = business.claims.support
    if hi <= 0:
        return Variant.NON_LIFE
    if lo >= 0:
        return Variant.ANNUITY
    return Variant.MIXED


@dataclass(frozen=True)
class RiskModel:
    """Full model: price process plus business process."""

    price: PriceModel
    business: BusinessModel

    @property
    def variant(self) -> Variant:
        return classify_variant(self.business)

    @property
    def c(self) -> float:
        return self.business.c

    @property
    def claims(self) -> Distribution:
        return self.business.claims

    @property
    def interarrival(self) -> Distribution:
        return self.business.interarrival

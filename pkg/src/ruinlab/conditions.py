"""Sufficient conditions for the power-law ruin asymptotic.

Evaluates, with exact support arithmetic, every sufficient condition for
0 < liminf u^beta Psi(u) <= limsup u^beta Psi(u) < inf: the four-branch
unbounded-variation/two-sided criterion, the support criteria for one-sided
jumps, the strict inequalities H.1-H.4 between claim and interarrival
support bounds (and their mixed-model variants), and the minimal block
sizes under which the sets {M>1, Q>0}, {M<1, Q>0} are provably non-null.
The affine-semigroup fixed-point machinery behind the support-unboundedness
criterion is exposed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

from .cumulant import BetaResult, find_beta
from .engine import block_pairs
from .model import OneSided, RiskModel, Variant, lambda_kappa

INF = float("inf")


# ---------------------------------------------------------------------------
# affine semigroup Aff(R)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """x -> a x + b, identified with the pair (a, b)."""

    a: float
    b: float

    def __call__(self, x: float) -> float:
        return self.a * x + self.b


AFFINE_IDENTITY = AffineMap(1.0, 0.0)


def affine_compose(h1: AffineMap, h2: AffineMap) -> AffineMap:
    """Semigroup law (a1, b1)(a2, b2) = (a1 a2, b1 + a1 b2)."""
    return AffineMap(h1.a * h2.a, h1.b + h1.a * h2.b)


def affine_fixed_point(h: AffineMap) -> float:
    """x0 = b / (1 - a), the solution of h(x) = x; undefined for a = 1."""
    if h.a == 1.0:
        raise ValueError("affine map with a = 1 is a translation: no fixed point")
    return h.b / (1.0 - h.a)


@dataclass(frozen=True)
class SupportCertificate:
    certified: bool
    from_: Optional[float]  # left end of the certified ray [from_, inf)


def support_unbounded_certificate(h: AffineMap, h_prime: AffineMap) -> SupportCertificate:
    """Support of the perpetuity law contains [x0(h), inf) when 0 < a < 1,
    a' > 1 and x0(h') < x0(h)."""
    if not (0.0 < h.a < 1.0 and h_prime.a > 1.0):
        return SupportCertificate(False, None)
    x0, x0p = affine_fixed_point(h), affine_fixed_point(h_prime)
    if x0p < x0:
        return SupportCertificate(True, x0)
    return SupportCertificate(False, None)


# ---------------------------------------------------------------------------
# theorem-level checks
# ---------------------------------------------------------------------------


@dataclass
class BranchResult:
    holds: bool
    branch: Optional[str]  # first satisfied branch


def check_theorem1(model: RiskModel) -> BranchResult:
    """Four-branch criterion: sigma^2 > 0, infinite activity, two-sided
    jumps, or claims unbounded from below."""
    price = model.price
    if price.sigma2 > 0:
        return BranchResult(True, "sigma2_positive")
    if price.infinite_activity:
        return BranchResult(True, "infinite_activity")
    if price.pi.charges_negative and price.pi.charges_positive:
        return BranchResult(True, "two_sided_jumps")
    if model.claims.support[0] == -INF:
        return BranchResult(True, "claims_unbounded_below")
    return BranchResult(False, None)


@dataclass
class Theorem2Result:
    applicable: bool
    holds: bool
    clause: Optional[str] = None


def check_theorem2(model: RiskModel) -> Theorem2Result:
    """Support criteria for models whose price process jumps at all."""
    if model.price.infinite_activity or model.price.pi.intensity == 0:
        return Theorem2Result(applicable=False, holds=False)
    variant = model.variant
    if variant is Variant.NON_LIFE:
        holds = model.business.interarrival_inf == 0.0
        return Theorem2Result(True, holds, "interarrival_inf_zero")
    if variant is Variant.ANNUITY:
        holds = model.business.interarrival_sup == INF
        return Theorem2Result(True, holds, "interarrival_sup_infinite")
    lo, hi = model.claims.support
    if model.c < 0:
        holds = (max(-lo, hi) == INF) or model.business.interarrival_sup == INF
        return Theorem2Result(True, holds, "mixed_c_negative")
    min_pos = model.claims.min_positive_support()
    holds = min_pos == 0.0
    return Theorem2Result(True, holds, "mixed_positive_claims_reach_zero")


@dataclass(frozen=True)
class Inequality:
    """One strict support inequality with its evaluated sides."""

    applicable: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    margin: Optional[float] = None  # lhs - rhs
    holds: bool = False
    note: Optional[str] = None


NOT_APPLICABLE = Inequality(applicable=False)


@dataclass
class HConditionReport:
    """The applicable strict inequality among H.1-H.4 / the mixed variants.

    At most one entry is applicable: they are keyed on variant x jump side.
    h1/h2 exploit large negative claims, h3/h4 small positive claims; the
    mixed entries substitute the one-sided parts of the claim support.
    """

    side: OneSided
    h1: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    h2: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    h3: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    h4: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    mixed_a: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    mixed_b: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    mixed_c: Inequality = field(default_factory=lambda: NOT_APPLICABLE)
    mixed_d: Inequality = field(default_factory=lambda: NOT_APPLICABLE)

    def entries(self) -> dict[str, Inequality]:
        return {
            "h1": self.h1, "h2": self.h2, "h3": self.h3, "h4": self.h4,
            "mixed_a": self.mixed_a, "mixed_b": self.mixed_b,
            "mixed_c": self.mixed_c, "mixed_d": self.mixed_d,
        }

    def applicable_entry(self) -> Optional[tuple[str, Inequality]]:
        for name, ineq in self.entries().items():
            if ineq.applicable:
                return name, ineq
        return None

    def any_holds(self) -> bool:
        return any(e.applicable and e.holds for e in self.entries().values())


def _rhs(side: OneSided, c: float, support_bound: float) -> float:
    """(|c|/lambda)(1 - e^{-lambda s}) or (|c|/kappa)(e^{kappa s} - 1).

    The |c| form is what the underlying non-null-set proofs actually use
    (their leading terms are |c|/lambda resp. |c|/kappa); for the non-life
    and mixed c >= 0 cases it coincides with the literal c.
    """
    rate = side.value
    if side.is_lambda:
        return (abs(c) / rate) * -math.expm1(-rate * support_bound)
    return (abs(c) / rate) * math.expm1(rate * support_bound)


def check_h_conditions(model: RiskModel) -> HConditionReport:
    """Evaluate the applicable support inequality, exactly.

    Preconditions follow the statements: one-sided finite-activity jumps,
    interarrival support bounded away from 0 (non-life / mixed c >= 0) or
    bounded above (annuity / mixed c < 0); anything else is not applicable.
    """
    side = lambda_kappa(model.price)
    report = HConditionReport(side=side)
    if not (side.is_lambda or side.is_kappa):
        return report

    variant = model.variant
    f_lo = model.business.interarrival_inf
    f_hi = model.business.interarrival_sup
    claims_lo, claims_hi = model.claims.support

    if variant is Variant.NON_LIFE or (variant is Variant.MIXED and model.c >= 0):
        if f_lo <= 0:
            return report
        lhs = -claims_lo  # sup supp xi^-  (= sup supp |xi| for non-life)
        rhs = _rhs(side, model.c, f_lo)
        ineq = Inequality(True, lhs, rhs, lhs - rhs, holds=lhs > rhs)
        if variant is Variant.NON_LIFE:
            if side.is_lambda:
                report.h1 = ineq
            else:
                report.h2 = ineq
        else:
            if side.is_lambda:
                report.mixed_a = ineq
            else:
                report.mixed_b = ineq
        return report

    # annuity, or mixed with c < 0
    if not (f_hi < INF):
        return report
    if variant is Variant.ANNUITY:
        lhs = claims_lo  # inf supp xi >= 0
    else:
        min_pos = model.claims.min_positive_support()
        if min_pos is None:
            return report
        lhs = min_pos  # inf of the positive support points of xi
    rhs = _rhs(side, model.c, f_hi)
    ineq = Inequality(True, lhs, rhs, lhs - rhs, holds=lhs < rhs)
    if variant is Variant.ANNUITY:
        if side.is_lambda:
            report.h3 = ineq
        else:
            report.h4 = ineq
    else:
        if side.is_lambda:
            report.mixed_c = ineq
        else:
            report.mixed_d = ineq
    return report


@dataclass(frozen=True)
class BlockSize:
    k: int
    bound: float  # the quoted strict lower bound (or its surrogate)
    heuristic: bool  # True when the source only states "sufficiently large"


#: default floor for the "sufficiently large k" case
DEFAULT_BLOCK_FLOOR = 8


def min_block_size(model: RiskModel, floor: int = DEFAULT_BLOCK_FLOOR) -> BlockSize:
    """Smallest block size covered by the non-null-set propositions.

    1/(lambda F_lo) or 1/(kappa F_lo) for the claim-driven cases,
    2/(lambda F_hi) for the annuity/lambda case; the annuity/kappa case has
    no stated bound and gets max(ceil(2/(kappa F_hi)) + 1, floor), flagged
    heuristic.
    """
    report = check_h_conditions(model)
    found = report.applicable_entry()
    if found is None:
        raise ValueError("no applicable support inequality: minimal block size undefined")
    name, _ = found
    rate = report.side.value
    f_lo = model.business.interarrival_inf
    f_hi = model.business.interarrival_sup
    if name in ("h1", "h2", "mixed_a", "mixed_b"):
        bound = 1.0 / (rate * f_lo)
        return BlockSize(k=math.floor(bound) + 1, bound=bound, heuristic=False)
    if name in ("h3", "mixed_c"):
        bound = 2.0 / (rate * f_hi)
        return BlockSize(k=math.floor(bound) + 1, bound=bound, heuristic=False)
    bound = 2.0 / (rate * f_hi)
    return BlockSize(k=max(math.ceil(bound) + 1, floor), bound=bound, heuristic=True)


# ---------------------------------------------------------------------------
# Monte Carlo non-null-set estimation and regime classification
# ---------------------------------------------------------------------------


@dataclass
class NonNullReport:
    """Frequencies of the sets {M>1, Q>0} and {M<1, Q>0} over n blocks."""

    k: int
    n: int
    hits_up: int  # M > 1, Q > 0
    hits_down: int  # M < 1, Q > 0
    p_up: float
    p_down: float
    ci_up: tuple[float, float]
    ci_down: tuple[float, float]
    certified: bool
    saturations: int


#: hits needed in each set before the certificate is issued
CERTIFICATE_MIN_HITS = 10


def _clopper_pearson(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else float(sps.beta.ppf(alpha / 2, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(sps.beta.ppf(1 - alpha / 2, hits + 1, n - hits))
    return lo, hi


def estimate_nonnull_sets(
    model: RiskModel, k: int, n: int, rng: np.random.Generator, grid_step: float = 1e-3
) -> NonNullReport:
    """Monte Carlo frequencies of the two target sets with exact binomial CIs."""
    if k < 1:
        raise ValueError(f"block size must be >= 1, got {k}")
    batch = block_pairs(model, k, n, rng, need_q=True, grid_step=grid_step)
    up = int(np.count_nonzero((batch.m > 1.0) & (batch.q > 0.0)))
    down = int(np.count_nonzero((batch.m < 1.0) & (batch.q > 0.0)))
    return NonNullReport(
        k=k,
        n=n,
        hits_up=up,
        hits_down=down,
        p_up=up / n,
        p_down=down / n,
        ci_up=_clopper_pearson(up, n),
        ci_down=_clopper_pearson(down, n),
        certified=up >= CERTIFICATE_MIN_HITS and down >= CERTIFICATE_MIN_HITS,
        saturations=batch.saturations,
    )


@dataclass
class RegimeCall:
    kind: str  # "power_law" | "undetermined"
    beta: Optional[float] = None


@dataclass
class ConditionReport:
    """Everything the sufficient-condition battery produced for one model."""

    variant: Variant
    side: OneSided
    beta: Optional[BetaResult]
    theorem1: BranchResult
    theorem2: Theorem2Result
    h_conditions: HConditionReport
    predicted_regime: RegimeCall
    required_block_size: Optional[BlockSize]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def ineq(i: Inequality) -> dict:
            if not i.applicable:
                return {"applicable": False}
            return {
                "applicable": True,
                "lhs": i.lhs,
                "rhs": i.rhs,
                "margin": i.margin,
                "holds": i.holds,
            }

        h = self.h_conditions
        return {
            "variant": self.variant.value,
            "one_sided": {"case": self.side.case, "value": self.side.value},
            "beta": None
            if self.beta is None
            else {
                "beta": self.beta.beta,
                "h_at_beta": self.beta.h_at_beta,
                "domain_limit": self.beta.domain_limit,
            },
            "theorem1": {"holds": self.theorem1.holds, "which_branch": self.theorem1.branch},
            "theorem2": {
                "applicable": self.theorem2.applicable,
                "holds": self.theorem2.holds,
                "clause": self.theorem2.clause,
            },
            "theorem3_h1": ineq(h.h1),
            "theorem3_h2": ineq(h.h2),
            "theorem3_h3": ineq(h.h3),
            "theorem3_h4": ineq(h.h4),
            "mixed_props": {
                "prop6_lambda": ineq(h.mixed_a),
                "prop6_kappa": ineq(h.mixed_b),
                "prop7_lambda": ineq(h.mixed_c),
                "prop7_kappa": ineq(h.mixed_d),
            },
            "predicted_regime": {"kind": self.predicted_regime.kind, "beta": self.predicted_regime.beta},
            "required_block_size": None
            if self.required_block_size is None
            else {
                "k": self.required_block_size.k,
                "bound": self.required_block_size.bound,
                "heuristic": self.required_block_size.heuristic,
            },
            "notes": self.notes,
        }


def classify_regime(model: RiskModel, block_floor: int = DEFAULT_BLOCK_FLOOR) -> ConditionReport:
    """Run the full battery and predict the asymptotic regime.

    The prediction is power_law(beta) only when beta exists and at least
    one applicable sufficient condition holds; these are sufficient, not
    necessary, so everything else is reported as undetermined.
    """
    notes: list[str] = []
    t1 = check_theorem1(model)

    if model.price.infinite_activity:
        # classification-only models: the cumulant machinery cannot run
        notes.append(
            "declared infinite-activity price process: tail exponent not computable here; "
            "the four-branch criterion applies conditionally on the standing assumptions"
        )
        return ConditionReport(
            variant=model.variant,
            side=OneSided("not_one_sided"),
            beta=None,
            theorem1=t1,
            theorem2=Theorem2Result(applicable=False, holds=False),
            h_conditions=HConditionReport(side=OneSided("not_one_sided")),
            predicted_regime=RegimeCall("undetermined"),
            required_block_size=None,
            notes=notes,
        )

    beta = find_beta(model)  # AssumptionError propagates
    t2 = check_theorem2(model)
    h = check_h_conditions(model)

    block_size = None
    if h.applicable_entry() is not None:
        block_size = min_block_size(model, floor=block_floor)

    sufficient = t1.holds or (t2.applicable and t2.holds) or h.any_holds()
    regime = RegimeCall("power_law", beta.beta) if sufficient else RegimeCall("undetermined")
    if t2.applicable and t2.holds and h.any_holds():
        notes.append("both the support criterion and a strict inequality apply; reporting both")
    return ConditionReport(
        variant=model.variant,
        side=h.side,
        beta=beta,
        theorem1=t1,
        theorem2=t2,
        h_conditions=h,
        predicted_regime=regime,
        required_block_size=block_size,
        notes=notes,
    )

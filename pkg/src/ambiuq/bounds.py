"""Entropy-threshold bounds on epistemic uncertainty, and counterexamples.

The two central functions invert the maximum-entropy curve ``h_max`` (for
the high-entropy lower bound on EU) and the binary entropy curve (for the
low-entropy probabilistic cap). Both inversions use plain bisection on a
monotone-decreasing bracket. The witness constructors make the
non-identifiability of EU from a prediction, and the failure mode of
ensemble mutual information, concrete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import Categorical, kl
from .errors import DegenerateInputError, DomainError, SupportError, ValidationError

BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200
# slack for floating-point endpoints like delta == ln(k)
_EDGE = 1e-12


@dataclass(frozen=True)
class BoundQuery:
    """Class count and entropy threshold (nats) for the bound evaluations."""

    k: int
    delta: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise DomainError(f"k must be an integer >= 2, got {self.k!r}")
        if not math.isfinite(self.delta):
            raise DomainError(f"delta must be finite, got {self.delta!r}")


@dataclass(frozen=True)
class Thm2Bound:
    """Low-entropy bound report: the confidence level gamma_delta, the EU cap
    -ln(gamma_delta), and the (possibly vacuous) probability lower bound."""

    gamma_delta: float
    eu_cap: float
    prob_lower_bound: float


def h_max(alpha: float, k: int) -> float:
    """Maximum entropy of a k-class distribution whose largest mass is alpha.

    Equals -a*ln(a) - (1-a)*ln((1-a)/(k-1)); strictly decreasing on
    [1/k, 1], with h_max(1/k) = ln k and h_max(1) = 0.
    """
    if int(k) != k or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k!r}")
    if not (1.0 / k - _EDGE <= alpha <= 1.0 + _EDGE):
        raise DomainError(f"alpha={alpha!r} outside [1/k, 1] for k={k}")
    alpha = min(max(alpha, 1.0 / k), 1.0)
    rest = 1.0 - alpha
    if rest == 0.0:
        return 0.0
    return float(-alpha * math.log(alpha) - rest * math.log(rest / (k - 1)))


def binary_entropy(gamma: float) -> float:
    """H_B(g) = -g*ln(g) - (1-g)*ln(1-g); symmetric with max ln 2 at 1/2."""
    if not (0.0 <= gamma <= 1.0):
        raise DomainError(f"gamma={gamma!r} outside [0, 1]")
    if gamma in (0.0, 1.0):
        return 0.0
    return float(-gamma * math.log(gamma) - (1.0 - gamma) * math.log1p(-gamma))


def _bisect_decreasing(fn, lo: float, hi: float, target: float) -> float:
    """Solve fn(x) = target for fn monotone decreasing on [lo, hi].

    Runs the bracket to collapse (not just to BISECT_TOL on the value), so
    the root is machine-accurate even where the curve is flat; the value
    tolerance then holds with a wide margin everywhere.
    """
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha_delta(query: BoundQuery) -> float:
    """Largest possible max-class probability among distributions with
    entropy >= delta; the unique root of h_max(a, k) = delta on [1/k, 1]."""
    k, delta = query.k, query.delta
    if not (-_EDGE <= delta <= math.log(k) + _EDGE):
        raise DomainError(f"delta={delta!r} outside [0, ln k] for k={k}")
    delta = min(max(delta, 0.0), math.log(k))
    return _bisect_decreasing(lambda a: h_max(a, k), 1.0 / k, 1.0, delta)


def gamma_delta(delta: float) -> float:
    """Smallest possible max-class probability among distributions with
    entropy <= delta; the root of H_B(g) = delta on [1/2, 1]."""
    if not (-_EDGE <= delta <= math.log(2.0) + _EDGE):
        raise DomainError(f"delta={delta!r} outside [0, ln 2]")
    delta = min(max(delta, 0.0), math.log(2.0))
    return _bisect_decreasing(binary_entropy, 0.5, 1.0, delta)


def eu_lower_bound_high_entropy(query: BoundQuery) -> float:
    """With zero aleatoric uncertainty, any prediction with H(p) >= delta has
    epistemic uncertainty at least -ln(alpha_delta)."""
    return float(-math.log(alpha_delta(query))) + 0.0


def thm2_probability_bound(
    delta: float, avg_loss: float, p_low_entropy: float
) -> Thm2Bound:
    """Probability bound that low-entropy predictions have low EU.

    Returns gamma_delta, the EU cap -ln(gamma_delta), and
    1 - avg_loss / (-ln(1-gamma_delta) * p_low_entropy). The lower bound is
    reported as-is even when negative (vacuous).
    """
    if delta == 0.0:
        raise DegenerateInputError(
            "delta=0 makes -ln(1-gamma_delta) infinite; the bound is undefined"
        )
    if not (0.0 < delta <= math.log(2.0) + _EDGE):
        raise DomainError(f"delta={delta!r} outside (0, ln 2]")
    if avg_loss < 0:
        raise DomainError(f"avg_loss={avg_loss!r} must be >= 0")
    if p_low_entropy == 0.0:
        raise DegenerateInputError("p_low_entropy=0: no low-entropy mass to condition on")
    if not (0.0 < p_low_entropy <= 1.0):
        raise DomainError(f"p_low_entropy={p_low_entropy!r} outside (0, 1]")
    g = gamma_delta(delta)
    denom = -math.log1p(-g) * p_low_entropy
    return Thm2Bound(
        gamma_delta=g,
        eu_cap=float(-math.log(g)),
        prob_lower_bound=float(1.0 - avg_loss / denom),
    )


def nonidentifiability_witnesses(
    p: Categorical,
) -> tuple[Categorical, Categorical, float, float]:
    """Two ground truths consistent with the same prediction p: one with zero
    epistemic uncertainty, one with EU = -ln(min_i p_i) >= ln K.

    Argmin ties break toward the lowest class index.
    """
    if (p.probs == 0).any():
        raise SupportError("witness construction requires strictly positive p")
    p_star_1 = p
    kl_1 = kl(p_star_1, p)
    j = int(np.argmin(p.probs))
    indicator = np.zeros(len(p))
    indicator[j] = 1.0
    p_star_2 = Categorical(p.classes, indicator)
    kl_2 = kl(p_star_2, p)
    return p_star_1, p_star_2, kl_1, kl_2


def mi_counterexample(ensemble: list[Categorical]) -> tuple[Categorical, float]:
    """The ground truth p* = mean member, for which true EU is exactly zero
    no matter how large the ensemble's mutual information is."""
    if not ensemble:
        raise ValidationError("ensemble must have at least one member")
    classes = ensemble[0].classes
    for member in ensemble[1:]:
        if member.classes != classes:
            raise ValidationError("ensemble members must share one ordered class list")
    mean = np.mean([m.probs for m in ensemble], axis=0)
    p_star = Categorical(classes, mean)
    return p_star, kl(p_star, p_star)

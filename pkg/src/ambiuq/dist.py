"""Exact arithmetic on discrete distributions over named semantic classes.

All information quantities are in nats. The conventions 0*ln(0) = 0 and
0*ln(0/q) = 0 apply throughout, so indicator distributions and partially
overlapping supports need no special-casing by callers.

Two layers are provided: an object API on :class:`Categorical` (validated,
one distribution at a time) and row-wise array functions (``row_entropy``
etc.) that operate on 1-D vectors or 2-D batches and perform no validation.
The object API delegates to the array layer, so both compute identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, SupportError, ValidationError

# |sum(probs) - 1| <= SUM_TOL passes as-is; up to RENORM_TOL gets silently
# renormalized (file-format rounding); beyond that the input is rejected.
SUM_TOL = 1e-9
RENORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Categorical:
    """A probability distribution over an ordered list of named classes.

    Attributes:
        classes: unique, ordered class identifiers (opaque strings).
        probs: non-negative probabilities, one per class, summing to 1.
    """

    classes: tuple[str, ...]
    probs: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, Categorical):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.classes, self.probs.tobytes()))

    def __post_init__(self):
        classes = tuple(str(c) for c in self.classes)
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise ValidationError("probs must be a 1-D vector")
        if len(classes) != probs.shape[0]:
            raise ValidationError(
                f"{len(classes)} classes but {probs.shape[0]} probabilities"
            )
        if probs.shape[0] == 0:
            raise ValidationError("empty distribution")
        if len(set(classes)) != len(classes):
            raise ValidationError("class identifiers must be unique")
        if not np.isfinite(probs).all():
            raise ValidationError("probabilities must be finite")
        if (probs < 0).any():
            raise ValidationError("probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > SUM_TOL:
            if abs(total - 1.0) <= RENORM_TOL:
                probs = probs / total
            else:
                raise ValidationError(f"probabilities sum to {total!r}, not 1")
        probs = np.ascontiguousarray(probs)
        probs.setflags(write=False)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        """JSON-ready form, the wire format used by every file schema."""
        return {"classes": list(self.classes), "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Categorical":
        try:
            return cls(tuple(obj["classes"]), obj["probs"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad categorical object: {exc}") from exc


@dataclass(frozen=True)
class Decomposition:
    """Total uncertainty split into its aleatoric and epistemic parts (nats)."""

    total: float
    aleatoric: float
    epistemic: float


def row_entropy(p: np.ndarray, axis: int = -1) -> np.ndarray | float:
    """Shannon entropy -sum(p*ln p) along ``axis``, with 0*ln(0) = 0."""
    p = np.asarray(p, dtype=float)
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=axis)


def row_kl(p_star: np.ndarray, p: np.ndarray, axis: int = -1) -> np.ndarray | float:
    """KL(p*||p) along ``axis``; +inf where p lacks support that p* has.

    Computed as sum(p* * (ln p* - ln p)) over p* > 0, which makes
    KL(p||p) exactly 0.0 and KL(indicator||p) exactly -ln p[y*].
    """
    p_star = np.asarray(p_star, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = p_star > 0
    with np.errstate(divide="ignore"):
        log_ps = np.log(np.where(mask, p_star, 1.0))
        log_p = np.where(mask, np.log(np.where(p > 0, p, 1.0)), 0.0)
        log_p = np.where(mask & (p <= 0), -np.inf, log_p)
    terms = np.where(mask, p_star * (log_ps - log_p), 0.0)
    return terms.sum(axis=axis)


def row_cross_entropy(p_star: np.ndarray, p: np.ndarray, axis: int = -1):
    """-sum(p* ln p) along ``axis``; +inf where p lacks support that p* has."""
    p_star = np.asarray(p_star, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = p_star > 0
    with np.errstate(divide="ignore"):
        log_p = np.where(mask, np.log(np.where(p > 0, p, 1.0)), 0.0)
        log_p = np.where(mask & (p <= 0), -np.inf, log_p)
    return -np.where(mask, p_star * log_p, 0.0).sum(axis=axis)


def row_js(p: np.ndarray, q: np.ndarray, axis: int = -1) -> np.ndarray | float:
    """Jensen-Shannon divergence along ``axis``; symmetric, in [0, ln 2]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    return 0.5 * row_kl(p, m, axis=axis) + 0.5 * row_kl(q, m, axis=axis)


def _require_same_classes(a: Categorical, b: Categorical) -> None:
    if a.classes != b.classes:
        raise ValidationError(
            "distributions are over different ordered class lists: "
            f"{a.classes} vs {b.classes}"
        )


def _require_support(p_star: Categorical, p: Categorical) -> None:
    bad = (p_star.probs > 0) & (p.probs == 0)
    if bad.any():
        missing = [c for c, b in zip(p_star.classes, bad) if b]
        raise SupportError(
            f"p assigns zero probability to {missing} where p* is positive; "
            "align the distributions first (see estimators.align)"
        )


def entropy(p: Categorical) -> float:
    """H(p) = -sum(p_i ln p_i) in nats; lies in [0, ln K]."""
    return float(row_entropy(p.probs))


def kl(p_star: Categorical, p: Categorical) -> float:
    """KL(p*||p) in nats; requires aligned classes and dominated support."""
    _require_same_classes(p_star, p)
    _require_support(p_star, p)
    return float(row_kl(p_star.probs, p.probs))


def cross_entropy(p_star: Categorical, p: Categorical) -> float:
    """CE(p*, p) = -sum(p*_i ln p_i) = H(p*) + KL(p*||p), in nats."""
    _require_same_classes(p_star, p)
    _require_support(p_star, p)
    return float(row_cross_entropy(p_star.probs, p.probs))


def decompose(p_star: Categorical, p: Categorical) -> Decomposition:
    """Split total uncertainty CE(p*, p) into aleatoric H(p*) plus epistemic KL(p*||p)."""
    _require_same_classes(p_star, p)
    _require_support(p_star, p)
    return Decomposition(
        total=float(row_cross_entropy(p_star.probs, p.probs)),
        aleatoric=float(row_entropy(p_star.probs)),
        epistemic=float(row_kl(p_star.probs, p.probs)),
    )


def js_divergence(p: Categorical, q: Categorical) -> float:
    """Jensen-Shannon divergence in nats; symmetric, bounded by ln 2."""
    _require_same_classes(p, q)
    return float(row_js(p.probs, q.probs))


def normalize(counts, classes=None) -> Categorical:
    """Turn non-negative counts into their relative-frequency distribution.

    Args:
        counts: non-negative reals with a positive sum.
        classes: optional class names; defaults to "c0", "c1", ...
    """
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValidationError("counts must be a non-empty 1-D vector")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValidationError("counts must be finite and non-negative")
    total = float(arr.sum())
    if total <= 0:
        raise DegenerateInputError("cannot normalize all-zero counts")
    if classes is None:
        classes = tuple(f"c{i}" for i in range(arr.shape[0]))
    return Categorical(tuple(classes), arr / total)

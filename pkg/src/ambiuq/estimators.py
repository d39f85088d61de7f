"""Semantic predictive distributions from sampled answers, and the
prediction-side uncertainty estimators.

``cluster`` aggregates the sequence probabilities of sampled answers within
semantic classes and normalizes. ``align`` puts an estimated ground truth
and a model distribution onto one joint support, imputing 0 on the
ground-truth side and a small epsilon on the model side (the model assigns
some probability to any sequence, so its support is treated as universal).
Estimators: semantic entropy, maximum sentence probability, and ensemble
mutual information.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import Categorical, entropy, row_kl
from .errors import (
    DegenerateInputError,
    EstimatorUnavailableError,
    ValidationError,
)

DEFAULT_EPSILON = 0.01

_PUNCT_RE = re.compile(r"[^\w\s]")


def _normalize_text(s: str) -> str:
    return " ".join(_PUNCT_RE.sub("", s.casefold()).split())


class EquivalenceMap:
    """Canonicalizes answer/class strings into semantic class identifiers.

    The default is case-folding plus whitespace/punctuation normalization
    with exact matching. An explicit mapping (for example pre-computed by an
    external entailment tool) can be layered on top; chains are resolved so
    that canonical() is idempotent.
    """

    def __init__(self, mapping: Optional[dict] = None):
        self._mapping = {}
        for key, value in (mapping or {}).items():
            self._mapping[_normalize_text(key)] = _normalize_text(value)

    def canonical(self, s: str) -> str:
        out = _normalize_text(s)
        for _ in range(len(self._mapping) + 1):
            nxt = self._mapping.get(out, out)
            if nxt == out:
                break
            out = nxt
        return out


@dataclass(frozen=True)
class AnswerSample:
    """One sampled answer with its full-sequence probability."""

    text: str
    seq_prob: float
    cluster: Optional[str] = None

    def __post_init__(self):
        if not (0.0 < self.seq_prob <= 1.0):
            raise ValidationError(
                f"seq_prob must be in (0, 1], got {self.seq_prob!r} for {self.text!r}"
            )


@dataclass(frozen=True)
class AnswerSampleSet:
    """All sampled answers for one question, plus optional extras that
    enable additional estimators (beam-search max prob, ensemble members)."""

    question_id: str
    samples: tuple
    best_answer_prob: Optional[float] = None
    ensemble: Optional[tuple] = None

    def __post_init__(self):
        if not self.samples:
            raise ValidationError(f"{self.question_id}: samples must be non-empty")
        if self.best_answer_prob is not None and not (0.0 < self.best_answer_prob <= 1.0):
            raise ValidationError(
                f"{self.question_id}: best_answer_prob must be in (0, 1]"
            )


@dataclass(frozen=True)
class EnsemblePrediction:
    """Member distributions over one shared, ordered class list."""

    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValidationError("ensemble must have at least one member")
        classes = self.members[0].classes
        for member in self.members[1:]:
            if member.classes != classes:
                raise ValidationError(
                    "ensemble members are not aligned to one ordered class list"
                )

    @property
    def classes(self):
        return self.members[0].classes


def cluster(sample_set: AnswerSampleSet, eq: Optional[EquivalenceMap] = None) -> Categorical:
    """Semantic distribution: per-class sums of sequence probabilities,
    normalized. Duplicate answer texts count once per occurrence; classes
    appear in order of first occurrence."""
    eq = eq or EquivalenceMap()
    sums: dict = {}
    for sample in sample_set.samples:
        label = sample.cluster if sample.cluster is not None else sample.text
        key = eq.canonical(label)
        sums[key] = sums.get(key, 0.0) + sample.seq_prob
    total = sum(sums.values())
    if total <= 0:
        raise DegenerateInputError(
            f"{sample_set.question_id}: all sequence probabilities are zero"
        )
    classes = tuple(sums)
    return Categorical(classes, np.array([sums[c] / total for c in classes]))


def _canonical_merge(p: Categorical, eq: EquivalenceMap):
    """Canonicalize class names, summing probabilities that collide."""
    out: dict = {}
    for name, prob in zip(p.classes, p.probs):
        key = eq.canonical(name)
        out[key] = out.get(key, 0.0) + float(prob)
    return out


def align(
    p_star: Categorical,
    p_model: Categorical,
    eq: Optional[EquivalenceMap] = None,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple:
    """Put (p*, p) onto the joint canonical support.

    Classes missing from p* get probability 0; classes missing from the
    model get epsilon, after which the model side is renormalized. The
    result always satisfies the KL support precondition.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon!r}")
    eq = eq or EquivalenceMap()
    star = _canonical_merge(p_star, eq)
    model = _canonical_merge(p_model, eq)
    joint = list(dict.fromkeys([*star, *model]))
    star_probs = np.array([star.get(c, 0.0) for c in joint])
    imputed = [c for c in joint if c not in model]
    model_probs = np.array([model.get(c, epsilon) for c in joint])
    if imputed:
        model_probs = model_probs / model_probs.sum()
    return (
        Categorical(tuple(joint), star_probs),
        Categorical(tuple(joint), model_probs),
    )


def align_ensemble(
    members, eq: Optional[EquivalenceMap] = None, epsilon: float = DEFAULT_EPSILON
) -> EnsemblePrediction:
    """Align ensemble members onto their joint canonical support, imputing
    epsilon (then renormalizing) wherever a member lacks a class."""
    if not members:
        raise ValidationError("ensemble must have at least one member")
    eq = eq or EquivalenceMap()
    merged = [_canonical_merge(m, eq) for m in members]
    joint = list(dict.fromkeys([c for m in merged for c in m]))
    aligned = []
    for m in merged:
        probs = np.array([m.get(c, epsilon) for c in joint])
        if len(m) < len(joint):
            probs = probs / probs.sum()
        aligned.append(Categorical(tuple(joint), probs))
    return EnsemblePrediction(tuple(aligned))


def semantic_entropy(p: Categorical) -> float:
    """Entropy of the clustered semantic distribution, in nats."""
    return entropy(p)


def msp(best_answer_prob: Optional[float]) -> float:
    """1 - (beam-search max answer probability); higher = more uncertain.

    The beam-search probability is required input; the clustered maximum is
    deliberately not substituted for it.
    """
    if best_answer_prob is None:
        raise EstimatorUnavailableError(
            "MSP needs best_answer_prob (beam-search max); none was provided"
        )
    if not (0.0 < best_answer_prob <= 1.0):
        raise ValidationError(
            f"best_answer_prob must be in (0, 1], got {best_answer_prob!r}"
        )
    return 1.0 - best_answer_prob


def mutual_information(e: EnsemblePrediction) -> float:
    """Ensemble mutual information: mean_i KL(p_i || p_bar), in nats.

    Equals H(p_bar) - mean_i H(p_i); bounded by the entropy of the mean.
    """
    stacked = np.stack([m.probs for m in e.members])
    p_bar = stacked.mean(axis=0)
    return float(row_kl(stacked, p_bar[None, :]).mean())

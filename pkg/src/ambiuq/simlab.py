"""Monte Carlo experiment harness over the probability simplex.

Generates (ground truth, prediction) populations under controlled aleatoric
regimes, scores the prediction-side estimators against the true epistemic
uncertainty, and verifies the entropy-threshold bounds empirically:

- zero-AU: ground truths are simplex vertices, so EU = -ln p[y*];
- free-AU: ground truths are symmetric-Dirichlet(1) draws;
- high-AU: Dirichlet(1) draws rejected until H(p*) >= ln(k) - 0.1.

Predictions are Dirichlet draws centered on the ground truth with a
concentration ("noise") knob; larger noise means predictions closer to the
truth. All randomness flows from the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import BoundQuery, alpha_delta, gamma_delta
from .dirichlet import expected_epistemic, posterior
from .dist import Categorical, row_cross_entropy, row_entropy, row_kl
from .errors import ConfigurationError, DegenerateInputError, ValidationError
from .metrics import EvalRecord, concordance

ZERO_AU = "zero-AU"
FREE_AU = "free-AU"
HIGH_AU = "high-AU"
REGIMES = (ZERO_AU, FREE_AU, HIGH_AU)

REJECTION_CAP = 1_000_000
CONCENTRATION_FLOOR = 0.1  # keeps Dirichlet parameters positive at vertices
HIGH_AU_GAP = 0.1
BOUND_SLACK = 1e-9

DEFAULT_DELTAS = (math.log(1.5), math.log(2.0), math.log(3.0))
DEFAULT_GAMMAS = (1.0, 2.0, 5.0, 10.0, 100.0)


@dataclass(frozen=True)
class SimConfig:
    k: int = 3
    n: int = 10_000
    seed: int = 0
    regime: str = ZERO_AU
    noise: float = 10.0
    deltas: tuple = DEFAULT_DELTAS
    ensemble_size: int = 1
    counts_total: int = 0  # > 0 draws per-record multinomial counts

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.regime not in REGIMES:
            raise ValidationError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.noise <= 0:
            raise ValidationError(f"noise must be > 0, got {self.noise}")
        if self.ensemble_size < 1:
            raise ValidationError("ensemble_size must be >= 1")
        if self.counts_total < 0:
            raise ValidationError("counts_total must be >= 0")
        for d in self.deltas:
            if not (0.0 <= d <= math.log(self.k) + 1e-12):
                raise ValidationError(
                    f"delta={d} outside [0, ln k] for k={self.k}"
                )

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown simulation config keys: {sorted(unknown)}")
        coerced = dict(obj)
        try:
            for name in ("k", "n", "seed", "ensemble_size", "counts_total"):
                if name in coerced:
                    coerced[name] = int(coerced[name])
            if "noise" in coerced:
                coerced["noise"] = float(coerced["noise"])
            if "deltas" in coerced:
                coerced["deltas"] = tuple(float(d) for d in coerced["deltas"])
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"bad simulation config value: {exc}") from exc
        return cls(**coerced)


def _classes(k: int) -> tuple:
    return tuple(f"c{i}" for i in range(k))


def _sample_truths(config: SimConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    k = config.k
    if config.regime == ZERO_AU:
        out = np.zeros((n, k))
        out[np.arange(n), rng.integers(k, size=n)] = 1.0
        return out
    if config.regime == FREE_AU:
        return rng.dirichlet(np.ones(k), size=n)
    # high-AU: rejection from Dirichlet(1) on near-maximal entropy
    threshold = math.log(k) - HIGH_AU_GAP
    kept = []
    accepted = 0
    attempts = 0
    while accepted < n:
        batch = min(max(4096, 2 * (n - accepted)), REJECTION_CAP - attempts)
        if batch <= 0:
            raise ConfigurationError(
                f"high-AU rejection failed: fewer than {n} draws with "
                f"H >= ln({k}) - {HIGH_AU_GAP} in {REJECTION_CAP} attempts"
            )
        draws = rng.dirichlet(np.ones(k), size=batch)
        attempts += batch
        good = draws[row_entropy(draws) >= threshold]
        kept.append(good)
        accepted += good.shape[0]
    return np.concatenate(kept, axis=0)[:n]


def _sample_models(p_star: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    conc = noise * p_star + CONCENTRATION_FLOOR
    gammas = rng.gamma(conc)
    return gammas / gammas.sum(axis=-1, keepdims=True)


def sample_truth(config: SimConfig, rng: Optional[np.random.Generator] = None) -> Categorical:
    """One ground-truth draw under the config's regime."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    return Categorical(_classes(config.k), _sample_truths(config, rng, 1)[0])


def sample_model(
    p_star: Categorical, noise: float, rng: Optional[np.random.Generator] = None
) -> Categorical:
    """One prediction draw centered on p_star with the given concentration."""
    if noise <= 0:
        raise ValidationError(f"noise must be > 0, got {noise}")
    rng = rng if rng is not None else np.random.default_rng(0)
    return Categorical(p_star.classes, _sample_models(p_star.probs[None, :], noise, rng)[0])


@dataclass(frozen=True)
class ExperimentResult:
    config: SimConfig
    records: list
    report: dict
    p_star: np.ndarray
    p_model: np.ndarray
    scores: dict
    counts: Optional[np.ndarray] = None

    def gamma_ablation(self, gammas=DEFAULT_GAMMAS, include_point: bool = True):
        if self.counts is None:
            raise DegenerateInputError(
                "gamma ablation needs per-record counts; set counts_total > 0"
            )
        return gamma_ablation(self.counts, self.p_model, self.scores, gammas, include_point)


def _verify_thm1(delta: float, k: int, se: np.ndarray, eu: np.ndarray) -> dict:
    bound = -math.log(alpha_delta(BoundQuery(k=k, delta=delta)))
    high = se >= delta
    violations = int((eu[high] < bound - BOUND_SLACK).sum())
    return {
        "delta": delta,
        "eu_lower_bound": bound,
        "n_high_entropy": int(high.sum()),
        "violations": violations,
        "tolerance": BOUND_SLACK,
        "holds": violations == 0,
    }


def _verify_thm2(delta: float, se: np.ndarray, eu: np.ndarray) -> dict:
    out = {"delta": delta}
    if not (0.0 < delta <= math.log(2.0) + 1e-12):
        out["applicable"] = False
        out["note"] = "delta outside (0, ln 2]"
        return out
    low = se <= delta
    p_low = float(low.mean())
    if p_low == 0.0:
        out["applicable"] = False
        out["note"] = "no low-entropy predictions in this population"
        return out
    g = gamma_delta(delta)
    eu_cap = -math.log(g)
    avg_loss = float(eu.mean())
    observed = float((eu[low] <= eu_cap).mean())
    bound = 1.0 - avg_loss / (-math.log1p(-g) * p_low)
    out.update(
        applicable=True,
        gamma_delta=g,
        eu_cap=eu_cap,
        measured_avg_loss=avg_loss,
        p_low_entropy=p_low,
        observed_conditional_freq=observed,
        prob_lower_bound=bound,
        holds=observed >= bound,
    )
    return out


def run_experiment(config: SimConfig) -> ExperimentResult:
    """Draw a population, score estimators, and verify the bounds.

    Returns records (one per draw, with true EU and estimator scores) plus a
    report with per-threshold verification results and concordances. With
    ensemble_size >= 2 the prediction is the mean of that many independent
    model draws and the MI estimator is scored against EU = KL(p*||p_mean).
    """
    rng = np.random.default_rng(config.seed)
    p_star = _sample_truths(config, rng, config.n)
    m = config.ensemble_size
    if m >= 2:
        members = np.stack(
            [_sample_models(p_star, config.noise, rng) for _ in range(m)]
        )
        p_model = members.mean(axis=0)
        mi = row_kl(members, p_model[None, :, :]).mean(axis=0)
    else:
        p_model = _sample_models(p_star, config.noise, rng)
        mi = None

    # KL >= 0 mathematically; clamp away float rounding at the zero boundary
    eu = np.maximum(row_kl(p_star, p_model), 0.0)
    au = row_entropy(p_star)
    tu = row_cross_entropy(p_star, p_model)
    se = row_entropy(p_model)
    scores = {"SE": se}
    if mi is not None:
        scores["MI"] = mi

    counts = None
    if config.counts_total > 0:
        counts = rng.multinomial(config.counts_total, p_star)

    records = [
        EvalRecord(
            question_id=f"q{i:06d}",
            true_eu=float(eu[i]),
            scores={name: float(vals[i]) for name, vals in scores.items()},
        )
        for i in range(config.n)
    ]

    report: dict = {
        "config": {
            "k": config.k,
            "n": config.n,
            "seed": config.seed,
            "regime": config.regime,
            "noise": config.noise,
            "deltas": list(config.deltas),
            "ensemble_size": config.ensemble_size,
            "counts_total": config.counts_total,
        },
        "mean_aleatoric": float(au.mean()),
        "mean_epistemic": float(eu.mean()),
        "mean_total": float(tu.mean()),
    }
    if config.regime == ZERO_AU:
        report["theorem_1"] = [_verify_thm1(d, config.k, se, eu) for d in config.deltas]
        report["theorem_2"] = [_verify_thm2(d, se, eu) for d in config.deltas]
    else:
        report["theorem_1"] = report["theorem_2"] = (
            "not applicable: bounds assume the zero-AU regime"
        )
    conc = {}
    for name in scores:
        try:
            conc[name] = concordance(records, name)
        except DegenerateInputError as exc:
            conc[name] = None
            report.setdefault("notes", []).append(f"concordance[{name}]: {exc}")
    report["concordance"] = conc

    return ExperimentResult(
        config=config,
        records=records,
        report=report,
        p_star=p_star,
        p_model=p_model,
        scores=scores,
        counts=counts,
    )


def gamma_ablation(
    counts, p_model, scores: dict, gammas=DEFAULT_GAMMAS, include_point: bool = True
):
    """Concordance of each estimator against the Dirichlet expected EU, per
    scaling factor gamma; the "point" row uses KL(normalize(counts)||p).

    Returns rows {"gamma", "estimator", "concordance"} in grid order.
    """
    counts = [np.asarray(c, dtype=float) for c in counts]
    p_model = [np.asarray(p, dtype=float) for p in p_model]
    if len(counts) != len(p_model):
        raise ValidationError("counts and p_model must have equal length")
    n = len(counts)

    def rows_for(truth, label):
        recs = [
            EvalRecord(f"q{i:06d}", max(float(truth[i]), 0.0),
                       {name: float(vals[i]) for name, vals in scores.items()})
            for i in range(n)
        ]
        return [
            {"gamma": label, "estimator": name, "concordance": concordance(recs, name)}
            for name in scores
        ]

    out = []
    for gamma in gammas:
        truth = [
            expected_epistemic(posterior(c, gamma), p) for c, p in zip(counts, p_model)
        ]
        out.extend(rows_for(truth, gamma))
    if include_point:
        point = [
            float(row_kl(c / c.sum(), p)) for c, p in zip(counts, p_model)
        ]
        out.extend(rows_for(point, "point"))
    return out

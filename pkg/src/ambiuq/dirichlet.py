"""Dirichlet posterior over the estimated ground truth distribution.

Starting from a uniform prior (all concentrations 1), observed co-occurrence
counts n_i update the posterior to alpha_i = 1 + gamma*n_i, where the scaling
factor gamma >= 1 controls how literally the counts are taken. Expected
aleatoric uncertainty E[H(p*)] and expected epistemic uncertainty
E[KL(p*||p)] under this posterior have closed forms in the digamma function;
Monte Carlo estimators of both are provided as independent cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Categorical, row_entropy, row_kl
from .errors import DomainError, SupportError, ValidationError

# Asymptotic expansion of psi(x): ln x - 1/(2x) - sum(c_j / x^(2j)).
# Coefficients are B_{2j}/(2j) for Bernoulli numbers B_2..B_16.
_PSI_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)
_PSI_SHIFT = 10.0

# Monte Carlo draws are generated in fixed-size blocks with independent
# child seeds, so a parallel consumer partitioning blocks across workers
# reproduces the single-threaded stream exactly.
_MC_BLOCK = 1 << 14


def digamma(x):
    """Digamma function psi(x) for x > 0; scalar or elementwise on arrays.

    Uses the recurrence psi(x) = psi(x+1) - 1/x to shift arguments up to
    >= 10, then the asymptotic series, which is accurate to well below
    1e-10 relative error there.
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.isfinite(arr).all() or (arr <= 0).any()):
        raise DomainError("digamma requires x > 0")
    xs = np.atleast_1d(arr).copy()
    acc = np.zeros_like(xs)
    for _ in range(int(_PSI_SHIFT)):
        mask = xs < _PSI_SHIFT
        if not mask.any():
            break
        acc[mask] += 1.0 / xs[mask]
        xs[mask] += 1.0
    inv2 = 1.0 / (xs * xs)
    tail = np.zeros_like(xs)
    for c in reversed(_PSI_COEFFS):
        tail = (tail + c) * inv2
    result = np.log(xs) - 0.5 / xs - tail - acc
    if arr.ndim == 0:
        return float(result[0])
    return result.reshape(arr.shape)


@dataclass(frozen=True)
class DirichletPosterior:
    """Concentration vector alpha_i = 1 + gamma*n_i and its sum alpha_0."""

    alpha: np.ndarray
    gamma: float
    alpha_0: float

    def __len__(self) -> int:
        return self.alpha.shape[0]


def posterior(counts, gamma: float = 1.0) -> DirichletPosterior:
    """Posterior from a uniform prior after observing the given counts.

    Counts may be fractional (e.g. soft evidence); gamma must be >= 1.
    """
    if gamma < 1.0:
        raise DomainError(f"gamma={gamma!r} must be >= 1")
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValidationError("counts must be a non-empty 1-D vector")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValidationError("counts must be finite and non-negative")
    alpha = 1.0 + gamma * arr
    alpha.setflags(write=False)
    return DirichletPosterior(alpha=alpha, gamma=float(gamma), alpha_0=float(alpha.sum()))


def expected_aleatoric(d: DirichletPosterior) -> float:
    """E[H(p*)] under the posterior: -sum (a_i/a_0)(psi(a_i+1) - psi(a_0+1))."""
    weights = d.alpha / d.alpha_0
    return float(-(weights * (digamma(d.alpha + 1.0) - digamma(d.alpha_0 + 1.0))).sum())


def _probs_vector(p, n: int) -> np.ndarray:
    probs = p.probs if isinstance(p, Categorical) else np.asarray(p, dtype=float)
    if probs.shape != (n,):
        raise ValidationError(
            f"prediction has {probs.shape[0]} classes, posterior has {n}"
        )
    if (probs <= 0).any():
        raise SupportError(
            "expected epistemic uncertainty requires a strictly positive "
            "prediction; impute first (see estimators.align)"
        )
    return probs


def expected_epistemic(d: DirichletPosterior, p) -> float:
    """E[KL(p*||p)] under the posterior for a strictly positive prediction p.

    Equals sum (a_i/a_0)[psi(a_i+1) - psi(a_0+1) - ln p_i], which is the
    expected cross-entropy minus the expected aleatoric part.
    """
    probs = _probs_vector(p, len(d))
    weights = d.alpha / d.alpha_0
    inner = digamma(d.alpha + 1.0) - digamma(d.alpha_0 + 1.0) - np.log(probs)
    return float((weights * inner).sum())


def expected_cross_entropy(d: DirichletPosterior, p) -> float:
    """E[CE(p*, p)] = -sum (a_i/a_0) ln p_i under the posterior."""
    probs = _probs_vector(p, len(d))
    return float(-((d.alpha / d.alpha_0) * np.log(probs)).sum())


def _mc_draws(d: DirichletPosterior, draws: int, seed) -> np.ndarray:
    blocks = []
    n_blocks = (draws + _MC_BLOCK - 1) // _MC_BLOCK
    remaining = draws
    for child in np.random.SeedSequence(seed).spawn(n_blocks):
        size = min(_MC_BLOCK, remaining)
        blocks.append(np.random.default_rng(child).dirichlet(d.alpha, size=size))
        remaining -= size
    return np.concatenate(blocks, axis=0)


def mc_expected_aleatoric(
    d: DirichletPosterior, draws: int = 100_000, seed=0
) -> tuple[float, float]:
    """Monte Carlo (mean, standard error) of H(p*) over posterior draws."""
    hs = row_entropy(_mc_draws(d, draws, seed))
    return float(hs.mean()), float(hs.std(ddof=1) / np.sqrt(draws))


def mc_expected_epistemic(
    d: DirichletPosterior, p, draws: int = 100_000, seed=0
) -> tuple[float, float]:
    """Monte Carlo (mean, standard error) of KL(p*||p) over posterior draws."""
    probs = _probs_vector(p, len(d))
    kls = row_kl(_mc_draws(d, draws, seed), probs)
    return float(kls.mean()), float(kls.std(ddof=1) / np.sqrt(draws))

import math

import numpy as np
import pytest

from ambiuq.dist import row_entropy, row_kl
from ambiuq.errors import ConfigurationError, DegenerateInputError, ValidationError
from ambiuq.simlab import (
    FREE_AU,
    HIGH_AU,
    ZERO_AU,
    SimConfig,
    _sample_models,
    _sample_truths,
    gamma_ablation,
    run_experiment,
    sample_model,
    sample_truth,
)

LN2 = math.log(2.0)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            SimConfig(k=1)
        with pytest.raises(ValidationError):
            SimConfig(n=0)
        with pytest.raises(ValidationError):
            SimConfig(regime="other")
        with pytest.raises(ValidationError):
            SimConfig(noise=0.0)
        with pytest.raises(ValidationError):
            SimConfig(k=3, deltas=(math.log(3) + 0.2,))

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            SimConfig.from_dict({"k": 3, "mystery": 1})

    def test_from_dict_round_trip(self):
        cfg = SimConfig.from_dict({"k": 4, "n": 10, "seed": 3, "regime": "free-AU"})
        assert cfg.k == 4 and cfg.regime == FREE_AU


class TestSampleTruth:
    def test_zero_au_draws_are_vertices(self):
        cfg = SimConfig(k=3, n=1, seed=0, regime=ZERO_AU)
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = sample_truth(cfg, rng)
            assert sorted(p.probs.tolist()) == [0.0, 0.0, 1.0]

    def test_free_au_mean_is_uniform(self):
        cfg = SimConfig(k=4, n=1, seed=0, regime=FREE_AU)
        draws = _sample_truths(cfg, np.random.default_rng(1), 100_000)
        mean = draws.mean(axis=0)
        stderr = draws.std(axis=0) / math.sqrt(draws.shape[0])
        assert (np.abs(mean - 0.25) <= 3 * stderr).all()

    def test_high_au_rejection_predicate(self):
        cfg = SimConfig(k=3, n=1, seed=0, regime=HIGH_AU)
        draws = _sample_truths(cfg, np.random.default_rng(2), 5_000)
        assert (row_entropy(draws) >= math.log(3) - 0.1).all()

    def test_high_au_rejection_failure_is_an_error(self):
        # k=30 makes near-maximal entropy essentially unreachable from Dir(1)
        cfg = SimConfig(k=30, n=100, seed=0, regime=HIGH_AU)
        with pytest.raises(ConfigurationError):
            _sample_truths(cfg, np.random.default_rng(3), 100)


class TestSampleModel:
    def test_zero_au_reduction(self):
        cfg = SimConfig(k=2, n=1, seed=0, regime=ZERO_AU, deltas=(0.25, 0.5))
        p_star = sample_truth(cfg)
        rng = np.random.default_rng(4)
        for _ in range(20):
            p = sample_model(p_star, noise=3.0, rng=rng)
            y = int(np.argmax(p_star.probs))
            assert row_kl(p_star.probs, p.probs) == -math.log(p.probs[y])

    def test_more_noise_means_less_epistemic_uncertainty(self):
        rng = np.random.default_rng(5)
        p_star = np.tile(np.array([0.5, 0.3, 0.2]), (20_000, 1))
        low = row_kl(p_star, _sample_models(p_star, 3.0, rng)).mean()
        high = row_kl(p_star, _sample_models(p_star, 30.0, rng)).mean()
        assert low > high

    def test_concentration_limit(self):
        rng = np.random.default_rng(6)
        p_star = np.tile(np.array([0.6, 0.4]), (5_000, 1))
        eu = row_kl(p_star, _sample_models(p_star, 1e6, rng)).mean()
        assert eu < 1e-3


class TestRunExperiment:
    def test_seed_determinism(self):
        cfg = SimConfig(k=3, n=500, seed=11, regime=FREE_AU, noise=5.0)
        a, b = run_experiment(cfg), run_experiment(cfg)
        assert a.records == b.records
        assert a.report == b.report

    def test_different_seeds_differ(self):
        base = dict(k=3, n=500, regime=FREE_AU, noise=5.0)
        a = run_experiment(SimConfig(seed=1, **base))
        b = run_experiment(SimConfig(seed=2, **base))
        assert a.records != b.records

    def test_zero_au_concordance_high(self):
        cfg = SimConfig(k=3, n=10_000, seed=0, regime=ZERO_AU, noise=10.0)
        res = run_experiment(cfg)
        assert res.report["concordance"]["SE"] >= 0.7

    def test_free_au_concordance_near_chance(self):
        cfg = SimConfig(k=3, n=10_000, seed=0, regime=FREE_AU, noise=10.0)
        res = run_experiment(cfg)
        assert abs(res.report["concordance"]["SE"] - 0.5) <= 0.1

    def test_regime_contrast(self):
        zero = run_experiment(SimConfig(k=3, n=10_000, seed=0, regime=ZERO_AU))
        free = run_experiment(SimConfig(k=3, n=10_000, seed=0, regime=FREE_AU))
        gap = zero.report["concordance"]["SE"] - free.report["concordance"]["SE"]
        assert gap >= 0.1

    def test_theorem_1_no_violations(self):
        cfg = SimConfig(
            k=3, n=20_000, seed=3, regime=ZERO_AU, noise=2.0,
            deltas=(0.25, 0.5, LN2, 1.0),
        )
        res = run_experiment(cfg)
        for entry in res.report["theorem_1"]:
            assert entry["violations"] == 0

    def test_theorem_2_bound_holds(self):
        for noise in (0.5, 2.0, 8.0):
            cfg = SimConfig(
                k=3, n=10_000, seed=4, regime=ZERO_AU, noise=noise,
                deltas=(0.25, 0.5, LN2),
            )
            res = run_experiment(cfg)
            for entry in res.report["theorem_2"]:
                if entry.get("applicable"):
                    assert entry["observed_conditional_freq"] >= entry["prob_lower_bound"]

    def test_bounds_not_applied_outside_zero_au(self):
        res = run_experiment(SimConfig(k=3, n=100, seed=0, regime=FREE_AU))
        assert isinstance(res.report["theorem_1"], str)

    def test_ensemble_mi_scores(self):
        cfg = SimConfig(k=3, n=2_000, seed=5, regime=FREE_AU, noise=5.0, ensemble_size=3)
        res = run_experiment(cfg)
        assert "MI" in res.scores
        assert all("MI" in r.scores for r in res.records)
        se = res.scores["SE"]
        mi = res.scores["MI"]
        # Eq.-2 style bound: MI never exceeds the entropy of the mean member
        assert (mi <= se + 1e-9).all()

    def test_high_au_population_has_high_aleatoric(self):
        res = run_experiment(SimConfig(k=3, n=2_000, seed=6, regime=HIGH_AU, noise=5.0))
        assert res.report["mean_aleatoric"] >= math.log(3) - 0.1

    def test_nonidentifiability_realized_in_free_regime(self):
        # nearly identical predictions whose true EU differs by ~ln k exist
        cfg = SimConfig(k=3, n=100_000, seed=0, regime=FREE_AU, noise=0.5)
        rng = np.random.default_rng(cfg.seed)
        p_star = _sample_truths(cfg, rng, cfg.n)
        p_model = _sample_models(p_star, cfg.noise, rng)
        eu = row_kl(p_star, p_model)
        keys = np.round(p_model[:, 0] / 0.02) * 1000 + np.round(p_model[:, 1] / 0.02)
        order = np.argsort(keys, kind="stable")
        grouped = np.split(eu[order], np.flatnonzero(np.diff(keys[order])) + 1)
        spread = max(g.max() - g.min() for g in grouped if len(g) > 1)
        assert spread >= math.log(3) - 0.2


class TestGammaAblation:
    def test_requires_counts(self):
        res = run_experiment(SimConfig(k=3, n=50, seed=0, regime=FREE_AU))
        with pytest.raises(DegenerateInputError):
            res.gamma_ablation()

    def test_grid_emitted_in_order(self):
        cfg = SimConfig(k=3, n=200, seed=2, regime=FREE_AU, noise=8.0, counts_total=100)
        rows = run_experiment(cfg).gamma_ablation(gammas=(1.0, 2.0, 5.0, 10.0, 100.0))
        gammas = [r["gamma"] for r in rows]
        assert gammas == [1.0, 2.0, 5.0, 10.0, 100.0, "point"]

    def test_converges_to_point_estimate(self):
        cfg = SimConfig(k=3, n=400, seed=2, regime=FREE_AU, noise=8.0, counts_total=200)
        rows = run_experiment(cfg).gamma_ablation(gammas=(1e6,))
        by_gamma = {r["gamma"]: r["concordance"] for r in rows}
        assert abs(by_gamma[1e6] - by_gamma["point"]) <= 0.005

    def test_monotone_toward_point_with_decisive_counts(self):
        cfg = SimConfig(k=3, n=400, seed=2, regime=FREE_AU, noise=8.0, counts_total=200)
        rows = run_experiment(cfg).gamma_ablation(gammas=(1.0, 2.0, 5.0, 10.0, 100.0, 1e6))
        values = [r["concordance"] for r in rows if r["gamma"] != "point"]
        point = next(r["concordance"] for r in rows if r["gamma"] == "point")
        gaps = [abs(v - point) for v in values]
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))

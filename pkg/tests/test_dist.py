import math

import numpy as np
import pytest

from ambiuq.dist import (
    Categorical,
    cross_entropy,
    decompose,
    entropy,
    js_divergence,
    kl,
    normalize,
    row_entropy,
    row_js,
    row_kl,
)
from ambiuq.errors import DegenerateInputError, SupportError, ValidationError


def cat(probs, classes=None):
    probs = np.asarray(probs, dtype=float)
    classes = classes or tuple(f"c{i}" for i in range(len(probs)))
    return Categorical(tuple(classes), probs)


def random_pair(rng, k):
    return cat(rng.dirichlet(np.ones(k))), cat(rng.dirichlet(np.ones(k)))


class TestCategorical:
    def test_rejects_negative_probs(self):
        with pytest.raises(ValidationError):
            cat([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            cat([0.6, 0.5])

    def test_renormalizes_small_drift(self):
        c = cat([0.5 + 4e-7, 0.5 + 4e-7])
        assert abs(float(c.probs.sum()) - 1.0) <= 1e-9
        assert c.probs[0] == pytest.approx(0.5)

    def test_accepts_within_tight_tolerance_unchanged(self):
        c = cat([0.5, 0.5 + 5e-10])
        assert float(c.probs[1]) == 0.5 + 5e-10

    def test_rejects_duplicate_classes(self):
        with pytest.raises(ValidationError):
            Categorical(("a", "a"), [0.5, 0.5])

    def test_rejects_length_mismatch_and_empty(self):
        with pytest.raises(ValidationError):
            Categorical(("a",), [0.5, 0.5])
        with pytest.raises(ValidationError):
            Categorical((), [])

    def test_round_trips_to_dict(self):
        c = cat([0.25, 0.75], classes=("x", "y"))
        assert Categorical.from_dict(c.to_dict()) == c


class TestEntropy:
    def test_fire_triangle_counts(self):
        # counts 31/32/25 normalized; value matches the published 1.1
        p = normalize([31, 32, 25])
        assert entropy(p) == pytest.approx(1.0929158, abs=1e-6)
        assert abs(entropy(p) - 1.09) <= 0.01 + 1e-9

    def test_indicator_is_zero(self):
        assert entropy(cat([1, 0, 0])) == 0.0

    def test_two_answer_counts(self):
        p = normalize([188, 91])
        assert entropy(p) == pytest.approx(0.63, abs=0.01)

    def test_bounded_by_log_k(self):
        rng = np.random.default_rng(0)
        for k in (2, 3, 7, 30):
            for _ in range(50):
                h = entropy(cat(rng.dirichlet(np.ones(k))))
                assert -1e-12 <= h <= math.log(k) + 1e-12


class TestKL:
    def test_identity_is_exactly_zero(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = cat(rng.dirichlet(np.ones(4)))
            assert kl(p, p) == 0.0

    def test_indicator_vs_uniform(self):
        assert kl(cat([1, 0]), cat([0.5, 0.5])) == pytest.approx(math.log(2), abs=1e-12)

    def test_direct_evaluation(self):
        expected = 0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1)
        assert kl(cat([0.5, 0.5]), cat([0.9, 0.1])) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.5108, abs=1e-4)

    def test_support_violation_mentions_align(self):
        with pytest.raises(SupportError, match="align"):
            kl(cat([0.5, 0.5]), cat([1.0, 0.0]))

    def test_mismatched_classes(self):
        with pytest.raises(ValidationError):
            kl(cat([0.5, 0.5], ("a", "b")), cat([0.5, 0.5], ("a", "c")))

    def test_non_negative(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            ps, p = random_pair(rng, 5)
            assert kl(ps, p) >= 0.0

    def test_zero_au_reduction_is_exact(self):
        # indicator ground truth: KL equals the negative log-probability
        # of the true class, bit for bit
        rng = np.random.default_rng(3)
        for _ in range(100):
            probs = rng.dirichlet(np.ones(4))
            y = rng.integers(4)
            indicator = np.zeros(4)
            indicator[y] = 1.0
            assert kl(cat(indicator), cat(probs)) == -math.log(probs[y])


class TestCrossEntropy:
    def test_self_cross_entropy_is_entropy(self):
        rng = np.random.default_rng(4)
        p = cat(rng.dirichlet(np.ones(6)))
        assert cross_entropy(p, p) == pytest.approx(entropy(p), abs=1e-12)

    def test_indicator_vs_uniform(self):
        assert cross_entropy(cat([1, 0]), cat([0.5, 0.5])) == pytest.approx(
            math.log(2), abs=1e-12
        )

    def test_direct_evaluation(self):
        expected = -0.5 * (math.log(0.9) + math.log(0.1))
        got = cross_entropy(cat([0.5, 0.5]), cat([0.9, 0.1]))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(1.2040, abs=1e-4)


class TestDecompose:
    def test_uniform_self(self):
        p = cat([0.25] * 4)
        parts = decompose(p, p)
        assert parts.total == pytest.approx(math.log(4), abs=1e-12)
        assert parts.aleatoric == pytest.approx(math.log(4), abs=1e-12)
        assert parts.epistemic == 0.0

    def test_vertex_truth(self):
        parts = decompose(cat([1, 0]), cat([0.8, 0.2]))
        assert parts.aleatoric == 0.0
        assert parts.epistemic == pytest.approx(-math.log(0.8), abs=1e-12)

    def test_uniform_truth_closed_form(self):
        # EU for a uniform ground truth is -ln K - mean(ln p)
        rng = np.random.default_rng(5)
        k = 5
        p = rng.dirichlet(np.ones(k))
        parts = decompose(cat(np.full(k, 1.0 / k)), cat(p))
        expected = -math.log(k) - np.log(p).mean()
        assert parts.epistemic == pytest.approx(expected, abs=1e-12)

    def test_additivity_over_random_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            k = int(rng.integers(2, 31))
            ps, p = random_pair(rng, k)
            parts = decompose(ps, p)
            assert abs(parts.total - parts.aleatoric - parts.epistemic) <= 1e-9


class TestJS:
    def test_identity(self):
        p = cat([0.3, 0.7])
        assert js_divergence(p, p) == 0.0

    def test_disjoint_supports(self):
        assert js_divergence(cat([1, 0]), cat([0, 1])) == pytest.approx(
            math.log(2), abs=1e-12
        )

    def test_direct_evaluation(self):
        got = js_divergence(cat([0.7, 0.3]), cat([0.3, 0.7]))
        assert got == pytest.approx(0.0822829, abs=1e-4)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p, q = random_pair(rng, 4)
            a, b = js_divergence(p, q), js_divergence(q, p)
            assert a == pytest.approx(b, abs=1e-12)
            assert -1e-12 <= a <= math.log(2) + 1e-12


class TestNormalize:
    def test_fire_triangle(self):
        p = normalize([31, 32, 25])
        np.testing.assert_allclose(p.probs, [0.3523, 0.3636, 0.2841], atol=1e-4)

    def test_single_count(self):
        assert normalize([5]).probs.tolist() == [1.0]

    def test_two_answers(self):
        np.testing.assert_allclose(normalize([188, 91]).probs, [0.6738, 0.3262], atol=1e-4)

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateInputError):
            normalize([0, 0, 0])

    def test_scale_invariant(self):
        rng = np.random.default_rng(8)
        counts = rng.integers(1, 100, size=6).astype(float)
        a = normalize(counts)
        b = normalize(counts * 7.5)
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-15)

    def test_custom_classes(self):
        p = normalize([1, 3], classes=("x", "y"))
        assert p.classes == ("x", "y")


class TestRowFunctions:
    def test_match_object_api(self):
        rng = np.random.default_rng(9)
        ps = rng.dirichlet(np.ones(4), size=50)
        p = rng.dirichlet(np.ones(4), size=50)
        h = row_entropy(ps)
        d = row_kl(ps, p)
        j = row_js(ps, p)
        for i in range(50):
            a, b = cat(ps[i]), cat(p[i])
            assert h[i] == pytest.approx(entropy(a), abs=1e-12)
            assert d[i] == pytest.approx(kl(a, b), abs=1e-12)
            assert j[i] == pytest.approx(js_divergence(a, b), abs=1e-12)

    def test_support_violation_gives_inf(self):
        assert row_kl(np.array([0.5, 0.5]), np.array([1.0, 0.0])) == np.inf

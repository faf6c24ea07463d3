import math
from itertools import combinations
from unittest import TestCase

import numpy as np

from tamd_mix.affinity import separation
from tamd_mix.error import ContractViolation, InitError, SpecError
from tamd_mix.simgen import (CONTAMINANT, DgpKind, DgpSpec, InitScheme, generate, init_random, sample_mixture,
                             simplex_means, stream, truth_params)


class TestStream(TestCase):

    def test_same_key_same_draws(self):
        np.testing.assert_array_equal(stream(7, "data").random(5), stream(7, "data").random(5))

    def test_names_separate_streams(self):
        self.assertFalse(np.array_equal(stream(7, "data").random(5), stream(7, "init").random(5)))
        self.assertFalse(np.array_equal(stream(7, "data").random(5), stream(8, "data").random(5)))
        self.assertFalse(np.array_equal(stream(7, "hellinger", "em").random(5),
                                        stream(7, "hellinger", "tamd").random(5)))


class TestDgpSpec(TestCase):

    def test_infeasible(self):
        bad = [
            dict(d=1, k_true=3),
            dict(kind=DgpKind.ILL_CONDITIONED, d=1, k_true=2, condition_kappa=5.0),
            dict(kind=DgpKind.CONTAMINATED, contamination_eps=0.6),
            dict(kind=DgpKind.WELL_SPECIFIED, condition_kappa=5.0),
            dict(kind=DgpKind.WELL_SPECIFIED, contamination_eps=0.1),
            dict(kind="no_such_kind"),
            dict(n=0),
            dict(condition_kappa=0.5),
        ]
        for changes in bad:
            with self.assertRaises(SpecError, msg=str(changes)):
                DgpSpec(**changes)

    def test_kind_from_text(self):
        self.assertEqual(DgpKind.HIGH_DIM, DgpSpec(kind="high_dim", d=5).kind)


class TestTruth(TestCase):

    def test_simplex_distances(self):
        for n_components, dim in ((2, 1), (3, 2), (4, 5)):
            means = simplex_means(n_components, dim, 2.0)
            self.assertEqual((n_components, dim), means.shape)
            for a, b in combinations(means, 2):
                self.assertAlmostEqual(2.0, float(np.linalg.norm(a - b)), places=12)

    def test_single_component_at_origin(self):
        np.testing.assert_array_equal(np.zeros((1, 3)), simplex_means(1, 3, 2.0))

    def test_condition_number(self):
        truth = truth_params(DgpSpec(DgpKind.ILL_CONDITIONED, d=4, k_true=3, condition_kappa=20.0))
        for comp in truth.components:
            eigenvalues = np.linalg.eigvalsh(comp.covariance.dense)
            self.assertAlmostEqual(20.0, eigenvalues.max() / eigenvalues.min(), delta=1e-9 * 20.0)
            self.assertAlmostEqual(0.0, comp.covariance.log_det, places=12)

    def test_identity_covariances(self):
        truth = truth_params(DgpSpec(DgpKind.WELL_SPECIFIED, d=3, k_true=3))
        for comp in truth.components:
            np.testing.assert_array_equal(np.eye(3), comp.covariance.dense)
        np.testing.assert_allclose(1.0 / 3.0, truth.weights)


class TestGenerate(TestCase):

    def test_deterministic(self):
        spec = DgpSpec(DgpKind.CONTAMINATED, n=200, d=2, k_true=3, contamination_eps=0.1, seed=42)
        first, second = generate(spec), generate(spec)
        np.testing.assert_array_equal(first.data, second.data)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_clean_sample(self):
        sample = generate(DgpSpec(DgpKind.WELL_SPECIFIED, n=300, d=2, k_true=3, seed=1))
        self.assertEqual((300, 2), sample.data.shape)
        self.assertEqual(0.0, sample.contaminant_fraction)
        self.assertTrue(set(np.unique(sample.labels)) <= {0, 1, 2})

    def test_contaminant_fraction(self):
        eps, n = 0.1, 2000
        sample = generate(DgpSpec(DgpKind.CONTAMINATED, n=n, d=2, k_true=3, contamination_eps=eps, seed=2))
        self.assertLess(abs(sample.contaminant_fraction - eps), 4.0 * math.sqrt(eps * (1 - eps) / n))
        self.assertEqual(int(round(sample.contaminant_fraction * n)), int(np.sum(sample.labels == CONTAMINANT)))

    def test_component_means(self):
        sample = generate(DgpSpec(DgpKind.WELL_SPECIFIED, n=10_000, d=2, k_true=3, separation_delta=3.0, seed=3))
        for k, comp in enumerate(sample.truth.components):
            rows = sample.data[sample.labels == k]
            bound = 4.0 / math.sqrt(len(rows))
            self.assertTrue(np.all(np.abs(rows.mean(axis=0) - comp.mean) < bound), f"component {k}")

    def test_hellinger_separation(self):
        sample = generate(DgpSpec(DgpKind.WELL_SPECIFIED, n=10, d=2, k_true=2, separation_delta=2.0))
        self.assertAlmostEqual(1.0 - math.exp(-0.5), sample.hellinger_separation, places=12)

    def test_sample_mixture(self):
        truth = truth_params(DgpSpec(DgpKind.WELL_SPECIFIED, d=2, k_true=3))
        data, labels = sample_mixture(truth, 50, np.random.default_rng(0))
        self.assertEqual((50, 2), data.shape)
        self.assertTrue(np.all((labels >= 0) & (labels < 3)))


class TestInitRandom(TestCase):

    def setUp(self):
        self.sample = generate(DgpSpec(DgpKind.WELL_SPECIFIED, n=200, d=2, k_true=3, seed=4))

    def test_schemes_are_separated(self):
        for scheme in InitScheme:
            for seed in range(10):
                theta = init_random(self.sample.data, 3, scheme, stream(seed, "init"), truth=self.sample.truth,
                                    noise_scale=0.5)
                self.assertGreater(separation(theta), 0.0)
                self.assertEqual(3, theta.n_components)

    def test_noiseless_truth(self):
        theta = init_random(self.sample.data, 3, InitScheme.PERTURBED_TRUTH, stream(0, "init"),
                            truth=self.sample.truth)
        self.assertIs(self.sample.truth, theta)

    def test_perturbed_truth_needs_truth(self):
        with self.assertRaises(ContractViolation):
            init_random(self.sample.data, 3, InitScheme.PERTURBED_TRUTH, stream(0, "init"))

    def test_kmeanspp_spreads_seeds(self):
        rng = np.random.default_rng(5)
        data = np.vstack([rng.normal(-10.0, 1.0, size=(100, 2)), rng.normal(10.0, 1.0, size=(100, 2))])
        split = 0
        for trial in range(100):
            theta = init_random(data, 2, InitScheme.KMEANSPP_LIKE, stream(trial, "init"))
            split += int(np.sign(theta.means[0, 0]) != np.sign(theta.means[1, 0]))
        self.assertGreaterEqual(split, 95)

    def test_coincident_points(self):
        with self.assertRaises(InitError):
            init_random(np.ones((5, 1)), 2, InitScheme.RANDOM_POINTS, stream(0, "init"))

    def test_too_few_points(self):
        with self.assertRaises(ContractViolation):
            init_random(np.zeros((2, 2)), 3, InitScheme.RANDOM_POINTS, stream(0, "init"))

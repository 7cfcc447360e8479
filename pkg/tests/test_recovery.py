import numpy as np
import pytest

from plrank.depth import DepthMap
from plrank.errors import DegenerateFitError, FormatError
from plrank.random_utility import LatentUtilities
from plrank.recovery import (
    AffineFit,
    fit_affine,
    read_experiment_results,
    recover_depth,
    rum_recovery_experiment,
    write_experiment_results,
)
from plrank.training import TabularScorer, TrainConfig


class TestRecoverDepth:
    def test_identity_fit_is_verbatim(self):
        w = np.random.default_rng(1).normal(size=(4, 5))
        assert np.array_equal(recover_depth(w, AffineFit(1.0, 0.0), floor=None), w)

    def test_zero_scale_gives_constant(self):
        w = np.random.default_rng(2).normal(size=(3, 3))
        out = recover_depth(w, AffineFit(0.0, 4.25), floor=None)
        assert np.all(out == 4.25)

    def test_sign_absorbing_fit(self):
        z = np.linspace(0.0, 9.0, 10).reshape(2, 5)
        assert np.allclose(recover_depth(-z, AffineFit(-1.0, 0.0), floor=None), z)

    def test_floor_clamps(self):
        w = np.array([[-5.0, 0.0, 5.0]])
        out = recover_depth(w, AffineFit(1.0, 0.0))
        assert np.array_equal(out, [[1e-6, 1e-6, 5.0]])

    def test_floor_validation(self):
        with pytest.raises(ValueError):
            recover_depth(np.zeros((2, 2)), AffineFit(1.0, 0.0), floor=0.0)

    def test_accepts_scorer(self):
        scorer = TabularScorer(np.arange(6.0).reshape(2, 3))
        out = recover_depth(scorer, AffineFit(2.0, 1.0), floor=None)
        assert np.array_equal(out, 2.0 * scorer.weights + 1.0)

    def test_affine_equivariance_pre_clamp(self):
        w = np.random.default_rng(3).normal(size=(5, 5))
        fit = AffineFit(-2.5, 0.75)
        direct = recover_depth(w, fit, floor=None)
        composed = fit.scale * recover_depth(w, AffineFit(1.0, 0.0), floor=None) + fit.shift
        assert np.array_equal(direct, composed)


class TestFitAffine:
    def test_exact_affine_relation(self):
        truth = np.random.default_rng(4).uniform(0.0, 10.0, (6, 6))
        fit = fit_affine(2.0 * truth + 3.0, truth)
        assert fit.scale == pytest.approx(0.5, abs=1e-9)
        assert fit.shift == pytest.approx(-1.5, abs=1e-9)
        recovered = recover_depth(2.0 * truth + 3.0, fit, floor=None)
        assert np.allclose(recovered, truth, atol=1e-9)

    def test_negated_prediction(self):
        truth = np.random.default_rng(5).uniform(0.0, 10.0, (4, 4))
        fit = fit_affine(-truth, truth)
        assert fit.scale == pytest.approx(-1.0, abs=1e-9)
        assert fit.shift == pytest.approx(0.0, abs=1e-9)

    def test_beats_random_probes(self):
        rng = np.random.default_rng(6)
        pred = rng.normal(size=(6, 6))
        truth = rng.uniform(0.0, 10.0, (6, 6))
        fit = fit_affine(pred, truth)

        def residual(s, t):
            return float(((s * pred + t - truth) ** 2).sum())

        base = residual(fit.scale, fit.shift)
        probes_s = fit.scale + rng.normal(0.0, 1.0, 1000)
        probes_t = fit.shift + rng.normal(0.0, 1.0, 1000)
        worst = min(residual(s, t) for s, t in zip(probes_s, probes_t))
        assert base <= worst + 1e-9

    def test_mask_excludes_pixels(self):
        rng = np.random.default_rng(7)
        truth_values = rng.uniform(1.0, 9.0, (5, 5)).astype(np.float32)
        mask = np.ones((5, 5), bool)
        mask[0, :] = False
        pred = 2.0 * truth_values.astype(np.float64) + 1.0
        pred[0, :] = 1e6  # garbage under the masked rows
        fit = fit_affine(pred, DepthMap(truth_values, mask))
        assert fit.scale == pytest.approx(0.5, abs=1e-6)
        plain = fit_affine(pred, truth_values.astype(np.float64), mask=mask)
        assert plain.scale == fit.scale and plain.shift == fit.shift

    def test_degenerate_cases(self):
        with pytest.raises(DegenerateFitError):
            fit_affine(np.full((3, 3), 2.0), np.random.default_rng(8).uniform(1, 5, (3, 3)))
        mask = np.zeros((3, 3), bool)
        mask[0, 0] = True
        with pytest.raises(DegenerateFitError):
            fit_affine(np.arange(9.0).reshape(3, 3), np.ones((3, 3)), mask=mask)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fit_affine(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_mask_with_depth_map_rejected(self):
        depth = DepthMap.full_valid(np.ones((2, 2), np.float32))
        with pytest.raises(ValueError):
            fit_affine(np.arange(4.0).reshape(2, 2), depth, mask=np.ones((2, 2), bool))

    def test_fit_must_be_finite(self):
        with pytest.raises(ValueError):
            AffineFit(np.inf, 0.0)


class TestExperiment:
    def test_recovers_latent_values(self):
        utilities = LatentUtilities(np.array([0.0, 1.0, 2.0, 3.0]))
        config = TrainConfig(epochs=150, learning_rate=0.1, optimizer="adam", seed=0)
        result = rum_recovery_experiment(utilities, 3000, config, np.random.default_rng(10))
        assert not result.non_identifiable
        assert result.rmse < 0.3
        assert result.recovered.shape == (4,)
        assert np.allclose(result.recovered, utilities.values, atol=1.0)
        assert result.nll_trace[-1] < result.nll_trace[0]

    def test_identical_rankings_flagged(self):
        utilities = LatentUtilities(np.array([0.0, 5.0]), noise_scale=1e-9)
        config = TrainConfig(epochs=25, learning_rate=0.5, optimizer="adam", seed=0)
        result = rum_recovery_experiment(utilities, 500, config, np.random.default_rng(11))
        assert result.non_identifiable

    def test_spread_guard_stops_blowup(self):
        # an absurd step size blows the scores past the spread limit; the
        # run must stop early and carry the non-identifiability flag
        utilities = LatentUtilities(np.array([0.0, 1.0, 2.0]))
        config = TrainConfig(epochs=400, learning_rate=30.0, optimizer="adam", seed=0)
        result = rum_recovery_experiment(utilities, 200, config, np.random.default_rng(12))
        assert result.non_identifiable
        assert len(result.nll_trace) < 401

    def test_shift_invariance_is_exact(self):
        base = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        config = TrainConfig(epochs=100, learning_rate=0.1, optimizer="adam", seed=3)
        first = rum_recovery_experiment(
            LatentUtilities(base), 2000, config, np.random.default_rng(13)
        )
        second = rum_recovery_experiment(
            LatentUtilities(base + 10.0), 2000, config, np.random.default_rng(13)
        )
        assert first.rmse == second.rmse
        assert first.fit.scale == second.fit.scale
        assert second.fit.shift == pytest.approx(first.fit.shift + 10.0, abs=1e-9)

    def test_gaussian_noise_rejected(self):
        utilities = LatentUtilities(np.array([0.0, 1.0]), noise_kind="gaussian")
        with pytest.raises(ValueError):
            rum_recovery_experiment(utilities, 10, TrainConfig(), np.random.default_rng(0))


class TestResultsCsv:
    def test_round_trip(self, tmp_path):
        rows = [(500, 0, 0.125), (5000, 1, 0.03125), (50000, 2, 0.0048828125)]
        path = tmp_path / "results.csv"
        write_experiment_results(rows, path)
        assert read_experiment_results(path) == rows

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("a,b,c\n1,2,3.0\n")
        with pytest.raises(FormatError):
            read_experiment_results(path)

    def test_rejects_malformed_row(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("num_rankings,seed,rmse\n500,0\n")
        with pytest.raises(FormatError):
            read_experiment_results(path)

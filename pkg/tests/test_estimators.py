import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from freqtimenet.estimators import (BilinearBaselineEstimator,
                                    FreqTimeNetEstimator, check_grid_tensor,
                                    check_pilot_tensor, check_snr_linear,
                                    interp_baseline)
from freqtimenet.ofdm import GridConfig


def obs_from_grid(h, grid_config):
    """Noiseless LS observation for a complex (n_f, n_t) channel matrix."""
    sc = grid_config.pilot_subcarrier_indices
    syms = np.asarray(grid_config.pilot_symbol_indices)
    h_p = h[np.ix_(sc, syms)].T
    return np.stack([h_p.real, h_p.imag], axis=-1)


class TestInterpBaseline:
    def test_constant_channel_exact(self):
        g = GridConfig()
        h = np.full((g.n_f, g.n_t), 0.7 - 0.2j)
        out = interp_baseline(obs_from_grid(h, g), g)
        assert np.allclose(out[..., 0], 0.7, atol=1e-12)
        assert np.allclose(out[..., 1], -0.2, atol=1e-12)

    def test_linear_in_subcarrier_exact_on_interior(self):
        g = GridConfig()
        h = (np.arange(g.n_f, dtype=float)[:, None]
             * np.ones(g.n_t)) * (0.01 + 0.03j)
        out = interp_baseline(obs_from_grid(h, g), g)
        est = out[..., 0] + 1j * out[..., 1]
        truth = h.T
        lo, hi = g.pilot_subcarrier_indices[0], g.pilot_subcarrier_indices[-1]
        assert np.allclose(est[:, lo:hi + 1], truth[:, lo:hi + 1], atol=1e-12)

    def test_single_pilot_symbol_flat_in_time(self):
        g = GridConfig(pilot_symbol_indices=(3,))
        rng = np.random.default_rng(0)
        obs = rng.normal(size=(1, g.n_p_f, 2))
        out = interp_baseline(obs, g)
        assert np.allclose(out, out[:1, :, :], atol=0.0)

    def test_batched_matches_single(self):
        g = GridConfig()
        rng = np.random.default_rng(1)
        batch = rng.normal(size=(3, 2, 48, 2))
        stacked = interp_baseline(batch, g)
        for b in range(3):
            assert np.array_equal(stacked[b], interp_baseline(batch[b], g))

    def test_layout_mismatch_rejected(self):
        with pytest.raises(ValueError):
            interp_baseline(np.zeros((2, 40, 2)), GridConfig())


class TestValidationHelpers:
    def test_pilot_tensor(self):
        check_pilot_tensor(np.zeros((1, 2, 48, 2)), n_p_t=2, n_p_f=48)
        with pytest.raises(ValueError):
            check_pilot_tensor(np.zeros((2, 48, 2)))
        with pytest.raises(ValueError):
            check_pilot_tensor(np.full((1, 2, 48, 2), np.nan))
        with pytest.raises(ValueError):
            check_pilot_tensor(np.zeros((1, 3, 48, 2)), n_p_t=2)

    def test_grid_tensor(self):
        check_grid_tensor(np.zeros((1, 14, 96, 2)), n_t=14, n_f=96)
        with pytest.raises(ValueError):
            check_grid_tensor(np.zeros((1, 14, 95, 2)), n_f=96)

    def test_snr(self):
        assert np.array_equal(check_snr_linear([1.0, 2.0], 2), [1.0, 2.0])
        with pytest.raises(ValueError):
            check_snr_linear([1.0], 2)
        with pytest.raises(ValueError):
            check_snr_linear([1.0, 0.0], 2)


class TestSklearnApi:
    @pytest.fixture
    def toy(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(32, 2, 48, 2))
        y = rng.normal(size=(32, 14, 96, 2)) * 0.1
        snr = np.full(32, 10.0)
        return X, y, snr

    def test_get_set_params_and_clone(self):
        est = FreqTimeNetEstimator(variant="atten", epochs=3, seed=9)
        params = est.get_params()
        assert params["variant"] == "atten" and params["epochs"] == 3
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_fit_predict_freqtime(self, toy):
        X, y, _ = toy
        est = FreqTimeNetEstimator(epochs=5, batch_size=8, seed=0)
        est.fit(X, y)
        assert est.history_["train_loss"][-1] < est.history_["train_loss"][0]
        pred = est.predict(X)
        assert pred.shape == (32, 14, 96, 2)

    def test_fit_predict_atten_requires_snr(self, toy):
        X, y, snr = toy
        est = FreqTimeNetEstimator(variant="atten", epochs=2, batch_size=8)
        with pytest.raises(ValueError):
            est.fit(X, y)
        est.fit(X, y, snr_linear=snr)
        with pytest.raises(ValueError):
            est.predict(X)
        assert est.predict(X, snr_linear=snr).shape == (32, 14, 96, 2)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            FreqTimeNetEstimator().predict(np.zeros((1, 2, 48, 2)))
        with pytest.raises(NotFittedError):
            BilinearBaselineEstimator().predict(np.zeros((1, 2, 48, 2)))

    def test_unknown_variant(self, toy):
        X, y, _ = toy
        with pytest.raises(ValueError):
            FreqTimeNetEstimator(variant="cnn").fit(X, y)

    def test_baseline_estimator(self, toy):
        X, _, _ = toy
        est = BilinearBaselineEstimator().fit()
        pred = est.predict(X)
        assert pred.shape == (32, 14, 96, 2)
        assert np.array_equal(pred, interp_baseline(X, est.grid_config_))

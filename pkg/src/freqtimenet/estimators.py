"""Scikit-learn style estimators wrapping the networks and the baseline.

``X`` is the pilot observation tensor (n_samples, n_p_t, n_p_f, 2) and
``y`` the full channel grid tensor (n_samples, n_t, n_f, 2).  The attention
variant additionally consumes each sample's linear SNR through the
``snr_linear`` keyword of fit/predict.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .models import FreqTimeConfig, FreqTimeNet
from .ofdm import GridConfig
from .training import EVAL_CHUNK, TrainConfig, train_network


def check_pilot_tensor(X, n_p_t: int | None = None,
                       n_p_f: int | None = None) -> np.ndarray:
    """Validate a batched (n, n_p_t, n_p_f, 2) real observation tensor."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 4 or X.shape[-1] != 2:
        raise ValueError(f"expected (n, n_p_t, n_p_f, 2), got {X.shape}")
    if n_p_t is not None and X.shape[1] != n_p_t:
        raise ValueError(f"expected n_p_t={n_p_t}, got {X.shape[1]}")
    if n_p_f is not None and X.shape[2] != n_p_f:
        raise ValueError(f"expected n_p_f={n_p_f}, got {X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("observation tensor contains non-finite values")
    return X


def check_grid_tensor(y, n_t: int | None = None,
                      n_f: int | None = None) -> np.ndarray:
    """Validate a batched (n, n_t, n_f, 2) real target tensor."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 4 or y.shape[-1] != 2:
        raise ValueError(f"expected (n, n_t, n_f, 2), got {y.shape}")
    if n_t is not None and y.shape[1] != n_t:
        raise ValueError(f"expected n_t={n_t}, got {y.shape[1]}")
    if n_f is not None and y.shape[2] != n_f:
        raise ValueError(f"expected n_f={n_f}, got {y.shape[2]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("target tensor contains non-finite values")
    return y


def check_snr_linear(snr_linear, n_samples: int) -> np.ndarray:
    snr = np.asarray(snr_linear, dtype=float).reshape(-1)
    if len(snr) != n_samples:
        raise ValueError("snr_linear length does not match the batch")
    if np.any(snr <= 0) or not np.all(np.isfinite(snr)):
        raise ValueError("snr_linear values must be positive and finite")
    return snr


def _interp_with_extrapolation(xp: np.ndarray, yp: np.ndarray,
                               x: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation along the last axis of ``yp`` with
    linear extrapolation outside [xp[0], xp[-1]]; flat if only one node."""
    xp = np.asarray(xp, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(xp) == 1:
        return np.broadcast_to(yp[..., :1], yp.shape[:-1] + (len(x),)).copy()
    idx = np.clip(np.searchsorted(xp, x, side="right") - 1, 0, len(xp) - 2)
    x0, x1 = xp[idx], xp[idx + 1]
    w = (x - x0) / (x1 - x0)
    return yp[..., idx] * (1.0 - w) + yp[..., idx + 1] * w


def interp_baseline(obs: np.ndarray, grid_config: GridConfig) -> np.ndarray:
    """Bilinear interpolation of LS pilot values over the full grid.

    Frequency first, then time; real and imaginary planes independently.
    Edges beyond the pilot span are linearly extrapolated; with a single
    pilot symbol the time axis is flat.
    """
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 3
    if single:
        obs = obs[None]
    if obs.shape[1:] != (grid_config.n_p_t, grid_config.n_p_f, 2):
        raise ValueError("observation does not match the pilot layout")

    sc = grid_config.pilot_subcarrier_indices.astype(float)
    syms = np.asarray(grid_config.pilot_symbol_indices, dtype=float)
    # (B, n_p_t, 2, n_p_f) -> interpolate over subcarriers
    full_f = _interp_with_extrapolation(
        sc, obs.transpose(0, 1, 3, 2), np.arange(grid_config.n_f))
    # (B, 2, n_f, n_p_t) -> interpolate over symbols
    full_t = _interp_with_extrapolation(
        syms, full_f.transpose(0, 2, 3, 1), np.arange(grid_config.n_t))
    out = full_t.transpose(0, 3, 2, 1)
    return out[0] if single else out


class FreqTimeNetEstimator(BaseEstimator, RegressorMixin):
    """Trainable channel estimator with the frequency-time division layout.

    ``variant="freqtime"`` is the plain network; ``variant="atten"`` adds
    the SNR attention gates and then requires ``snr_linear`` in both fit
    and predict.
    """

    def __init__(self, variant: str = "freqtime", n_t: int = 14,
                 n_f: int = 96, l_group: int = 12,
                 share_time_blocks: bool = True,
                 share_freq_blocks: bool = False, epochs: int = 100,
                 batch_size: int = 128, lr: float = 1e-3, seed: int = 0):
        self.variant = variant
        self.n_t = n_t
        self.n_f = n_f
        self.l_group = l_group
        self.share_time_blocks = share_time_blocks
        self.share_freq_blocks = share_freq_blocks
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.seed = seed

    def _make_network(self, n_p_t: int, n_p_f: int) -> FreqTimeNet:
        if self.variant not in ("freqtime", "atten"):
            raise ValueError(f"unknown variant {self.variant!r}")
        config = FreqTimeConfig(
            n_p_t=n_p_t, n_p_f=n_p_f, n_t=self.n_t, n_f=self.n_f,
            l_group=self.l_group, share_time_blocks=self.share_time_blocks,
            share_freq_blocks=self.share_freq_blocks)
        return FreqTimeNet(config, with_attention=self.variant == "atten",
                           seed=self.seed)

    def fit(self, X, y, snr_linear=None, X_val=None, y_val=None,
            snr_val=None):
        X = check_pilot_tensor(X)
        y = check_grid_tensor(y, n_t=self.n_t, n_f=self.n_f)
        if len(X) != len(y):
            raise ValueError("X and y sample counts differ")
        if self.variant == "atten":
            snr_linear = check_snr_linear(snr_linear, len(X))
        self.network_ = self._make_network(X.shape[1], X.shape[2])
        cfg = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                          lr=self.lr, seed=self.seed)
        self.history_ = train_network(self.network_, X, y, snr_linear, cfg,
                                      X_val=X_val, y_val=y_val,
                                      snr_val=snr_val)
        return self

    def predict(self, X, snr_linear=None) -> np.ndarray:
        if not hasattr(self, "network_"):
            raise NotFittedError("estimator is not fitted yet")
        cfg = self.network_.config
        X = check_pilot_tensor(X, n_p_t=cfg.n_p_t, n_p_f=cfg.n_p_f)
        if self.network_.with_attention:
            snr_linear = check_snr_linear(snr_linear, len(X))
        out = np.empty((len(X), cfg.n_t, cfg.n_f, 2))
        for start in range(0, len(X), EVAL_CHUNK):
            sl = slice(start, start + EVAL_CHUNK)
            snr = None if snr_linear is None else snr_linear[sl]
            out[sl] = self.network_.predict(X[sl], snr)
        return out


class BilinearBaselineEstimator(BaseEstimator, RegressorMixin):
    """Non-learned LS + bilinear interpolation comparator."""

    def __init__(self, grid_config: GridConfig | None = None):
        self.grid_config = grid_config

    def fit(self, X=None, y=None, **kwargs):
        self.grid_config_ = self.grid_config or GridConfig()
        return self

    def predict(self, X, snr_linear=None) -> np.ndarray:
        if not hasattr(self, "grid_config_"):
            raise NotFittedError("estimator is not fitted yet")
        g = self.grid_config_
        X = check_pilot_tensor(X, n_p_t=g.n_p_t, n_p_f=g.n_p_f)
        return interp_baseline(X, g)


def network_predictor(net: FreqTimeNet):
    """Adapt a network to the ``predict_fn(obs, snr_linear)`` interface."""
    def predict(obs, snr_linear=None):
        return net.predict(obs, snr_linear if net.with_attention else None)
    return predict


def baseline_predictor(grid_config: GridConfig):
    def predict(obs, snr_linear=None):
        return interp_baseline(obs, grid_config)
    return predict

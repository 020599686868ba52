"""OFDM resource grid, pilot placement, noisy pilot receive, and LS estimation.

Conventions fixed across the toolkit:
  * channel grids are complex (n_f, n_t): rows = subcarriers, cols = symbols;
  * real/imag split tensors put plane 0 = real, plane 1 = imaginary;
  * the channel is block fading at symbol granularity, sampled at each
    symbol's start time (14 symbols per 1 ms slot at 15 kHz spacing);
  * SNR is referenced at the receive RE with unit signal power and unit
    average channel power, so the per-RE noise variance is 10^(-snr_db/10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FadingConfig, TdlProfile, freq_response, spawn_fading


@dataclass(frozen=True)
class GridConfig:
    """Resource-grid geometry and comb pilot layout."""

    n_f: int = 96
    n_t: int = 14
    subcarrier_spacing_hz: float = 15000.0
    pilot_symbol_indices: tuple[int, ...] = (2, 11)
    pilot_comb_offset: int = 0
    pilot_comb_step: int = 2

    def __post_init__(self):
        if self.n_f <= 0 or self.n_f % 12 != 0:
            raise ValueError("n_f must be a positive multiple of 12")
        if self.n_t <= 0:
            raise ValueError("n_t must be positive")
        if self.subcarrier_spacing_hz <= 0:
            raise ValueError("subcarrier spacing must be positive")
        idx = tuple(self.pilot_symbol_indices)
        if len(idx) == 0 or len(set(idx)) != len(idx):
            raise ValueError("pilot symbol indices must be non-empty and unique")
        if any(i < 0 or i >= self.n_t for i in idx):
            raise ValueError("pilot symbol indices out of range")
        if self.pilot_comb_step < 1 or not (0 <= self.pilot_comb_offset < self.pilot_comb_step):
            raise ValueError("invalid pilot comb")
        object.__setattr__(self, "pilot_symbol_indices", tuple(sorted(idx)))

    @property
    def n_p_t(self) -> int:
        return len(self.pilot_symbol_indices)

    @property
    def n_p_f(self) -> int:
        return len(self.pilot_subcarrier_indices)

    @property
    def pilot_subcarrier_indices(self) -> np.ndarray:
        return np.arange(self.pilot_comb_offset, self.n_f, self.pilot_comb_step)

    @property
    def symbol_duration_s(self) -> float:
        # 14-symbol 1 ms slot at 15 kHz; scales inversely with spacing
        return (1e-3 / 14.0) * (15000.0 / self.subcarrier_spacing_hz)

    @property
    def subcarrier_hz(self) -> np.ndarray:
        return np.arange(self.n_f) * self.subcarrier_spacing_hz


@dataclass(frozen=True)
class ChannelGrid:
    """True frequency-domain channel over the whole grid, (n_f, n_t) complex."""

    h: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.h.view(float))):
            raise ValueError("channel grid contains non-finite entries")


@dataclass(frozen=True)
class PilotSequence:
    """Known unit-modulus pilot values on the pilot layout, (n_p_t, n_p_f)."""

    s_p: np.ndarray
    seed: int

    def __post_init__(self):
        if not np.all(np.abs(self.s_p) == 1.0):
            raise ValueError("pilot symbols must be unit modulus")


@dataclass(frozen=True)
class PilotObservation:
    """LS channel estimate at pilot positions plus the sample's SNR.

    ``h_p_ls`` is real (n_p_t, n_p_f, 2) with plane 0 real, plane 1 imag.
    """

    h_p_ls: np.ndarray
    snr_db: float

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


def pilot_pattern(config: GridConfig) -> list[tuple[int, int]]:
    """All (symbol, subcarrier) pilot positions, sorted."""
    return [(k, int(i))
            for k in config.pilot_symbol_indices
            for i in config.pilot_subcarrier_indices]


def make_pilot_sequence(config: GridConfig, seed: int) -> PilotSequence:
    """Seeded QPSK pilots from {1, j, -1, -j}; exactly unit modulus."""
    rng = np.random.default_rng(seed)
    symbols = np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])
    s_p = symbols[rng.integers(0, 4, size=(config.n_p_t, config.n_p_f))]
    return PilotSequence(s_p=s_p, seed=seed)


def channel_grid(profile: TdlProfile, fading_config: FadingConfig,
                 grid_config: GridConfig) -> ChannelGrid:
    """Synthesize the true channel grid, one frequency response per symbol."""
    process = spawn_fading(profile, fading_config)
    times = np.arange(grid_config.n_t) * grid_config.symbol_duration_s
    gains = process.gains_at(times)
    tau = profile.delays * fading_config.delay_spread_s
    steering = np.exp(-2j * np.pi * np.outer(grid_config.subcarrier_hz, tau))
    return ChannelGrid(h=steering @ gains)


def pilot_channel(grid: ChannelGrid, config: GridConfig) -> np.ndarray:
    """True channel restricted to pilot positions, (n_p_t, n_p_f) complex."""
    sc = config.pilot_subcarrier_indices
    syms = np.asarray(config.pilot_symbol_indices)
    return grid.h[np.ix_(sc, syms)].T


def simulate_pilot_rx(grid: ChannelGrid, seq: PilotSequence, config: GridConfig,
                      snr_db: float, noise_seed: int,
                      noiseless: bool = False) -> np.ndarray:
    """Received pilot REs: Y_p = H_p * s_p + z_p, (n_p_t, n_p_f) complex."""
    h_p = pilot_channel(grid, config)
    if seq.s_p.shape != h_p.shape:
        raise ValueError("pilot sequence does not match the pilot layout")
    y_p = h_p * seq.s_p
    if not noiseless:
        sigma2 = 10.0 ** (-snr_db / 10.0)
        rng = np.random.default_rng(noise_seed)
        noise = rng.standard_normal(h_p.shape) + 1j * rng.standard_normal(h_p.shape)
        y_p = y_p + np.sqrt(sigma2 / 2.0) * noise
    return y_p


def ls_estimate(y_p: np.ndarray, seq: PilotSequence) -> np.ndarray:
    """Per-RE LS estimate y_p / s_p split into real/imag planes."""
    if y_p.shape != seq.s_p.shape:
        raise ValueError("received pilots and pilot sequence shapes differ")
    h_hat = y_p / seq.s_p
    return np.stack([h_hat.real, h_hat.imag], axis=-1)


def observe(grid: ChannelGrid, config: GridConfig, snr_db: float,
            pilot_seed: int, noise_seed: int,
            noiseless: bool = False) -> PilotObservation:
    """Full pilot pipeline: pilots -> noisy receive -> LS observation."""
    seq = make_pilot_sequence(config, pilot_seed)
    y_p = simulate_pilot_rx(grid, seq, config, snr_db, noise_seed,
                            noiseless=noiseless)
    return PilotObservation(h_p_ls=ls_estimate(y_p, seq), snr_db=float(snr_db))


def grid_to_tensor(grid: ChannelGrid) -> np.ndarray:
    """Real (n_t, n_f, 2) view of a channel grid (plane 0 real, 1 imag)."""
    h = grid.h.T
    return np.stack([h.real, h.imag], axis=-1)

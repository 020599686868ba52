"""3GPP TDL channel synthesis.

Power-delay profiles for TDL-A..E are shipped as plain-text data files
(one tap per line: ``normalized_delay power_db [rician_k_db]``).  Fading is
generated per tap with a seeded sum-of-sinusoids process whose spectrum is
the classic Clarke (Jakes) Doppler spectrum; LOS models add a deterministic
Rician phasor on the first tap.  The frequency response over a set of
subcarriers is obtained by summing the delayed taps:

    H(f) = sum_l g_l * exp(-j 2 pi f tau_l),   tau_l = delay_l * delay_spread
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0


class TdlModel(enum.Enum):
    """The five tapped-delay-line models supported by the toolkit."""

    TDL_A = 0
    TDL_B = 1
    TDL_C = 2
    TDL_D = 3
    TDL_E = 4

    @property
    def is_los(self) -> bool:
        return self in (TdlModel.TDL_D, TdlModel.TDL_E)


@dataclass(frozen=True)
class TdlProfile:
    """A named power-delay profile with unit total linear power.

    ``delays`` are dimensionless normalized delays, sorted, starting at 0.
    ``rician_k_db`` is set only for LOS models and applies to tap 0.
    """

    model_id: TdlModel
    delays: np.ndarray
    powers_db: np.ndarray
    powers_linear: np.ndarray
    rician_k_db: float | None = None

    @property
    def n_taps(self) -> int:
        return len(self.delays)

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        if d.ndim != 1 or len(d) == 0:
            raise ValueError("profile needs at least one tap")
        if d[0] != 0.0 or np.any(np.diff(d) < 0):
            raise ValueError("tap delays must be sorted with first delay 0")
        p = np.asarray(self.powers_linear, dtype=float)
        if p.shape != d.shape or np.asarray(self.powers_db).shape != d.shape:
            raise ValueError("delays and powers must have equal length")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("linear tap powers must sum to 1")
        if (self.rician_k_db is not None) != self.model_id.is_los:
            raise ValueError("rician_k_db is required exactly for LOS models")


def _parse_profile_text(text: str, model_id: TdlModel) -> TdlProfile:
    delays, powers_db, k_db = [], [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) == 3:
            if delays:
                raise ValueError(
                    f"line {lineno}: K-factor only allowed on the first tap")
            k_db = float(fields[2])
        elif len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 2 or 3 fields")
        delays.append(float(fields[0]))
        powers_db.append(float(fields[1]))
    powers_lin = 10.0 ** (np.asarray(powers_db) / 10.0)
    powers_lin /= powers_lin.sum()
    return TdlProfile(
        model_id=model_id,
        delays=np.asarray(delays),
        powers_db=np.asarray(powers_db),
        powers_linear=powers_lin,
        rician_k_db=k_db,
    )


@lru_cache(maxsize=None)
def load_profile(model_id: TdlModel) -> TdlProfile:
    """Load the embedded PDP table for one TDL model, unit-power normalized."""
    if not isinstance(model_id, TdlModel):
        raise ValueError(f"unknown TDL model: {model_id!r}")
    fname = model_id.name.lower() + ".txt"
    text = resources.files("freqtimenet.data").joinpath(fname).read_text()
    return _parse_profile_text(text, model_id)


def doppler_from_speed(speed_kmh: float, carrier_hz: float) -> float:
    """Maximum Doppler shift f_d = v * f_c / c for a terminal speed in km/h."""
    if speed_kmh < 0:
        raise ValueError("speed must be non-negative")
    if carrier_hz <= 0:
        raise ValueError("carrier frequency must be positive")
    return (speed_kmh / 3.6) * carrier_hz / SPEED_OF_LIGHT_M_S


@dataclass(frozen=True)
class FadingConfig:
    """Scenario knobs for one channel realization."""

    delay_spread_s: float
    doppler_hz: float
    seed: int
    n_sinusoids: int = 64

    def __post_init__(self):
        if self.delay_spread_s < 0:
            raise ValueError("delay_spread_s must be non-negative")
        if self.doppler_hz < 0:
            raise ValueError("doppler_hz must be non-negative")
        if self.n_sinusoids < 8:
            raise ValueError("n_sinusoids must be at least 8")


@dataclass(frozen=True)
class TapGains:
    """Complex gain of every tap at one time instant."""

    gains: np.ndarray
    time_s: float


class FadingProcess:
    """Deterministic seeded fading: one Clarke sum-of-sinusoids per tap.

    The diffuse part of tap ``l`` is
    ``sqrt(p_l) / sqrt(N) * sum_n exp(j (2 pi f_d cos(a_n) t + phi_n))``
    with angles and phases drawn once from the seed.  For a Rician first
    tap the power splits K/(K+1) into a deterministic phasor at the full
    Doppler shift (arrival angle 0) and 1/(K+1) into the diffuse part.
    Evaluation is pure: gains depend only on (profile, config, time).
    """

    def __init__(self, profile: TdlProfile, config: FadingConfig):
        self.profile = profile
        self.config = config
        rng = np.random.default_rng(config.seed)
        n_taps, n_sin = profile.n_taps, config.n_sinusoids
        angles = rng.uniform(0.0, 2.0 * np.pi, size=(n_taps, n_sin))
        self._phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_taps, n_sin))
        # Per-sinusoid Doppler shift, Hz
        self._tap_doppler = config.doppler_hz * np.cos(angles)

        diffuse_power = profile.powers_linear.copy()
        self._los_amp = 0.0
        self._los_phase = rng.uniform(0.0, 2.0 * np.pi)
        if profile.rician_k_db is not None:
            k = 10.0 ** (profile.rician_k_db / 10.0)
            p0 = diffuse_power[0]
            self._los_amp = np.sqrt(p0 * k / (k + 1.0))
            diffuse_power[0] = p0 / (k + 1.0)
        self._diffuse_amp = np.sqrt(diffuse_power / n_sin)

    def gains_at(self, times_s: np.ndarray) -> np.ndarray:
        """Tap gains at many instants; returns (n_taps, n_times) complex."""
        t = np.atleast_1d(np.asarray(times_s, dtype=float))
        if np.any(t < 0):
            raise ValueError("time must be non-negative")
        phase = (2.0 * np.pi) * self._tap_doppler[:, :, None] * t[None, None, :]
        phase += self._phases[:, :, None]
        g = self._diffuse_amp[:, None] * np.exp(1j * phase).sum(axis=1)
        if self._los_amp:
            los = self._los_amp * np.exp(
                1j * (2.0 * np.pi * self.config.doppler_hz * t + self._los_phase))
            g[0] += los
        return g

    def tap_gains(self, time_s: float) -> TapGains:
        """Tap gains at one instant."""
        return TapGains(gains=self.gains_at([time_s])[:, 0], time_s=float(time_s))


def spawn_fading(profile: TdlProfile, config: FadingConfig) -> FadingProcess:
    """Construct the seeded fading process for one (profile, config) pair."""
    return FadingProcess(profile, config)


def freq_response(gains: TapGains, profile: TdlProfile, config: FadingConfig,
                  subcarrier_hz: np.ndarray) -> np.ndarray:
    """Frequency response over given subcarriers at the gains' instant."""
    f = np.asarray(subcarrier_hz, dtype=float)
    if f.size == 0:
        raise ValueError("subcarrier_hz must be non-empty")
    tau = profile.delays * config.delay_spread_s
    steering = np.exp(-2j * np.pi * np.outer(f, tau))
    return steering @ gains.gains

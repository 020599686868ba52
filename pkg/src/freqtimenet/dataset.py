"""Mixed-scenario dataset construction and the `FTDS` binary file format.

Each sample draws (channel model, delay spread, speed, SNR) from the mix
configuration, synthesizes the true channel grid, simulates a noisy pilot
receive at the drawn SNR and stores the LS observation together with the
noise-free target grid.  Everything is a pure function of (MixConfig,
GridConfig, n_samples, split): per-sample seeds come from a splittable
counter scheme so generation order and worker count cannot change results.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .channel import FadingConfig, TdlModel, doppler_from_speed, load_profile
from .ofdm import GridConfig, channel_grid, grid_to_tensor, observe

MAGIC = b"FTDS"
VERSION = 1

SPLIT_CODES = {"train": 0, "val": 1, "test": 2}


class DatasetFormatError(Exception):
    """Base class for dataset file errors."""


class CorruptHeaderError(DatasetFormatError):
    """Magic/version/header fields are not a valid dataset header."""


class DimensionMismatchError(DatasetFormatError):
    """Header dimensions disagree with expectations or payload."""


class TruncatedDatasetError(DatasetFormatError):
    """File ends before the sample count promised by the header."""


@dataclass(frozen=True)
class MixConfig:
    """Scenario mixture for dataset generation."""

    models: tuple[TdlModel, ...] = tuple(TdlModel)
    ds_range_ns: tuple[float, float] = (0.0, 300.0)
    speed_range_kmh: tuple[float, float] = (0.0, 50.0)
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    carrier_hz: float = 3.5e9
    master_seed: int = 0

    def __post_init__(self):
        if len(self.models) == 0:
            raise ValueError("at least one channel model is required")
        if len(self.snr_grid_db) == 0:
            raise ValueError("snr_grid_db must be non-empty")
        for name in ("ds_range_ns", "speed_range_kmh"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"invalid {name}: [{lo}, {hi}]")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")


@dataclass(frozen=True)
class ScenarioDraw:
    """One sample's scenario: model, delay spread, speed, SNR, seed."""

    model_id: TdlModel
    delay_spread_ns: float
    speed_kmh: float
    snr_db: float
    sample_seed: int


@dataclass
class Dataset:
    """In-memory dataset: struct-of-arrays over samples plus its configs."""

    grid: GridConfig
    mix: MixConfig
    model_ids: np.ndarray      # uint8, TdlModel values
    delay_spread_ns: np.ndarray
    speed_kmh: np.ndarray
    snr_db: np.ndarray
    sample_seeds: np.ndarray   # uint64
    observations: np.ndarray   # float32 (n, n_p_t, n_p_f, 2)
    targets: np.ndarray        # float32 (n, n_t, n_f, 2)

    @property
    def n_samples(self) -> int:
        return len(self.model_ids)

    @property
    def snr_linear(self) -> np.ndarray:
        return 10.0 ** (self.snr_db / 10.0)

    def scenario(self, index: int) -> ScenarioDraw:
        return ScenarioDraw(
            model_id=TdlModel(int(self.model_ids[index])),
            delay_spread_ns=float(self.delay_spread_ns[index]),
            speed_kmh=float(self.speed_kmh[index]),
            snr_db=float(self.snr_db[index]),
            sample_seed=int(self.sample_seeds[index]),
        )


def sample_seed_for(master_seed: int, split: str, index: int) -> int:
    """Splittable per-sample seed: independent of generation order."""
    code = SPLIT_CODES[split]
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(code, index))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_scenario(rng: np.random.Generator, mix: MixConfig) -> ScenarioDraw:
    """Draw one scenario: uniform model/SNR choices, continuous ranges."""
    model = mix.models[rng.integers(len(mix.models))]
    ds_ns = rng.uniform(*mix.ds_range_ns)
    speed = rng.uniform(*mix.speed_range_kmh)
    snr_db = mix.snr_grid_db[rng.integers(len(mix.snr_grid_db))]
    return ScenarioDraw(model_id=model, delay_spread_ns=float(ds_ns),
                        speed_kmh=float(speed), snr_db=float(snr_db),
                        sample_seed=0)


def _synthesize_sample(draw: ScenarioDraw, grid_cfg: GridConfig,
                       mix: MixConfig, n_sinusoids: int, noiseless: bool):
    rng = np.random.default_rng(draw.sample_seed)
    fading_seed = int(rng.integers(2 ** 63))
    pilot_seed = int(rng.integers(2 ** 63))
    noise_seed = int(rng.integers(2 ** 63))
    profile = load_profile(draw.model_id)
    fading = FadingConfig(
        delay_spread_s=draw.delay_spread_ns * 1e-9,
        doppler_hz=doppler_from_speed(draw.speed_kmh, mix.carrier_hz),
        seed=fading_seed,
        n_sinusoids=n_sinusoids,
    )
    grid = channel_grid(profile, fading, grid_cfg)
    obs = observe(grid, grid_cfg, draw.snr_db, pilot_seed, noise_seed,
                  noiseless=noiseless)
    return obs.h_p_ls, grid_to_tensor(grid)


def build_dataset(n_samples: int, mix: MixConfig,
                  grid: GridConfig | None = None, split: str = "train",
                  n_sinusoids: int = 64, noiseless: bool = False) -> Dataset:
    """Generate a dataset deterministically from (mix, grid, split)."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if split not in SPLIT_CODES:
        raise ValueError(f"unknown split {split!r}")
    grid = grid or GridConfig()

    model_ids = np.empty(n_samples, dtype=np.uint8)
    ds_ns = np.empty(n_samples, dtype=np.float32)
    speed = np.empty(n_samples, dtype=np.float32)
    snr_db = np.empty(n_samples, dtype=np.float32)
    seeds = np.empty(n_samples, dtype=np.uint64)
    obs = np.empty((n_samples, grid.n_p_t, grid.n_p_f, 2), dtype=np.float32)
    targets = np.empty((n_samples, grid.n_t, grid.n_f, 2), dtype=np.float32)

    for i in range(n_samples):
        seed = sample_seed_for(mix.master_seed, split, i)
        rng = np.random.default_rng(seed)
        draw = sample_scenario(rng, mix)
        draw = ScenarioDraw(draw.model_id, draw.delay_spread_ns,
                            draw.speed_kmh, draw.snr_db, seed)
        h_p_ls, target = _synthesize_sample(draw, grid, mix, n_sinusoids,
                                            noiseless)
        model_ids[i] = draw.model_id.value
        ds_ns[i] = draw.delay_spread_ns
        speed[i] = draw.speed_kmh
        snr_db[i] = draw.snr_db
        seeds[i] = seed
        obs[i] = h_p_ls
        targets[i] = target

    return Dataset(grid=grid, mix=mix, model_ids=model_ids,
                   delay_spread_ns=ds_ns, speed_kmh=speed, snr_db=snr_db,
                   sample_seeds=seeds, observations=obs, targets=targets)


def _pack_header(ds: Dataset) -> bytes:
    g, m = ds.grid, ds.mix
    parts = [MAGIC, struct.pack("<H", VERSION)]
    parts.append(struct.pack("<IId", g.n_f, g.n_t, g.subcarrier_spacing_hz))
    parts.append(struct.pack("<H", len(g.pilot_symbol_indices)))
    parts.append(struct.pack(f"<{len(g.pilot_symbol_indices)}H",
                             *g.pilot_symbol_indices))
    parts.append(struct.pack("<HH", g.pilot_comb_offset, g.pilot_comb_step))
    parts.append(struct.pack("<B", len(m.models)))
    parts.append(struct.pack(f"<{len(m.models)}B",
                             *(mm.value for mm in m.models)))
    parts.append(struct.pack("<ffff", *m.ds_range_ns, *m.speed_range_kmh))
    parts.append(struct.pack("<H", len(m.snr_grid_db)))
    parts.append(struct.pack(f"<{len(m.snr_grid_db)}f", *m.snr_grid_db))
    parts.append(struct.pack("<dQ", m.carrier_hz, m.master_seed))
    parts.append(struct.pack("<Q", ds.n_samples))
    return b"".join(parts)


def write_dataset(ds: Dataset, path) -> None:
    """Serialize to the little-endian `FTDS` format (lossless round trip)."""
    with open(path, "wb") as fh:
        fh.write(_pack_header(ds))
        for i in range(ds.n_samples):
            fh.write(struct.pack("<BfffQ", int(ds.model_ids[i]),
                                 float(ds.delay_spread_ns[i]),
                                 float(ds.speed_kmh[i]),
                                 float(ds.snr_db[i]),
                                 int(ds.sample_seeds[i])))
            fh.write(np.ascontiguousarray(ds.observations[i], "<f4").tobytes())
            fh.write(np.ascontiguousarray(ds.targets[i], "<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedDatasetError(f"file ended while reading {what}")
    return data


def read_dataset(path) -> Dataset:
    """Read an `FTDS` file; validates magic, version and dimensions."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise CorruptHeaderError(f"bad magic {magic!r}")
        try:
            (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
            if version != VERSION:
                raise CorruptHeaderError(f"unsupported version {version}")
            n_f, n_t, scs = struct.unpack("<IId", _read_exact(fh, 16, "grid"))
            (n_psym,) = struct.unpack("<H", _read_exact(fh, 2, "header"))
            psyms = struct.unpack(f"<{n_psym}H",
                                  _read_exact(fh, 2 * n_psym, "header"))
            offset, step = struct.unpack("<HH", _read_exact(fh, 4, "header"))
            (n_models,) = struct.unpack("<B", _read_exact(fh, 1, "header"))
            model_vals = struct.unpack(f"<{n_models}B",
                                       _read_exact(fh, n_models, "header"))
            ds_lo, ds_hi, sp_lo, sp_hi = struct.unpack(
                "<ffff", _read_exact(fh, 16, "header"))
            (n_snr,) = struct.unpack("<H", _read_exact(fh, 2, "header"))
            snrs = struct.unpack(f"<{n_snr}f",
                                 _read_exact(fh, 4 * n_snr, "header"))
            carrier, master_seed = struct.unpack(
                "<dQ", _read_exact(fh, 16, "header"))
            (n_samples,) = struct.unpack("<Q", _read_exact(fh, 8, "header"))
            grid = GridConfig(n_f=n_f, n_t=n_t, subcarrier_spacing_hz=scs,
                              pilot_symbol_indices=tuple(psyms),
                              pilot_comb_offset=offset, pilot_comb_step=step)
            mix = MixConfig(models=tuple(TdlModel(v) for v in model_vals),
                            ds_range_ns=(ds_lo, ds_hi),
                            speed_range_kmh=(sp_lo, sp_hi),
                            snr_grid_db=tuple(snrs), carrier_hz=carrier,
                            master_seed=master_seed)
        except TruncatedDatasetError:
            raise
        except (struct.error, ValueError) as exc:
            raise CorruptHeaderError(str(exc)) from exc

        obs_count = grid.n_p_t * grid.n_p_f * 2
        tgt_count = grid.n_t * grid.n_f * 2
        model_ids = np.empty(n_samples, dtype=np.uint8)
        ds_ns = np.empty(n_samples, dtype=np.float32)
        speed = np.empty(n_samples, dtype=np.float32)
        snr_db = np.empty(n_samples, dtype=np.float32)
        seeds = np.empty(n_samples, dtype=np.uint64)
        obs = np.empty((n_samples, grid.n_p_t, grid.n_p_f, 2), dtype=np.float32)
        targets = np.empty((n_samples, grid.n_t, grid.n_f, 2), dtype=np.float32)
        for i in range(n_samples):
            mid, d, v, s, seed = struct.unpack(
                "<BfffQ", _read_exact(fh, 21, f"sample {i}"))
            if mid > max(m.value for m in TdlModel):
                raise DimensionMismatchError(f"sample {i}: bad model id {mid}")
            model_ids[i], ds_ns[i], speed[i], snr_db[i], seeds[i] = \
                mid, d, v, s, seed
            obs[i] = np.frombuffer(
                _read_exact(fh, 4 * obs_count, f"sample {i} observation"),
                dtype="<f4").reshape(grid.n_p_t, grid.n_p_f, 2)
            targets[i] = np.frombuffer(
                _read_exact(fh, 4 * tgt_count, f"sample {i} target"),
                dtype="<f4").reshape(grid.n_t, grid.n_f, 2)
        if fh.read(1):
            raise DimensionMismatchError("trailing bytes after last sample")

    return Dataset(grid=grid, mix=mix, model_ids=model_ids,
                   delay_spread_ns=ds_ns, speed_kmh=speed, snr_db=snr_db,
                   sample_seeds=seeds, observations=obs, targets=targets)

"""Training loop and per-SNR MSE evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, GridConfig, MixConfig, TdlModel, build_dataset
from .models import FreqTimeNet
from .nn import Adam, mse_loss

EVAL_CHUNK = 512


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; no schedule, no early stopping."""

    epochs: int = 100
    batch_size: int = 128
    lr: float = 1e-3
    seed: int = 0
    determinism: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def _dataset_loss(net: FreqTimeNet, X, y, snr_linear) -> float:
    total = 0.0
    for start in range(0, len(X), EVAL_CHUNK):
        sl = slice(start, start + EVAL_CHUNK)
        snr = None if snr_linear is None else snr_linear[sl]
        out = net.predict(X[sl], snr)
        diff = np.asarray(out, dtype=np.float64) - y[sl]
        total += float(np.sum(diff * diff))
    return total / (len(X) * np.prod(y.shape[1:]))


def train_network(net: FreqTimeNet, X, y, snr_linear=None,
                  cfg: TrainConfig | None = None,
                  X_val=None, y_val=None, snr_val=None) -> dict:
    """Mini-batch Adam on MSE; returns per-epoch loss history."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) != len(y):
        raise ValueError("observation/target counts differ")
    if net.with_attention:
        if snr_linear is None:
            raise ValueError("attention variant requires per-sample SNR")
        snr_linear = np.asarray(snr_linear, dtype=float)

    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net.parameters(), lr=cfg.lr)
    history = {"train_loss": [], "val_loss": []}
    n = len(X)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            snr = None if snr_linear is None else snr_linear[idx]
            out, caches = net.forward(X[idx], snr)
            loss, grad = mse_loss(out, y[idx])
            opt.step(net.backward(caches, grad))
            running += loss * len(idx)
        history["train_loss"].append(running / n)
        if X_val is not None:
            history["val_loss"].append(
                _dataset_loss(net, np.asarray(X_val, dtype=float),
                              np.asarray(y_val, dtype=float),
                              None if snr_val is None
                              else np.asarray(snr_val, dtype=float)))
    return history


@dataclass
class EvalReport:
    """Per-SNR MSE table with sample counts."""

    rows: list[tuple[float, float, int]]
    model_tag: str = ""
    scenario: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted((float(s), float(m), int(n)) for s, m, n in self.rows)

    @property
    def total_samples(self) -> int:
        return sum(n for _, _, n in self.rows)

    def mean_mse(self) -> float:
        """MSE averaged over the SNR bins (unweighted)."""
        return float(np.mean([m for _, m, _ in self.rows]))

    def mse_at(self, snr_db: float) -> float:
        for s, m, _ in self.rows:
            if s == snr_db:
                return m
        raise KeyError(f"no SNR bin {snr_db}")

    def to_csv_text(self) -> str:
        lines = ["snr_db,mse,n_samples"]
        lines += [f"{s:g},{m:.10e},{n}" for s, m, n in self.rows]
        return "\n".join(lines) + "\n"

    def save_json(self, path) -> None:
        payload = {"model_tag": self.model_tag, "scenario": self.scenario,
                   "rows": [[s, m, n] for s, m, n in self.rows]}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "EvalReport":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(rows=[tuple(r) for r in payload["rows"]],
                   model_tag=payload.get("model_tag", ""),
                   scenario=payload.get("scenario", {}))


def evaluate_mse(predict_fn, ds: Dataset, model_tag: str = "",
                 scenario: dict | None = None) -> EvalReport:
    """Group the dataset by SNR and report the mean elementwise MSE.

    ``predict_fn(obs, snr_linear) -> (B, n_t, n_f, 2)``; accumulation is
    float64 regardless of model precision.
    """
    if ds.n_samples == 0:
        raise ValueError("cannot evaluate an empty dataset")
    X = np.asarray(ds.observations, dtype=float)
    y = np.asarray(ds.targets, dtype=np.float64)
    snr_lin = ds.snr_linear.astype(float)
    per_elem = np.prod(y.shape[1:])

    sq_sum = np.zeros(ds.n_samples)
    for start in range(0, ds.n_samples, EVAL_CHUNK):
        sl = slice(start, start + EVAL_CHUNK)
        pred = np.asarray(predict_fn(X[sl], snr_lin[sl]), dtype=np.float64)
        if pred.shape != y[sl].shape:
            raise ValueError("prediction shape does not match targets")
        sq_sum[sl] = np.sum((pred - y[sl]) ** 2, axis=(1, 2, 3))

    rows = []
    for snr in np.unique(ds.snr_db):
        mask = ds.snr_db == snr
        rows.append((float(snr),
                     float(sq_sum[mask].sum() / (mask.sum() * per_elem)),
                     int(mask.sum())))
    return EvalReport(rows=rows, model_tag=model_tag,
                      scenario=scenario or {})


def scenario_eval(predict_fn, model_id: TdlModel, delay_spread_ns: float,
                  speed_kmh: float, snr_grid_db=(0.0, 5.0, 10.0, 15.0, 20.0),
                  n_per_snr: int = 2000, grid: GridConfig | None = None,
                  seed: int = 0, carrier_hz: float = 3.5e9,
                  model_tag: str = "") -> EvalReport:
    """Fixed-scenario sweep: fresh seeded test data per SNR point."""
    if n_per_snr < 1:
        raise ValueError("n_per_snr must be at least 1")
    grid = grid or GridConfig()
    rows = []
    for i, snr in enumerate(snr_grid_db):
        master = int(np.random.SeedSequence(
            entropy=seed, spawn_key=(7, i)).generate_state(1, np.uint64)[0])
        mix = MixConfig(models=(model_id,),
                        ds_range_ns=(delay_spread_ns, delay_spread_ns),
                        speed_range_kmh=(speed_kmh, speed_kmh),
                        snr_grid_db=(float(snr),), carrier_hz=carrier_hz,
                        master_seed=master)
        ds = build_dataset(n_per_snr, mix, grid, split="test")
        report = evaluate_mse(predict_fn, ds)
        rows.extend(report.rows)
    return EvalReport(rows=rows, model_tag=model_tag,
                      scenario={"model": model_id.name,
                                "delay_spread_ns": delay_spread_ns,
                                "speed_kmh": speed_kmh})

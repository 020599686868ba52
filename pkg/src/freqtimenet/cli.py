"""Command-line surface: gen-data / train / eval / complexity / export.

Settings come from flags or a plain-text ``key=value`` config file
(``--config``); flags win over the file.  Relative data/model paths are
resolved under $FREQTIMENET_DATA_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .channel import TdlModel
from .dataset import (Dataset, GridConfig, MixConfig, build_dataset,
                      read_dataset, write_dataset)
from .estimators import baseline_predictor, network_predictor
from .models import (FreqTimeConfig, FreqTimeNet, complexity_report,
                     load_model, save_model)
from .training import (EvalReport, TrainConfig, evaluate_mse, scenario_eval,
                       train_network)

SCENARIOS = {
    "tdlc100": (TdlModel.TDL_C, 100.0),
    "tdld30": (TdlModel.TDL_D, 30.0),
}


def _resolve(path: str) -> Path:
    p = Path(path)
    base = os.environ.get("FREQTIMENET_DATA_DIR")
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def _load_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _parse_models(text: str) -> tuple[TdlModel, ...]:
    names = [t.strip().upper().replace("-", "_") for t in text.split(",") if t.strip()]
    try:
        return tuple(TdlModel[n] for n in names)
    except KeyError as exc:
        raise SystemExit(f"unknown TDL model {exc.args[0]}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _mix_from_args(args) -> MixConfig:
    lo, hi = _parse_floats(args.ds_range)
    slo, shi = _parse_floats(args.speed_range)
    return MixConfig(models=_parse_models(args.models),
                     ds_range_ns=(lo, hi), speed_range_kmh=(slo, shi),
                     snr_grid_db=_parse_floats(args.snr_grid),
                     carrier_hz=args.carrier_hz, master_seed=args.seed)


def cmd_gen_data(args) -> int:
    mix = _mix_from_args(args)
    ds = build_dataset(args.samples, mix, GridConfig(), split=args.split,
                       noiseless=args.noiseless)
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, out)
    print(f"wrote {ds.n_samples} samples to {out}")
    return 0


def _load_split(path: str) -> Dataset:
    return read_dataset(_resolve(path))


def cmd_train(args) -> int:
    ds = _load_split(args.data)
    val = _load_split(args.val) if args.val else None
    net = FreqTimeNet(
        FreqTimeConfig(n_p_t=ds.grid.n_p_t, n_p_f=ds.grid.n_p_f,
                       n_t=ds.grid.n_t, n_f=ds.grid.n_f,
                       l_group=args.l_group),
        with_attention=args.variant == "atten", seed=args.seed)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch,
                      lr=args.lr, seed=args.seed)
    history = train_network(
        net, ds.observations, ds.targets,
        ds.snr_linear if args.variant == "atten" else None, cfg,
        X_val=None if val is None else val.observations,
        y_val=None if val is None else val.targets,
        snr_val=None if val is None or args.variant != "atten"
        else val.snr_linear)
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(net, out)
    print(f"trained {args.variant} for {args.epochs} epochs; "
          f"final train loss {history['train_loss'][-1]:.6e}")
    if history["val_loss"]:
        print(f"final val loss {history['val_loss'][-1]:.6e}")
    print(f"saved model to {out}")
    return 0


def _predictor_from_args(args, grid: GridConfig):
    if args.baseline:
        return baseline_predictor(grid), "bilinear-baseline"
    net = load_model(_resolve(args.model))
    return network_predictor(net), f"{net.variant}:{Path(args.model).name}"


def cmd_eval(args) -> int:
    if args.scenario:
        model_id, ds_ns = SCENARIOS[args.scenario]
        grid = GridConfig()
        predict, tag = _predictor_from_args(args, grid)
        report = scenario_eval(predict, model_id, ds_ns, args.speed,
                               _parse_floats(args.snr_grid), args.per_snr,
                               grid, seed=args.seed, model_tag=tag)
    else:
        if not args.data:
            raise SystemExit("eval needs --data or --scenario")
        ds = _load_split(args.data)
        predict, tag = _predictor_from_args(args, ds.grid)
        report = evaluate_mse(predict, ds, model_tag=tag)
    for snr, mse, n in report.rows:
        print(f"snr {snr:5.1f} dB  mse {mse:.6e}  n {n}")
    if args.out:
        report.save_json(_resolve(args.out))
        print(f"wrote report to {_resolve(args.out)}")
    if args.csv:
        _resolve(args.csv).write_text(report.to_csv_text())
        print(f"wrote CSV to {_resolve(args.csv)}")
    return 0


def cmd_complexity(args) -> int:
    net = FreqTimeNet(FreqTimeConfig(l_group=args.l_group),
                      with_attention=args.variant == "atten")
    report = complexity_report(net)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_export(args) -> int:
    report = EvalReport.load_json(_resolve(args.report))
    _resolve(args.csv).write_text(report.to_csv_text())
    print(f"wrote CSV to {_resolve(args.csv)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqtimenet",
        description="OFDM channel estimation over 3GPP TDL channels")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a mixed-scenario dataset")
    g.add_argument("--config", help="key=value defaults file")
    g.add_argument("--samples", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--split", choices=("train", "val", "test"),
                   default="train")
    g.add_argument("--models", default="TDL_A,TDL_B,TDL_C,TDL_D,TDL_E")
    g.add_argument("--ds-range", default="0,300",
                   help="delay spread range in ns, lo,hi")
    g.add_argument("--speed-range", default="0,50",
                   help="speed range in km/h, lo,hi")
    g.add_argument("--snr-grid", default="0,5,10,15,20")
    g.add_argument("--carrier-hz", type=float, default=3.5e9)
    g.add_argument("--noiseless", action="store_true")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train an estimator network")
    t.add_argument("--config", help="key=value defaults file")
    t.add_argument("--variant", choices=("freqtime", "atten"),
                   default="freqtime")
    t.add_argument("--data", required=True)
    t.add_argument("--val")
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--batch", type=int, default=128)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--l-group", type=int, default=12)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="per-SNR MSE evaluation")
    e.add_argument("--config", help="key=value defaults file")
    e.add_argument("--model", help="path to a trained .ftnn checkpoint")
    e.add_argument("--baseline", action="store_true",
                   help="evaluate the LS + bilinear baseline instead")
    e.add_argument("--data", help="FTDS test dataset")
    e.add_argument("--scenario", choices=tuple(SCENARIOS))
    e.add_argument("--speed", type=float, default=3.0)
    e.add_argument("--per-snr", type=int, default=2000)
    e.add_argument("--snr-grid", default="0,5,10,15,20")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="JSON report path")
    e.add_argument("--csv", help="CSV path (snr_db,mse,n_samples)")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("complexity", help="parameter/FLOP accounting")
    c.add_argument("--variant", choices=("freqtime", "atten"),
                   default="freqtime")
    c.add_argument("--l-group", type=int, default=12)
    c.set_defaults(func=cmd_complexity)

    x = sub.add_parser("export", help="convert a JSON report to CSV")
    x.add_argument("--report", required=True)
    x.add_argument("--csv", required=True)
    x.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # Apply config-file defaults before the real parse so flags still win.
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        values = _load_config_file(cfg_path)
        for action in parser._subparsers._group_actions[0].choices.values():
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in values.items()
                                   if k in known})
            for a in action._actions:
                if a.dest in values:
                    a.required = False
    args = parser.parse_args(argv)
    if args.command == "eval" and not args.baseline and not args.model:
        parser.error("eval needs --model or --baseline")
    # argparse defaults injected from the config file arrive as strings
    for name in ("samples", "seed", "epochs", "batch", "per_snr", "l_group"):
        if hasattr(args, name) and isinstance(getattr(args, name), str):
            setattr(args, name, int(getattr(args, name)))
    for name in ("lr", "carrier_hz", "speed"):
        if hasattr(args, name) and isinstance(getattr(args, name), str):
            setattr(args, name, float(getattr(args, name)))
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

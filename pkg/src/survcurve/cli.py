"""Command-line front end.

Every setting is a namespaced key (``model.hidden_size``, ``data.window``,
``predict.method``...).  Values resolve as built-in defaults, then values
stored in a checkpoint (predict / sweep-threshold), then a ``key = value``
config file, then ``--key value`` flags.  The resolved settings are written
next to each command's outputs.

Exit codes: 0 success, 1 runtime failure, 2 configuration or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    ConfigurationError,
    CsvSchema,
    DataError,
    IntegrityError,
    SplitSpec,
    CovariateScaler,
    apply_scaler,
    fit_scaler,
    load_longitudinal_csv,
    load_static_csv,
    split_cohort,
    truncate_horizon,
    write_longitudinal_csv,
)
from .metrics import UndefinedMetricError, evaluate
from .model import ModelConfig, ModelConfigError, load_checkpoint, predict_curves, train
from .model.checkpoint import dumps_checkpoint
from .model.training import TrainingError
from .predict import INFLECTION, THRESHOLD, ensemble_predictions, fit_threshold, predicted_times
from .survival import InvalidInputError
from .synthetic import SyntheticSpec, generate_cohort, write_oracle_csv


class ConfigError(ValueError):
    pass


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    if text is None or str(text).strip().lower() in ("", "none", "0"):
        return None
    return int(text)


_MODEL_DEFAULTS = ModelConfig()

# key -> (parser, default)
KEYS: dict[str, tuple] = {
    "seed": (int, 0),
    "synth.n": (int, 2000),
    "synth.horizon": (int, 20),
    "synth.d": (int, 5),
    "synth.beta": (str, ""),
    "synth.gamma": (float, 0.2),
    "synth.tau": (float, -0.5),
    "synth.base_logit": (float, -5.0),
    "synth.treat_prob": (float, 0.5),
    "synth.censor_hazard": (float, 0.01),
    "data.format": (str, "longitudinal"),
    "data.window": (int, 50),
    "data.max_steps": (int, 0),
    "data.horizon": (int, 0),
    "data.step_label": (str, "interval"),
    "data.train_fraction": (float, 0.7),
    "data.validation_fraction": (float, 0.1),
    "data.test_fraction": (float, 0.2),
    "train.fit_threshold": (_bool, True),
    "predict.method": (str, INFLECTION),
    "predict.smoothing_window": (int, 3),
    "predict.split": (str, "all"),
    "predict.mc_samples": (int, 0),
    "sweep.thetas": (str, "0.90,0.95,0.99,0.999,0.9999"),
}
for _f in fields(ModelConfig):
    if _f.name == "seed":
        continue
    _default = getattr(_MODEL_DEFAULTS, _f.name)
    if _f.name == "history_length":
        KEYS["model.history_length"] = (_opt_int, None)
    else:
        KEYS[f"model.{_f.name}"] = (type(_default), _default)

COMMAND_KEYS = {
    "synth": ("seed", "synth."),
    "train": ("seed", "data.", "model.", "train."),
    "predict": ("seed", "data.", "predict."),
    "evaluate": ("seed", "data.", "predict.split"),
    "sweep-threshold": ("seed", "data.", "predict.split", "predict.mc_samples", "sweep."),
}


def keys_for(command: str) -> list[str]:
    prefixes = COMMAND_KEYS[command]
    return [k for k in KEYS if any(k == p or (p.endswith(".") and k.startswith(p)) for p in prefixes)]


def read_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(command: str, file_values: dict, flag_values: dict, stored: dict | None = None) -> dict:
    allowed = keys_for(command)
    resolved = {k: KEYS[k][1] for k in allowed}
    for layer in (stored or {}, file_values, flag_values):
        for key, value in layer.items():
            if key not in allowed:
                continue
            try:
                resolved[key] = KEYS[key][0](value) if value is not None else None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return resolved


def format_config(resolved: dict) -> str:
    return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in sorted(resolved.items()))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- data plumbing -----------------------------------------------------------

def load_cohort(path, cfg: dict):
    if cfg["data.format"] == "static":
        cohort = load_static_csv(path, cfg["data.window"])
    elif cfg["data.format"] == "longitudinal":
        schema = CsvSchema(horizon=cfg["data.horizon"] or None, step_label=cfg["data.step_label"])
        cohort = load_longitudinal_csv(path, schema)
    else:
        raise ConfigError(f"data.format must be 'longitudinal' or 'static', got {cfg['data.format']!r}")
    if cfg["data.max_steps"]:
        cohort = truncate_horizon(cohort, cfg["data.max_steps"])
    return cohort


def split_of(cohort, cfg: dict):
    spec = SplitSpec(cfg["data.train_fraction"], cfg["data.validation_fraction"], cfg["data.test_fraction"],
                     cfg["seed"])
    return dict(zip(("train", "validation", "test"), split_cohort(cohort, spec)))


def select_split(cohort, cfg: dict):
    which = cfg["predict.split"]
    if which == "all":
        return cohort
    parts = split_of(cohort, cfg)
    if which not in parts:
        raise ConfigError(f"predict.split must be all, train, validation or test, got {which!r}")
    return parts[which]


def model_config(cfg: dict) -> ModelConfig:
    kw = {f.name: cfg[f"model.{f.name}"] for f in fields(ModelConfig) if f.name != "seed"}
    return ModelConfig(seed=cfg["seed"], **kw)


# --- subcommands -------------------------------------------------------------

def cmd_synth(cfg: dict, out: Path) -> None:
    beta = tuple(float(b) for b in cfg["synth.beta"].split(",")) if cfg["synth.beta"].strip() else None
    spec = SyntheticSpec(
        n=cfg["synth.n"], horizon=cfg["synth.horizon"], d=cfg["synth.d"], beta=beta, gamma=cfg["synth.gamma"],
        tau=cfg["synth.tau"], base_logit=cfg["synth.base_logit"], treat_prob=cfg["synth.treat_prob"],
        censor_hazard=cfg["synth.censor_hazard"], seed=cfg["seed"],
    )
    cohort, oracle = generate_cohort(spec)
    with tempfile.TemporaryDirectory() as tmp:
        write_longitudinal_csv(cohort, Path(tmp) / "c.csv")
        write_oracle_csv(oracle, Path(tmp) / "o.csv")
        write_atomic(out / "cohort.csv", (Path(tmp) / "c.csv").read_text(encoding="utf-8"))
        write_atomic(out / "oracle.csv", (Path(tmp) / "o.csv").read_text(encoding="utf-8"))


def _data_settings(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k.startswith("data.") or k == "seed"}


def cmd_train(cfg: dict, out: Path, data_path) -> None:
    cohort = load_cohort(data_path, cfg)
    parts = split_of(cohort, cfg)
    scaler = fit_scaler(parts["train"])
    tr, va = (apply_scaler(scaler, parts[k]) for k in ("train", "validation"))
    config = model_config(cfg)
    params, report = train(config, tr, va)
    extra = {
        "data": _data_settings(cfg),
        "covariate_names": list(cohort.covariate_names),
        "scaler": {"mean": scaler.mean.tolist(), "scale": scaler.scale.tolist()},
        "theta": None,
    }
    if cfg["train.fit_threshold"]:
        ens = predict_curves(params, config, tr)
        extra["theta"] = fit_threshold(ens.mean, tr.times).theta_star
    write_atomic(out / "checkpoint.json", dumps_checkpoint(
        params, config, n_covariates=len(cohort.covariate_names), horizon=cohort.grid.horizon, extra=extra))
    write_atomic(out / "train_report.json", json.dumps(report.to_dict(), indent=2) + "\n")


def _load_for_inference(checkpoint, data_path, cfg):
    params, config, doc = checkpoint
    cohort = select_split(load_cohort(data_path, cfg), cfg)
    if cohort.grid.horizon != doc["horizon"]:
        raise ConfigError(f"data horizon {cohort.grid.horizon} != checkpoint horizon {doc['horizon']}")
    sc = doc["extra"]["scaler"]
    cohort = apply_scaler(CovariateScaler(np.array(sc["mean"]), np.array(sc["scale"])), cohort)
    k = cfg.get("predict.mc_samples") or None
    return cohort, predict_curves(params, config, cohort, mc_samples=k)


def cmd_predict(cfg: dict, out: Path, checkpoint, data_path) -> None:
    method = cfg["predict.method"]
    if method not in (INFLECTION, THRESHOLD):
        raise ConfigError(f"predict.method must be inflection or threshold, got {method!r}")
    theta = checkpoint[2]["extra"].get("theta")
    if method == THRESHOLD and theta is None:
        raise ConfigError("threshold prediction needs a threshold fitted at training time")
    cohort, ens = _load_for_inference(checkpoint, data_path, cfg)
    t_hat, spread, _ = ensemble_predictions(ens.samples, method, theta=theta,
                                            smoothing_window=cfg["predict.smoothing_window"])
    write_atomic(out / "predictions.csv", _csv_text(
        ["id", "t_hat", "spread", "method"],
        ([rid, int(t), repr(float(s)), method] for rid, t, s in zip(ens.ids, t_hat, spread))))
    mean, std = ens.mean, ens.std
    write_atomic(out / "curves.csv", _csv_text(
        ["id", "t", "S_mean", "S_std"],
        ([rid, t + 1, repr(float(mean[i, t])), repr(float(std[i, t]))]
         for i, rid in enumerate(ens.ids) for t in range(mean.shape[1]))))


def _read_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_evaluate(cfg: dict, out: Path, predictions_dir, data_path) -> None:
    pdir = Path(predictions_dir)
    cohort = select_split(load_cohort(data_path, cfg), cfg)
    horizon = cohort.grid.horizon
    preds = {r["id"]: r for r in _read_csv(pdir / "predictions.csv")}
    curves: dict[str, np.ndarray] = {}
    for row in _read_csv(pdir / "curves.csv"):
        t = int(row["t"])
        if not 1 <= t <= horizon:
            raise DataError(f"curve row for id {row['id']!r} has t={t} outside [1, {horizon}]")
        curves.setdefault(row["id"], np.full(horizon, np.nan))[t - 1] = float(row["S_mean"])
    for rid in cohort.ids:
        if rid not in preds or rid not in curves:
            raise IntegrityError(f"id {rid!r} has no prediction")
        if np.isnan(curves[rid]).any():
            raise IntegrityError(f"incomplete curve for id {rid!r}")
    ids = cohort.ids
    report = evaluate(
        np.array([curves[i] for i in ids]),
        np.array([int(preds[i]["t_hat"]) for i in ids]),
        np.array([float(preds[i]["spread"]) for i in ids]),
        cohort.times, cohort.events,
    )
    write_atomic(out / "metrics.json", report.to_json())


def cmd_sweep_threshold(cfg: dict, out: Path, checkpoint, data_path) -> None:
    try:
        thetas = [float(x) for x in cfg["sweep.thetas"].split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep.thetas: {exc}") from None
    if not thetas:
        raise ConfigError("sweep.thetas is empty")
    if any(not 0.0 < t < 1.0 for t in thetas):
        raise ConfigError("every threshold must lie in (0, 1)")
    cohort, ens = _load_for_inference(checkpoint, data_path, cfg)
    rows = sweep_rows(ens.mean, cohort.times, thetas)
    write_atomic(out / "sweep.csv", _csv_text(
        ["theta", "mean_signed_error", "mean_absolute_error"],
        ([repr(t), repr(s), repr(a)] for t, s, a in rows)))


def sweep_rows(curves, times, thetas):
    """``(theta, mean signed error, mean absolute error)`` of threshold predictions."""
    times = np.asarray(times)
    rows = []
    for theta in thetas:
        err = predicted_times(curves, THRESHOLD, theta=theta) - times
        rows.append((float(theta), float(err.mean()), float(np.abs(err).mean())))
    return rows


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survcurve", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"survcurve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "synth": [],
        "train": ["data"],
        "predict": ["checkpoint", "data"],
        "evaluate": ["predictions", "data"],
        "sweep-threshold": ["checkpoint", "data"],
    }
    for name, positionals in specs.items():
        p = sub.add_parser(name)
        for pos in positionals:
            p.add_argument(pos)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--out", default=".", help="output directory")
        for key in keys_for(name):
            p.add_argument(f"--{key}", dest=key.replace(".", "__"), default=None, metavar="VALUE")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {k: getattr(args, k.replace(".", "__")) for k in keys_for(args.command)}
        flags = {k: v for k, v in flags.items() if v is not None}
        checkpoint = None
        stored = None
        if args.command in ("predict", "sweep-threshold"):
            checkpoint = load_checkpoint(args.checkpoint)
            stored = checkpoint[2]["extra"].get("data")
        cfg = resolve(args.command, file_values, flags, stored)
        write_atomic(out / f"{args.command}_config.txt", format_config(cfg))
        if args.command == "synth":
            cmd_synth(cfg, out)
        elif args.command == "train":
            cmd_train(cfg, out, args.data)
        elif args.command == "predict":
            cmd_predict(cfg, out, checkpoint, args.data)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, out, args.predictions, args.data)
        else:
            cmd_sweep_threshold(cfg, out, checkpoint, args.data)
    except (ConfigError, ConfigurationError, ModelConfigError, DataError, InvalidInputError,
            UndefinedMetricError, FileNotFoundError) as exc:
        print(f"survcurve {args.command}: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, OSError, RuntimeError) as exc:
        print(f"survcurve {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

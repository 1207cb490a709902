"""JSON checkpoints.  Floats are written with ``repr`` precision, so a save/load round trip is bit-exact."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .network import PARAM_NAMES, ModelParams

FORMAT = "survcurve-checkpoint"
VERSION = 1


def checkpoint_dict(params: ModelParams, config: ModelConfig, *, n_covariates: int, horizon: int,
                    extra: dict | None = None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": config.to_dict(),
        "n_covariates": int(n_covariates),
        "horizon": int(horizon),
        "params": {k: {"shape": list(params[k].shape), "data": params[k].ravel().tolist()} for k in PARAM_NAMES},
        "extra": extra or {},
    }


def dumps_checkpoint(params, config, **kw) -> str:
    return json.dumps(checkpoint_dict(params, config, **kw), sort_keys=True)


def save_checkpoint(path, params: ModelParams, config: ModelConfig, *, n_covariates: int, horizon: int,
                    extra: dict | None = None) -> None:
    Path(path).write_text(dumps_checkpoint(params, config, n_covariates=n_covariates, horizon=horizon,
                                           extra=extra), encoding="utf-8")


def loads_checkpoint(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError("not a survcurve checkpoint")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    config = ModelConfig(**doc["config"])
    params = ModelParams(
        {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in doc["params"].items()}
    )
    return params, config, doc


def load_checkpoint(path):
    """Return ``(params, config, document)``; the document carries horizon, D and extras."""
    return loads_checkpoint(Path(path).read_text(encoding="utf-8"))

"""Versioned JSON persistence for trained detector models.

One self-contained document holds the schema version, the effective run
configuration, normalizer statistics, every belief-network layer and
LSTM parameter (matrices as row-major flat lists) and the calibrated
threshold. Floats are written at full round-trip precision, so
load(save(model)) reproduces each parameter bit-exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .config import RunConfig
from .dbn import DbnModel
from .detector import DetectorModel
from .errors import InputError
from .lstm import PARAM_FIELDS, LstmModel
from .rbm import RbmKind, RbmParams
from .traffic import Normalizer

SCHEMA_VERSION = 1


def _flat(array: np.ndarray) -> list:
    return np.asarray(array, dtype=np.float64).ravel().tolist()


def save_model(path, model: DetectorModel, config: RunConfig):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "normalizer": {
            "feat_min": _flat(model.normalizer.feat_min),
            "feat_max": _flat(model.normalizer.feat_max),
            "unit_mean": _flat(model.normalizer.unit_mean),
            "unit_std": _flat(model.normalizer.unit_std),
        },
        "dbn_layers": [
            {
                "kind": layer.kind.value,
                "num_visible": layer.num_visible,
                "num_hidden": layer.num_hidden,
                "weights": _flat(layer.weights),
                "visible_bias": _flat(layer.visible_bias),
                "hidden_bias": _flat(layer.hidden_bias),
            }
            for layer in model.dbn.layers
        ],
        "lstm": {
            "input_dim": model.lstm.input_dim,
            "hidden_dim": model.lstm.hidden_dim,
            **{name: _flat(getattr(model.lstm, name)) for name in PARAM_FIELDS},
        },
        "threshold": model.threshold,
        "lookback": model.lookback,
        "window_len": model.window_len,
        "residual_stats": {"mean": model.residual_mean, "std": model.residual_std},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def _vector(doc: dict, key: str, length: int, what: str) -> np.ndarray:
    values = np.array(doc.get(key, []), dtype=np.float64)
    if values.shape != (length,):
        raise InputError(f"{what}: field {key!r} must hold {length} numbers")
    return values


def _matrix(doc: dict, key: str, rows: int, cols: int, what: str) -> np.ndarray:
    return _vector(doc, key, rows * cols, what).reshape(rows, cols)


def load_model(path) -> tuple[DetectorModel, RunConfig]:
    """Read a model file; a schema_version other than 1 is rejected before
    any parameter is parsed."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError(
            f"{path}: unsupported schema_version {version!r}; "
            f"this build reads version {SCHEMA_VERSION}"
        )
    try:
        config = RunConfig.from_dict(doc["config"])
        norm_doc = doc["normalizer"]
        dims = len(norm_doc.get("feat_min", []))
        normalizer = Normalizer(
            feat_min=_vector(norm_doc, "feat_min", dims, "normalizer"),
            feat_max=_vector(norm_doc, "feat_max", dims, "normalizer"),
            unit_mean=_vector(norm_doc, "unit_mean", dims, "normalizer"),
            unit_std=_vector(norm_doc, "unit_std", dims, "normalizer"),
        )
        layers = []
        for index, layer_doc in enumerate(doc["dbn_layers"]):
            what = f"dbn layer {index}"
            try:
                kind = RbmKind(layer_doc.get("kind"))
            except ValueError:
                raise InputError(f"{what}: unknown kind "
                                 f"{layer_doc.get('kind')!r}") from None
            visible = int(layer_doc["num_visible"])
            hidden = int(layer_doc["num_hidden"])
            layers.append(RbmParams(
                kind=kind,
                weights=_matrix(layer_doc, "weights", visible, hidden, what),
                visible_bias=_vector(layer_doc, "visible_bias", visible, what),
                hidden_bias=_vector(layer_doc, "hidden_bias", hidden, what),
            ))
        dbn = DbnModel(layers=layers)
        lstm_doc = doc["lstm"]
        d = int(lstm_doc["input_dim"])
        n = int(lstm_doc["hidden_dim"])
        lstm = LstmModel(
            input_dim=d, hidden_dim=n,
            w_f=_matrix(lstm_doc, "w_f", n, n + d, "lstm"),
            w_i=_matrix(lstm_doc, "w_i", n, n + d, "lstm"),
            w_c=_matrix(lstm_doc, "w_c", n, n + d, "lstm"),
            w_o=_matrix(lstm_doc, "w_o", n, n + d, "lstm"),
            b_f=_vector(lstm_doc, "b_f", n, "lstm"),
            b_i=_vector(lstm_doc, "b_i", n, "lstm"),
            b_c=_vector(lstm_doc, "b_c", n, "lstm"),
            b_o=_vector(lstm_doc, "b_o", n, "lstm"),
            w_y=_matrix(lstm_doc, "w_y", d, n, "lstm"),
            b_y=_vector(lstm_doc, "b_y", d, "lstm"),
        )
        stats = doc["residual_stats"]
        model = DetectorModel(
            normalizer=normalizer, dbn=dbn, lstm=lstm,
            threshold=float(doc["threshold"]),
            lookback=int(doc["lookback"]),
            window_len=float(doc["window_len"]),
            residual_mean=float(stats["mean"]),
            residual_std=float(stats["std"]),
        )
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed model document: {exc}") from exc
    return model, config

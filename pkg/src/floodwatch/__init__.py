"""DDoS detection from windowed traffic features.

A deep belief network (stacked restricted Boltzmann machines, Gaussian
visible units in the first layer) compresses 8-dimensional per-window
traffic features into short codes; an LSTM learns to predict the next
window's code from recent history; windows whose prediction residual
exceeds a calibrated mean + k*sigma threshold are flagged as attacks.
"""

from .config import RunConfig, load_config
from .dbn import DbnModel, new_dbn, pretrain, transform
from .detector import (
    DetectionReport,
    DetectorModel,
    FitSummary,
    Metrics,
    WindowScore,
    calibrate_threshold,
    detect,
    evaluate,
    fit,
    fit_detailed,
    score,
)
from .errors import InputError, NumericError
from .lstm import (
    LstmModel,
    LstmState,
    TrainConfig,
    cell_forward,
    grad_check,
    init_lstm,
    loss_mse,
    sequence_forward,
    train_lstm,
)
from .model_io import SCHEMA_VERSION, load_model, save_model
from .rbm import (
    CdConfig,
    RbmKind,
    RbmParams,
    cd1_step,
    energy_bernoulli,
    energy_gaussian,
    hidden_given_visible,
    init_rbm,
    sample_binary,
    train_rbm,
    visible_given_hidden,
)
from .traffic import (
    FEATURE_NAMES,
    AttackInterval,
    AttackKind,
    FeatureVector,
    Normalizer,
    PacketRecord,
    Protocol,
    Scenario,
    extract_features,
    fit_normalizer,
    generate_traffic,
    normalize,
    parse_packets,
    preprocess,
    preset_scenario,
    standardize,
    windowize,
)

__all__ = [
    "AttackInterval",
    "AttackKind",
    "CdConfig",
    "DbnModel",
    "DetectionReport",
    "DetectorModel",
    "FEATURE_NAMES",
    "FeatureVector",
    "FitSummary",
    "InputError",
    "LstmModel",
    "LstmState",
    "Metrics",
    "Normalizer",
    "NumericError",
    "PacketRecord",
    "Protocol",
    "RbmKind",
    "RbmParams",
    "RunConfig",
    "SCHEMA_VERSION",
    "Scenario",
    "TrainConfig",
    "WindowScore",
    "calibrate_threshold",
    "cd1_step",
    "cell_forward",
    "detect",
    "energy_bernoulli",
    "energy_gaussian",
    "evaluate",
    "extract_features",
    "fit",
    "fit_detailed",
    "fit_normalizer",
    "generate_traffic",
    "grad_check",
    "hidden_given_visible",
    "init_lstm",
    "init_rbm",
    "load_config",
    "load_model",
    "loss_mse",
    "new_dbn",
    "normalize",
    "parse_packets",
    "preprocess",
    "preset_scenario",
    "pretrain",
    "sample_binary",
    "save_model",
    "score",
    "sequence_forward",
    "standardize",
    "train_lstm",
    "train_rbm",
    "transform",
    "visible_given_hidden",
    "windowize",
]

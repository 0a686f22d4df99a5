"""Deep belief network: a stack of RBM layers.

Layer 0 is Gaussian-Bernoulli (it consumes standardized real-valued
feature vectors); every later layer is Bernoulli-Bernoulli and consumes
the hidden activation probabilities of the layer below. Pretraining is
greedy and layer-wise; the feature transform is deterministic mean-field
propagation (probabilities, never samples), so downstream models see
reproducible codes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .rbm import CdConfig, RbmKind, RbmParams, hidden_given_visible, init_rbm, train_rbm


@dataclass
class DbnModel:
    """Ordered RBM stack; layer k's hidden units feed layer k+1's visible units."""

    layers: list[RbmParams]

    def __post_init__(self):
        if not self.layers:
            raise InputError("a DBN needs at least one layer")
        if self.layers[0].kind is not RbmKind.GAUSSIAN_BERNOULLI:
            raise InputError("layer 0 must be Gaussian-Bernoulli")
        for k, layer in enumerate(self.layers[1:], start=1):
            if layer.kind is not RbmKind.BERNOULLI_BERNOULLI:
                raise InputError(f"layer {k} must be Bernoulli-Bernoulli")
            if layer.num_visible != self.layers[k - 1].num_hidden:
                raise InputError(
                    f"layer {k} has {layer.num_visible} visible units but layer "
                    f"{k - 1} has {self.layers[k - 1].num_hidden} hidden units"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].num_visible

    @property
    def code_dim(self) -> int:
        return self.layers[-1].num_hidden


def new_dbn(layer_sizes, rng: np.random.Generator) -> DbnModel:
    """Build an untrained stack from unit counts [input, hidden..., code]."""
    sizes = list(layer_sizes)
    if len(sizes) < 2:
        raise InputError("layer_sizes needs the input size plus at least one hidden size")
    if any(int(s) != s or s < 1 for s in sizes):
        raise InputError("every layer size must be a positive integer")
    layers = []
    for k in range(len(sizes) - 1):
        kind = RbmKind.GAUSSIAN_BERNOULLI if k == 0 else RbmKind.BERNOULLI_BERNOULLI
        layers.append(init_rbm(kind, int(sizes[k]), int(sizes[k + 1]), rng))
    return DbnModel(layers=layers)


def pretrain(dbn: DbnModel, data, config: CdConfig,
             rng: np.random.Generator | None = None) -> tuple[DbnModel, list[np.ndarray]]:
    """Greedy layer-wise CD-1 training.

    Layer k trains on the mean-field transform of the data through the
    already-trained layers 0..k-1. Earlier layers are never revisited.
    Returns the trained stack and one error trace per layer.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != dbn.input_dim:
        raise InputError(
            f"data must be 2-d with {dbn.input_dim} columns, got shape {data.shape}"
        )
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)

    trained: list[RbmParams] = []
    traces: list[np.ndarray] = []
    current = data
    for k, layer in enumerate(dbn.layers):
        try:
            new_layer, trace = train_rbm(layer, current, config, rng)
        except NumericError as exc:
            raise NumericError(f"layer {k}: {exc}") from exc
        trained.append(new_layer)
        traces.append(trace)
        current = hidden_given_visible(new_layer, current)
    return DbnModel(layers=trained), traces


def transform(dbn: DbnModel, v) -> np.ndarray:
    """Deterministic top-layer code of one input vector (or matrix of rows).

    Composes hidden_given_visible across the stack using probabilities,
    so every output entry lies in (0, 1) and no RNG is involved.
    """
    x = np.asarray(v, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != dbn.input_dim:
        raise InputError(
            f"input must have {dbn.input_dim} entries per vector, got shape {x.shape}"
        )
    for layer in dbn.layers:
        x = hidden_given_visible(layer, x)
    return x

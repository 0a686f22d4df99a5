"""LSTM sequence model for one-step-ahead prediction.

Implements the standard gated cell

    f_t = sigmoid(W_f [h_{t-1}, x_t] + b_f)          forget gate
    i_t = sigmoid(W_i [h_{t-1}, x_t] + b_i)          input gate
    g_t = tanh   (W_c [h_{t-1}, x_t] + b_c)          candidate cell
    c_t = f_t * c_{t-1} + i_t * g_t                  cell state
    o_t = sigmoid(W_o [h_{t-1}, x_t] + b_o)          output gate
    h_t = o_t * tanh(c_t)

with an affine readout y_t = W_y h_t + b_y at every step, mean-squared
error loss, exact backpropagation through time, central-difference
gradient checking, and full-batch gradient descent with global-norm
clipping. Everything is plain float64 numpy and deterministic.

``train_lstm`` runs a vectorized implementation that processes all
equal-length sequences at once; it computes the same loss and gradients
as looping ``sequence_forward``/``backward_bptt`` per sequence (up to
float summation order) and falls back to that loop for mixed lengths.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .numerics import require_finite, sigmoid

PARAM_FIELDS = ("w_f", "w_i", "w_c", "w_o",
                "b_f", "b_i", "b_c", "b_o",
                "w_y", "b_y")


@dataclass
class LstmModel:
    """Gate weights over the concatenation [h_prev, x], plus the readout.

    Each gate matrix is hidden_dim x (hidden_dim + input_dim); the
    readout maps hidden states back to input_dim-sized predictions.
    """

    input_dim: int
    hidden_dim: int
    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_y: np.ndarray
    b_y: np.ndarray

    def __post_init__(self):
        n, d = self.hidden_dim, self.input_dim
        if n < 1 or d < 1:
            raise InputError("input_dim and hidden_dim must be at least 1")
        shapes = {"w_f": (n, n + d), "w_i": (n, n + d), "w_c": (n, n + d),
                  "w_o": (n, n + d), "b_f": (n,), "b_i": (n,), "b_c": (n,),
                  "b_o": (n,), "w_y": (d, n), "b_y": (d,)}
        for name in PARAM_FIELDS:
            arr = np.array(getattr(self, name), dtype=np.float64)
            setattr(self, name, arr)
            if arr.shape != shapes[name]:
                raise InputError(f"{name} must have shape {shapes[name]}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite entries")


@dataclass
class LstmState:
    """Recurrent state carried between steps: hidden output and cell state."""

    hidden: np.ndarray
    cell: np.ndarray


@dataclass
class Gates:
    """Gate activations of one step, cached for backpropagation."""

    forget: np.ndarray
    input: np.ndarray
    candidate: np.ndarray
    output: np.ndarray


@dataclass
class SequenceCache:
    """Everything the backward pass needs, recorded per step (first axis = time)."""

    inputs: np.ndarray      # (T, D)
    concat: np.ndarray      # (T, N + D), [h_{t-1}, x_t]
    forget: np.ndarray      # (T, N)
    input_gate: np.ndarray  # (T, N)
    candidate: np.ndarray   # (T, N)
    output_gate: np.ndarray  # (T, N)
    cell: np.ndarray        # (T, N)
    tanh_cell: np.ndarray   # (T, N)
    hidden: np.ndarray      # (T, N)
    preds: np.ndarray       # (T, D)
    init_cell: np.ndarray   # (N,)


@dataclass
class LstmGrads:
    """Loss gradients, one array per model parameter."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_y: np.ndarray
    b_y: np.ndarray


@dataclass
class TrainConfig:
    """Hyperparameters for full-batch LSTM training."""

    learning_rate: float
    epochs: int
    sequence_length: int
    rng_seed: int
    gradient_clip: float

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InputError("learning_rate must be non-negative")
        if self.epochs < 0:
            raise InputError("epochs must be non-negative")
        if self.sequence_length < 2:
            raise InputError("sequence_length must be at least 2")
        if not self.gradient_clip > 0:
            raise InputError("gradient_clip must be positive")


def zero_state(hidden_dim: int) -> LstmState:
    return LstmState(hidden=np.zeros(hidden_dim), cell=np.zeros(hidden_dim))


def zero_grads(model: LstmModel) -> LstmGrads:
    return LstmGrads(**{name: np.zeros_like(getattr(model, name))
                        for name in PARAM_FIELDS})


def init_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmModel:
    """Random model: weights N(0, 0.1/sqrt(N+D)), zero biases except b_f = 1.

    The forget-gate bias starts at one so early training does not erase
    the cell state.
    """
    n, d = hidden_dim, input_dim
    scale = 0.1 / np.sqrt(n + d)
    return LstmModel(
        input_dim=d, hidden_dim=n,
        w_f=rng.normal(0.0, scale, (n, n + d)),
        w_i=rng.normal(0.0, scale, (n, n + d)),
        w_c=rng.normal(0.0, scale, (n, n + d)),
        w_o=rng.normal(0.0, scale, (n, n + d)),
        b_f=np.ones(n), b_i=np.zeros(n), b_c=np.zeros(n), b_o=np.zeros(n),
        w_y=rng.normal(0.0, scale, (d, n)),
        b_y=np.zeros(d),
    )


def cell_forward(model: LstmModel, x, prev: LstmState) -> tuple[LstmState, Gates]:
    """One step of the gated recurrence; returns the new state and the gates."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise InputError(f"x must have shape ({model.input_dim},), got {x.shape}")
    if prev.hidden.shape != (model.hidden_dim,) or prev.cell.shape != (model.hidden_dim,):
        raise InputError("previous state does not match hidden_dim")
    require_finite(prev.hidden, "previous hidden state")
    require_finite(prev.cell, "previous cell state")

    z = np.concatenate([prev.hidden, x])
    forget = sigmoid(model.w_f @ z + model.b_f)
    input_gate = sigmoid(model.w_i @ z + model.b_i)
    candidate = np.tanh(model.w_c @ z + model.b_c)
    cell = forget * prev.cell + input_gate * candidate
    output_gate = sigmoid(model.w_o @ z + model.b_o)
    hidden = output_gate * np.tanh(cell)
    require_finite(cell, "cell state")
    require_finite(hidden, "hidden state")
    return (LstmState(hidden=hidden, cell=cell),
            Gates(forget=forget, input=input_gate, candidate=candidate,
                  output=output_gate))


def sequence_forward(model: LstmModel, xs,
                     init: LstmState | None = None) -> tuple[np.ndarray, SequenceCache]:
    """Run the cell over a sequence and read out a prediction at every step.

    ``xs`` is a (T, input_dim) array or list of vectors. Returns the
    (T, input_dim) prediction matrix and the cache for backward_bptt.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != model.input_dim:
        raise InputError(
            f"xs must be (T, {model.input_dim}), got shape {xs.shape}"
        )
    if xs.shape[0] == 0:
        raise InputError("xs must contain at least one step")
    steps, dim = xs.shape
    n = model.hidden_dim
    state = init if init is not None else zero_state(n)

    cache = SequenceCache(
        inputs=xs,
        concat=np.zeros((steps, n + dim)),
        forget=np.zeros((steps, n)),
        input_gate=np.zeros((steps, n)),
        candidate=np.zeros((steps, n)),
        output_gate=np.zeros((steps, n)),
        cell=np.zeros((steps, n)),
        tanh_cell=np.zeros((steps, n)),
        hidden=np.zeros((steps, n)),
        preds=np.zeros((steps, dim)),
        init_cell=state.cell.copy(),
    )
    for t in range(steps):
        cache.concat[t] = np.concatenate([state.hidden, xs[t]])
        try:
            state, gates = cell_forward(model, xs[t], state)
        except NumericError as exc:
            raise NumericError(f"step {t}: {exc}") from exc
        cache.forget[t] = gates.forget
        cache.input_gate[t] = gates.input
        cache.candidate[t] = gates.candidate
        cache.output_gate[t] = gates.output
        cache.cell[t] = state.cell
        cache.tanh_cell[t] = np.tanh(state.cell)
        cache.hidden[t] = state.hidden
        cache.preds[t] = model.w_y @ state.hidden + model.b_y
    return cache.preds.copy(), cache


def loss_mse(pred, target) -> float:
    """Mean over all steps and dimensions of the squared prediction error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InputError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise InputError("loss needs at least one step")
    return float(np.mean((pred - target) ** 2))


def backward_bptt(model: LstmModel, cache: SequenceCache, targets) -> LstmGrads:
    """Exact gradients of loss_mse(preds, targets) w.r.t. every parameter.

    Reverse-mode sweep over the cached activations; the cell-state path
    carries d_cell * forget backwards, the hidden path re-enters through
    the four gate matrices.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != cache.preds.shape:
        raise InputError(
            f"targets shape {targets.shape} != predictions shape {cache.preds.shape}"
        )
    steps, dim = cache.preds.shape
    n = model.hidden_dim
    grads = zero_grads(model)

    d_pred = 2.0 * (cache.preds - targets) / (steps * dim)
    d_hidden_next = np.zeros(n)
    d_cell_next = np.zeros(n)
    for t in reversed(range(steps)):
        dy = d_pred[t]
        grads.w_y += np.outer(dy, cache.hidden[t])
        grads.b_y += dy
        d_hidden = model.w_y.T @ dy + d_hidden_next

        tanh_c = cache.tanh_cell[t]
        out_gate = cache.output_gate[t]
        d_out = d_hidden * tanh_c
        d_cell = d_hidden * out_gate * (1.0 - tanh_c ** 2) + d_cell_next

        prev_cell = cache.cell[t - 1] if t > 0 else cache.init_cell
        forget = cache.forget[t]
        in_gate = cache.input_gate[t]
        candidate = cache.candidate[t]
        d_forget = d_cell * prev_cell
        d_input = d_cell * candidate
        d_candidate = d_cell * in_gate

        da_f = d_forget * forget * (1.0 - forget)
        da_i = d_input * in_gate * (1.0 - in_gate)
        da_c = d_candidate * (1.0 - candidate ** 2)
        da_o = d_out * out_gate * (1.0 - out_gate)

        z = cache.concat[t]
        grads.w_f += np.outer(da_f, z)
        grads.w_i += np.outer(da_i, z)
        grads.w_c += np.outer(da_c, z)
        grads.w_o += np.outer(da_o, z)
        grads.b_f += da_f
        grads.b_i += da_i
        grads.b_c += da_c
        grads.b_o += da_o

        dz = (model.w_f.T @ da_f + model.w_i.T @ da_i
              + model.w_c.T @ da_c + model.w_o.T @ da_o)
        d_hidden_next = dz[:n]
        d_cell_next = d_cell * forget

    for name in PARAM_FIELDS:
        require_finite(getattr(grads, name), f"gradient of {name}")
    return grads


def grad_check(model: LstmModel, xs, targets, eps: float = 1e-5,
               analytic: LstmGrads | None = None) -> float:
    """Max relative error of the analytic gradients vs central differences.

    Relative error per entry is |a - n| / max(|a|, |n|, 1e-12). Pass
    ``analytic`` to check a candidate gradient instead of the one
    computed by backward_bptt; the numeric side only ever calls
    sequence_forward and loss_mse.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    if analytic is None:
        _, cache = sequence_forward(model, xs)
        analytic = backward_bptt(model, cache, targets)

    work = copy.deepcopy(model)
    worst = 0.0
    for name in PARAM_FIELDS:
        flat = getattr(work, name).ravel()
        grad_flat = getattr(analytic, name).ravel()
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + eps
            loss_plus = loss_mse(sequence_forward(work, xs)[0], targets)
            flat[k] = original - eps
            loss_minus = loss_mse(sequence_forward(work, xs)[0], targets)
            flat[k] = original
            numeric = (loss_plus - loss_minus) / (2.0 * eps)
            denom = max(abs(grad_flat[k]), abs(numeric), 1e-12)
            worst = max(worst, abs(grad_flat[k] - numeric) / denom)
    return worst


def gradcheck_instance(seed: int, input_dim: int = 2, hidden_dim: int = 3,
                       steps: int = 5) -> tuple[LstmModel, np.ndarray, np.ndarray]:
    """Seeded random model and sequence sized for finite-difference checks.

    Parameters are drawn at scale 0.5 rather than the small training
    initialization: near-zero gradient entries sit at the noise floor of
    central differences, which would inflate the relative error for
    reasons unrelated to backprop correctness.
    """
    rng = np.random.default_rng(seed)
    d, n = input_dim, hidden_dim
    scale = 0.5
    model = LstmModel(
        input_dim=d, hidden_dim=n,
        w_f=rng.normal(0.0, scale, (n, n + d)),
        w_i=rng.normal(0.0, scale, (n, n + d)),
        w_c=rng.normal(0.0, scale, (n, n + d)),
        w_o=rng.normal(0.0, scale, (n, n + d)),
        b_f=rng.normal(0.0, scale, n),
        b_i=rng.normal(0.0, scale, n),
        b_c=rng.normal(0.0, scale, n),
        b_o=rng.normal(0.0, scale, n),
        w_y=rng.normal(0.0, scale, (d, n)),
        b_y=rng.normal(0.0, scale, d),
    )
    xs = rng.normal(size=(steps, d))
    targets = rng.normal(size=(steps, d))
    return model, xs, targets


def gradient_global_norm(grads: LstmGrads) -> float:
    """Euclidean norm over every gradient entry of every parameter."""
    total = 0.0
    for name in PARAM_FIELDS:
        arr = getattr(grads, name)
        total += float(np.sum(arr * arr))
    return float(np.sqrt(total))


def clip_gradients(grads: LstmGrads, max_norm: float) -> LstmGrads:
    """Scale all gradients down together so the global norm is at most max_norm."""
    norm = gradient_global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return LstmGrads(**{name: getattr(grads, name) * scale for name in PARAM_FIELDS})


def apply_gradients(model: LstmModel, grads: LstmGrads, learning_rate: float) -> LstmModel:
    updated = {name: getattr(model, name) - learning_rate * getattr(grads, name)
               for name in PARAM_FIELDS}
    return LstmModel(input_dim=model.input_dim, hidden_dim=model.hidden_dim, **updated)


@dataclass
class _BatchCache:
    # Time-major batched activations; shapes (T, B, ...)
    inputs: np.ndarray
    concat: np.ndarray
    forget: np.ndarray
    input_gate: np.ndarray
    candidate: np.ndarray
    output_gate: np.ndarray
    cell: np.ndarray
    tanh_cell: np.ndarray
    hidden: np.ndarray
    preds: np.ndarray


def _forward_batch(model: LstmModel, inputs: np.ndarray) -> _BatchCache:
    """Run the recurrence over a (B, T, D) batch from zero initial state."""
    batch, steps, dim = inputs.shape
    n = model.hidden_dim
    cache = _BatchCache(
        inputs=inputs,
        concat=np.zeros((steps, batch, n + dim)),
        forget=np.zeros((steps, batch, n)),
        input_gate=np.zeros((steps, batch, n)),
        candidate=np.zeros((steps, batch, n)),
        output_gate=np.zeros((steps, batch, n)),
        cell=np.zeros((steps, batch, n)),
        tanh_cell=np.zeros((steps, batch, n)),
        hidden=np.zeros((steps, batch, n)),
        preds=np.zeros((steps, batch, dim)),
    )
    hidden = np.zeros((batch, n))
    cell = np.zeros((batch, n))
    for t in range(steps):
        z = np.concatenate([hidden, inputs[:, t, :]], axis=1)
        forget = sigmoid(z @ model.w_f.T + model.b_f)
        in_gate = sigmoid(z @ model.w_i.T + model.b_i)
        candidate = np.tanh(z @ model.w_c.T + model.b_c)
        cell = forget * cell + in_gate * candidate
        out_gate = sigmoid(z @ model.w_o.T + model.b_o)
        tanh_c = np.tanh(cell)
        hidden = out_gate * tanh_c
        cache.concat[t] = z
        cache.forget[t] = forget
        cache.input_gate[t] = in_gate
        cache.candidate[t] = candidate
        cache.output_gate[t] = out_gate
        cache.cell[t] = cell
        cache.tanh_cell[t] = tanh_c
        cache.hidden[t] = hidden
        cache.preds[t] = hidden @ model.w_y.T + model.b_y
    return cache


def _backward_batch(model: LstmModel, cache: _BatchCache,
                    targets: np.ndarray) -> LstmGrads:
    """Gradients of the summed per-sequence MSE; mirrors backward_bptt
    with a batch axis."""
    steps, batch, dim = cache.preds.shape
    n = model.hidden_dim
    grads = zero_grads(model)

    d_pred = 2.0 * (cache.preds - targets) / (steps * dim)
    d_hidden_next = np.zeros((batch, n))
    d_cell_next = np.zeros((batch, n))
    for t in reversed(range(steps)):
        dy = d_pred[t]
        grads.w_y += dy.T @ cache.hidden[t]
        grads.b_y += dy.sum(axis=0)
        d_hidden = dy @ model.w_y + d_hidden_next

        tanh_c = cache.tanh_cell[t]
        out_gate = cache.output_gate[t]
        d_out = d_hidden * tanh_c
        d_cell = d_hidden * out_gate * (1.0 - tanh_c ** 2) + d_cell_next

        prev_cell = cache.cell[t - 1] if t > 0 else np.zeros((batch, n))
        forget = cache.forget[t]
        in_gate = cache.input_gate[t]
        candidate = cache.candidate[t]
        da_f = d_cell * prev_cell * forget * (1.0 - forget)
        da_i = d_cell * candidate * in_gate * (1.0 - in_gate)
        da_c = d_cell * in_gate * (1.0 - candidate ** 2)
        da_o = d_out * out_gate * (1.0 - out_gate)

        z = cache.concat[t]
        grads.w_f += da_f.T @ z
        grads.w_i += da_i.T @ z
        grads.w_c += da_c.T @ z
        grads.w_o += da_o.T @ z
        grads.b_f += da_f.sum(axis=0)
        grads.b_i += da_i.sum(axis=0)
        grads.b_c += da_c.sum(axis=0)
        grads.b_o += da_o.sum(axis=0)

        dz = da_f @ model.w_f + da_i @ model.w_i + da_c @ model.w_c + da_o @ model.w_o
        d_hidden_next = dz[:, :n]
        d_cell_next = d_cell * forget
    return grads


def predict_sequence_batch(model: LstmModel, inputs) -> np.ndarray:
    """Predictions for a (B, T, D) batch of sequences from zero initial state."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3 or inputs.shape[2] != model.input_dim:
        raise InputError(
            f"inputs must be (B, T, {model.input_dim}), got shape {inputs.shape}"
        )
    cache = _forward_batch(model, inputs)
    return np.transpose(cache.preds, (1, 0, 2))


def _check_sequences(model: LstmModel, sequences) -> list[tuple[np.ndarray, np.ndarray]]:
    if not sequences:
        raise InputError("sequences must not be empty")
    checked = []
    for index, pair in enumerate(sequences):
        xs = np.asarray(pair[0], dtype=np.float64)
        targets = np.asarray(pair[1], dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != model.input_dim:
            raise InputError(
                f"sequence {index}: inputs must be (T, {model.input_dim}), "
                f"got shape {xs.shape}"
            )
        if targets.shape != xs.shape:
            raise InputError(
                f"sequence {index}: targets shape {targets.shape} != inputs "
                f"shape {xs.shape}"
            )
        if xs.shape[0] == 0:
            raise InputError(f"sequence {index} is empty")
        checked.append((xs, targets))
    return checked


def _epoch_loss_and_grads(model, pairs, batched):
    if batched:
        inputs = np.stack([xs for xs, _ in pairs])                 # (B, T, D)
        targets = np.stack([tg for _, tg in pairs])
        cache = _forward_batch(model, inputs)
        preds = np.transpose(cache.preds, (1, 0, 2))
        bad = ~np.all(np.isfinite(preds), axis=(1, 2))
        if bad.any():
            raise NumericError(
                f"sequence {int(np.argmax(bad))}: non-finite forward output"
            )
        loss = float(np.mean((preds - targets) ** 2))
        grads = _backward_batch(model, cache, np.transpose(targets, (1, 0, 2)))
        return loss, grads

    total = zero_grads(model)
    loss_sum = 0.0
    for index, (xs, targets) in enumerate(pairs):
        try:
            preds, cache = sequence_forward(model, xs)
            loss_sum += loss_mse(preds, targets)
            grads = backward_bptt(model, cache, targets)
        except NumericError as exc:
            raise NumericError(f"sequence {index}: {exc}") from exc
        for name in PARAM_FIELDS:
            setattr(total, name, getattr(total, name) + getattr(grads, name))
    return loss_sum / len(pairs), total


def train_lstm(model: LstmModel, sequences, config: TrainConfig,
               rng: np.random.Generator | None = None) -> tuple[LstmModel, np.ndarray]:
    """Full-batch gradient descent on the summed per-sequence MSE.

    Each epoch records the mean per-sequence loss at the current
    parameters, clips the gradient of the summed loss to
    config.gradient_clip by global norm, and takes one plain descent
    step. Clipping the sum (not the mean) makes the norm bound, not the
    sequence count, set the worst-case step size. There is no
    stochasticity: ``rng`` is accepted for interface symmetry but never
    drawn from, and identical inputs produce bit-identical trained
    parameters.
    """
    del rng
    pairs = _check_sequences(model, sequences)
    lengths = {xs.shape[0] for xs, _ in pairs}
    batched = len(lengths) == 1

    trace = np.zeros(config.epochs)
    current = model
    for epoch in range(config.epochs):
        try:
            loss, grads = _epoch_loss_and_grads(current, pairs, batched)
        except NumericError as exc:
            raise NumericError(f"epoch {epoch}: {exc}") from exc
        if not np.isfinite(loss):
            raise NumericError(f"epoch {epoch}: non-finite loss")
        for name in PARAM_FIELDS:
            require_finite(getattr(grads, name), f"epoch {epoch}: gradient of {name}")
        trace[epoch] = loss
        grads = clip_gradients(grads, config.gradient_clip)
        current = apply_gradients(current, grads, config.learning_rate)
    return current, trace

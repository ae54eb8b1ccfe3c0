"""From-scratch numerical core.

Hand-written dense feedforward network and stacked LSTM with full analytic
backpropagation, a normal-equations least-squares solver, mini-batch Adam
training, and a central-finite-difference gradient checker. Everything is
float64 and deterministic given seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import TrainingError, ValidationError

MLP_HIDDEN_SIZES = (32, 20, 10)
LSTM_HIDDEN_SIZES = (32, 16, 8)
SEQUENCE_LENGTH = 3
RIDGE_LAMBDA = 1e-8
SERIAL_VERSION = 1


def mse(predictions, labels) -> float:
    predictions = np.asarray(predictions, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if predictions.shape != labels.shape:
        raise ValidationError("mse: shape mismatch")
    if predictions.size == 0:
        raise ValidationError("mse: empty input")
    diff = predictions - labels
    return float(np.mean(diff * diff))


def least_squares_fit(X, y):
    """argmin_w ||Xw - y||^2 via normal equations with a tiny ridge term."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError("least_squares_fit: shape mismatch")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValidationError("least_squares_fit: non-finite input")
    gram = X.T @ X + RIDGE_LAMBDA * np.eye(X.shape[1])
    return np.linalg.solve(gram, X.T @ y)


def _glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValidationError("invalid training configuration")


class MlpModel:
    """Dense network, ReLU hidden layers, linear scalar output."""

    def __init__(self, weights, biases, input_dim):
        self.weights = weights  # list of (d_in, d_out) arrays
        self.biases = biases    # list of (d_out,) arrays
        self.input_dim = input_dim

    @classmethod
    def create(cls, seed: int, input_dim: int = 47, hidden_sizes=MLP_HIDDEN_SIZES):
        rng = np.random.default_rng(seed)
        dims = [input_dim, *hidden_sizes, 1]
        weights = [_glorot_uniform(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
        biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
        return cls(weights, biases, input_dim)

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def forward(self, batch):
        batch = np.asarray(batch, dtype=float)
        if batch.ndim != 2 or batch.shape[1] != self.input_dim:
            raise ValidationError(f"mlp_forward: expected batch of width {self.input_dim}")
        h = batch
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i != last:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def loss_and_gradients(self, batch, labels):
        """(MSE loss, gradients aligned with parameters())."""
        batch = np.asarray(batch, dtype=float)
        labels = np.asarray(labels, dtype=float)
        activations = [batch]
        pre_relu = []
        h = batch
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i != last:
                pre_relu.append(z)
                h = np.maximum(z, 0.0)
            else:
                h = z
            activations.append(h)
        preds = h[:, 0]
        n = len(labels)
        loss = float(np.mean((preds - labels) ** 2))

        grads = [None] * (2 * len(self.weights))
        delta = (2.0 / n) * (preds - labels)[:, None]
        for i in range(last, -1, -1):
            grads[2 * i] = activations[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre_relu[i - 1] > 0)
        return loss, grads


class LstmLayer:
    """One recurrent layer: candidate + update/forget/output gates."""

    GATE_NAMES = ("c", "u", "f", "o")

    def __init__(self, w_a, w_x, b, input_dim, hidden_dim):
        self.w_a = w_a  # dict gate -> (hidden, hidden)
        self.w_x = w_x  # dict gate -> (input, hidden)
        self.b = b      # dict gate -> (hidden,)
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim

    @classmethod
    def create(cls, rng, input_dim, hidden_dim):
        w_a = {g: _glorot_uniform(rng, hidden_dim, hidden_dim) for g in cls.GATE_NAMES}
        w_x = {g: _glorot_uniform(rng, input_dim, hidden_dim) for g in cls.GATE_NAMES}
        b = {g: np.zeros(hidden_dim) for g in cls.GATE_NAMES}
        return cls(w_a, w_x, b, input_dim, hidden_dim)

    def parameters(self):
        out = []
        for g in self.GATE_NAMES:
            out.extend((self.w_a[g], self.w_x[g], self.b[g]))
        return out

    def forward(self, x_seq):
        """x_seq: (T, b, input_dim) -> (a_seq (T, b, hidden), cache)."""
        T, batch, _ = x_seq.shape
        a = np.zeros((batch, self.hidden_dim))
        c = np.zeros((batch, self.hidden_dim))
        cache = []
        a_seq = np.empty((T, batch, self.hidden_dim))
        for t in range(T):
            x = x_seq[t]
            c_tilde = np.tanh(a @ self.w_a["c"] + x @ self.w_x["c"] + self.b["c"])
            g_u = _sigmoid(a @ self.w_a["u"] + x @ self.w_x["u"] + self.b["u"])
            g_f = _sigmoid(a @ self.w_a["f"] + x @ self.w_x["f"] + self.b["f"])
            g_o = _sigmoid(a @ self.w_a["o"] + x @ self.w_x["o"] + self.b["o"])
            c_new = g_u * c_tilde + g_f * c
            tanh_c = np.tanh(c_new)
            a_new = g_o * tanh_c
            cache.append((x, a, c, c_tilde, g_u, g_f, g_o, c_new, tanh_c))
            a, c = a_new, c_new
            a_seq[t] = a
        return a_seq, cache

    def backward(self, da_seq, cache):
        """da_seq: gradient w.r.t. each step's output a_t.

        Returns (dx_seq, grads aligned with parameters()).
        """
        T = len(cache)
        gw_a = {g: np.zeros_like(self.w_a[g]) for g in self.GATE_NAMES}
        gw_x = {g: np.zeros_like(self.w_x[g]) for g in self.GATE_NAMES}
        gb = {g: np.zeros_like(self.b[g]) for g in self.GATE_NAMES}
        dx_seq = np.empty((T,) + cache[0][0].shape)
        da_next = np.zeros_like(da_seq[0])
        dc_next = np.zeros_like(da_seq[0])
        for t in range(T - 1, -1, -1):
            x, a_prev, c_prev, c_tilde, g_u, g_f, g_o, c_new, tanh_c = cache[t]
            da = da_seq[t] + da_next
            dc = da * g_o * (1.0 - tanh_c * tanh_c) + dc_next
            dz = {
                "o": da * tanh_c * g_o * (1.0 - g_o),
                "c": dc * g_u * (1.0 - c_tilde * c_tilde),
                "u": dc * c_tilde * g_u * (1.0 - g_u),
                "f": dc * c_prev * g_f * (1.0 - g_f),
            }
            dc_next = dc * g_f
            da_next = np.zeros_like(da)
            dx = np.zeros_like(x)
            for g in self.GATE_NAMES:
                gw_a[g] += a_prev.T @ dz[g]
                gw_x[g] += x.T @ dz[g]
                gb[g] += dz[g].sum(axis=0)
                da_next += dz[g] @ self.w_a[g].T
                dx += dz[g] @ self.w_x[g].T
            dx_seq[t] = dx
        grads = []
        for g in self.GATE_NAMES:
            grads.extend((gw_a[g], gw_x[g], gb[g]))
        return dx_seq, grads


class LstmModel:
    """Three stacked recurrent layers plus an affine scalar read-out.

    The first two layers pass full sequences downstream; the read-out sees
    only the final step of the last layer.
    """

    def __init__(self, layers, readout_w, readout_b, input_dim, sequence_length):
        self.layers = layers
        self.readout_w = readout_w  # (hidden_last, 1)
        self.readout_b = readout_b  # (1,)
        self.input_dim = input_dim
        self.sequence_length = sequence_length

    @classmethod
    def create(cls, seed: int, input_dim: int = 47,
               hidden_sizes=LSTM_HIDDEN_SIZES, sequence_length: int = SEQUENCE_LENGTH):
        rng = np.random.default_rng(seed)
        layers = []
        d = input_dim
        for h in hidden_sizes:
            layers.append(LstmLayer.create(rng, d, h))
            d = h
        readout_w = _glorot_uniform(rng, d, 1)
        readout_b = np.zeros(1)
        return cls(layers, readout_w, readout_b, input_dim, sequence_length)

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        out.extend((self.readout_w, self.readout_b))
        return out

    def _check_batch(self, batch):
        batch = np.asarray(batch, dtype=float)
        if batch.ndim != 3 or batch.shape[1] != self.sequence_length \
                or batch.shape[2] != self.input_dim:
            raise ValidationError(
                f"lstm_forward: expected (batch, {self.sequence_length}, {self.input_dim}) input"
            )
        return np.transpose(batch, (1, 0, 2))  # (T, b, d)

    def forward(self, batch):
        """batch: (b, T, input_dim) -> predictions (b,)."""
        x_seq = self._check_batch(batch)
        for layer in self.layers:
            x_seq, _ = layer.forward(x_seq)
        return (x_seq[-1] @ self.readout_w + self.readout_b)[:, 0]

    def loss_and_gradients(self, batch, labels):
        x_seq = self._check_batch(batch)
        labels = np.asarray(labels, dtype=float)
        caches = []
        for layer in self.layers:
            x_seq, cache = layer.forward(x_seq)
            caches.append(cache)
        final = x_seq[-1]
        preds = (final @ self.readout_w + self.readout_b)[:, 0]
        n = len(labels)
        loss = float(np.mean((preds - labels) ** 2))

        dpred = (2.0 / n) * (preds - labels)[:, None]
        g_readout_w = final.T @ dpred
        g_readout_b = dpred.sum(axis=0)
        da_seq = np.zeros_like(x_seq)
        da_seq[-1] = dpred @ self.readout_w.T
        layer_grads = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            da_seq, grads = layer.backward(da_seq, cache)
            layer_grads.append(grads)
        grads = []
        for g in reversed(layer_grads):
            grads.extend(g)
        grads.extend((g_readout_w, g_readout_b))
        return loss, grads


def mlp_forward(model: MlpModel, batch):
    return model.forward(batch)


def lstm_forward(model: LstmModel, batch):
    return model.forward(batch)


def train(model, samples, labels, config: TrainConfig):
    """Mini-batch Adam on the MSE loss; returns (model, per-epoch losses)."""
    config.validate()
    samples = np.asarray(samples, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(samples) == 0 or len(samples) != len(labels):
        raise ValidationError("train: empty or mismatched training set")
    if not np.isfinite(labels).all():
        raise ValidationError("train: non-finite labels")

    params = model.parameters()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(config.seed)
    eps = 1e-8
    step = 0
    losses = []
    n = len(samples)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch_idx = order[start:start + config.batch_size]
            loss, grads = model.loss_and_gradients(samples[batch_idx], labels[batch_idx])
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged at epoch {epoch + 1}")
            step += 1
            bc1 = 1.0 - config.beta1 ** step
            bc2 = 1.0 - config.beta2 ** step
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= config.beta1
                mi += (1.0 - config.beta1) * g
                vi *= config.beta2
                vi += (1.0 - config.beta2) * g * g
                p -= config.learning_rate * (mi / bc1) / (np.sqrt(vi / bc2) + eps)
        epoch_loss = mse(model.forward(samples), labels)
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"training diverged at epoch {epoch + 1}")
        losses.append(epoch_loss)
    return model, losses


def gradient_check(model, batch, labels, step: float = 1e-5, corruption: float = 0.0):
    """Max relative error of analytic vs central finite-difference gradients.

    corruption is a test hook: it is added to the first analytic gradient
    entry to verify the check detects a broken backward pass.
    """
    batch = np.asarray(batch, dtype=float)
    labels = np.asarray(labels, dtype=float)
    params = model.parameters()
    _, grads = model.loss_and_gradients(batch, labels)
    worst = 0.0
    first = True
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1).copy()
        if first and corruption != 0.0 and flat_g.size:
            flat_g[0] += corruption
            first = False
        for i in range(flat_p.size):
            saved = flat_p[i]
            flat_p[i] = saved + step
            up = mse(model.forward(batch), labels)
            flat_p[i] = saved - step
            down = mse(model.forward(batch), labels)
            flat_p[i] = saved
            numeric = (up - down) / (2.0 * step)
            analytic = flat_g[i]
            err = abs(analytic - numeric) / max(1.0, abs(analytic) + abs(numeric))
            worst = max(worst, err)
    return worst


# --- model serialization ---------------------------------------------------

def _arrays_to_lists(arrays):
    return [a.tolist() for a in arrays]


def model_to_json(model) -> str:
    """Versioned round-trip-exact (shortest-repr floats) serialization."""
    if isinstance(model, MlpModel):
        doc = {
            "version": SERIAL_VERSION,
            "kind": "mlp",
            "input_dim": model.input_dim,
            "weights": _arrays_to_lists(model.weights),
            "biases": _arrays_to_lists(model.biases),
        }
    elif isinstance(model, LstmModel):
        doc = {
            "version": SERIAL_VERSION,
            "kind": "lstm",
            "input_dim": model.input_dim,
            "sequence_length": model.sequence_length,
            "layers": [
                {
                    "input_dim": layer.input_dim,
                    "hidden_dim": layer.hidden_dim,
                    "w_a": {g: layer.w_a[g].tolist() for g in LstmLayer.GATE_NAMES},
                    "w_x": {g: layer.w_x[g].tolist() for g in LstmLayer.GATE_NAMES},
                    "b": {g: layer.b[g].tolist() for g in LstmLayer.GATE_NAMES},
                }
                for layer in model.layers
            ],
            "readout_w": model.readout_w.tolist(),
            "readout_b": model.readout_b.tolist(),
        }
    else:
        raise ValidationError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("version") != SERIAL_VERSION:
        raise ValidationError(f"unsupported model document version {doc.get('version')!r}")
    if doc["kind"] == "mlp":
        return MlpModel(
            weights=[np.array(w, dtype=float) for w in doc["weights"]],
            biases=[np.array(b, dtype=float) for b in doc["biases"]],
            input_dim=doc["input_dim"],
        )
    if doc["kind"] == "lstm":
        layers = [
            LstmLayer(
                w_a={g: np.array(ld["w_a"][g], dtype=float) for g in LstmLayer.GATE_NAMES},
                w_x={g: np.array(ld["w_x"][g], dtype=float) for g in LstmLayer.GATE_NAMES},
                b={g: np.array(ld["b"][g], dtype=float) for g in LstmLayer.GATE_NAMES},
                input_dim=ld["input_dim"],
                hidden_dim=ld["hidden_dim"],
            )
            for ld in doc["layers"]
        ]
        return LstmModel(
            layers=layers,
            readout_w=np.array(doc["readout_w"], dtype=float),
            readout_b=np.array(doc["readout_b"], dtype=float),
            input_dim=doc["input_dim"],
            sequence_length=doc["sequence_length"],
        )
    raise ValidationError(f"unknown model kind {doc['kind']!r}")

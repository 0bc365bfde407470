"""Numpy value network: three Leaky-ReLU layers with two additive skips, Adam, Huber/Mellowmax.

Layout (B = batch, K = channels, H = hidden width)::

    h1 = lrelu(x  W1 + b1)
    h2 = lrelu(h1 W2 + b2) + h1
    h3 = lrelu(h2 W3 + b3) + h2
    q  = h3 W4 + b4
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = "carlton-mlp/1"
LEAKY_SLOPE = 0.2


class TrainingDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdamParams:
    learning_rate: float = 2.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass
class TrainBatch:
    states: np.ndarray  # (B, 2K)
    actions: np.ndarray  # (B,)
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray  # (B, 2K)

    def __post_init__(self):
        b = len(self.actions)
        if not (self.states.shape[0] == self.next_states.shape[0] == len(self.rewards) == b):
            raise ValueError("batch arrays disagree on batch size")
        if self.states.shape != self.next_states.shape:
            raise ValueError("states and next_states must have the same shape")


def _lrelu(z):
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _lrelu_grad(z):
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


class MlpParameters:
    """Weights, biases and Adam moments of the value network."""

    def __init__(self, n_channels: int, hidden: int = 128, rng=None, zero: bool = False):
        self.n_channels = n_channels
        self.hidden = hidden
        sizes = [2 * n_channels, hidden, hidden, hidden, n_channels]
        rng = np.random.default_rng(rng)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            if zero:
                w = np.zeros((fan_in, fan_out))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))
        self.m = [np.zeros_like(p) for p in self.arrays()]
        self.v = [np.zeros_like(p) for p in self.arrays()]
        self.step = 0

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpParameters":
        other = MlpParameters.__new__(MlpParameters)
        other.n_channels, other.hidden, other.step = self.n_channels, self.hidden, self.step
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.m = [a.copy() for a in self.m]
        other.v = [a.copy() for a in self.v]
        return other

    def __eq__(self, other):
        if not isinstance(other, MlpParameters):
            return NotImplemented
        mine, theirs = self._all(), other._all()
        return (self.n_channels == other.n_channels and self.hidden == other.hidden
                and self.step == other.step
                and all(np.array_equal(a, b) for a, b in zip(mine, theirs)))

    def _all(self):
        return [*self.arrays(), *self.m, *self.v]


def _forward_cache(params: MlpParameters, x: np.ndarray):
    w, b = params.weights, params.biases
    z1 = x @ w[0] + b[0]
    h1 = _lrelu(z1)
    z2 = h1 @ w[1] + b[1]
    h2 = _lrelu(z2) + h1
    z3 = h2 @ w[2] + b[2]
    h3 = _lrelu(z3) + h2
    q = h3 @ w[3] + b[3]
    return q, (x, z1, h1, z2, h2, z3, h3)


def forward(params: MlpParameters, state) -> np.ndarray:
    """Action values for one state (2K,) or a batch (B, 2K)."""
    x = np.asarray(state, dtype=float)
    if x.shape[-1] != 2 * params.n_channels or x.ndim > 2:
        raise ValueError(f"state shape {x.shape} does not match 2K = {2 * params.n_channels}")
    return _forward_cache(params, x)[0]


def backward(params: MlpParameters, cache, dq: np.ndarray) -> list[np.ndarray]:
    """Gradients in `MlpParameters.arrays()` order, given dLoss/dq of shape (B, K)."""
    x, z1, h1, z2, h2, z3, h3 = cache
    w = params.weights
    dw4 = h3.T @ dq
    db4 = dq.sum(0)
    dh3 = dq @ w[3].T
    dz3 = dh3 * _lrelu_grad(z3)
    dw3 = h2.T @ dz3
    db3 = dz3.sum(0)
    dh2 = dh3 + dz3 @ w[2].T
    dz2 = dh2 * _lrelu_grad(z2)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(0)
    dh1 = dh2 + dz2 @ w[1].T
    dz1 = dh1 * _lrelu_grad(z1)
    dw1 = x.T @ dz1
    db1 = dz1.sum(0)
    return [dw1, dw2, dw3, dw4, db1, db2, db3, db4]


def mellowmax(values, omega: float, axis: int = -1):
    """Log-mean-exp smooth maximum; -inf entries are excluded from the mean."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    x = np.asarray(values, dtype=float)
    finite = np.isfinite(x)
    count = finite.sum(axis=axis, keepdims=True)
    if np.any(count == 0):
        raise ValueError("mellowmax needs at least one finite value")
    top = np.max(np.where(finite, x, -np.inf), axis=axis, keepdims=True)
    shifted = np.where(finite, np.exp(omega * (np.where(finite, x, 0.0) - top)), 0.0)
    out = top + np.log(shifted.sum(axis=axis, keepdims=True) / count) / omega
    out = np.squeeze(out, axis=axis)
    return float(out) if out.ndim == 0 else out


def huber(e, delta: float = 1.0):
    a = np.abs(e)
    out = np.where(a <= delta, 0.5 * np.square(e), delta * (a - 0.5 * delta))
    return float(out) if np.ndim(out) == 0 else out


def huber_grad(e, delta: float = 1.0):
    return np.clip(e, -delta, delta)


def td_loss_and_grad(params: MlpParameters, batch: TrainBatch, gamma: float, omega: float,
                     delta: float = 1.0):
    """Mean Huber TD loss and its gradient; the bootstrap target is held constant."""
    q_next = forward(params, batch.next_states)
    if not np.all(np.isfinite(q_next)):
        raise TrainingDivergenceError(f"non-finite action values at optimizer step {params.step}")
    target = batch.rewards + gamma * mellowmax(q_next, omega, axis=1)
    q, cache = _forward_cache(params, batch.states)
    rows = np.arange(len(batch.actions))
    err = target - q[rows, batch.actions]
    loss = float(np.mean(huber(err, delta)))
    dq = np.zeros_like(q)
    # d/dq of huber(target - q) is -huber'(e)
    dq[rows, batch.actions] = -huber_grad(err, delta) / len(rows)
    return loss, backward(params, cache, dq)


def adam_update(params: MlpParameters, grads, opt: AdamParams) -> None:
    params.step += 1
    t = params.step
    for p, g, m, v in zip(params.arrays(), grads, params.m, params.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        m_hat = m / (1.0 - opt.beta1 ** t)
        v_hat = v / (1.0 - opt.beta2 ** t)
        p -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.epsilon)


def train_step(params: MlpParameters, batch: TrainBatch, gamma: float, omega: float,
               opt: AdamParams = AdamParams(), delta: float = 1.0):
    """One Adam step on the batch; updates ``params`` in place and returns ``(params, loss)``."""
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grads = td_loss_and_grad(params, batch, gamma, omega, delta)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingDivergenceError(f"non-finite loss {loss} at optimizer step {params.step}")
        adam_update(params, grads, opt)
    if not all(np.all(np.isfinite(p)) for p in params.arrays()):
        raise TrainingDivergenceError(f"non-finite parameters after optimizer step {params.step}")
    return params, loss


def save_checkpoint(params: MlpParameters, path) -> None:
    meta = {"version": CHECKPOINT_VERSION, "n_channels": params.n_channels,
            "hidden": params.hidden, "step": params.step, "leaky_slope": LEAKY_SLOPE,
            "skips": "h2 += h1; h3 += h2"}
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for name, group in (("param", params.arrays()), ("m", params.m), ("v", params.v)):
        for i, a in enumerate(group):
            arrays[f"{name}_{i}"] = a
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> MlpParameters:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        params = MlpParameters(meta["n_channels"], meta["hidden"], zero=True)
        params.step = int(meta["step"])
        n = len(params.arrays())
        loaded = [data[f"param_{i}"] for i in range(n)]
        params.weights = [a.copy() for a in loaded[:4]]
        params.biases = [a.copy() for a in loaded[4:]]
        params.m = [data[f"m_{i}"].copy() for i in range(n)]
        params.v = [data[f"v_{i}"].copy() for i in range(n)]
    return params

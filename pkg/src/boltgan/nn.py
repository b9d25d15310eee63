"""Small MLP critics and generators, Adam, weight clipping, EMA and
layerwise Lipschitz bookkeeping."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import autodiff as ad

ACTIVATIONS = ("relu", "leaky_relu", "tanh")
HEADS = ("raw", "sigmoid")

MAGIC = b"BOLT"
FORMAT_VERSION = 1


class TrainingDivergence(FloatingPointError):
    """Raised when an update sees non-finite gradients."""


@dataclass(frozen=True)
class MLPConfig:
    """Layer widths including input and output, e.g. ``(1, 64, 64, 1)``.

    ``head`` only affects how the output is read: critics expose both the
    raw score and ``sigmoid(raw)``; the Lipschitz bound uses it to decide
    whether the 1/4 sigmoid constant applies.
    """

    widths: tuple[int, ...]
    activation: str = "leaky_relu"
    head: str = "raw"
    alpha: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("MLPConfig needs at least one layer (two widths)")
        if any(w <= 0 for w in self.widths):
            raise ValueError(f"layer widths must be positive, got {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}; expected one of {HEADS}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"leaky slope must lie in (0, 1], got {self.alpha}")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


def critic_config(in_dim: int = 1, hidden: tuple[int, ...] = (64, 64)) -> MLPConfig:
    return MLPConfig((in_dim, *hidden, 1), activation="leaky_relu", head="sigmoid", alpha=0.2)


def generator_config(latent_dim: int = 2, out_dim: int = 1, hidden: tuple[int, ...] = (64, 64)) -> MLPConfig:
    return MLPConfig((latent_dim, *hidden, out_dim), activation="relu", head="raw")


@dataclass
class MLPParams:
    """Weights stored as (out, in) matrices with matching bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in declaration order (W0, b0, W1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays) -> "MLPParams":
        arrays = [np.array(a, dtype=np.float64) for a in arrays]
        return cls(arrays[0::2], arrays[1::2])

    def copy(self) -> "MLPParams":
        return MLPParams.from_arrays(self.arrays())

    def check(self, config: MLPConfig):
        if len(self.weights) != config.n_layers:
            raise ValueError(f"expected {config.n_layers} layers, got {len(self.weights)}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (config.widths[i + 1], config.widths[i])
            if w.shape != want or b.shape != (want[0],):
                raise ValueError(f"layer {i}: shapes {w.shape}/{b.shape}, expected {want}")


def init_params(config: MLPConfig, seed: int) -> MLPParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(config.widths[:-1], config.widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights, biases)


def zeros_like_params(config: MLPConfig) -> MLPParams:
    return MLPParams(
        [np.zeros((o, i)) for i, o in zip(config.widths[:-1], config.widths[1:])],
        [np.zeros(o) for o in config.widths[1:]],
    )


def _activate(h: ad.Node, config: MLPConfig) -> ad.Node:
    if config.activation == "relu":
        return ad.relu(h)
    if config.activation == "leaky_relu":
        return ad.leaky_relu(h, config.alpha)
    return ad.tanh(h)


def mlp_apply(nodes: list[ad.Node], config: MLPConfig, x: ad.Node) -> ad.Node:
    """Forward pass on the tape; ``nodes`` follows :meth:`MLPParams.arrays` order.

    Returns the raw (pre-head) output of shape (batch, out).
    """
    h = x
    n = config.n_layers
    for i in range(n):
        h = ad.affine(h, nodes[2 * i], nodes[2 * i + 1])
        if i < n - 1:
            h = _activate(h, config)
    return h


def _as_batch(x, width: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if width == 1 else x.reshape(1, -1)
    if x.shape[1] != width:
        raise ValueError(f"input width {x.shape[1]} does not match network input {width}")
    return x


def forward(params: MLPParams, config: MLPConfig, x) -> np.ndarray:
    """Plain numpy forward pass, output shape (batch, out)."""
    h = _as_batch(x, config.widths[0])
    n = config.n_layers
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w.T + b
        if i < n - 1:
            if config.activation == "relu":
                h = np.maximum(h, 0.0)
            elif config.activation == "leaky_relu":
                h = np.where(h >= 0, h, config.alpha * h)
            else:
                h = np.tanh(h)
    return h


def critic_forward(params: MLPParams, config: MLPConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """Raw score and its sigmoid, each of shape (batch,).

    The [-1, 0] convention score is ``-bounded``.
    """
    if config.widths[-1] != 1:
        raise ValueError("critic output width must be 1")
    raw = forward(params, config, x)[:, 0]
    return raw, ad._sigmoid(raw)


def generator_forward(params: MLPParams, config: MLPConfig, z) -> np.ndarray:
    return forward(params, config, z)


# ---------------------------------------------------------------------------
# optimisation


@dataclass
class AdamState:
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: MLPParams, **hyper) -> "AdamState":
        arrays = params.arrays()
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays], **hyper)


def adam_step(params: MLPParams, grads: list[np.ndarray], state: AdamState) -> MLPParams:
    """One bias-corrected Adam update. Mutates ``state``; returns new params."""
    arrays = params.arrays()
    if len(grads) != len(arrays):
        raise ValueError(f"expected {len(arrays)} gradient arrays, got {len(grads)}")
    for a, g in zip(arrays, grads):
        if a.shape != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {a.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence(f"non-finite gradient at Adam step {state.t + 1}")
    if not state.m:
        state.m = [np.zeros_like(a) for a in arrays]
        state.v = [np.zeros_like(a) for a in arrays]
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    out = []
    for i, (a, g) in enumerate(zip(arrays, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append(a - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return MLPParams.from_arrays(out)


def weight_clip(params: MLPParams, c: float) -> MLPParams:
    if c <= 0:
        raise ValueError(f"clip bound must be positive, got {c}")
    return MLPParams([np.clip(w, -c, c) for w in params.weights], [np.clip(b, -c, c) for b in params.biases])


def ema_update(avg: MLPParams, params: MLPParams, decay: float) -> MLPParams:
    if not 0.0 <= decay < 1.0:
        raise ValueError(f"EMA decay must lie in [0, 1), got {decay}")
    return MLPParams.from_arrays(
        [decay * a + (1.0 - decay) * p for a, p in zip(avg.arrays(), params.arrays())]
    )


# ---------------------------------------------------------------------------
# Lipschitz bookkeeping


class SpectralNorm(NamedTuple):
    value: float
    converged: bool


def spectral_norm(w: np.ndarray, n_iter: int = 100, tol: float = 1e-10, seed: int = 0) -> SpectralNorm:
    """Largest singular value by power iteration on ``w.T @ w``."""
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    if not np.any(w):
        return SpectralNorm(0.0, True)
    v = np.random.default_rng(seed).standard_normal(w.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(n_iter):
        u = w @ v
        su = np.linalg.norm(u)
        if su == 0.0:
            # start vector in the null space; restart from a basis direction
            v = np.zeros(w.shape[1])
            v[np.argmax(np.abs(w).sum(axis=0))] = 1.0
            continue
        v_new = w.T @ (u / su)
        new_sigma = np.linalg.norm(v_new)
        v = v_new / new_sigma
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1.0):
            return SpectralNorm(float(new_sigma), True)
        sigma = new_sigma
    return SpectralNorm(float(sigma), False)


class LipschitzBound(NamedTuple):
    value: float
    approximate: bool

    def __float__(self):
        return self.value


def activation_lipschitz(config: MLPConfig) -> float:
    if config.activation == "leaky_relu":
        return max(1.0, config.alpha)
    return 1.0


def lipschitz_upper_bound(params: MLPParams, config: MLPConfig) -> LipschitzBound:
    """Product of layer spectral norms and activation constants.

    With a sigmoid head the bound is for ``sigmoid(raw)``; with a raw head it
    is for the raw output.
    """
    total = 1.0
    approximate = False
    for w in params.weights:
        sn = spectral_norm(w)
        total *= sn.value
        approximate |= not sn.converged
    total *= activation_lipschitz(config) ** (config.n_layers - 1)
    if config.head == "sigmoid":
        total *= 0.25
    if approximate:
        warnings.warn("power iteration did not converge; Lipschitz bound is approximate", RuntimeWarning)
    return LipschitzBound(float(total), approximate)


# ---------------------------------------------------------------------------
# snapshots


def params_to_bytes(params: MLPParams) -> bytes:
    flat = np.concatenate([a.ravel() for a in params.arrays()]) if params.weights else np.zeros(0)
    return MAGIC + struct.pack("<B", FORMAT_VERSION) + flat.astype("<f8").tobytes()


def params_from_bytes(blob: bytes, config: MLPConfig) -> MLPParams:
    if blob[:4] != MAGIC:
        raise ValueError("not a parameter snapshot (bad magic bytes)")
    (version,) = struct.unpack("<B", blob[4:5])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    flat = np.frombuffer(blob[5:], dtype="<f8").astype(np.float64)
    template = zeros_like_params(config).arrays()
    need = sum(a.size for a in template)
    if flat.size != need:
        raise ValueError(f"snapshot holds {flat.size} values, config needs {need}")
    out, pos = [], 0
    for a in template:
        out.append(flat[pos : pos + a.size].reshape(a.shape).copy())
        pos += a.size
    return MLPParams.from_arrays(out)


def save_params(params: MLPParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(params_to_bytes(params))


def load_params(path, config: MLPConfig) -> MLPParams:
    with open(path, "rb") as fh:
        return params_from_bytes(fh.read(), config)


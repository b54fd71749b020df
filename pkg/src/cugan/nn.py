"""Minimal dense networks with hand-written reverse-mode gradients.

Weights are stored ``(fan_in, fan_out)`` so a layer computes ``x @ W + b``.
Everything is float64.
"""

from __future__ import annotations

import base64
import json
import math

import numpy as np

from .errors import ConfigError, StaleCacheError

ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")
LEAKY_SLOPE = 0.1


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    raise ConfigError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if name == "identity":
        return grad
    if name == "tanh":
        return grad * (1.0 - a * a)
    if name == "relu":
        return grad * (z > 0)
    if name == "leaky_relu":
        return np.where(z > 0, grad, LEAKY_SLOPE * grad)
    raise ConfigError(f"unknown activation {name!r}")


def _unit(x: np.ndarray) -> np.ndarray:
    return x / max(float(np.linalg.norm(x)), 1e-12)


class SpectralNorm:
    """Persistent power-iteration estimate of a weight's largest singular value.

    ``u`` lives in the weight's row space (fan_in), ``v`` in its column space
    (fan_out). Each call to :meth:`power_iteration` refines both once.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray | None = None):
        self.u = np.asarray(u, dtype=np.float64)
        self.v = v

    @classmethod
    def init(cls, weight: np.ndarray, rng: np.random.Generator) -> SpectralNorm:
        sn = cls(_unit(rng.standard_normal(weight.shape[0])))
        sn.v = _unit(weight.T @ sn.u)
        return sn

    def power_iteration(self, weight: np.ndarray, n_iter: int = 1) -> None:
        for _ in range(n_iter):
            self.v = _unit(weight.T @ self.u)
            self.u = _unit(weight @ self.v)

    def sigma(self, weight: np.ndarray) -> float:
        if self.v is None:
            self.v = _unit(weight.T @ self.u)
        return float(self.u @ weight @ self.v)


def spectral_normalize(state: SpectralNorm, weight: np.ndarray, n_iter: int = 1) -> np.ndarray:
    """Advance the power iteration ``n_iter`` times and return ``weight / sigma_hat``."""
    state.power_iteration(weight, n_iter)
    return weight / state.sigma(weight)


class Mlp:
    """Fully connected network.

    Args:
        dims: layer widths from input to output, e.g. ``[2, 64, 64, 1]``.
        activations: one activation name per layer (``len(dims) - 1``).
        rng: seeds the Glorot-uniform weights and spectral-norm vectors.
        spectral_norm: normalize every weight by its spectral norm estimate.
    """

    def __init__(self, dims, activations, rng: np.random.Generator | None = None, spectral_norm: bool = False):
        dims = [int(d) for d in dims]
        activations = list(activations)
        if len(dims) < 2 or len(activations) != len(dims) - 1:
            raise ConfigError(f"need len(activations) == len(dims) - 1, got {dims} / {activations}")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ConfigError(f"unknown activation {a!r}; expected one of {ACTIVATIONS}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dims = dims
        self.activations = activations
        self.spectral_norm = bool(spectral_norm)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.sn = [SpectralNorm.init(w, rng) for w in self.weights] if self.spectral_norm else []
        self.version = 0

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in the order ``W0, b0, W1, b1, ...`` (live references)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def touch(self) -> None:
        """Mark parameters as changed so older forward caches are rejected."""
        self.version += 1

    def update_spectral_norm(self, n_iter: int = 1) -> None:
        """One training step's worth of power iteration on every layer."""
        if not self.spectral_norm:
            return
        for sn, w in zip(self.sn, self.weights):
            sn.power_iteration(w, n_iter)
        self.touch()

    def effective_weights(self) -> tuple[list[np.ndarray], list[float]]:
        if not self.spectral_norm:
            return self.weights, [1.0] * len(self.weights)
        sigmas = [sn.sigma(w) for sn, w in zip(self.sn, self.weights)]
        return [w / s for w, s in zip(self.weights, sigmas)], sigmas

    def forward(self, x: np.ndarray):
        """Return ``(outputs, cache)``; the cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise ConfigError(f"expected input of shape (batch, {self.dims[0]}), got {x.shape}")
        weights, sigmas = self.effective_weights()
        inputs, pre, post = [], [], []
        a = x
        for w, b, act in zip(weights, self.biases, self.activations):
            inputs.append(a)
            z = a @ w + b
            a = _activate(act, z)
            pre.append(z)
            post.append(a)
        cache = {"version": self.version, "inputs": inputs, "pre": pre, "post": post,
                 "weights": weights, "sigmas": sigmas}
        return a, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray, need_params: bool = True):
        """Reverse-mode pass.

        Returns ``(param_grads, grad_input)`` where ``param_grads`` matches
        :meth:`params` (or is ``None`` when ``need_params`` is false).
        """
        if cache["version"] != self.version:
            raise StaleCacheError("forward cache predates a parameter or spectral-norm update")
        g = np.asarray(grad_out, dtype=np.float64)
        n_layers = len(self.weights)
        grads: list[np.ndarray | None] = [None] * (2 * n_layers)
        for i in range(n_layers - 1, -1, -1):
            g = _activation_grad(self.activations[i], cache["pre"][i], cache["post"][i], g)
            w_eff = cache["weights"][i]
            if need_params:
                gw = cache["inputs"][i].T @ g
                if self.spectral_norm:
                    # W_eff = W / sigma with sigma = u^T W v and u, v held fixed
                    sn = self.sn[i]
                    sigma = cache["sigmas"][i]
                    gw = (gw - np.sum(gw * w_eff) * np.outer(sn.u, sn.v)) / sigma
                grads[2 * i] = gw
                grads[2 * i + 1] = g.sum(axis=0)
            g = g @ w_eff.T
        return (grads if need_params else None), g

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(a):
            return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")

        layers = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            layer = {
                "in": int(w.shape[0]),
                "out": int(w.shape[1]),
                "activation": self.activations[i],
                "weight": enc(w),
                "bias": enc(b),
            }
            if self.spectral_norm:
                layer["sn_u"] = enc(self.sn[i].u)
                layer["sn_v"] = enc(self.sn[i].v)
            layers.append(layer)
        return {"dims": self.dims, "spectral_norm": self.spectral_norm, "layers": layers}

    @classmethod
    def from_dict(cls, data: dict) -> Mlp:
        def dec(s, shape):
            return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(np.float64).reshape(shape)

        net = cls(data["dims"], [l["activation"] for l in data["layers"]], spectral_norm=data["spectral_norm"])
        for i, layer in enumerate(data["layers"]):
            net.weights[i] = dec(layer["weight"], (layer["in"], layer["out"]))
            net.biases[i] = dec(layer["bias"], (layer["out"],))
            if net.spectral_norm:
                net.sn[i] = SpectralNorm(dec(layer["sn_u"], (layer["in"],)), dec(layer["sn_v"], (layer["out"],)))
        return net

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Adam:
    """Adam with bias correction, updating parameter arrays in place."""

    def __init__(self, params, lr: float = 2e-4, beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step_count = 0

    def step(self, params, grads) -> None:
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ConfigError("parameter/gradient count does not match the optimizer state")
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ConfigError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adam_step(state: Adam, net: Mlp, grads) -> None:
    """Apply one Adam update to ``net`` and invalidate its forward caches."""
    state.step(net.params(), grads)
    net.touch()

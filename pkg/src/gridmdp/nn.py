"""Minimal dense network for the control policy: a shared tanh trunk with a
value head, an action-mean head and a state-independent log-std vector, plus
hand-written reverse-mode gradients and an Adam optimizer.

Everything is float64; gradients are exact and are validated against central
finite differences in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))
CHECKPOINT_VERSION = 1


@dataclass
class MlpParams:
    weights: list       # trunk weight matrices, (fan_in, fan_out)
    biases: list        # trunk bias vectors
    w_value: np.ndarray
    b_value: np.ndarray
    w_mean: np.ndarray
    b_mean: np.ndarray
    log_std: np.ndarray

    def copy(self) -> "MlpParams":
        return map_arrays(np.copy, self)


def iter_arrays(params: MlpParams):
    yield from params.weights
    yield from params.biases
    yield params.w_value
    yield params.b_value
    yield params.w_mean
    yield params.b_mean
    yield params.log_std


def map_arrays(fn, *params: MlpParams) -> MlpParams:
    n_layers = len(params[0].weights)
    ws = [fn(*(p.weights[i] for p in params)) for i in range(n_layers)]
    bs = [fn(*(p.biases[i] for p in params)) for i in range(n_layers)]
    return MlpParams(
        weights=ws,
        biases=bs,
        w_value=fn(*(p.w_value for p in params)),
        b_value=fn(*(p.b_value for p in params)),
        w_mean=fn(*(p.w_mean for p in params)),
        b_mean=fn(*(p.b_mean for p in params)),
        log_std=fn(*(p.log_std for p in params)),
    )


def zeros_like_params(params: MlpParams) -> MlpParams:
    return map_arrays(np.zeros_like, params)


def init_mlp(n_inputs: int, n_actions: int, hidden=(300, 300, 300),
             rng: np.random.Generator | None = None,
             log_std_init: float = -0.5) -> MlpParams:
    rng = rng or np.random.default_rng(0)
    sizes = [n_inputs, *hidden]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    h = sizes[-1]
    # near-zero heads: the initial policy is centred and the initial value
    # estimate is ~0, so early advantages are dominated by observed returns
    # rather than by critic noise
    return MlpParams(
        weights=weights,
        biases=biases,
        w_value=rng.normal(0.0, 0.01 / np.sqrt(h), size=(h, 1)),
        b_value=np.zeros(1),
        w_mean=rng.normal(0.0, 0.01 / np.sqrt(h), size=(h, n_actions)),
        b_mean=np.zeros(n_actions),
        log_std=np.full(n_actions, float(log_std_init)),
    )


def forward_cache(params: MlpParams, x: np.ndarray):
    """Run the trunk and heads; returns (mean, log_std, value, cache).

    ``cache`` holds the input and every tanh activation, enough to replay
    the backward pass.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    acts = [x]
    h = x
    for w, b in zip(params.weights, params.biases):
        h = np.tanh(h @ w + b)
        acts.append(h)
    mean = h @ params.w_mean + params.b_mean
    value = (h @ params.w_value + params.b_value)[:, 0]
    return mean, params.log_std, value, acts


def forward(params: MlpParams, observation: np.ndarray):
    """(mean, log_std, value) for one observation or a batch."""
    squeeze = np.asarray(observation).ndim == 1
    mean, log_std, value, _ = forward_cache(params, observation)
    if squeeze:
        return mean[0], log_std, float(value[0])
    return mean, log_std, value


def backward(params: MlpParams, cache: list, d_mean: np.ndarray,
             d_value: np.ndarray, d_log_std: np.ndarray) -> MlpParams:
    """Reverse-mode pass given output cotangents; returns gradients shaped
    like the parameters."""
    h = cache[-1]
    d_value = d_value.reshape(-1, 1)
    g_w_mean = h.T @ d_mean
    g_b_mean = d_mean.sum(axis=0)
    g_w_value = h.T @ d_value
    g_b_value = d_value.sum(axis=0)
    d_h = d_mean @ params.w_mean.T + d_value @ params.w_value.T

    g_ws = [None] * len(params.weights)
    g_bs = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        a = cache[i + 1]
        dz = d_h * (1.0 - a * a)     # tanh'
        g_ws[i] = cache[i].T @ dz
        g_bs[i] = dz.sum(axis=0)
        d_h = dz @ params.weights[i].T
    return MlpParams(
        weights=g_ws,
        biases=g_bs,
        w_value=g_w_value,
        b_value=g_b_value,
        w_mean=g_w_mean,
        b_mean=g_b_mean,
        log_std=np.asarray(d_log_std, dtype=np.float64),
    )


# -- squashed Gaussian policy -------------------------------------------

_INTERIOR = np.nextafter(1.0, 0.0)  # keeps actions strictly inside (-1, 1)


def sample_squashed(mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator):
    """Draw a tanh-squashed Gaussian action; returns (action, pre_tanh).

    tanh saturates to exactly 1.0 in float64 for |u| > ~19; the action is
    nudged one ulp inward there so it stays in the open interval.
    """
    std = np.exp(log_std)
    u = mean + std * rng.standard_normal(mean.shape)
    return np.clip(np.tanh(u), -_INTERIOR, _INTERIOR), u


def log_prob_squashed(mean: np.ndarray, log_std: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Log density of action tanh(u) under the squashed Gaussian.

    Includes the change-of-variables term -log(1 - tanh(u)^2), written in
    the numerically stable form 2*(log 2 - u - softplus(-2u)).
    """
    var = np.exp(2.0 * log_std)
    gauss = -0.5 * ((u - mean) ** 2 / var + 2.0 * log_std + LOG_2PI)
    squash = 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    return (gauss - squash).sum(axis=-1)


def log_prob_grads(mean: np.ndarray, log_std: np.ndarray, u: np.ndarray):
    """d log_prob / d mean (per sample, per dim) and d log_prob / d log_std."""
    var = np.exp(2.0 * log_std)
    d_mean = (u - mean) / var
    d_log_std = (u - mean) ** 2 / var - 1.0
    return d_mean, d_log_std


@dataclass
class PolicySample:
    action: np.ndarray      # in (-1, 1)^n
    pre_tanh: np.ndarray
    log_prob: float
    value: float


def sample_policy(params: MlpParams, observation: np.ndarray,
                  rng: np.random.Generator) -> PolicySample:
    mean, log_std, value = forward(params, observation)
    action, u = sample_squashed(mean, log_std, rng)
    logp = float(log_prob_squashed(mean, log_std, u))
    return PolicySample(action=action, pre_tanh=u, log_prob=logp, value=float(value))


# -- optimizer ------------------------------------------------------------

@dataclass
class AdamState:
    m: MlpParams
    v: MlpParams
    t: int = 0

    @classmethod
    def for_params(cls, params: MlpParams) -> "AdamState":
        return cls(m=zeros_like_params(params), v=zeros_like_params(params), t=0)


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; purely functional."""
    t = state.t + 1
    new_m = map_arrays(lambda m, g: beta1 * m + (1 - beta1) * g, state.m, grads)
    new_v = map_arrays(lambda v, g: beta2 * v + (1 - beta2) * g * g, state.v, grads)
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t

    def update(p, m, v):
        return p - lr * (m / c1) / (np.sqrt(v / c2) + eps)

    new_params = MlpParams(
        weights=[update(p, m, v) for p, m, v in
                 zip(params.weights, new_m.weights, new_v.weights)],
        biases=[update(p, m, v) for p, m, v in
                zip(params.biases, new_m.biases, new_v.biases)],
        w_value=update(params.w_value, new_m.w_value, new_v.w_value),
        b_value=update(params.b_value, new_m.b_value, new_v.b_value),
        w_mean=update(params.w_mean, new_m.w_mean, new_v.w_mean),
        b_mean=update(params.b_mean, new_m.b_mean, new_v.b_mean),
        log_std=update(params.log_std, new_m.log_std, new_v.log_std),
    )
    return new_params, AdamState(m=new_m, v=new_v, t=t)


# -- checkpoints ------------------------------------------------------------

def save_checkpoint(params: MlpParams, path, meta: dict | None = None):
    """Binary dump of every tensor (shape headers via npz), round-trip exact."""
    arrays = {}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    arrays["w_value"] = params.w_value
    arrays["b_value"] = params.b_value
    arrays["w_mean"] = params.w_mean
    arrays["b_mean"] = params.b_mean
    arrays["log_std"] = params.log_std
    header = {"version": CHECKPOINT_VERSION, "n_layers": len(params.weights),
              "meta": meta or {}}
    arrays["header"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Returns (params, meta)."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")
        n_layers = header["n_layers"]
        params = MlpParams(
            weights=[data[f"w{i}"] for i in range(n_layers)],
            biases=[data[f"b{i}"] for i in range(n_layers)],
            w_value=data["w_value"],
            b_value=data["b_value"],
            w_mean=data["w_mean"],
            b_mean=data["b_mean"],
            log_std=data["log_std"],
        )
    return params, header.get("meta", {})

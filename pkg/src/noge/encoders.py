"""Message-passing encoders over the normalized Levi-graph adjacency.

Each layer computes ``tanh(sum_u a[v, u] * (W (x) x_u))`` where ``(x)`` is
dual-quaternion, quaternion or ordinary matrix-vector multiplication depending
on the encoder kind. Node features are stored component-major as
``(C, num_nodes, dim)`` with ``C`` = 8, 4 or 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import hypercomplex as hc

ENCODER_KINDS = ("dualqgnn", "qgnn", "gcn")
COMPONENTS = {"dualqgnn": 8, "qgnn": 4, "gcn": 1}


class NumericDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "dualqgnn"
    num_layers: int = 1
    dim: int = 32

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind: {self.kind}")
        if self.dim < 1 or self.num_layers < 1:
            raise ValueError("dim and num_layers must be >= 1")

    @property
    def components(self) -> int:
        return COMPONENTS[self.kind]


def layer_name(k: int) -> str:
    return f"layer{k}"


def param_names(config: EncoderConfig) -> list[str]:
    return ["embeddings"] + [layer_name(k) for k in range(config.num_layers)]


def init_params(config: EncoderConfig, node_count: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Glorot-uniform initialization on native coordinate counts.

    The embedding table uses ``fan_in = node_count`` and ``fan_out = dim``;
    layer weights are ``dim x dim``.
    """
    C, d = config.components, config.dim
    s = np.sqrt(6.0 / (node_count + d))
    params = {"embeddings": rng.uniform(-s, s, size=(C, node_count, d))}
    s = np.sqrt(6.0 / (d + d))
    for k in range(config.num_layers):
        params[layer_name(k)] = rng.uniform(-s, s, size=(C, d, d))
    return params


def transform(kind: str, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    if kind == "dualqgnn":
        return hc.dq_matvec(W, X)
    if kind == "qgnn":
        return hc.quat_matvec(W, X)
    return X @ np.swapaxes(W, -1, -2)


def transform_backward(kind: str, W: np.ndarray, X: np.ndarray, G: np.ndarray):
    if kind == "dualqgnn":
        return hc.dq_matvec_backward(W, X, G)
    if kind == "qgnn":
        return hc.quat_matvec_grad_weight(G, X), hc.quat_matvec_grad_input(W, G)
    return G[0].T @ X[0][None], G @ W


def aggregate(adj: sp.csr_matrix, Z: np.ndarray) -> np.ndarray:
    """Apply the sparse node-mixing matrix to every component: ``out[c] = adj @ Z[c]``."""
    C, N, d = Z.shape
    flat = np.ascontiguousarray(Z.transpose(1, 0, 2)).reshape(N, C * d)
    return np.ascontiguousarray((adj @ flat).reshape(N, C, d).transpose(1, 0, 2))


@dataclass
class ForwardCache:
    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)


def encoder_forward(params, adj: sp.csr_matrix, config: EncoderConfig):
    X = params["embeddings"]
    if adj.shape[0] != X.shape[1]:
        raise ValueError(f"adjacency has {adj.shape[0]} nodes, embeddings have {X.shape[1]}")
    cache = ForwardCache()
    for k in range(config.num_layers):
        S = aggregate(adj, transform(config.kind, params[layer_name(k)], X))
        Y = np.tanh(S)
        if not np.all(np.isfinite(Y)):
            raise NumericDivergenceError(f"non-finite activation in layer {k}")
        cache.inputs.append(X)
        cache.pre.append(S)
        cache.post.append(Y)
        X = Y
    return X, cache


def encoder_backward(grad_out, cache: ForwardCache, params, adj: sp.csr_matrix, config: EncoderConfig):
    if len(cache.post) != config.num_layers:
        raise ValueError("forward cache does not match the encoder depth")
    if grad_out.shape != cache.post[-1].shape:
        raise ValueError(f"gradient shape {grad_out.shape} != output shape {cache.post[-1].shape}")
    adj_t = sp.csr_matrix(adj.T)
    grads = {}
    G = grad_out
    for k in reversed(range(config.num_layers)):
        Y = cache.post[k]
        G_pre = G * (1.0 - Y * Y)
        G_z = aggregate(adj_t, G_pre)
        dW, G = transform_backward(config.kind, params[layer_name(k)], cache.inputs[k], G_z)
        grads[layer_name(k)] = dW
    grads["embeddings"] = G
    return grads

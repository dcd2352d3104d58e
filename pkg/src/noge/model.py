"""Encoder + decoder wired together over the Levi graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import decoders
from . import hypercomplex as hc
from .encoders import EncoderConfig, encoder_backward, encoder_forward, init_params
from .rng import make_rng


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig
    decoder: str = "quate"

    def __post_init__(self):
        if self.decoder not in decoders.DECODER_KINDS:
            raise ConfigError(f"unknown decoder: {self.decoder}")
        if self.decoder == "quate" and self.encoder.kind == "gcn":
            raise ConfigError("the QuatE decoder needs a quaternion-valued encoder (dualqgnn or qgnn)")


class Model:
    """Parameters plus the graph they run on.

    ``adj`` is the re-normalized node-mixing matrix; relation ``r`` is node
    ``num_entities + r``.
    """

    def __init__(self, config: ModelConfig, adj: sp.csr_matrix, num_entities: int, params=None, seed: int = 0):
        self.config = config
        self.adj = sp.csr_matrix(adj)
        self.num_entities = num_entities
        self.num_nodes = self.adj.shape[0]
        if params is None:
            params = init_params(config.encoder, self.num_nodes, make_rng(seed, "init"))
        self.params = params

    # -- representation plumbing ------------------------------------------------

    def _to_decoder(self, reps: np.ndarray) -> np.ndarray:
        kind = self.config.encoder.kind
        if self.config.decoder == "quate":
            return hc.concat_dual_to_quat(reps) if kind == "dualqgnn" else reps
        C, N, d = reps.shape
        return np.ascontiguousarray(reps.transpose(1, 0, 2)).reshape(N, C * d)

    def _from_decoder(self, grad: np.ndarray) -> np.ndarray:
        kind = self.config.encoder.kind
        if self.config.decoder == "quate":
            return hc.split_quat_to_dual(grad) if kind == "dualqgnn" else grad
        C, d = self.config.encoder.components, self.config.encoder.dim
        return np.ascontiguousarray(grad.reshape(-1, C, d).transpose(1, 0, 2))

    def node_reps(self, params=None):
        """Decoder-ready representations of all nodes, plus the encoder cache."""
        params = self.params if params is None else params
        reps, cache = encoder_forward(params, self.adj, self.config.encoder)
        return self._to_decoder(reps), cache

    def _take(self, reps, idx):
        return reps[:, idx] if self.config.decoder == "quate" else reps[idx]

    def score_tails(self, heads, rels, reps=None) -> np.ndarray:
        if reps is None:
            reps, _ = self.node_reps()
        heads = np.asarray(heads)
        rels = np.asarray(rels) + self.num_entities
        ents = self._take(reps, slice(0, self.num_entities))
        scores, _ = decoders.score_all_tails(
            self._take(reps, heads), self._take(reps, rels), ents, self.config.decoder
        )
        return scores

    def score_heads(self, rels, tails, reps=None) -> np.ndarray:
        if reps is None:
            reps, _ = self.node_reps()
        rels = np.asarray(rels) + self.num_entities
        ents = self._take(reps, slice(0, self.num_entities))
        return decoders.score_all_heads(
            self._take(reps, rels), self._take(reps, np.asarray(tails)), ents, self.config.decoder
        )

    # -- forward / backward for training ---------------------------------------

    def forward_scores(self, heads, rels, params=None):
        """Full-graph encoder pass followed by all-tails scoring of ``(heads, rels)``."""
        params = self.params if params is None else params
        heads = np.asarray(heads)
        rel_nodes = np.asarray(rels) + self.num_entities
        reps, enc_cache = self.node_reps(params)
        ents = self._take(reps, slice(0, self.num_entities))
        scores, dec_cache = decoders.score_all_tails(
            self._take(reps, heads), self._take(reps, rel_nodes), ents, self.config.decoder
        )
        return scores, (params, heads, rel_nodes, reps.shape, enc_cache, dec_cache)

    def backward(self, d_scores, cache) -> dict[str, np.ndarray]:
        params, heads, rel_nodes, reps_shape, enc_cache, dec_cache = cache
        d_h, d_r, d_e = decoders.decoder_backward(d_scores, dec_cache)
        d_reps = np.zeros(reps_shape)
        if self.config.decoder == "quate":
            d_reps[:, : self.num_entities] += d_e
            np.add.at(d_reps, (slice(None), heads), d_h)
            np.add.at(d_reps, (slice(None), rel_nodes), d_r)
        else:
            d_reps[: self.num_entities] += d_e
            np.add.at(d_reps, heads, d_h)
            np.add.at(d_reps, rel_nodes, d_r)
        return encoder_backward(self._from_decoder(d_reps), enc_cache, params, self.adj, self.config.encoder)

"""Triple scoring heads.

QuatE scores ``(h (x) r/|r|) . t`` with the relation normalized per quaternion
coordinate; DistMult scores ``sum_i h_i r_i t_i``. Quaternion reps are
``(4, ..., n)`` arrays, DistMult reps are ``(..., n)`` real arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hypercomplex as hc

DECODER_KINDS = ("quate", "distmult")


def quate_score(v_h, v_r, v_t) -> float:
    v_h, v_r, v_t = (np.asarray(v, dtype=np.float64) for v in (v_h, v_r, v_t))
    if not (v_h.shape == v_r.shape == v_t.shape):
        raise ValueError("QuatE inputs must share a shape")
    return hc.quat_inner(hc.hamilton(v_h, hc.quat_normalize(v_r)), v_t)


def distmult_score(v_h, v_r, v_t) -> float:
    v_h, v_r, v_t = (np.asarray(v, dtype=np.float64) for v in (v_h, v_r, v_t))
    if not (v_h.shape == v_r.shape == v_t.shape):
        raise ValueError("DistMult inputs must share a shape")
    return float(np.sum(v_h * v_r * v_t))


@dataclass
class ScoreCache:
    kind: str
    heads: np.ndarray
    rels: np.ndarray
    entities: np.ndarray
    r_unit: np.ndarray | None
    r_norm: np.ndarray | None
    query: np.ndarray  # h (x) r_unit for quate, h * r for distmult


def _flat(x: np.ndarray) -> np.ndarray:
    # (4, B, n) -> (B, 4n), component-major within each row
    return np.ascontiguousarray(np.moveaxis(x, 0, -2)).reshape(x.shape[1], -1)


def score_all_tails(heads, rels, entities, kind: str = "quate"):
    """Score a batch of ``(h, r)`` queries against every entity.

    For QuatE, ``heads``/``rels`` are ``(4, B, n)`` and ``entities`` is
    ``(4, E, n)``; for DistMult they are ``(B, n)`` and ``(E, n)``. Returns a
    ``(B, E)`` score matrix and a cache for :func:`decoder_backward`.
    """
    if kind == "quate":
        r_norm = hc.quat_norm(rels)
        if np.any(r_norm == 0.0):
            raise hc.DegenerateInputError("zero-norm relation coordinate in QuatE scoring")
        r_unit = rels / r_norm
        query = hc.hamilton(heads, r_unit)
        scores = _flat(query) @ _flat(entities).T
        return scores, ScoreCache(kind, heads, rels, entities, r_unit, r_norm, query)
    if kind == "distmult":
        query = heads * rels
        return query @ entities.T, ScoreCache(kind, heads, rels, entities, None, None, query)
    raise ValueError(f"unknown decoder kind: {kind}")


def score_all_heads(rels, tails, entities, kind: str = "quate") -> np.ndarray:
    """Score ``(?, r, t)`` for every candidate head without inverse relations.

    Uses ``(e (x) r) . t = e . (t (x) r*)`` for QuatE. Forward only.
    """
    if kind == "quate":
        r_unit = hc.quat_normalize(rels)
        return _flat(hc.hamilton(tails, hc.quat_conjugate(r_unit))) @ _flat(entities).T
    if kind == "distmult":
        return (tails * rels) @ entities.T
    raise ValueError(f"unknown decoder kind: {kind}")


def decoder_backward(grad_scores: np.ndarray, cache: ScoreCache):
    """Return gradients ``(d_heads, d_rels, d_entities)`` for ``sum(grad_scores * scores)``."""
    G = grad_scores
    if cache.kind == "distmult":
        d_query = G @ cache.entities
        d_entities = G.T @ cache.query
        return d_query * cache.rels, d_query * cache.heads, d_entities
    d_query = np.stack([G @ cache.entities[c] for c in range(4)])
    d_entities = np.stack([G.T @ cache.query[c] for c in range(4)])
    # query = h (x) u: dh = dq (x) u*, du = h* (x) dq
    d_heads = hc.hamilton(d_query, hc.quat_conjugate(cache.r_unit))
    d_unit = hc.hamilton(hc.quat_conjugate(cache.heads), d_query)
    u = cache.r_unit
    d_rels = (d_unit - u * np.sum(u * d_unit, axis=0)) / cache.r_norm
    return d_heads, d_rels, d_entities

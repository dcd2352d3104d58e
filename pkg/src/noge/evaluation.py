"""Filtered ranking metrics for link prediction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .kg_data import Dataset, TruthIndex
from .model import Model

HITS_AT = (1, 3, 10)


@dataclass
class Metrics:
    mrr: float
    hits: dict[int, float]
    query_count: int

    def as_dict(self) -> dict:
        out = {"mrr": self.mrr}
        out.update({f"hits{k}": v for k, v in self.hits.items()})
        out["queries"] = self.query_count
        return out


def filtered_rank(scores, target: int, filter_out: Iterable[int] = ()) -> int:
    """1 + number of unfiltered competitors scoring at least as high as the target.

    Ties count against the target.
    """
    scores = np.asarray(scores)
    mask = np.ones(scores.shape[0], dtype=bool)
    mask[list(filter_out)] = False
    mask[target] = False
    return 1 + int(np.count_nonzero(scores[mask] >= scores[target]))


def metrics_from_ranks(ranks: Iterable[int]) -> Metrics:
    ranks = np.asarray(list(ranks), dtype=np.float64)
    if ranks.size == 0:
        return Metrics(0.0, {k: 0.0 for k in HITS_AT}, 0)
    return Metrics(
        float(np.mean(1.0 / ranks)),
        {k: float(np.mean(ranks <= k)) for k in HITS_AT},
        int(ranks.size),
    )


def rank_queries(scores: np.ndarray, targets: np.ndarray, filters: list[set[int]]) -> np.ndarray:
    """Vectorized :func:`filtered_rank` over a batch of score rows."""
    scores = np.array(scores, dtype=np.float64)
    rows = np.arange(len(targets))
    target_scores = scores[rows, targets].copy()
    for i, known in enumerate(filters):
        if known:
            scores[i, list(known)] = -np.inf
    scores[rows, targets] = -np.inf
    return 1 + np.count_nonzero(scores >= target_scores[:, None], axis=1)


def _rank_direction(score_fn, anchors, rels, targets, known, batch_size):
    ranks = []
    for start in range(0, len(anchors), batch_size):
        sl = slice(start, start + batch_size)
        scores = score_fn(anchors[sl], rels[sl])
        filters = [
            known.get((a, r), set()) - {tg}
            for a, r, tg in zip(anchors[sl].tolist(), rels[sl].tolist(), targets[sl].tolist())
        ]
        ranks.append(rank_queries(scores, targets[sl], filters))
    return np.concatenate(ranks) if ranks else np.zeros(0, dtype=np.int64)


def evaluate_split(
    model: Model,
    dataset: Dataset,
    split: str | np.ndarray,
    truth: TruthIndex | None,
    batch_size: int = 1024,
) -> Metrics:
    """Filtered MRR and Hits@{1,3,10} over both prediction directions.

    ``split`` is a split name (its original, non-inverse triples are used) or
    an explicit array of base-relation triples. Head queries ``(?, r, t)`` are
    answered as tail queries ``(t, r^-1, ?)`` on inverse-augmented data and by
    direct head scoring otherwise. ``truth=None`` gives raw ranks.
    """
    triples = dataset.original_triples(split) if isinstance(split, str) else split
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    reps, _ = model.node_reps()
    tails_of = truth.tails_of if truth is not None else {}
    heads_of = truth.heads_of if truth is not None else {}

    def tails(a, rr):
        return model.score_tails(a, rr, reps)

    ranks = [_rank_direction(tails, h, r, t, tails_of, batch_size)]
    if dataset.inverse_augmented:
        ranks.append(_rank_direction(tails, t, dataset.inverse_relation(r), h, tails_of, batch_size))
    else:
        def heads(a, rr):
            return model.score_heads(rr, a, reps)

        ranks.append(_rank_direction(heads, t, r, h, heads_of, batch_size))
    return metrics_from_ranks(np.concatenate(ranks))

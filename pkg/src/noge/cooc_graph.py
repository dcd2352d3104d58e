"""Levi graph over entity and relation nodes with co-occurrence edge weights.

Entity ``e`` is node ``e``; relation ``r`` is node ``num_entities + r``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .kg_data import Vocabulary

SELF_LOOP_MODES = ("paper_literal", "single")
ADJACENCY_KINDS = ("weighted", "binary")


class GraphConsistencyError(RuntimeError):
    pass


@dataclass
class CoocCounts:
    pair_count: Counter  # unordered (u, v) with u <= v -> #C(u, v)
    node_count: Counter  # node -> number of triples containing it
    total: int

    def pair(self, u: int, v: int) -> int:
        return self.pair_count.get((u, v) if u <= v else (v, u), 0)


def count_cooccurrence(train: np.ndarray, vocab: Vocabulary) -> CoocCounts:
    """Count per-triple node containment and pairwise co-occurrence.

    Both counts use set semantics inside one triple, so ``(e, r, e)`` adds one
    to ``#C(e)``, ``#C(e, r)`` and ``#C(e, e)``.
    """
    pair_count: Counter = Counter()
    node_count: Counter = Counter()
    offset = vocab.num_entities
    for h, r, t in np.asarray(train).tolist():
        nodes = sorted({h, offset + r, t})
        node_count.update(nodes)
        for i, u in enumerate(nodes):
            for v in nodes[i + 1:]:
                pair_count[(u, v)] += 1
        if h == t:
            pair_count[(h, h)] += 1
    return CoocCounts(pair_count, node_count, len(train))


@dataclass
class WeightedAdjacency:
    matrix: sp.csr_matrix
    kind: str

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dump_tsv(self, path) -> None:
        write_tsv(self.matrix, path)


def _csr(rows, cols, vals, n: int) -> sp.csr_matrix:
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(n, n),
    )
    m.sum_duplicates()
    m.sort_indices()
    return m


def build_weighted_adjacency(counts: CoocCounts, vocab: Vocabulary) -> WeightedAdjacency:
    n = vocab.node_count
    n_ent = vocab.num_entities
    total = counts.total
    rows, cols, vals = list(range(n)), list(range(n)), [1.0] * n
    for (u, v), c in counts.pair_count.items():
        if u == v or c <= 0:
            continue
        p_uv = c / total
        for a, b in ((u, v), (v, u)):
            if a < n_ent and b < n_ent:
                c_a = counts.node_count.get(a, 0)
                if c_a <= 0:
                    raise GraphConsistencyError(f"node {a} co-occurs but has zero count")
                w = p_uv / (c_a / total)
            else:
                w = p_uv
            rows.append(a)
            cols.append(b)
            vals.append(w)
    return WeightedAdjacency(_csr(rows, cols, vals, n), "weighted")


def build_binary_adjacency(counts: CoocCounts, vocab: Vocabulary) -> WeightedAdjacency:
    m = build_weighted_adjacency(counts, vocab).matrix.copy()
    m.data[:] = 1.0
    return WeightedAdjacency(m, "binary")


def build_adjacency(train: np.ndarray, vocab: Vocabulary, kind: str = "weighted") -> WeightedAdjacency:
    counts = count_cooccurrence(train, vocab)
    if kind == "weighted":
        return build_weighted_adjacency(counts, vocab)
    if kind == "binary":
        return build_binary_adjacency(counts, vocab)
    raise ValueError(f"unknown adjacency kind: {kind}")


def renormalize(adj: WeightedAdjacency | sp.spmatrix, self_loop_mode: str = "paper_literal") -> sp.csr_matrix:
    """Symmetric degree normalization ``D^-1/2 (A + I) D^-1/2`` with row-sum degrees.

    ``paper_literal`` adds the identity on top of the unit diagonal (self
    weight 2); ``single`` keeps the existing diagonal of 1.
    """
    m = adj.matrix if isinstance(adj, WeightedAdjacency) else sp.csr_matrix(adj)
    n = m.shape[0]
    if n == 0:
        raise ValueError("empty adjacency")
    if self_loop_mode == "paper_literal":
        m = m + sp.identity(n, format="csr")
    elif self_loop_mode != "single":
        raise ValueError(f"unknown self_loop_mode: {self_loop_mode}")
    m = sp.csr_matrix(m, dtype=np.float64)
    deg = np.asarray(m.sum(axis=1)).ravel()
    if np.any(deg <= 0):
        raise GraphConsistencyError("zero-degree row after adding self loops")
    out = m.copy()
    out.sort_indices()
    rows = np.repeat(np.arange(n), np.diff(out.indptr))
    out.data = out.data / np.sqrt(deg[rows] * deg[out.indices])
    return out


def write_tsv(matrix: sp.spmatrix, path) -> None:
    coo = sp.csr_matrix(matrix).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(Path(path), "w", encoding="utf-8", newline="\n") as f:
        for i in order:
            f.write(f"{coo.row[i]}\t{coo.col[i]}\t{float(coo.data[i])!r}\n")

"""Small synthetic knowledge graphs with a planted, learnable structure.

Entities are grouped into clusters. Each relation maps every cluster to a
target cluster of the same size, and ``(h, r, t)`` holds for every ``t`` in
the target cluster of ``h``'s cluster. The last relation is the composition
of the two before it, so the graph also carries a two-hop rule.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .kg_data import RawTriple
from .rng import make_rng


def _cluster_sizes(num_entities: int) -> list[int]:
    # as many 3-clusters as keeps the remainder even, rest are pairs
    threes = num_entities // 6 if (num_entities - 3 * (num_entities // 6)) % 2 == 0 else num_entities // 6 - 1
    twos = (num_entities - 3 * threes) // 2
    return [3] * threes + [2] * twos


def compositional_kg(
    num_entities: int = 40,
    num_relations: int = 4,
    num_valid: int = 40,
    num_test: int = 40,
    seed: int = 0,
) -> dict[str, list[RawTriple]]:
    """Return ``{"train", "valid", "test"}`` raw splits.

    Valid/test triples are drawn so that every entity and relation still
    occurs in train.
    """
    if num_relations < 3:
        raise ValueError("need at least 3 relations for the composed rule")
    rng = make_rng(seed, "data")
    sizes = _cluster_sizes(num_entities)
    perm = rng.permutation(num_entities)
    clusters, start = [], 0
    for s in sizes:
        clusters.append(perm[start:start + s].tolist())
        start += s
    by_size: dict[int, list[int]] = {}
    for c, s in enumerate(sizes):
        by_size.setdefault(s, []).append(c)

    def random_map() -> dict[int, int]:
        out = {}
        for group in by_size.values():
            out.update(zip(group, rng.permutation(group).tolist()))
        return out

    maps = [random_map() for _ in range(num_relations - 1)]
    maps.append({c: maps[-1][maps[-2][c]] for c in range(len(sizes))})

    triples = []
    for r, m in enumerate(maps):
        for c, members in enumerate(clusters):
            for h in members:
                for t in clusters[m[c]]:
                    triples.append((f"e{h:02d}", f"r{r}", f"e{t:02d}"))
    triples = [RawTriple(*triples[i]) for i in rng.permutation(len(triples))]

    held, train = [], []
    ent_uses: dict[str, int] = {}
    rel_uses: dict[str, int] = {}
    for h, r, t in triples:
        for e in {h, t}:
            ent_uses[e] = ent_uses.get(e, 0) + 1
        rel_uses[r] = rel_uses.get(r, 0) + 1
    for tr in triples:
        ents = {tr.head, tr.tail}
        if len(held) < num_valid + num_test and all(ent_uses[e] > 1 for e in ents) and rel_uses[tr.relation] > 1:
            held.append(tr)
            for e in ents:
                ent_uses[e] -= 1
            rel_uses[tr.relation] -= 1
        else:
            train.append(tr)
    return {"train": train, "valid": held[:num_valid], "test": held[num_valid:]}


def write_splits(splits: dict[str, list[RawTriple]], directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, rows in splits.items():
        with open(directory / f"{name}.txt", "w", encoding="utf-8", newline="\n") as f:
            for h, r, t in rows:
                f.write(f"{h}\t{r}\t{t}\n")
    return directory

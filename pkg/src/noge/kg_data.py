"""Triple parsing, vocabularies, split encoding and ground-truth indexing."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

SPLITS = ("train", "valid", "test")


class DataError(ValueError):
    """Malformed or inconsistent knowledge-graph input."""


class RawTriple(NamedTuple):
    head: str
    relation: str
    tail: str


class Triple(NamedTuple):
    h: int
    r: int
    t: int


@dataclass
class Vocabulary:
    entities: list[str]
    relations: list[str]
    entity_ids: dict[str, int] = field(init=False)
    relation_ids: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.entity_ids = {e: i for i, e in enumerate(self.entities)}
        self.relation_ids = {r: i for i, r in enumerate(self.relations)}
        if len(self.entity_ids) != len(self.entities) or len(self.relation_ids) != len(self.relations):
            raise DataError("vocabulary contains duplicate tokens")

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    @property
    def node_count(self) -> int:
        return self.num_entities + self.num_relations

    def relation_node(self, r: int) -> int:
        return self.num_entities + r

    def decode(self, triple: Triple) -> RawTriple:
        return RawTriple(self.entities[triple.h], self.relations[triple.r], self.entities[triple.t])

    def save(self, directory) -> None:
        directory = Path(directory)
        _write_dict(directory / "entities.dict", self.entities)
        _write_dict(directory / "relations.dict", self.relations)

    @classmethod
    def load(cls, directory) -> "Vocabulary":
        directory = Path(directory)
        return cls(_read_dict(directory / "entities.dict"), _read_dict(directory / "relations.dict"))


def _write_dict(path: Path, tokens: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i, tok in enumerate(tokens):
            f.write(f"{i}\t{tok}\n")


def _read_dict(path: Path) -> list[str]:
    tokens = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            idx, tok = line.split("\t", 1)
            if int(idx) != len(tokens):
                raise DataError(f"{path}:{lineno}: expected index {len(tokens)}, got {idx}")
            tokens.append(tok)
    return tokens


@dataclass
class Dataset:
    """Integer-encoded splits. Each split is an ``(n, 3)`` int64 array of ``(h, r, t)``.

    When ``inverse_augmented`` is set, ``vocabulary.relations`` has been
    doubled and relation ``r + R`` is the inverse of ``r`` where ``R`` is
    :attr:`num_base_relations`.
    """

    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    vocabulary: Vocabulary
    inverse_augmented: bool

    def split(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise KeyError(f"unknown split: {name}")
        return getattr(self, name)

    @property
    def base_vocabulary(self) -> Vocabulary:
        v = self.vocabulary
        return Vocabulary(list(v.entities), list(v.relations[: self.num_base_relations]))

    @property
    def num_base_relations(self) -> int:
        n = self.vocabulary.num_relations
        return n // 2 if self.inverse_augmented else n

    def inverse_relation(self, r):
        if not self.inverse_augmented:
            raise ValueError("dataset has no inverse relations")
        R = self.num_base_relations
        return (r + R) % (2 * R)

    def original_triples(self, name: str) -> np.ndarray:
        """The split without its inverse-augmented half."""
        arr = self.split(name)
        if not self.inverse_augmented:
            return arr
        return arr[: len(arr) // 2]


def parse_triples(text: str) -> list[RawTriple]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        fields = [f.strip() for f in fields]
        if not all(fields):
            raise DataError(f"line {lineno}: empty token")
        out.append(RawTriple(*fields))
    return out


def read_triples(path) -> list[RawTriple]:
    try:
        return parse_triples(Path(path).read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def build_vocabulary(train: Sequence[RawTriple]) -> Vocabulary:
    if not train:
        raise DataError("cannot build a vocabulary from an empty training split")
    entities: dict[str, None] = {}
    relations: dict[str, None] = {}
    for h, r, t in train:
        entities.setdefault(h)
        relations.setdefault(r)
        entities.setdefault(t)
    return Vocabulary(list(entities), list(relations))


def _encode(triples: Sequence[RawTriple], vocab: Vocabulary, split: str) -> np.ndarray:
    unknown_e: dict[str, None] = {}
    unknown_r: dict[str, None] = {}
    rows = []
    for h, r, t in triples:
        for tok in (h, t):
            if tok not in vocab.entity_ids:
                unknown_e.setdefault(tok)
        if r not in vocab.relation_ids:
            unknown_r.setdefault(r)
        if not unknown_e and not unknown_r:
            rows.append((vocab.entity_ids[h], vocab.relation_ids[r], vocab.entity_ids[t]))
    if unknown_e or unknown_r:
        msgs = [f"unknown entity: {e}" for e in unknown_e] + [f"unknown relation: {r}" for r in unknown_r]
        raise DataError(f"{split}: " + "; ".join(msgs))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def encode_dataset(
    raw_splits: dict[str, Sequence[RawTriple]], vocab: Vocabulary, add_inverses: bool = True
) -> Dataset:
    encoded = {name: _encode(raw_splits.get(name, []), vocab, name) for name in SPLITS}
    return assemble_dataset(encoded, vocab, add_inverses)


def assemble_dataset(encoded: dict[str, np.ndarray], vocab: Vocabulary, add_inverses: bool) -> Dataset:
    """Build a :class:`Dataset` from base-relation encoded splits."""
    encoded = {name: np.asarray(encoded[name], dtype=np.int64).reshape(-1, 3) for name in SPLITS}
    if add_inverses:
        R = vocab.num_relations
        for name, arr in encoded.items():
            inv = np.stack([arr[:, 2], arr[:, 1] + R, arr[:, 0]], axis=1)
            encoded[name] = np.concatenate([arr, inv], axis=0)
        vocab = Vocabulary(
            list(vocab.entities), list(vocab.relations) + [f"{r}_reverse" for r in vocab.relations]
        )
    return Dataset(vocabulary=vocab, inverse_augmented=add_inverses, **encoded)


def load_dataset(directory, add_inverses: bool = True) -> Dataset:
    directory = Path(directory)
    raw = {name: read_triples(directory / f"{name}.txt") for name in SPLITS}
    return encode_dataset(raw, build_vocabulary(raw["train"]), add_inverses)


@dataclass
class TruthIndex:
    tails_of: dict[tuple[int, int], set[int]]
    heads_of: dict[tuple[int, int], set[int]]

    def contains(self, h: int, r: int, t: int) -> bool:
        return t in self.tails_of.get((h, r), ())


def build_truth_index(dataset: Dataset, splits: Iterable[str] = SPLITS) -> TruthIndex:
    tails_of: dict[tuple[int, int], set[int]] = defaultdict(set)
    heads_of: dict[tuple[int, int], set[int]] = defaultdict(set)
    for name in splits:
        for h, r, t in dataset.split(name).tolist():
            tails_of[(h, r)].add(t)
            heads_of[(t, r)].add(h)
    return TruthIndex(dict(tails_of), dict(heads_of))

"""``noge`` command line: preprocess, train, eval, score.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from filelock import FileLock, Timeout
from scipy.special import expit

from . import checkpoint as ckpt_io
from .checkpoint import Checkpoint, CheckpointError
from .config import CHOICES, RunConfig
from .cooc_graph import (
    WeightedAdjacency,
    build_binary_adjacency,
    build_weighted_adjacency,
    count_cooccurrence,
    renormalize,
)
from .encoders import NumericDivergenceError
from .evaluation import evaluate_split
from .hypercomplex import DegenerateInputError
from .kg_data import SPLITS, DataError, Dataset, Vocabulary, assemble_dataset, build_truth_index, load_dataset
from .model import ConfigError, Model
from .training import AdamState, FitResult, Trainer, fit

logger = logging.getLogger("noge")

MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


# -- artifacts --------------------------------------------------------------------


def _json_line(record: dict) -> str:
    return json.dumps(record, separators=(", ", ": "))


def cmd_preprocess(config: RunConfig, dump_adjacency: bool = False) -> dict:
    out = config.output_path
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(config.dataset_dir, add_inverses=config.add_inverses)
    base_vocab = dataset.base_vocabulary
    base_vocab.save(out)
    for name in SPLITS:
        np.save(out / f"{name}.npy", dataset.original_triples(name))
    adjacency = _adjacency(dataset, config.adjacency)
    m = adjacency.matrix
    np.save(out / "adjacency_indptr.npy", m.indptr.astype(np.int64))
    np.save(out / "adjacency_indices.npy", m.indices.astype(np.int64))
    np.save(out / "adjacency_data.npy", m.data)
    if dump_adjacency:
        adjacency.dump_tsv(out / "adjacency.tsv")
    manifest = {
        "entities": base_vocab.num_entities,
        "relations": base_vocab.num_relations,
        "nodes": base_vocab.node_count,
        "inverse_augmented": config.add_inverses,
        "graph_relations": dataset.vocabulary.num_relations,
        "graph_nodes": dataset.vocabulary.node_count,
        "adjacency": config.adjacency,
        "adjacency_nnz": int(m.nnz),
        "splits": {name: int(len(dataset.original_triples(name))) for name in SPLITS},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _adjacency(dataset: Dataset, kind: str) -> WeightedAdjacency:
    counts = count_cooccurrence(dataset.train, dataset.vocabulary)
    if kind == "binary":
        return build_binary_adjacency(counts, dataset.vocabulary)
    return build_weighted_adjacency(counts, dataset.vocabulary)


def load_artifacts(config: RunConfig):
    out = config.output_path
    if not (out / MANIFEST).exists():
        raise UsageError(f"no preprocess artifacts in {out}; run `noge preprocess` first")
    manifest = json.loads((out / MANIFEST).read_text(encoding="utf-8"))
    if manifest["inverse_augmented"] != config.add_inverses or manifest["adjacency"] != config.adjacency:
        raise UsageError("preprocess artifacts were built with different graph settings; rerun preprocess")
    vocab = Vocabulary.load(out)
    dataset = assemble_dataset({n: np.load(out / f"{n}.npy") for n in SPLITS}, vocab, config.add_inverses)
    n = dataset.vocabulary.node_count
    raw = sp.csr_matrix(
        (np.load(out / "adjacency_data.npy"), np.load(out / "adjacency_indices.npy"),
         np.load(out / "adjacency_indptr.npy")),
        shape=(n, n),
    )
    adj = renormalize(WeightedAdjacency(raw, config.adjacency), config.self_loop_mode)
    return dataset, adj


def _model(config: RunConfig, dataset: Dataset, adj, params=None) -> Model:
    return Model(config.model_config(), adj, dataset.vocabulary.num_entities, params=params, seed=config.seed)


def _load_checkpoint(config: RunConfig, path) -> Checkpoint:
    try:
        ck = ckpt_io.load(path)
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {path}") from None
    if ck.config_digest != config.digest():
        raise UsageError(
            f"checkpoint {path} was written for different model settings "
            f"(digest {ck.config_digest[:12]} != {config.digest()[:12]})"
        )
    return ck


# -- train ------------------------------------------------------------------------


def _rng_meta(config: RunConfig, epoch: int) -> dict:
    return {"generator": "philox4x64", "seed": config.seed, "next_epoch": epoch + 1}


def cmd_train(config: RunConfig, resume: bool = False) -> FitResult:
    out = config.output_path
    dataset, adj = load_artifacts(config)
    truth = build_truth_index(dataset)
    train_cfg = config.train_config()
    log_path = out / "train.log"
    digest = config.digest()

    start_epoch = 0
    if resume and (out / "last.ckpt").exists():
        last = _load_checkpoint(config, out / "last.ckpt")
        model = _model(config, dataset, adj, params=last.params)
        adam = AdamState(last.adam_m, last.adam_v, last.adam_step)
        start_epoch = last.epoch
        best_ck = _load_checkpoint(config, out / "best.ckpt")
        best_mrr = best_ck.meta.get("valid_mrr")
        best = FitResult(best_ck.params, best_ck.epoch, -np.inf if best_mrr is None else best_mrr)
        log_mode = "a"
    else:
        model = _model(config, dataset, adj)
        adam = None
        best = None
        log_mode = "w"
    trainer = Trainer(model, dataset, train_cfg, adam)

    def snapshot(params, epoch, valid_mrr, with_adam):
        meta = {"valid_mrr": valid_mrr, "rng": _rng_meta(config, epoch), "model": config.model_settings()}
        return Checkpoint(
            digest, epoch, params,
            adam_m=trainer.adam.m if with_adam else None,
            adam_v=trainer.adam.v if with_adam else None,
            adam_step=trainer.adam.step if with_adam else 0,
            meta=meta,
        )

    if start_epoch == 0:
        ckpt_io.save(snapshot(model.params, 0, None, False), out / "best.ckpt")
        ckpt_io.save(snapshot(model.params, 0, None, True), out / "last.ckpt")

    with open(log_path, log_mode, encoding="utf-8", newline="\n") as log:
        def on_epoch(record, tr, result, improved):
            line = _json_line(record)
            log.write(line + "\n")
            log.flush()
            print(line, flush=True)
            if improved:
                ckpt_io.save(snapshot(result.best_params, result.best_epoch, result.best_valid_mrr, False),
                             out / "best.ckpt")
            ckpt_io.save(snapshot(tr.model.params, record["epoch"], record["valid_mrr"], True), out / "last.ckpt")

        def evaluate(m):
            return evaluate_split(m, dataset, "valid", truth).as_dict()

        return fit(trainer, evaluate, start_epoch=start_epoch, best=best, on_epoch=on_epoch)


# -- eval / score -------------------------------------------------------------------


def cmd_eval(config: RunConfig, checkpoint_path, split: str) -> dict:
    if split not in ("valid", "test"):
        raise UsageError(f"unknown split: {split}")
    dataset, adj = load_artifacts(config)
    ck = _load_checkpoint(config, checkpoint_path)
    model = _model(config, dataset, adj, params=ck.params)
    metrics = evaluate_split(model, dataset, split, build_truth_index(dataset))
    report = {"split": split, **metrics.as_dict()}
    line = _json_line(report)
    print(line)
    (config.output_path / f"eval_{split}.json").write_text(line + "\n", encoding="utf-8")
    return report


def parse_query(text: str) -> tuple[str, str, str]:
    parts = text.split("\t") if "\t" in text else text.split()
    if len(parts) != 3 or parts[1] == "?" or (parts[0] == "?" and parts[2] == "?"):
        raise UsageError(f"query must look like 'h r t', 'h r ?' or '? r t', got {text!r}")
    return parts[0], parts[1], parts[2]


def cmd_score(config: RunConfig, checkpoint_path, query: str, top_k: int = 10) -> list[dict]:
    h_tok, r_tok, t_tok = parse_query(query)
    dataset, adj = load_artifacts(config)
    vocab = dataset.vocabulary
    for tok in (h_tok, t_tok):
        if tok != "?" and tok not in vocab.entity_ids:
            raise DataError(f"unknown entity: {tok}")
    if r_tok not in vocab.relation_ids:
        raise DataError(f"unknown relation: {r_tok}")
    ck = _load_checkpoint(config, checkpoint_path)
    model = _model(config, dataset, adj, params=ck.params)
    r = vocab.relation_ids[r_tok]
    if h_tok == "?":
        anchor = vocab.entity_ids[t_tok]
        if dataset.inverse_augmented:
            row = model.score_tails([anchor], [dataset.inverse_relation(r)])[0]
        else:
            row = model.score_heads([r], [anchor])[0]
    else:
        row = model.score_tails([vocab.entity_ids[h_tok]], [r])[0]
    if "?" not in (h_tok, t_tok):
        score = float(row[vocab.entity_ids[t_tok]])
        results = [{"head": h_tok, "relation": r_tok, "tail": t_tok, "score": score,
                    "probability": float(expit(score))}]
    else:
        order = np.argsort(-row, kind="stable")[:top_k]
        results = [{"entity": vocab.entities[i], "score": float(row[i]),
                    "probability": float(expit(row[i]))} for i in order]
    for item in results:
        print(_json_line(item))
    return results


# -- argument parsing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--dataset-dir")
    p.add_argument("--output-dir")
    p.add_argument("--encoder", choices=CHOICES["encoder"])
    p.add_argument("--decoder", choices=CHOICES["decoder"])
    p.add_argument("--adjacency", choices=CHOICES["adjacency"])
    p.add_argument("--self-loop-mode", choices=CHOICES["self_loop_mode"])
    p.add_argument("--no-inverses", dest="add_inverses", action="store_const", const=False)
    p.add_argument("--dim", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--label-smoothing", type=float)
    p.add_argument("--seed", type=int)


OVERRIDES = (
    "dataset_dir", "output_dir", "encoder", "decoder", "adjacency", "self_loop_mode", "add_inverses",
    "dim", "layers", "learning_rate", "batch_size", "epochs", "eval_every", "label_smoothing", "seed",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="encode splits and build the co-occurrence graph")
    _add_common(p)
    p.add_argument("--dump-adjacency", action="store_true", help="also write adjacency.tsv")

    p = sub.add_parser("train", help="train and keep the best checkpoint by validation MRR")
    _add_common(p)
    p.add_argument("--resume", action="store_true", help="continue from last.ckpt")

    p = sub.add_parser("eval", help="filtered MRR / Hits@k of a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--split", default="test", choices=("valid", "test"))

    p = sub.add_parser("score", help="score a triple or rank candidates for 'h r ?' / '? r t'")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("query")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = RunConfig.load(args.config, {k: getattr(args, k, None) for k in OVERRIDES})
        out = config.output_path
        out.mkdir(parents=True, exist_ok=True)
        with FileLock(str(out / ".lock"), timeout=0):
            if args.command == "preprocess":
                print(_json_line(cmd_preprocess(config, args.dump_adjacency)))
            elif args.command == "train":
                result = cmd_train(config, resume=args.resume)
                best_mrr = result.best_valid_mrr if np.isfinite(result.best_valid_mrr) else None
                print(_json_line({"best_epoch": result.best_epoch, "best_valid_mrr": best_mrr}))
            elif args.command == "eval":
                cmd_eval(config, args.checkpoint or out / "best.ckpt", args.split)
            elif args.command == "score":
                cmd_score(config, args.checkpoint or out / "best.ckpt", args.query, args.top_k)
    except Timeout:
        print(f"error: {config.output_dir} is locked by another noge process", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericDivergenceError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

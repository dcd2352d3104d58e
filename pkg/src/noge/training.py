"""KvsAll binary cross-entropy training with Adam and best-by-validation selection."""
from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import expit

from .encoders import NumericDivergenceError
from .kg_data import Dataset, build_truth_index
from .model import Model
from .rng import make_rng

logger = logging.getLogger(__name__)

LEARNING_RATE_GRID = (1e-4, 5e-4, 1e-3, 5e-3)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 1024
    epochs: int = 3000
    eval_every: int = 1
    label_smoothing: float = 0.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label_smoothing must lie in [0, 1)")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


# -- loss ------------------------------------------------------------------------


def bce_loss(scores, labels, smoothing: float = 0.0):
    """Per-row summed binary cross-entropy on logits and its gradient.

    Returns ``(loss_rows, d_scores)``; ``d_scores = sigmoid(f) - l'`` where
    ``l'`` is the smoothed label. Uses softplus forms so saturated logits
    neither overflow nor produce ``log(0)``.
    """
    f = np.asarray(scores, dtype=np.float64)
    l = np.asarray(labels, dtype=np.float64)
    if f.shape != l.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {l.shape}")
    if smoothing:
        l = l * (1.0 - smoothing) + smoothing / f.shape[-1]
    # -log sigmoid(f) = softplus(-f); -log(1 - sigmoid(f)) = softplus(f)
    loss = l * np.logaddexp(0.0, -f) + (1.0 - l) * np.logaddexp(0.0, f)
    return loss.sum(axis=-1), expit(f) - l


# -- optimizer --------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params, grads, state: AdamState, config: TrainConfig) -> None:
    """Bias-corrected Adam update, in place on ``params`` and ``state``."""
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericDivergenceError(f"non-finite gradient for {k}")
        if g.shape != params[k].shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {params[k].shape} for {k}")
    state.step += 1
    b1, b2, lr = config.beta1, config.beta2, config.learning_rate
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for k, g in grads.items():
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[k] -= lr * (m / bc1) / (np.sqrt(v / bc2) + config.adam_eps)


# -- batching ---------------------------------------------------------------------


@dataclass
class QueryBatch:
    heads: np.ndarray
    rels: np.ndarray
    labels: np.ndarray


def query_pairs(train: np.ndarray) -> np.ndarray:
    """Distinct ``(h, r)`` pairs of the training split in first-appearance order."""
    seen = dict.fromkeys(map(tuple, np.asarray(train)[:, :2].tolist()))
    return np.asarray(list(seen), dtype=np.int64).reshape(-1, 2)


def make_batches(pairs, batch_size: int, seed: int, epoch: int, tails_of, num_entities: int) -> Iterator[QueryBatch]:
    pairs = np.asarray(pairs, dtype=np.int64)
    order = make_rng(seed, "shuffle", epoch).permutation(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[order[start:start + batch_size]]
        labels = np.zeros((len(chunk), num_entities))
        for i, (h, r) in enumerate(chunk.tolist()):
            labels[i, list(tails_of.get((h, r), ()))] = 1.0
        yield QueryBatch(chunk[:, 0], chunk[:, 1], labels)


def batch_loss_and_grad(model: Model, batch: QueryBatch, smoothing: float = 0.0, params=None, need_grad: bool = True):
    """Mean over queries of the per-query BCE sum, with gradients for every parameter."""
    scores, cache = model.forward_scores(batch.heads, batch.rels, params)
    loss_rows, d_scores = bce_loss(scores, batch.labels, smoothing)
    B = len(batch.heads)
    loss = float(loss_rows.sum() / B)
    if not need_grad:
        return loss, None
    return loss, model.backward(d_scores / B, cache)


# -- loop -------------------------------------------------------------------------


class Trainer:
    """Owns the model, its optimizer state and the training-split labels."""

    def __init__(self, model: Model, dataset: Dataset, config: TrainConfig, adam: AdamState | None = None):
        self.model = model
        self.dataset = dataset
        self.config = config
        self.adam = adam if adam is not None else AdamState.zeros_like(model.params)
        self.pairs = query_pairs(dataset.train)
        self.train_truth = build_truth_index(dataset, ["train"])

    def batches(self, epoch: int):
        return make_batches(
            self.pairs, self.config.batch_size, self.config.seed, epoch,
            self.train_truth.tails_of, self.model.num_entities,
        )

    def train_epoch(self, epoch: int) -> float:
        losses = []
        for batch in self.batches(epoch):
            loss, grads = batch_loss_and_grad(self.model, batch, self.config.label_smoothing)
            if not np.isfinite(loss):
                raise NumericDivergenceError(f"non-finite loss in epoch {epoch}")
            adam_step(self.model.params, grads, self.adam, self.config)
            losses.append(loss)
        return float(np.mean(losses)) if losses else 0.0


@dataclass
class FitResult:
    best_params: dict[str, np.ndarray]
    best_epoch: int
    best_valid_mrr: float
    log: list[dict] = field(default_factory=list)


def fit(
    trainer: Trainer,
    evaluate: Callable[[Model], dict],
    start_epoch: int = 0,
    best: FitResult | None = None,
    on_epoch: Callable[[dict, Trainer, FitResult, bool], None] | None = None,
) -> FitResult:
    """Train epochs ``start_epoch + 1 .. config.epochs``, keeping the best validation MRR.

    ``evaluate`` maps a model to a metrics dict with ``mrr`` and ``hits10``.
    Ties keep the earlier epoch. ``on_epoch`` receives the log record, the
    trainer, the running result and whether this epoch became the new best.
    """
    if best is None:
        best = FitResult(copy.deepcopy(trainer.model.params), 0, -np.inf)
    for epoch in range(start_epoch + 1, trainer.config.epochs + 1):
        try:
            loss = trainer.train_epoch(epoch)
        except NumericDivergenceError as exc:
            raise NumericDivergenceError(f"epoch {epoch}: {exc}") from exc
        record = {"epoch": epoch, "loss": loss, "valid_mrr": None, "valid_hits10": None}
        improved = False
        if epoch % trainer.config.eval_every == 0:
            metrics = evaluate(trainer.model)
            record["valid_mrr"] = metrics["mrr"]
            record["valid_hits10"] = metrics["hits10"]
            if metrics["mrr"] > best.best_valid_mrr:
                best.best_params = copy.deepcopy(trainer.model.params)
                best.best_epoch = epoch
                best.best_valid_mrr = metrics["mrr"]
                improved = True
        best.log.append(record)
        logger.debug(json.dumps(record))
        if on_epoch is not None:
            on_epoch(record, trainer, best, improved)
    return best


# -- verification -----------------------------------------------------------------


def gradient_check(model: Model, batch: QueryBatch, step: float = 1e-5, smoothing: float = 0.0,
                   floor: float = 1e-8) -> dict[str, float]:
    """Max relative error per parameter between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``. Parameters are
    perturbed on copies; the model is not mutated.
    """
    _, grads = batch_loss_and_grad(model, batch, smoothing)
    report = {}
    for name, p in model.params.items():
        worst = 0.0
        for idx in np.ndindex(p.shape):
            trial = {k: v.copy() for k, v in model.params.items()}
            trial[name][idx] = p[idx] + step
            up, _ = batch_loss_and_grad(model, batch, smoothing, trial, need_grad=False)
            trial[name][idx] = p[idx] - step
            down, _ = batch_loss_and_grad(model, batch, smoothing, trial, need_grad=False)
            numeric = (up - down) / (2 * step)
            a = grads[name][idx]
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), floor))
        report[name] = worst
    return report

"""Run configuration: YAML file, CLI overrides and the model digest."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .cooc_graph import ADJACENCY_KINDS, SELF_LOOP_MODES
from .decoders import DECODER_KINDS
from .encoders import ENCODER_KINDS, EncoderConfig
from .model import ConfigError, ModelConfig
from .training import TrainConfig

# file section for each flat field; top-level fields map to None
SECTIONS = {
    "dataset_dir": None,
    "output_dir": None,
    "seed": None,
    "encoder": "model",
    "dim": "model",
    "layers": "model",
    "decoder": "model",
    "adjacency": "graph",
    "self_loop_mode": "graph",
    "add_inverses": "graph",
    "learning_rate": "train",
    "batch_size": "train",
    "epochs": "train",
    "eval_every": "train",
    "label_smoothing": "train",
    "beta1": "adam",
    "beta2": "adam",
    "adam_eps": "adam",
}

# fields whose change invalidates a checkpoint
DIGEST_FIELDS = ("encoder", "dim", "layers", "decoder", "adjacency", "self_loop_mode", "add_inverses")

CHOICES = {
    "encoder": ENCODER_KINDS,
    "decoder": DECODER_KINDS,
    "adjacency": ADJACENCY_KINDS,
    "self_loop_mode": SELF_LOOP_MODES,
}


@dataclass
class RunConfig:
    dataset_dir: str = "data"
    output_dir: str = "runs/noge"
    seed: int = 0
    encoder: str = "dualqgnn"
    dim: int = 32
    layers: int = 1
    decoder: str = "quate"
    adjacency: str = "weighted"
    self_loop_mode: str = "paper_literal"
    add_inverses: bool = True
    learning_rate: float = 1e-3
    batch_size: int = 1024
    epochs: int = 3000
    eval_every: int = 1
    label_smoothing: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            kind = f.type if isinstance(f.type, str) else f.type.__name__
            try:
                if kind == "bool":
                    if isinstance(value, str):
                        value = value.strip().lower() in ("1", "true", "yes", "on")
                    value = bool(value)
                else:
                    value = {"int": int, "float": float, "str": str}[kind](value)
            except (TypeError, ValueError):
                raise ConfigError(f"{f.name}: cannot interpret {value!r} as {kind}") from None
            setattr(self, f.name, value)
        for name, allowed in CHOICES.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        # surface invalid combinations early
        try:
            self.model_config()
            self.train_config()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        flat = {}
        for key, value in (data or {}).items():
            if isinstance(value, dict):
                for sub_key, sub_value in value.items():
                    if SECTIONS.get(sub_key) != key:
                        raise ConfigError(f"unknown config key: {key}.{sub_key}")
                    flat[sub_key] = sub_value
            elif key in SECTIONS and SECTIONS[key] is None:
                flat[key] = value
            else:
                raise ConfigError(f"unknown config key: {key}")
        return cls(**flat)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        data = {}
        if path is not None:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        config = cls.from_mapping(data)
        if overrides:
            config = dataclasses.replace(config, **{k: v for k, v in overrides.items() if v is not None})
        return config

    def to_mapping(self) -> dict:
        out: dict = {}
        for name, section in SECTIONS.items():
            value = getattr(self, name)
            if section is None:
                out[name] = value
            else:
                out.setdefault(section, {})[name] = value
        return out

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_mapping(), f, sort_keys=False)

    def model_config(self) -> ModelConfig:
        return ModelConfig(EncoderConfig(self.encoder, self.layers, self.dim), self.decoder)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            eval_every=self.eval_every,
            label_smoothing=self.label_smoothing,
            seed=self.seed,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
        )

    def model_settings(self) -> dict:
        return {k: getattr(self, k) for k in DIGEST_FIELDS}

    def digest(self) -> str:
        blob = json.dumps(self.model_settings(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

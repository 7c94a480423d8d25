"""
Experiment configuration: dataclass schema, JSON loading with line-level validation errors,
defaults injection and stable hashing of config sections.
"""

import dataclasses
import hashlib
import json
import logging
import math
import os
import typing
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from enum import Enum, StrEnum
from pathlib import Path

import torch

from utils.errors import ValidationError

SCHEMA_VERSION = 1


class Ablation(StrEnum):
    """Which semantic-shift regularizers the translation objective uses."""

    NONE = "none"
    ID = "id"
    REF = "ref"
    MASK_FULL = "mask_full"


class GanMode(StrEnum):
    NON_SATURATING = "non_saturating"
    MINIMAX = "minimax"
    LEAST_SQUARES = "least_squares"


class Metric(StrEnum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


class SelectionMode(StrEnum):
    INFERRED = "inferred"
    RANDOM = "random"


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimizer settings of one training stage.
    epochs=0 is allowed: the stage builds its model without taking a step, so a fine-tune returns the
    backbone unchanged under a fresh head and a translation keeps its identity-initialized generators.
    """

    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    weight_decay: float = 5e-4

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValidationError(f"learning_rate={self.learning_rate} must be > 0")
        if self.epochs < 0:
            raise ValidationError(f"epochs={self.epochs} must be >= 0")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size={self.batch_size} must be >= 1")
        if self.weight_decay < 0:
            raise ValidationError(f"weight_decay={self.weight_decay} must be >= 0")


@dataclass(frozen=True)
class GapConfig:
    noise_sigma: float = 0.02
    texture: bool = True
    blur: bool = True


@dataclass(frozen=True)
class DataConfig:
    identities: int = 20
    illuminations: int = 12
    samples_per_identity: int = 4
    height: int = 64
    width: int = 32
    real_identities: int = 20
    real_cameras: int = 2
    real_samples_per_identity: int = 4
    target_identities: int = 20
    target_cameras: int = 2
    target_samples_per_identity: int = 5
    gap: GapConfig = field(default_factory=GapConfig)

    def __post_init__(self):
        for name in ("identities", "illuminations", "samples_per_identity", "target_identities"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name}={getattr(self, name)} must be >= 1")
        if self.target_cameras < 2:
            raise ValidationError("target_cameras must be >= 2 (one probe and one gallery camera)")
        if self.height < 16 or self.width < 16:
            raise ValidationError(f"image size {self.height}×{self.width} must be at least 16×16")


@dataclass(frozen=True)
class ModelConfig:
    embedding_dim: int = 64
    generator_filters: int = 16
    residual_blocks: int = 3
    discriminator_filters: int = 16
    identity_init: bool = True

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ValidationError(f"embedding_dim={self.embedding_dim} must be >= 1")
        if not 2 <= self.residual_blocks <= 4:
            raise ValidationError(f"residual_blocks={self.residual_blocks} must be in [2, 4]")


@dataclass(frozen=True)
class StageConfig:
    reid: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.01, epochs=20, batch_size=32))
    illum: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.01, epochs=12, batch_size=32))
    translation: TrainConfig = field(
        default_factory=lambda: TrainConfig(learning_rate=2e-4, epochs=30, batch_size=8, weight_decay=0.0)
    )
    finetune: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.005, epochs=10, batch_size=32))


@dataclass(frozen=True)
class TranslationConfig:
    lambdas: tuple[float, ...] = (10.0, 10.0, 5.0)
    ablation: Ablation = Ablation.MASK_FULL
    gan_mode: GanMode = GanMode.NON_SATURATING
    replay_buffer: int = 50
    mask_budget: float = 0.15
    matte_sigma_frac: tuple[float, ...] = (1.0 / 3.0, 0.25)

    def __post_init__(self):
        if len(self.lambdas) != 3 or any(v < 0 for v in self.lambdas):
            raise ValidationError(f"lambdas={self.lambdas} must be three reals >= 0")
        if len(self.matte_sigma_frac) != 2 or any(v <= 0 for v in self.matte_sigma_frac):
            raise ValidationError(f"matte_sigma_frac={self.matte_sigma_frac} must be two reals > 0")


@dataclass(frozen=True)
class EvaluationConfig:
    metric: Metric = Metric.COSINE
    probe_camera: int = 0
    gallery_camera: int = 1

    def __post_init__(self):
        if self.probe_camera == self.gallery_camera:
            raise ValidationError("probe_camera and gallery_camera must differ")


@dataclass(frozen=True)
class AblationConfig:
    seeds: tuple[int, ...] = (0, 1, 2)
    conditions: tuple[str, ...] = ("R", "R+S", "CycleGan", "CycleGan+L_id", "CycleGan+L_Ref", "Ours")
    random_draws: int = 3

    def __post_init__(self):
        if not self.seeds:
            raise ValidationError("ablation.seeds must not be empty")
        if self.random_draws < 0:
            raise ValidationError(f"random_draws={self.random_draws} must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment depends on; seed is required."""

    seed: int
    output_root: str = "runs/toy"
    selection: SelectionMode = SelectionMode.INFERRED
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: StageConfig = field(default_factory=StageConfig)
    translation: TranslationConfig = field(default_factory=TranslationConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(f"schema_version={self.schema_version} is not supported (expected {SCHEMA_VERSION})")
        cameras = self.data.target_cameras
        if not (0 <= self.evaluation.probe_camera < cameras and 0 <= self.evaluation.gallery_camera < cameras):
            raise ValidationError(f"evaluation cameras must index one of the {cameras} target cameras")

    def to_dict(self) -> dict:
        return to_dict(self)


# TrainConfig.seed is derived from the experiment seed per stage, so it is not part of the file schema
EXCLUDED_FIELDS = {TrainConfig: {"seed"}}


def to_dict(obj) -> dict:
    """Plain JSON-ready dict of a config dataclass (enums as values, tuples as lists)."""

    def convert(value):
        if is_dataclass(value):
            skip = EXCLUDED_FIELDS.get(type(value), set())
            return {f.name: convert(getattr(value, f.name)) for f in fields(value) if f.name not in skip}
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, (tuple, list)):
            return [convert(v) for v in value]
        return value

    return convert(obj)


def config_hash(*parts) -> str:
    """Stable SHA-256 over JSON renderings of config objects and plain values."""
    digest = hashlib.sha256()
    for part in parts:
        payload = to_dict(part) if is_dataclass(part) else part
        digest.update(json.dumps(payload, sort_keys=True, default=str).encode())
    return digest.hexdigest()


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance."""
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def nearest_key(key: str, candidates) -> str | None:
    candidates = list(candidates)
    if not candidates:
        return None
    return min(candidates, key=lambda c: (edit_distance(key, c), c))


class _Locator:
    """Finds the line of a key in the raw JSON text, searching after the parent's line."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line_of(self, key: str, after: int = 0) -> int:
        needle = f'"{key}"'
        for number in range(max(after, 1), len(self.lines) + 1):
            if needle in self.lines[number - 1]:
                return number
        return after or 1


def _coerce(value, hint, dotted: str, line: int, source: str):
    origin = typing.get_origin(hint)

    def fail(expected: str):
        raise ValidationError(f"{source}:{line}: {dotted} must be {expected}, got {value!r}")

    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError:
            fail("one of " + ", ".join(m.value for m in hint))
    if hint is bool:
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            fail("a string")
        return value
    if origin is tuple:
        if not isinstance(value, list):
            fail("a list")
        item_hint = typing.get_args(hint)[0]
        return tuple(_coerce(v, item_hint, f"{dotted}[{i}]", line, source) for i, v in enumerate(value))
    return value


def _build(cls, data, dotted: str, locator: _Locator, after: int, source: str):
    if not isinstance(data, dict):
        raise ValidationError(f"{source}:{after or 1}: {dotted or 'config'} must be an object")

    hints = typing.get_type_hints(cls)
    excluded = EXCLUDED_FIELDS.get(cls, set())
    known = [f.name for f in fields(cls) if f.name not in excluded]

    for key in data:
        if key not in known:
            line = locator.line_of(key, after)
            suggestion = nearest_key(key, known)
            hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
            raise ValidationError(f"{source}:{line}: unknown key '{_join(dotted, key)}'{hint}")

    kwargs = {}
    for f in fields(cls):
        if f.name in excluded:
            continue
        name = _join(dotted, f.name)
        if f.name not in data:
            if f.default is MISSING and f.default_factory is MISSING:
                raise ValidationError(f"{source}: missing required field '{name}'")
            continue

        line = locator.line_of(f.name, after)
        hint = hints[f.name]
        if is_dataclass(hint):
            kwargs[f.name] = _build(hint, data[f.name], name, locator, line, source)
        else:
            kwargs[f.name] = _coerce(data[f.name], hint, name, line, source)

    try:
        return cls(**kwargs)
    except ValidationError as e:
        raise ValidationError(f"{source}:{after or 1}: {dotted or 'config'}: {e}") from e


def _join(prefix: str, key: str) -> str:
    return f"{prefix}.{key}" if prefix else key


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parses and validates config text; every default is filled in."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{source}:{e.lineno}: {e.msg}") from e
    return _build(ExperimentConfig, data, "", _Locator(text), 0, source)


def validate_config(path) -> ExperimentConfig:
    """Loads a config file, validates it and echoes the resolved config (defaults included)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValidationError(f"Cannot read config {path}: {e}") from e

    config = parse_config(text, str(path))
    logging.info(f"Resolved config: {json.dumps(config.to_dict(), sort_keys=True)}")
    return config


def stage_seed(config: ExperimentConfig, stage: str, extra: int = 0) -> int:
    """Deterministic per-stage seed derived from the experiment seed."""
    offset = int(hashlib.sha256(stage.encode()).hexdigest()[:6], 16)
    return (config.seed * 1_000_003 + offset + extra) % (2**31 - 1)


def with_seed(train: TrainConfig, seed: int) -> TrainConfig:
    return dataclasses.replace(train, seed=seed)


def configure_threads() -> None:
    """Applies REIDADAPT_THREADS to torch when set."""
    threads = os.getenv("REIDADAPT_THREADS")
    if threads:
        torch.set_num_threads(int(threads))

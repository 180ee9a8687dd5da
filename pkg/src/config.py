"""
Config - YAML Run Configuration
===============================

Loads a YAML document with ``yaml.safe_load`` and validates it into the
pydantic models the engine runs on (TrainingConfig, ModelSpec). Unknown
keys are rejected. Errors name the YAML line or the dotted key path.

Example document::

    scheme: forking
    epochs: 20
    horizons: 13
    quantiles: [0.1, 0.5, 0.9]
    encoder:
      kind: wavenet
      hidden: 16
      layers: 4
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError
from .models.specs import DecoderSpec, EncoderSpec, FeatureLayout, HeadKind, ModelSpec, NormalizationMode
from .training.trainer import TrainingConfig, TrainingScheme

# Configure module logger
logger = logging.getLogger(__name__)

ENV_SEED = "MQF_SEED"
ENV_THREADS = "MQF_THREADS"
ENV_LOG_LEVEL = "MQF_LOG_LEVEL"


class RunConfig(BaseModel):
    """
    Everything a training run is configured with.

    Attributes mirror the accepted YAML keys; ``horizons`` is K.
    """
    model_config = ConfigDict(extra="forbid")

    scheme: TrainingScheme = TrainingScheme.FORKING
    head: HeadKind = HeadKind.QUANTILE
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = Field(default=0, ge=0)
    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    clip_norm: Optional[float] = Field(default=None, gt=0)
    threads: int = Field(default=1, ge=1)
    checkpoint_every: Optional[int] = Field(default=None, ge=1)
    train_end: Optional[int] = None
    horizons: int = Field(default=13, ge=1)
    quantiles: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    quantile_weights: Optional[List[float]] = None
    horizon_weights: Optional[List[float]] = None
    normalization: NormalizationMode = NormalizationMode.STANDARD
    encoder: EncoderSpec = Field(default_factory=EncoderSpec)
    decoder: DecoderSpec = Field(default_factory=DecoderSpec)
    repair_crossings: bool = False
    embedding_cap: int = Field(default=16, ge=1)

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(
            scheme=self.scheme,
            head=self.head,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            clip_norm=self.clip_norm,
            threads=self.threads,
            checkpoint_every=self.checkpoint_every,
            quantile_weights=self.quantile_weights,
            horizon_weights=self.horizon_weights,
            train_end=self.train_end,
        )

    def model_spec(self) -> ModelSpec:
        """Unfitted ModelSpec; the feature layout is filled from the dataset."""
        return ModelSpec(
            horizon=self.horizons,
            quantiles=list(self.quantiles),
            head=self.head,
            encoder=self.encoder,
            decoder=self.decoder,
            features=FeatureLayout(embedding_cap=self.embedding_cap),
            normalization=self.normalization,
            repair_crossings=self.repair_crossings,
        )


def _dotted(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_config(document: Dict[str, Any], source: str = "<config>") -> RunConfig:
    """
    Validate a parsed document.

    Raises:
        ConfigError: Naming the dotted key of the first invalid entry
    """
    try:
        config = RunConfig.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{source}: invalid key '{_dotted(first['loc'])}': {first['msg']}") from e
    # Cross-field checks that need both halves
    try:
        config.model_spec()
        config.training_config()
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{source}: invalid key '{_dotted(first['loc'])}': {first['msg']}") from e
    return config


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            base_value = merged.get(key)
            nested = _merge(base_value if isinstance(base_value, dict) else {}, value)
            if nested:
                merged[key] = nested
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load a YAML config and apply CLI overrides (None values are ignored).

    Args:
        path: YAML file (None: defaults only)
        overrides: Nested mapping of keys set on the command line

    Raises:
        ConfigError: On unreadable files, YAML syntax errors (with line) or
            invalid keys (with dotted path)
    """
    document: Dict[str, Any] = {}
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        source = str(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else "unknown line"
            problem = getattr(e, "problem", None) or str(e)
            raise ConfigError(f"{source}: YAML error at {where}: {problem}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{source}: top level must be a mapping")
        document = loaded

    config = parse_config(_merge(document, overrides or {}), source)
    logger.info(
        f"Config loaded from {source}: scheme={config.scheme.value}, head={config.head.value}, "
        f"encoder={config.encoder.kind.value}, K={config.horizons}, epochs={config.epochs}"
    )
    return config


def env_default(name: str, fallback: Any = None, cast=str):
    """Typed default for a CLI flag from the environment (.env included)."""
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"Environment variable {name}={raw!r} is not a valid {cast.__name__}") from None

"""
Specs - Architecture and Feature Descriptions
=============================================

Pydantic models describing a forecaster completely: the encoder kind and
widths, the decoder variant, the output head, the quantile set, horizon K
and the feature layout it was trained on. A ModelSpec is stored inside
every checkpoint.
"""

import math
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class EncoderKind(str, Enum):
    """Interchangeable sequence encoders."""
    LSTM = "lstm"
    LSTM_NARX = "lstm_narx"
    LSTM_LAG = "lstm_lag"
    WAVENET = "wavenet"


class DecoderKind(str, Enum):
    """Global/local MLP pair or the simplified global-only decoder."""
    FULL = "full"
    SIMPLIFIED = "simplified"


class HeadKind(str, Enum):
    """Output head: direct quantiles or shifted log-Gaussian parameters."""
    QUANTILE = "quantile"
    LOGGAUSSIAN = "loggaussian"


class NormalizationMode(str, Enum):
    """Per-series target normalisation."""
    STANDARD = "standard"
    SCALE = "scale"


class EncoderSpec(BaseModel):
    """
    Encoder description.

    Attributes:
        kind: Encoder kind
        hidden: State width H (channel width for wavenet)
        depth: Skip / lag depth D for lstm_narx and lstm_lag
        layers: Number of dilated layers L for wavenet
        lstm_layers: Number of stacked LSTM layers
    """
    model_config = ConfigDict(extra="forbid")

    kind: EncoderKind = EncoderKind.LSTM
    hidden: int = Field(default=16, ge=1)
    depth: int = Field(default=52, ge=1)
    layers: int = Field(default=4, ge=1)
    lstm_layers: int = Field(default=1, ge=1)


class DecoderSpec(BaseModel):
    """
    Decoder description. Unset widths resolve against the encoder width H.

    Attributes:
        kind: full (global + local MLP) or simplified (global only)
        context_horizon: Width C_h of each horizon-specific context (H/2)
        context_agnostic: Width C_a of the horizon-agnostic context (H/2)
        mlp_hidden: Width of both hidden layers of each MLP (2H)
    """
    model_config = ConfigDict(extra="forbid")

    kind: DecoderKind = DecoderKind.FULL
    context_horizon: Optional[int] = Field(default=None, ge=1)
    context_agnostic: Optional[int] = Field(default=None, ge=1)
    mlp_hidden: Optional[int] = Field(default=None, ge=1)


class FeatureLayout(BaseModel):
    """
    Covariate layout and the global feature scaling fitted at training.

    Attributes:
        hist_names: Historical-only columns x^(h) (includes the missingness flag)
        future_names: Future-known columns x^(f)
        static_categorical: Static categorical column -> known levels
        static_real: Static real-valued columns
        embedding_cap: Upper bound on a categorical embedding width
        hist_center / hist_scale: Scaling of x^(h)
        future_center / future_scale: Scaling of x^(f)
    """
    model_config = ConfigDict(extra="forbid")

    hist_names: List[str] = Field(default_factory=list)
    future_names: List[str] = Field(default_factory=list)
    static_categorical: Dict[str, List[str]] = Field(default_factory=dict)
    static_real: List[str] = Field(default_factory=list)
    embedding_cap: int = Field(default=16, ge=1)
    hist_center: Optional[List[float]] = None
    hist_scale: Optional[List[float]] = None
    future_center: Optional[List[float]] = None
    future_scale: Optional[List[float]] = None

    def embedding_width(self, column: str) -> int:
        """ceil(sqrt(cardinality)) capped at embedding_cap."""
        cardinality = len(self.static_categorical[column])
        return max(1, min(self.embedding_cap, math.ceil(math.sqrt(cardinality))))

    @property
    def static_width(self) -> int:
        """Width E of the static vector replicated across time."""
        return sum(self.embedding_width(c) for c in self.static_categorical) + len(self.static_real)

    @property
    def n_hist(self) -> int:
        return len(self.hist_names)

    @property
    def n_future(self) -> int:
        return len(self.future_names)

    @property
    def fitted(self) -> bool:
        return self.hist_center is not None and self.future_center is not None


class ModelSpec(BaseModel):
    """
    Full architecture and hyperparameter description of a forecaster.

    Example:
        >>> spec = ModelSpec(horizon=13, quantiles=[0.1, 0.5, 0.9],
        ...                  encoder=EncoderSpec(kind="wavenet", hidden=8, layers=3))
        >>> spec.grid_size
        39
    """
    model_config = ConfigDict(extra="forbid")

    horizon: int = Field(ge=1)
    quantiles: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    head: HeadKind = HeadKind.QUANTILE
    encoder: EncoderSpec = Field(default_factory=EncoderSpec)
    decoder: DecoderSpec = Field(default_factory=DecoderSpec)
    features: FeatureLayout = Field(default_factory=FeatureLayout)
    normalization: NormalizationMode = NormalizationMode.STANDARD
    repair_crossings: bool = False

    @field_validator("quantiles")
    @classmethod
    def _check_quantiles(cls, levels: List[float]) -> List[float]:
        if not levels:
            raise ValueError("at least one quantile level is required")
        for level in levels:
            if not 0.0 < level < 1.0:
                raise ValueError(f"quantile level {level} is outside (0, 1)")
        for lower, upper in zip(levels, levels[1:]):
            if not lower < upper:
                raise ValueError("quantile levels must be strictly increasing")
        return levels

    @model_validator(mode="after")
    def _loggaussian_scaling(self) -> "ModelSpec":
        # log(y + 1) needs an uncentred target
        if self.head == HeadKind.LOGGAUSSIAN:
            self.normalization = NormalizationMode.SCALE
        return self

    @property
    def hidden(self) -> int:
        return self.encoder.hidden

    @property
    def context_horizon(self) -> int:
        return self.decoder.context_horizon or max(1, self.hidden // 2)

    @property
    def context_agnostic(self) -> int:
        return self.decoder.context_agnostic or max(1, self.hidden // 2)

    @property
    def mlp_hidden(self) -> int:
        return self.decoder.mlp_hidden or 2 * self.hidden

    @property
    def n_quantiles(self) -> int:
        return len(self.quantiles)

    @property
    def grid_size(self) -> int:
        return self.horizon * self.n_quantiles

    @property
    def output_width(self) -> int:
        """Values produced per horizon: Q quantiles or (mu, raw sigma)."""
        return self.n_quantiles if self.head == HeadKind.QUANTILE else 2

    @property
    def target_width(self) -> int:
        """Width of the y block in the encoder input: y_t or its lag row."""
        return self.encoder.depth + 1 if self.encoder.kind == EncoderKind.LSTM_LAG else 1

    @property
    def encoder_input_width(self) -> int:
        f = self.features
        return self.target_width + f.n_hist + f.n_future + f.static_width

    @property
    def decoder_input_width(self) -> int:
        """Per-horizon decoder input: x^(f)_{t+k} plus the static vector."""
        return self.features.n_future + self.features.static_width

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json")

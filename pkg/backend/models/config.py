"""Configuration models for filtering, encoding, augmentation and evaluation."""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from backend.models.sequences import BacsMode

DEFAULT_THRESHOLDS: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)


class FilterConfig(BaseModel):
    """Corpus filtering thresholds."""

    model_config = ConfigDict(frozen=True)

    min_object_class_count: int = Field(default=2000, ge=0)
    min_relationship_class_count: int = Field(default=500, ge=0)
    min_box_side: float = Field(default=32.0, ge=0.0, description="Pixels")
    min_objects: int = Field(default=3, ge=0)
    max_objects: int = Field(default=30, ge=0)
    max_relationships: int = Field(default=9, ge=0)

    @model_validator(mode="after")
    def _object_bounds(self) -> "FilterConfig":
        if self.min_objects > self.max_objects:
            raise ValueError("min_objects must not exceed max_objects")
        return self


class ArQuantizer(BaseModel):
    """Uniform aspect-ratio (width / height) quantizer."""

    model_config = ConfigDict(frozen=True)

    interval: float = Field(default=0.05, gt=0.0)
    minimum: float = Field(default=0.5, gt=0.0)
    bins: int = Field(default=31, ge=1)

    @property
    def maximum(self) -> float:
        return self.minimum + self.interval * (self.bins - 1)


class EncodingConfig(BaseModel):
    """How layouts are quantized and written as BACS."""

    model_config = ConfigDict(frozen=True)

    grid_max: int = Field(default=40, ge=1, description="Long side of the quantized grid")
    quantizer: ArQuantizer = Field(default_factory=ArQuantizer)
    mode: BacsMode = BacsMode.RELATIVE
    include_imgar: bool = False


class AugmentConfig(BaseModel):
    """Subgraph / reordering augmentation limits."""

    model_config = ConfigDict(frozen=True)

    max_variants: int = Field(default=50, ge=1)
    max_relationships: int = Field(default=9, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)


class SleuConfig(BaseModel):
    """Jaccard threshold, maximum n-gram order and per-order weights."""

    model_config = ConfigDict(frozen=True)

    t_iou: float = Field(default=0.5, ge=0.0, le=1.0)
    max_order: int = Field(default=3, ge=1)
    weights: Optional[Tuple[float, ...]] = Field(
        default=None, description="w_n for n = 1..max_order; uniform when omitted"
    )

    @model_validator(mode="after")
    def _weights_shape(self) -> "SleuConfig":
        if self.weights is None:
            return self
        if len(self.weights) != self.max_order:
            raise ValueError(f"expected {self.max_order} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if not math.isclose(sum(self.weights), 1.0, abs_tol=1e-9):
            raise ValueError("weights must sum to 1")
        return self

    def order_weights(self, available: int) -> List[float]:
        """Weights for orders 1..available, renormalized to sum to one."""
        orders = min(available, self.max_order)
        raw = list(self.weights[:orders]) if self.weights is not None else [1.0] * orders
        total = sum(raw)
        if total <= 0:
            return [1.0 / orders] * orders
        return [w / total for w in raw]


class PipelineConfig(BaseModel):
    """Everything a pipeline command needs."""

    model_config = ConfigDict(frozen=True)

    filter: FilterConfig = Field(default_factory=FilterConfig)
    encoding: EncodingConfig = Field(default_factory=EncodingConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    thresholds: Tuple[float, ...] = Field(default=DEFAULT_THRESHOLDS, min_length=1)
    max_order: int = Field(default=3, ge=1)
    weights: Optional[Tuple[float, ...]] = None
    jobs: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _thresholds_in_range(self) -> "PipelineConfig":
        for t in self.thresholds:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"t_iou {t} outside [0, 1]")
        # fail early on weights that do not fit max_order
        self.sleu_configs()
        return self

    @property
    def seed(self) -> int:
        return self.augment.seed

    def sleu_configs(self) -> List[SleuConfig]:
        return [
            SleuConfig(t_iou=t, max_order=self.max_order, weights=self.weights)
            for t in self.thresholds
        ]

"""Data models for layout evaluation."""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from backend.models.sequences import QuantizedLayout


class RealBox(BaseModel):
    """Real-valued box anchored at (xmin, ymin)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float
    w: float = Field(gt=0.0)
    h: float = Field(gt=0.0)

    def shifted(self, dx: float, dy: float) -> "RealBox":
        return RealBox(x=self.x + dx, y=self.y + dy, w=self.w, h=self.h)


class VisualRelationship(BaseModel):
    """Layout-side view of one relationship: a class-labelled subject and object box."""

    model_config = ConfigDict(frozen=True)

    subject_class: str
    subject_box: RealBox
    object_class: str
    object_box: RealBox


class VisualRelationshipSet(BaseModel):
    """A layout seen as K visual relationships, index-aligned with its scene graph."""

    model_config = ConfigDict(frozen=True)

    relationships: Tuple[VisualRelationship, ...] = Field(min_length=1)

    def __len__(self) -> int:
        return len(self.relationships)

    def translated(self, dx: float, dy: float) -> "VisualRelationshipSet":
        return VisualRelationshipSet(
            relationships=tuple(
                rel.model_copy(
                    update={
                        "subject_box": rel.subject_box.shifted(dx, dy),
                        "object_box": rel.object_box.shifted(dx, dy),
                    }
                )
                for rel in self.relationships
            )
        )


class ShiftVector(BaseModel):
    """Translation applied to predicted boxes before the Jaccard test."""

    model_config = ConfigDict(frozen=True)

    dx: float
    dy: float

    @field_validator("dx", "dy")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("shift components must be finite")
        return value


class SleuResult(BaseModel):
    """Score of one prediction against its closest reference."""

    score: float = Field(ge=0.0, le=1.0)
    per_order: List[Optional[float]] = Field(
        description="p_n for n = 1..N against the chosen reference; None where K < n"
    )
    chosen_reference: int = Field(ge=0, description="0-based index of the closest reference")


class SampleScore(BaseModel):
    """Per-sample line of an evaluation report."""

    id: str
    sleu: float = Field(ge=0.0, le=1.0)
    p: List[Optional[float]]
    chosen_reference: Optional[int] = None
    flagged: bool = Field(default=False, description="Prediction was misaligned or undecodable")
    error: Optional[str] = None


class EvaluationReport(BaseModel):
    """Mean-SLEU report for one prediction source at one Jaccard threshold."""

    t_iou: float = Field(ge=0.0, le=1.0)
    max_order: int = Field(ge=1)
    mean_sleu: float = Field(ge=0.0, le=1.0)
    prediction: Optional[str] = Field(default=None, description="Prediction file the report covers")
    flagged: int = Field(default=0, ge=0, description="Samples scored 0 because they could not be decoded")
    samples: List[SampleScore]


class RestoredLayout(BaseModel):
    """One decoded prediction line."""

    line: int = Field(ge=1, description="1-based line in the prediction file")
    id: Optional[str] = None
    layout: Optional[QuantizedLayout] = None
    error: Optional[str] = Field(default=None, description="Why the line could not be decoded")


class RestoredLayoutFile(BaseModel):
    decoded: int = Field(ge=0)
    misaligned: int = Field(ge=0)
    layouts: List[RestoredLayout]

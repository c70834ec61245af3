"""Token sequence models: SF triplets, node pairs, BACS tokens and quantized layouts."""

from __future__ import annotations

import re
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from backend.models.graph import TOKEN_PATTERN

_TOKEN_RE = re.compile(TOKEN_PATTERN)

Triplet = Tuple[str, str, str]
NodePair = Tuple[int, int]


class SfSequence(BaseModel):
    """Semantic fragments: one (subject, predicate, object) triplet per relationship."""

    model_config = ConfigDict(frozen=True)

    triplets: Tuple[Triplet, ...]

    def __len__(self) -> int:
        return len(self.triplets)

    def tokens(self) -> List[str]:
        return [token for triplet in self.triplets for token in triplet]


class NodeSequence(BaseModel):
    """(subject node id, object node id) per relationship, parallel to an SfSequence."""

    model_config = ConfigDict(frozen=True)

    pairs: Tuple[NodePair, ...]

    def __len__(self) -> int:
        return len(self.pairs)


class BacsMode(str, Enum):
    """How the object box corner is written inside a segment."""

    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class BacsKind(str, Enum):
    """Brick-action word types."""

    C = "c"
    XP = "xp"
    YP = "yp"
    IXP = "ixp"
    IXN = "ixn"
    IYP = "iyp"
    IYN = "iyn"
    W = "w"
    H = "h"
    IMGAR = "imgar"


class BacsToken(BaseModel):
    """One brick action: a kind and its value (class token for ``c``, integer otherwise)."""

    model_config = ConfigDict(frozen=True)

    kind: BacsKind
    value: Union[int, str]

    @model_validator(mode="after")
    def _value_matches_kind(self) -> "BacsToken":
        if self.kind is BacsKind.C:
            if not isinstance(self.value, str) or not _TOKEN_RE.match(self.value):
                raise ValueError(f"class action needs a class token, got {self.value!r}")
        elif not isinstance(self.value, int) or isinstance(self.value, bool):
            raise ValueError(f"{self.kind.value} action needs an integer, got {self.value!r}")
        return self

    def __str__(self) -> str:
        return f"{self.kind.value}_{self.value}"


class GridBox(BaseModel):
    """Box on the quantized grid, in whole cells."""

    model_config = ConfigDict(frozen=True)

    x: int = Field(ge=0)
    y: int = Field(ge=0)
    w: int = Field(ge=1)
    h: int = Field(ge=1)

    @property
    def area(self) -> int:
        return self.w * self.h


class LabeledGridBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    class_label: str = Field(pattern=TOKEN_PATTERN)
    box: GridBox


class GridFrame(BaseModel):
    """Canvas of a quantized layout."""

    model_config = ConfigDict(frozen=True)

    grid_w: int = Field(ge=1)
    grid_h: int = Field(ge=1)
    ar_index: int = Field(ge=0)


class QuantizedLayout(BaseModel):
    """Layout mapped onto an integer grid whose long side is ``grid_max``."""

    model_config = ConfigDict(frozen=True)

    grid_w: int = Field(ge=1)
    grid_h: int = Field(ge=1)
    ar_index: int = Field(ge=0)
    boxes: Dict[int, LabeledGridBox]

    @property
    def frame(self) -> GridFrame:
        return GridFrame(grid_w=self.grid_w, grid_h=self.grid_h, ar_index=self.ar_index)

    def restrict(self, node_ids: Iterable[int]) -> "QuantizedLayout":
        keep = set(node_ids)
        return self.model_copy(
            update={"boxes": {nid: item for nid, item in self.boxes.items() if nid in keep}}
        )


class BacsSequence(BaseModel):
    """Optional aspect-ratio action followed by ten-word segments, one per relationship."""

    model_config = ConfigDict(frozen=True)

    mode: BacsMode = BacsMode.RELATIVE
    imgar: Optional[BacsToken] = None
    segments: Tuple[Tuple[BacsToken, ...], ...]

    @model_validator(mode="after")
    def _segment_shape(self) -> "BacsSequence":
        if self.imgar is not None and self.imgar.kind is not BacsKind.IMGAR:
            raise ValueError("leading token must be an imgar action")
        for index, segment in enumerate(self.segments):
            if len(segment) != 10:
                raise ValueError(f"segment {index} has {len(segment)} words, expected 10")
        return self

    def __len__(self) -> int:
        return len(self.segments)

    def tokens(self) -> List[BacsToken]:
        flat: List[BacsToken] = [self.imgar] if self.imgar is not None else []
        for segment in self.segments:
            flat.extend(segment)
        return flat

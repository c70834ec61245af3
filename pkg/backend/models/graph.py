"""Scene graph, semantic layout and corpus document models."""

from __future__ import annotations

from collections import Counter
from typing import Dict, Iterable, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

TOKEN_PATTERN = r"^[a-z0-9_]+$"


class ObjectNode(BaseModel):
    """An object node of a scene graph."""

    model_config = ConfigDict(frozen=True)

    node_id: int = Field(description="Identifier unique within its graph")
    class_label: str = Field(pattern=TOKEN_PATTERN, description="Normalized class token")
    attributes: Tuple[str, ...] = Field(default=(), description="Attribute tokens, possibly empty")


class Relationship(BaseModel):
    """A directed, predicate-labelled edge between two object nodes."""

    model_config = ConfigDict(frozen=True)

    subject_id: int
    predicate: str = Field(pattern=TOKEN_PATTERN)
    object_id: int

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "Relationship":
        if self.subject_id == self.object_id:
            raise ValueError(f"relationship endpoints must differ (node {self.subject_id})")
        return self


class SceneGraph(BaseModel):
    """Object nodes plus an ordered relationship list."""

    model_config = ConfigDict(frozen=True)

    nodes: Tuple[ObjectNode, ...]
    relationships: Tuple[Relationship, ...]

    @model_validator(mode="after")
    def _references_resolve(self) -> "SceneGraph":
        ids = [node.node_id for node in self.nodes]
        if len(ids) != len(set(ids)):
            raise ValueError("node ids must be unique within a graph")
        known = set(ids)
        for index, rel in enumerate(self.relationships):
            for endpoint in (rel.subject_id, rel.object_id):
                if endpoint not in known:
                    raise ValueError(f"relationship {index} references unknown node {endpoint}")
        return self

    def node_map(self) -> Dict[int, ObjectNode]:
        return {node.node_id: node for node in self.nodes}

    def related_node_ids(self) -> List[int]:
        """Node ids that take part in at least one relationship, in node order."""
        used = {rel.subject_id for rel in self.relationships}
        used.update(rel.object_id for rel in self.relationships)
        return [node.node_id for node in self.nodes if node.node_id in used]


class PixelBox(BaseModel):
    """Axis-aligned box in image pixels, anchored at its top-left corner."""

    model_config = ConfigDict(frozen=True)

    x: float = Field(ge=0.0, description="xmin in pixels")
    y: float = Field(ge=0.0, description="ymin in pixels")
    w: float = Field(gt=0.0)
    h: float = Field(gt=0.0)


class SemanticLayout(BaseModel):
    """Pixel-space boxes keyed by node id, with the image size."""

    model_config = ConfigDict(frozen=True)

    image_w: int = Field(gt=0)
    image_h: int = Field(gt=0)
    boxes: Dict[int, PixelBox]

    def restrict(self, node_ids: Iterable[int]) -> "SemanticLayout":
        keep = set(node_ids)
        return SemanticLayout(
            image_w=self.image_w,
            image_h=self.image_h,
            boxes={node_id: box for node_id, box in self.boxes.items() if node_id in keep},
        )


class GroundedSample(BaseModel):
    """A scene graph paired with its semantic layout."""

    model_config = ConfigDict(frozen=True)

    sample_id: str
    graph: SceneGraph
    layout: SemanticLayout

    @model_validator(mode="after")
    def _layout_covers_graph(self) -> "GroundedSample":
        missing = sorted(set(self.graph.related_node_ids()) - set(self.layout.boxes))
        if missing:
            raise ValueError(f"nodes {missing} have no box in the layout")
        return self


class ClassFrequencies(BaseModel):
    """Object-class and predicate-class occurrence counts over a corpus split."""

    model_config = ConfigDict(frozen=True)

    objects: Dict[str, int] = Field(default_factory=dict)
    predicates: Dict[str, int] = Field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples: Iterable[GroundedSample]) -> "ClassFrequencies":
        objects: Counter = Counter()
        predicates: Counter = Counter()
        for sample in samples:
            objects.update(node.class_label for node in sample.graph.nodes)
            predicates.update(rel.predicate for rel in sample.graph.relationships)
        return cls(objects=dict(objects), predicates=dict(predicates))


# Raw document schema, validated before conversion into the domain types above.


class CorpusObject(BaseModel):
    id: int
    class_: str = Field(alias="class")
    attributes: List[str] = Field(default_factory=list)
    box: Tuple[float, float, float, float]

    model_config = ConfigDict(populate_by_name=True, allow_inf_nan=False)


class CorpusRelationship(BaseModel):
    subject: int
    predicate: str
    object: int


class CorpusSample(BaseModel):
    id: str
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    objects: List[CorpusObject]
    relationships: List[CorpusRelationship]


class CorpusDocument(BaseModel):
    samples: List[CorpusSample]

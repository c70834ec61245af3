"""Corpus ingestion, scene-graph preprocessing and dataset filtering."""

from __future__ import annotations

import json
import logging
import math
import re
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set

from pydantic import ValidationError

from backend.errors import ConsistencyError, CorpusParseError, EmptyGraphError
from backend.models.config import FilterConfig
from backend.models.graph import (
    ClassFrequencies,
    CorpusDocument,
    CorpusObject,
    CorpusRelationship,
    CorpusSample,
    GroundedSample,
    ObjectNode,
    PixelBox,
    Relationship,
    SceneGraph,
    SemanticLayout,
)

logger = logging.getLogger(__name__)

_NON_TOKEN = re.compile(r"[^a-z0-9]+")


def normalize_label(label: str) -> str:
    """Lowercase a label and collapse every run of non ``[a-z0-9]`` characters to ``_``.

    ``"Traffic Light"`` becomes ``"traffic_light"``. Returns an empty string when
    nothing usable is left; callers treat that as a schema violation.
    """

    return _NON_TOKEN.sub("_", label.strip().lower()).strip("_")


def _location(loc: Sequence) -> str:
    parts: List[str] = []
    for item in loc:
        if isinstance(item, int) and parts:
            parts[-1] = f"{parts[-1]}[{item}]"
        else:
            parts.append(str(item))
    return ".".join(parts)


def _clamp_box(raw: CorpusObject, width: int, height: int, sample_id: str, field: str) -> PixelBox:
    x, y, w, h = raw.box
    if not all(math.isfinite(v) for v in raw.box):
        raise CorpusParseError(f"non-finite box coordinate in {list(raw.box)}", sample_id, field)
    if w <= 0 or h <= 0:
        raise CorpusParseError(f"non-positive box size ({w} x {h})", sample_id, field)
    x0, y0 = max(0.0, x), max(0.0, y)
    x1, y1 = min(float(width), x + w), min(float(height), y + h)
    if x1 <= x0 or y1 <= y0:
        raise CorpusParseError("box lies outside the image", sample_id, field)
    return PixelBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0)


def convert_sample(raw: CorpusSample) -> GroundedSample:
    """Validate one raw corpus entry and turn it into a grounded sample."""

    sid = raw.id
    nodes: List[ObjectNode] = []
    boxes: Dict[int, PixelBox] = {}
    for index, obj in enumerate(raw.objects):
        field = f"objects[{index}]"
        if obj.id in boxes:
            raise CorpusParseError(f"duplicate object id {obj.id}", sid, f"{field}.id")
        label = normalize_label(obj.class_)
        if not label:
            raise CorpusParseError(f"unusable class label {obj.class_!r}", sid, f"{field}.class")
        attributes = tuple(a for a in (normalize_label(attr) for attr in obj.attributes) if a)
        nodes.append(ObjectNode(node_id=obj.id, class_label=label, attributes=attributes))
        boxes[obj.id] = _clamp_box(obj, raw.width, raw.height, sid, f"{field}.box")

    relationships: List[Relationship] = []
    for index, rel in enumerate(raw.relationships):
        relationships.append(_convert_relationship(rel, boxes, sid, f"relationships[{index}]"))

    return GroundedSample(
        sample_id=sid,
        graph=SceneGraph(nodes=tuple(nodes), relationships=tuple(relationships)),
        layout=SemanticLayout(image_w=raw.width, image_h=raw.height, boxes=boxes),
    )


def _convert_relationship(
    rel: CorpusRelationship, known: Mapping[int, PixelBox], sid: str, field: str
) -> Relationship:
    for name, node_id in (("subject", rel.subject), ("object", rel.object)):
        if node_id not in known:
            raise CorpusParseError(f"unknown node id {node_id}", sid, f"{field}.{name}")
    if rel.subject == rel.object:
        raise CorpusParseError(f"self relationship on node {rel.subject}", sid, field)
    predicate = normalize_label(rel.predicate)
    if not predicate:
        raise CorpusParseError(f"unusable predicate {rel.predicate!r}", sid, f"{field}.predicate")
    return Relationship(subject_id=rel.subject, predicate=predicate, object_id=rel.object)


def parse_corpus(document: str) -> List[GroundedSample]:
    """Read a corpus JSON document into grounded samples, in document order."""

    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("samples"), list):
        raise CorpusParseError("document must be an object with a 'samples' list", field="samples")

    samples: List[GroundedSample] = []
    seen: Set[str] = set()
    for index, entry in enumerate(payload["samples"]):
        sid = str(entry.get("id", f"#{index}")) if isinstance(entry, dict) else f"#{index}"
        try:
            raw = CorpusSample.model_validate(entry)
        except ValidationError as exc:
            error = exc.errors()[0]
            raise CorpusParseError(error["msg"], sid, _location(error["loc"])) from exc
        if raw.id in seen:
            raise CorpusParseError("duplicate sample id", sid, "id")
        seen.add(raw.id)
        samples.append(convert_sample(raw))
    logger.debug("Parsed %d samples", len(samples))
    return samples


def load_corpus(path: Path) -> List[GroundedSample]:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def dump_corpus(samples: Iterable[GroundedSample]) -> str:
    """Write samples back in the schema ``parse_corpus`` reads."""

    entries = []
    for sample in samples:
        objects = [
            CorpusObject(
                id=node.node_id,
                class_=node.class_label,
                attributes=list(node.attributes),
                box=(box.x, box.y, box.w, box.h),
            )
            for node in sample.graph.nodes
            for box in [sample.layout.boxes[node.node_id]]
        ]
        relationships = [
            CorpusRelationship(subject=rel.subject_id, predicate=rel.predicate, object=rel.object_id)
            for rel in sample.graph.relationships
        ]
        entries.append(
            CorpusSample(
                id=sample.sample_id,
                width=sample.layout.image_w,
                height=sample.layout.image_h,
                objects=objects,
                relationships=relationships,
            )
        )
    return CorpusDocument(samples=entries).model_dump_json(by_alias=True, indent=2)


def preprocess_graph(sample: GroundedSample) -> GroundedSample:
    """Drop attributes and objects that take part in no relationship."""

    if not sample.graph.relationships:
        raise EmptyGraphError(f"sample '{sample.sample_id}' has no relationships")
    keep = sample.graph.related_node_ids()
    nodes = sample.graph.node_map()
    graph = SceneGraph(
        nodes=tuple(ObjectNode(node_id=nid, class_label=nodes[nid].class_label) for nid in keep),
        relationships=sample.graph.relationships,
    )
    return GroundedSample(sample_id=sample.sample_id, graph=graph, layout=sample.layout.restrict(keep))


def _filter_sample(
    sample: GroundedSample, config: FilterConfig, frequencies: ClassFrequencies
) -> Optional[GroundedSample]:
    graph, layout = sample.graph, sample.layout

    # box-size cull
    small = {
        nid for nid, box in layout.boxes.items() if min(box.w, box.h) < config.min_box_side
    }
    # class-frequency cull
    rare = {
        node.node_id
        for node in graph.nodes
        if frequencies.objects.get(node.class_label, 0) < config.min_object_class_count
    }
    dropped = small | rare
    nodes = tuple(node for node in graph.nodes if node.node_id not in dropped)
    relationships = [
        rel
        for rel in graph.relationships
        if rel.subject_id not in dropped
        and rel.object_id not in dropped
        and frequencies.predicates.get(rel.predicate, 0) >= config.min_relationship_class_count
    ]

    # sample cull
    if not config.min_objects <= len(nodes) <= config.max_objects or not relationships:
        logger.debug(
            "Dropping sample %s (%d objects, %d relationships)",
            sample.sample_id,
            len(nodes),
            len(relationships),
        )
        return None

    # relationship cap, document order
    relationships = relationships[: config.max_relationships]
    return GroundedSample(
        sample_id=sample.sample_id,
        graph=SceneGraph(nodes=nodes, relationships=tuple(relationships)),
        layout=layout.restrict(node.node_id for node in nodes),
    )


def filter_corpus(
    samples: Sequence[GroundedSample],
    config: FilterConfig,
    frequencies: Optional[ClassFrequencies] = None,
) -> List[GroundedSample]:
    """Apply the dataset filtering rules.

    Rules run in a fixed order: box-size cull, class-frequency cull, object and
    relationship count cull, relationship cap. ``frequencies`` defaults to the
    class counts of ``samples`` themselves; pass the training-split table when
    filtering validation or test samples.
    """

    if frequencies is None:
        frequencies = ClassFrequencies.from_samples(samples)
    kept = [
        result
        for result in (_filter_sample(sample, config, frequencies) for sample in samples)
        if result is not None
    ]
    logger.info("Filter kept %d of %d samples", len(kept), len(samples))
    return kept


def read_split_manifest(path: Path) -> List[str]:
    """Sample ids, one per line; blank lines and ``#`` comments are ignored."""

    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(line)
    return ids


def split_corpus(
    samples: Sequence[GroundedSample], manifests: Mapping[str, Sequence[str]]
) -> Dict[str, List[GroundedSample]]:
    """Assign samples to named splits, keeping manifest order."""

    by_id = {sample.sample_id: sample for sample in samples}
    owner: Dict[str, str] = {}
    splits: Dict[str, List[GroundedSample]] = {}
    for name, ids in manifests.items():
        splits[name] = []
        for sid in ids:
            if sid not in by_id:
                raise ConsistencyError(f"split '{name}' lists unknown sample '{sid}'")
            if sid in owner:
                raise ConsistencyError(f"sample '{sid}' is in both '{owner[sid]}' and '{name}'")
            owner[sid] = name
            splits[name].append(by_id[sid])
    unassigned = len(by_id) - len(owner)
    if unassigned:
        logger.warning("%d samples are listed in no split and were dropped", unassigned)
    return splits

"""Semantic-fragment (SF) sequences and their node-id sidecar."""

from __future__ import annotations

from typing import Tuple

from backend.errors import EmptyGraphError, SequenceFormatError
from backend.models.graph import SceneGraph
from backend.models.sequences import NodeSequence, SfSequence


def encode_sf(graph: SceneGraph) -> Tuple[SfSequence, NodeSequence]:
    """Decompose a preprocessed graph into one SF triplet per relationship.

    The node sequence keeps the (subject id, object id) pair of each triplet so
    boxes can be merged back onto graph nodes after translation.
    """

    if not graph.relationships:
        raise EmptyGraphError("scene graph has no relationships")
    classes = {node.node_id: node.class_label for node in graph.nodes}
    triplets = tuple(
        (classes[rel.subject_id], rel.predicate, classes[rel.object_id])
        for rel in graph.relationships
    )
    pairs = tuple((rel.subject_id, rel.object_id) for rel in graph.relationships)
    return SfSequence(triplets=triplets), NodeSequence(pairs=pairs)


def parse_sf(text: str) -> SfSequence:
    tokens = text.split()
    if not tokens:
        raise SequenceFormatError("empty SF line")
    if len(tokens) % 3:
        raise SequenceFormatError(f"SF line has {len(tokens)} tokens, not a multiple of 3")
    return SfSequence(
        triplets=tuple(tuple(tokens[i : i + 3]) for i in range(0, len(tokens), 3))
    )


def serialize_sf(seq: SfSequence) -> str:
    return " ".join(seq.tokens())


def serialize_nodes(seq: NodeSequence) -> str:
    return ";".join(f"{s} {o}" for s, o in seq.pairs)


def parse_nodes(text: str) -> NodeSequence:
    """Read a ``"s o;s o"`` sidecar line."""

    pairs = []
    for index, chunk in enumerate(text.strip().split(";") if text.strip() else []):
        parts = chunk.split()
        if len(parts) != 2:
            raise SequenceFormatError(f"node pair {index} is {chunk!r}, expected two integers")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise SequenceFormatError(f"node pair {index} is {chunk!r}, expected two integers") from exc
    if not pairs:
        raise SequenceFormatError("empty node line")
    return NodeSequence(pairs=tuple(pairs))

"""Training-pair construction and subgraph / reordering augmentation."""

from __future__ import annotations

import hashlib
import itertools
import logging
import math
import random
from typing import Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

from backend.errors import EmptyGraphError
from backend.models.config import AugmentConfig, EncodingConfig
from backend.models.graph import GroundedSample, SceneGraph
from backend.models.sequences import BacsSequence, NodeSequence, QuantizedLayout, SfSequence
from backend.services.bacs_codec import encode_bacs, quantize_layout
from backend.services.sf_codec import encode_sf

logger = logging.getLogger(__name__)

Ordering = Tuple[int, ...]


class Correspondence(NamedTuple):
    """One aligned (SF, nodes, BACS) training line triple."""

    sf: SfSequence
    nodes: NodeSequence
    bacs: BacsSequence


def quantize_sample(sample: GroundedSample, encoding: EncodingConfig) -> QuantizedLayout:
    return quantize_layout(sample.layout, sample.graph, encoding.grid_max, encoding.quantizer)


def _correspondence(graph: SceneGraph, ql: QuantizedLayout, encoding: EncodingConfig) -> Correspondence:
    sf, nodes = encode_sf(graph)
    bacs = encode_bacs(ql, nodes, encoding.mode, encoding.include_imgar)
    return Correspondence(sf, nodes, bacs)


def build_correspondence(
    sample: GroundedSample, encoding: Optional[EncodingConfig] = None
) -> Correspondence:
    """SF, node and BACS sequences of a preprocessed sample, in graph order."""

    encoding = encoding or EncodingConfig()
    return _correspondence(sample.graph, quantize_sample(sample, encoding), encoding)


def sample_rng(seed: int, sample_id: str) -> random.Random:
    """Per-sample random stream, independent of the order samples are processed in."""

    digest = hashlib.sha256(f"{seed}:{sample_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def count_orderings(k: int) -> int:
    """Number of ordered non-empty subsets of k relationships."""

    return sum(math.perm(k, size) for size in range(1, k + 1))


def _all_orderings(k: int) -> Iterator[Ordering]:
    for size in range(1, k + 1):
        yield from itertools.permutations(range(k), size)


def sample_orderings(k: int, max_variants: int, rng: random.Random) -> List[Ordering]:
    """Distinct ordered relationship subsets; the identity ordering comes first.

    When every ordering fits under the cap they are all returned, otherwise
    orderings are drawn by picking a size uniformly in [1, k], a uniform subset
    of that size and a uniform permutation, rejecting repeats.
    """

    identity = tuple(range(k))
    if count_orderings(k) <= max_variants:
        return [identity] + [o for o in _all_orderings(k) if o != identity]

    chosen: List[Ordering] = [identity]
    seen: Set[Ordering] = {identity}
    attempts, limit = 0, 1000 * max_variants
    while len(chosen) < max_variants and attempts < limit:
        attempts += 1
        size = rng.randint(1, k)
        ordering = tuple(rng.sample(range(k), size))
        if ordering not in seen:
            seen.add(ordering)
            chosen.append(ordering)
    if len(chosen) < max_variants:
        logger.warning("Stopped after %d draws with %d of %d variants", attempts, len(chosen), max_variants)
    return chosen


def augment_sample(
    sample: GroundedSample,
    config: Optional[AugmentConfig] = None,
    encoding: Optional[EncodingConfig] = None,
) -> List[Correspondence]:
    """Expand one preprocessed sample into up to ``max_variants`` correspondences."""

    config = config or AugmentConfig()
    encoding = encoding or EncodingConfig()
    relationships = sample.graph.relationships
    if not relationships:
        raise EmptyGraphError(f"sample '{sample.sample_id}' has no relationships")
    if len(relationships) > config.max_relationships:
        logger.warning(
            "Sample %s has %d relationships, keeping the first %d",
            sample.sample_id,
            len(relationships),
            config.max_relationships,
        )
        relationships = relationships[: config.max_relationships]

    ql = quantize_sample(sample, encoding)
    rng = sample_rng(config.seed, sample.sample_id)
    variants = []
    for ordering in sample_orderings(len(relationships), config.max_variants, rng):
        subgraph = subgraph_for(sample.graph, [relationships[i] for i in ordering])
        variants.append(_correspondence(subgraph, ql, encoding))
    logger.debug("Sample %s augmented to %d variants", sample.sample_id, len(variants))
    return variants


def subgraph_for(graph: SceneGraph, relationships: Sequence) -> SceneGraph:
    """Graph restricted to ``relationships`` (in the given order) and their endpoints."""

    used = {rel.subject_id for rel in relationships} | {rel.object_id for rel in relationships}
    return SceneGraph(
        nodes=tuple(node for node in graph.nodes if node.node_id in used),
        relationships=tuple(relationships),
    )

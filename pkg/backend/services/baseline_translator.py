"""Statistical SF-to-BACS translator with triplet -> predicate -> global backoff.

It stands in for a trained sequence model: any external translator only has to
write a ``.bacs`` file line-aligned with the input ``.sf`` file, and its output
goes through the same alignment gate as the predictions produced here.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ValidationError

from backend.errors import AlignmentError, TableFormatError, UntrainedModelError
from backend.models.baseline import TABLE_FORMAT_VERSION, BaselineTable, GeometryStats
from backend.models.sequences import BacsKind, BacsMode, BacsSequence, BacsToken, SfSequence
from backend.services.bacs_codec import (
    DEFAULT_GRID_MAX,
    round_half_up,
    value_range,
    verify_alignment,
)

logger = logging.getLogger(__name__)

K = BacsKind


def _segment_geometry(words) -> Tuple[Tuple[int, int, int, int], Tuple[int, int], Tuple[int, int]]:
    _, xs, ys, ws, hs, _, ox, oy, wo, ho = words
    sx, sy = int(xs.value), int(ys.value)
    if ox.kind in (K.IXP, K.IXN):
        dx = ox.value if ox.kind is K.IXP else -ox.value
        dy = oy.value if oy.kind is K.IYP else -oy.value
    else:
        dx, dy = int(ox.value) - sx, int(oy.value) - sy
    return (sx, sy, int(ws.value), int(hs.value)), (dx, dy), (int(wo.value), int(ho.value))


def _observe(table: Dict, key, subject, delta, size) -> None:
    current = table.get(key)
    table[key] = (
        GeometryStats.single(subject, delta, size)
        if current is None
        else current.observe(subject, delta, size)
    )


def train_baseline(pairs: Iterable[Tuple[SfSequence, BacsSequence]]) -> BaselineTable:
    """Fold training pairs into running geometry means."""

    by_triplet: Dict = {}
    by_predicate: Dict = {}
    overall: Dict = {}
    ar_counts: Dict[int, int] = {}
    for line, (sf, bacs) in enumerate(pairs, start=1):
        try:
            verify_alignment(bacs.tokens(), len(sf), bacs.mode, bacs.imgar is not None)
        except AlignmentError as exc:
            raise exc.at_line(line) from exc
        if bacs.imgar is not None:
            index = int(bacs.imgar.value)
            ar_counts[index] = ar_counts.get(index, 0) + 1
        for triplet, words in zip(sf.triplets, bacs.segments):
            subject, delta, size = _segment_geometry(words)
            _observe(by_triplet, tuple(triplet), subject, delta, size)
            _observe(by_predicate, triplet[1], subject, delta, size)
            _observe(overall, None, subject, delta, size)
    table = BaselineTable(
        by_triplet=by_triplet,
        by_predicate=by_predicate,
        global_stats=overall.get(None),
        ar_counts=ar_counts,
    )
    logger.info(
        "Baseline trained: %d triplet types, %d predicates",
        len(table.by_triplet),
        len(table.by_predicate),
    )
    return table


def _lookup(table: BaselineTable, triplet) -> GeometryStats:
    stats = table.by_triplet.get(tuple(triplet))
    if stats is None:
        stats = table.by_predicate.get(triplet[1])
    return stats if stats is not None else table.global_stats


def _bounded(kind: BacsKind, value: float, grid_max: int) -> BacsToken:
    low, high = value_range(kind, grid_max, 1)
    return BacsToken(kind=kind, value=max(low, min(round_half_up(value), high)))


def _offset(value: float, positive: BacsKind, negative: BacsKind, grid_max: int) -> BacsToken:
    delta = max(-(grid_max - 1), min(round_half_up(value), grid_max - 1))
    return BacsToken(kind=positive, value=delta) if delta >= 0 else BacsToken(kind=negative, value=-delta)


def predict_baseline(
    sf: SfSequence,
    table: BaselineTable,
    include_imgar: bool = False,
    grid_max: int = DEFAULT_GRID_MAX,
    mode: BacsMode = BacsMode.RELATIVE,
    default_ar_index: int = 10,
) -> BacsSequence:
    """Emit one segment per triplet from the backed-off mean geometry."""

    if not table.trained:
        raise UntrainedModelError("baseline table is empty; train it before predicting")
    segments = []
    for triplet in sf.triplets:
        stats = _lookup(table, triplet)
        sx, sy, sw, sh = stats.mean_subject
        dx, dy = stats.mean_object_delta
        ow, oh = stats.mean_object_size
        subject_x = _bounded(K.XP, sx, grid_max)
        subject_y = _bounded(K.YP, sy, grid_max)
        words = [
            BacsToken(kind=K.C, value=triplet[0]),
            subject_x,
            subject_y,
            _bounded(K.W, sw, grid_max),
            _bounded(K.H, sh, grid_max),
            BacsToken(kind=K.C, value=triplet[2]),
        ]
        if mode is BacsMode.RELATIVE:
            words.append(_offset(dx, K.IXP, K.IXN, grid_max))
            words.append(_offset(dy, K.IYP, K.IYN, grid_max))
        else:
            words.append(_bounded(K.XP, subject_x.value + round_half_up(dx), grid_max))
            words.append(_bounded(K.YP, subject_y.value + round_half_up(dy), grid_max))
        words.append(_bounded(K.W, ow, grid_max))
        words.append(_bounded(K.H, oh, grid_max))
        segments.append(tuple(words))

    imgar = None
    if include_imgar:
        index = table.modal_ar_index
        if index is None:
            logger.warning("No imgar seen in training, using index %d", default_ar_index)
            index = default_ar_index
        imgar = BacsToken(kind=K.IMGAR, value=index)
    return BacsSequence(mode=mode, imgar=imgar, segments=tuple(segments))


# --- persistence ---


class _TripletEntry(BaseModel):
    subject: str
    predicate: str
    object: str
    stats: GeometryStats


class _PredicateEntry(BaseModel):
    predicate: str
    stats: GeometryStats


class _TableFile(BaseModel):
    version: int
    triplets: List[_TripletEntry]
    predicates: List[_PredicateEntry]
    global_stats: Optional[GeometryStats] = None
    ar_counts: Dict[int, int]


def dump_table(table: BaselineTable) -> str:
    document = _TableFile(
        version=TABLE_FORMAT_VERSION,
        triplets=[
            _TripletEntry(subject=s, predicate=p, object=o, stats=stats)
            for (s, p, o), stats in sorted(table.by_triplet.items())
        ],
        predicates=[
            _PredicateEntry(predicate=p, stats=stats) for p, stats in sorted(table.by_predicate.items())
        ],
        global_stats=table.global_stats,
        ar_counts=dict(sorted(table.ar_counts.items())),
    )
    return document.model_dump_json(indent=2)


def parse_table(text: str) -> BaselineTable:
    if not text.strip():
        raise TableFormatError("baseline table file is empty")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"baseline table is not valid JSON: {exc}") from exc
    version = raw.get("version") if isinstance(raw, dict) else None
    if version != TABLE_FORMAT_VERSION:
        raise TableFormatError(
            f"baseline table version {version!r} is not supported (expected {TABLE_FORMAT_VERSION})"
        )
    try:
        document = _TableFile.model_validate(raw)
    except ValidationError as exc:
        raise TableFormatError(f"baseline table is corrupt: {exc.errors()[0]['msg']}") from exc
    return BaselineTable(
        by_triplet={(e.subject, e.predicate, e.object): e.stats for e in document.triplets},
        by_predicate={e.predicate: e.stats for e in document.predicates},
        global_stats=document.global_stats,
        ar_counts=document.ar_counts,
    )


def save_table(table: BaselineTable, path: Path) -> None:
    Path(path).write_text(dump_table(table), encoding="utf-8")


def load_table(path: Path) -> BaselineTable:
    return parse_table(Path(path).read_text(encoding="utf-8"))

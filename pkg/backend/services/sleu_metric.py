"""SLEU: thresholded-Jaccard n-gram agreement between a predicted and reference layouts.

Relationships play the role words play in BLEU. Unigram accuracy compares each
visual relationship after aligning the predicted subject corner onto the
reference one; n-gram accuracy compares the subject boxes of every
n-relationship subset after aligning their mean corner offset. The score is the
weighted geometric mean of the accuracies, maximized over references.
"""

from __future__ import annotations

import itertools
import math
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from backend.errors import ConsistencyError, MetricDomainError, UndefinedOrderError
from backend.models.config import SleuConfig
from backend.models.evaluation import (
    RealBox,
    ShiftVector,
    SleuResult,
    VisualRelationship,
    VisualRelationshipSet,
)
from backend.models.graph import SceneGraph
from backend.models.sequences import LabeledGridBox

BoxEntry = Union[LabeledGridBox, Tuple[str, object]]


def _iou_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Jaccard index of boxes stored as ``[..., (x, y, w, h)]``."""

    ix = np.minimum(a[..., 0] + a[..., 2], b[..., 0] + b[..., 2]) - np.maximum(a[..., 0], b[..., 0])
    iy = np.minimum(a[..., 1] + a[..., 3], b[..., 1] + b[..., 3]) - np.maximum(a[..., 1], b[..., 1])
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    union = a[..., 2] * a[..., 3] + b[..., 2] * b[..., 3] - inter
    return np.clip(inter / union, 0.0, 1.0)


def _box_array(box: RealBox) -> np.ndarray:
    return np.array([box.x, box.y, box.w, box.h], dtype=np.float64)


def iou(a: RealBox, b: RealBox) -> float:
    return float(_iou_arrays(_box_array(a), _box_array(b)))


def shift_vector(pred: VisualRelationship, ref: VisualRelationship) -> ShiftVector:
    """Offset that moves the predicted subject corner onto the reference subject corner."""

    return ShiftVector(
        dx=ref.subject_box.x - pred.subject_box.x, dy=ref.subject_box.y - pred.subject_box.y
    )


class _Aligned:
    """Array view of an index-aligned (prediction, reference) pair."""

    def __init__(self, pred: VisualRelationshipSet, ref: VisualRelationshipSet):
        if len(pred) != len(ref):
            raise ConsistencyError(
                f"prediction has {len(pred)} relationships, reference has {len(ref)}"
            )
        p, r = pred.relationships, ref.relationships
        self.k = len(r)
        self.pred_subject = np.array([_box_array(x.subject_box) for x in p])
        self.pred_object = np.array([_box_array(x.object_box) for x in p])
        self.ref_subject = np.array([_box_array(x.subject_box) for x in r])
        self.ref_object = np.array([_box_array(x.object_box) for x in r])
        self.subject_match = np.array([a.subject_class == b.subject_class for a, b in zip(p, r)])
        self.object_match = np.array([a.object_class == b.object_class for a, b in zip(p, r)])
        self.offsets = np.array(
            [[s.dx, s.dy] for s in map(shift_vector, p, r)], dtype=np.float64
        ).reshape(-1, 2)


def _unigram(view: _Aligned, t_iou: float) -> float:
    shift = view.offsets
    subject = view.pred_subject.copy()
    obj = view.pred_object.copy()
    subject[:, :2] += shift
    obj[:, :2] += shift
    matched = (
        view.subject_match
        & view.object_match
        & (_iou_arrays(subject, view.ref_subject) >= t_iou)
        & (_iou_arrays(obj, view.ref_object) >= t_iou)
    )
    return int(matched.sum()) / view.k


def _ngram(view: _Aligned, n: int, t_iou: float) -> float:
    if n < 2:
        raise MetricDomainError(f"n-gram order must be at least 2, got {n}")
    if view.k < n:
        raise UndefinedOrderError(f"order {n} undefined for {view.k} relationships")
    subsets = np.array(list(itertools.combinations(range(view.k), n)), dtype=np.intp)
    shift = view.offsets[subsets].mean(axis=1)
    shifted = view.pred_subject[subsets]
    shifted[..., :2] += shift[:, None, :]
    passed = (_iou_arrays(shifted, view.ref_subject[subsets]) >= t_iou) & view.subject_match[subsets]
    return int(passed.all(axis=1).sum()) / len(subsets)


def unigram_accuracy(
    pred: VisualRelationshipSet, ref: VisualRelationshipSet, t_iou: float
) -> float:
    return _unigram(_Aligned(pred, ref), t_iou)


def ngram_accuracy(
    pred: VisualRelationshipSet, ref: VisualRelationshipSet, n: int, t_iou: float
) -> float:
    return _ngram(_Aligned(pred, ref), n, t_iou)


def combine_accuracies(accuracies: Sequence[float], config: SleuConfig) -> float:
    """Weighted geometric mean of p_1..p_m, weights renormalized over the m orders given."""

    weights = config.order_weights(len(accuracies))
    log_sum = 0.0
    for p, w in zip(accuracies, weights):
        if w == 0:
            continue
        if p <= 0:
            return 0.0
        log_sum += w * math.log(p)
    return min(1.0, math.exp(log_sum))


def _accuracies(view: _Aligned, config: SleuConfig) -> List[float]:
    orders = min(config.max_order, view.k)
    values = [_unigram(view, config.t_iou)]
    values.extend(_ngram(view, n, config.t_iou) for n in range(2, orders + 1))
    return values


def sleu_score(
    pred: VisualRelationshipSet,
    refs: Sequence[VisualRelationshipSet],
    config: Optional[SleuConfig] = None,
) -> SleuResult:
    """Score a prediction against its closest reference (first one on ties)."""

    config = config or SleuConfig()
    if not refs:
        raise MetricDomainError("at least one reference layout is required")
    best: Optional[SleuResult] = None
    for index, ref in enumerate(refs):
        accuracies = _accuracies(_Aligned(pred, ref), config)
        combined = combine_accuracies(accuracies, config)
        if best is None or combined > best.score:
            padded: List[Optional[float]] = list(accuracies)
            padded.extend([None] * (config.max_order - len(accuracies)))
            best = SleuResult(score=combined, per_order=padded, chosen_reference=index)
    return best


def _as_real_box(box) -> RealBox:
    return RealBox(x=float(box.x), y=float(box.y), w=float(box.w), h=float(box.h))


def layout_to_visual_relationships(
    graph: SceneGraph, boxes: Mapping[int, BoxEntry]
) -> VisualRelationshipSet:
    """View a layout as the graph's relationships, each with its endpoint classes and boxes.

    ``boxes`` maps node ids to a LabeledGridBox or a ``(class_label, box)`` pair
    where ``box`` has ``x, y, w, h``; grid units pass through unscaled.
    """

    def entry(node_id: int, index: int) -> Tuple[str, RealBox]:
        if node_id not in boxes:
            raise ConsistencyError(f"relationship {index}: node {node_id} has no box")
        item = boxes[node_id]
        if isinstance(item, LabeledGridBox):
            return item.class_label, _as_real_box(item.box)
        label, box = item
        return label, _as_real_box(box)

    relationships = []
    for index, rel in enumerate(graph.relationships):
        subject_class, subject_box = entry(rel.subject_id, index)
        object_class, object_box = entry(rel.object_id, index)
        relationships.append(
            VisualRelationship(
                subject_class=subject_class,
                subject_box=subject_box,
                object_class=object_class,
                object_box=object_box,
            )
        )
    return VisualRelationshipSet(relationships=tuple(relationships))


def mean_sleu(
    pairs: Sequence[Tuple[VisualRelationshipSet, Sequence[VisualRelationshipSet]]],
    config: Optional[SleuConfig] = None,
) -> Tuple[float, List[SleuResult]]:
    """Corpus-level mean of per-sample SLEU."""

    if not pairs:
        raise MetricDomainError("mean-SLEU needs at least one sample")
    results = [sleu_score(pred, refs, config) for pred, refs in pairs]
    return sum(r.score for r in results) / len(results), results

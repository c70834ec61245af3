"""Brick-action code segments (BACS): layout quantization, encoding, alignment and execution.

A segment is ten words placing one relationship's two boxes on the grid:

    c xp yp w h   c ixp|ixn iyp|iyn w h     (relative mode)
    c xp yp w h   c xp yp w h               (absolute mode)

The subject corner is absolute; in relative mode the object corner is a signed
offset from the subject corner. Zero offsets are always written with the
positive kinds (``ixp_0``, ``iyp_0``).
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from backend.errors import (
    AlignmentError,
    ConsistencyError,
    MetricDomainError,
    SequenceFormatError,
)
from backend.models.config import ArQuantizer
from backend.models.graph import SceneGraph, SemanticLayout
from backend.models.sequences import (
    BacsKind,
    BacsMode,
    BacsSequence,
    BacsToken,
    GridBox,
    GridFrame,
    LabeledGridBox,
    NodeSequence,
    QuantizedLayout,
)

DEFAULT_GRID_MAX = 40
SEGMENT_LENGTH = 10

K = BacsKind
_RELATIVE_PATTERN: Tuple[FrozenSet[BacsKind], ...] = (
    frozenset({K.C}), frozenset({K.XP}), frozenset({K.YP}), frozenset({K.W}), frozenset({K.H}),
    frozenset({K.C}), frozenset({K.IXP, K.IXN}), frozenset({K.IYP, K.IYN}), frozenset({K.W}), frozenset({K.H}),
)
_ABSOLUTE_PATTERN: Tuple[FrozenSet[BacsKind], ...] = (
    frozenset({K.C}), frozenset({K.XP}), frozenset({K.YP}), frozenset({K.W}), frozenset({K.H}),
    frozenset({K.C}), frozenset({K.XP}), frozenset({K.YP}), frozenset({K.W}), frozenset({K.H}),
)


def segment_pattern(mode: BacsMode) -> Tuple[FrozenSet[BacsKind], ...]:
    return _RELATIVE_PATTERN if mode is BacsMode.RELATIVE else _ABSOLUTE_PATTERN


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _clamp(value: int, low: int, high: int) -> int:
    return max(low, min(value, high))


# --- aspect ratio and grid frame ---


def quantize_aspect_ratio(ar: float, quantizer: Optional[ArQuantizer] = None) -> int:
    """Bin index of ``width / height``; ratios outside the covered range use the end bins."""

    q = quantizer or ArQuantizer()
    if not (ar > 0 and math.isfinite(ar)):
        raise MetricDomainError(f"aspect ratio must be positive and finite, got {ar}")
    clamped = min(max(ar, q.minimum), q.maximum)
    return _clamp(round_half_up((clamped - q.minimum) / q.interval), 0, q.bins - 1)


def dequantize_aspect_ratio(index: int, quantizer: Optional[ArQuantizer] = None) -> float:
    q = quantizer or ArQuantizer()
    if not 0 <= index < q.bins:
        raise MetricDomainError(f"aspect-ratio index {index} outside [0, {q.bins - 1}]")
    return q.minimum + q.interval * index


def grid_size(width: float, height: float, grid_max: int = DEFAULT_GRID_MAX) -> Tuple[int, int]:
    """Grid dimensions whose long side is ``grid_max``; the short side is rounded."""

    if width >= height:
        return grid_max, max(1, round_half_up(grid_max * height / width))
    return max(1, round_half_up(grid_max * width / height)), grid_max


def frame_for_ar_index(
    index: int, grid_max: int = DEFAULT_GRID_MAX, quantizer: Optional[ArQuantizer] = None
) -> GridFrame:
    grid_w, grid_h = grid_size(dequantize_aspect_ratio(index, quantizer), 1.0, grid_max)
    return GridFrame(grid_w=grid_w, grid_h=grid_h, ar_index=index)


def square_frame(grid_max: int = DEFAULT_GRID_MAX, quantizer: Optional[ArQuantizer] = None) -> GridFrame:
    return GridFrame(grid_w=grid_max, grid_h=grid_max, ar_index=quantize_aspect_ratio(1.0, quantizer))


def clamp_grid_box(x: int, y: int, w: int, h: int, frame: GridFrame) -> GridBox:
    """Clamp the corner into the grid and the size to at least one cell, inside the grid."""

    x = _clamp(x, 0, frame.grid_w - 1)
    y = _clamp(y, 0, frame.grid_h - 1)
    return GridBox(
        x=x,
        y=y,
        w=_clamp(w, 1, frame.grid_w - x),
        h=_clamp(h, 1, frame.grid_h - y),
    )


def quantize_layout(
    layout: SemanticLayout,
    graph: SceneGraph,
    grid_max: int = DEFAULT_GRID_MAX,
    quantizer: Optional[ArQuantizer] = None,
) -> QuantizedLayout:
    """Map pixel boxes of the graph's nodes onto the quantized grid."""

    grid_w, grid_h = grid_size(layout.image_w, layout.image_h, grid_max)
    frame = GridFrame(
        grid_w=grid_w,
        grid_h=grid_h,
        ar_index=quantize_aspect_ratio(layout.image_w / layout.image_h, quantizer),
    )
    sx = grid_w / layout.image_w
    sy = grid_h / layout.image_h
    boxes: Dict[int, LabeledGridBox] = {}
    for node in graph.nodes:
        box = layout.boxes.get(node.node_id)
        if box is None:
            continue
        grid_box = clamp_grid_box(
            round_half_up(box.x * sx),
            round_half_up(box.y * sy),
            max(1, round_half_up(box.w * sx)),
            max(1, round_half_up(box.h * sy)),
            frame,
        )
        boxes[node.node_id] = LabeledGridBox(class_label=node.class_label, box=grid_box)
    return QuantizedLayout(grid_w=grid_w, grid_h=grid_h, ar_index=frame.ar_index, boxes=boxes)


# --- tokens ---


def _token(kind: BacsKind, value) -> BacsToken:
    return BacsToken(kind=kind, value=value)


def _offset_tokens(delta: int, positive: BacsKind, negative: BacsKind) -> BacsToken:
    return _token(positive, delta) if delta >= 0 else _token(negative, -delta)


def value_range(kind: BacsKind, grid_max: int, ar_bins: int) -> Tuple[int, int]:
    """Inclusive vocabulary range of an integer-valued action."""

    if kind in (K.XP, K.YP, K.IXP, K.IYP):
        return 0, grid_max - 1
    if kind in (K.IXN, K.IYN):
        return 1, grid_max - 1
    if kind in (K.W, K.H):
        return 1, grid_max
    if kind is K.IMGAR:
        return 0, ar_bins - 1
    raise ValueError(f"{kind.value} has no integer range")


def parse_token(text: str, grid_max: int = DEFAULT_GRID_MAX, ar_bins: int = 31) -> BacsToken:
    """Read one ``kind_value`` word, checking the value against the vocabulary."""

    kind_text, sep, value_text = text.partition("_")
    try:
        kind = BacsKind(kind_text)
    except ValueError:
        raise SequenceFormatError(f"unknown action kind in {text!r}") from None
    if not sep or not value_text:
        raise SequenceFormatError(f"action {text!r} has no value")
    if kind is K.C:
        try:
            return _token(kind, value_text)
        except ValueError:
            raise SequenceFormatError(f"bad class token {text!r}") from None
    if not (value_text.isascii() and value_text.isdigit()):
        raise SequenceFormatError(f"action {text!r} needs a non-negative integer")
    value = int(value_text)
    low, high = value_range(kind, grid_max, ar_bins)
    if not low <= value <= high:
        raise SequenceFormatError(f"{text!r} outside [{low}, {high}]")
    return _token(kind, value)


def format_token(token: BacsToken) -> str:
    return str(token)


def encode_bacs(
    ql: QuantizedLayout,
    nodes: NodeSequence,
    mode: BacsMode = BacsMode.RELATIVE,
    include_imgar: bool = False,
) -> BacsSequence:
    """Write one ten-word segment per node pair, in node-sequence order."""

    segments = []
    for index, (subject_id, object_id) in enumerate(nodes.pairs):
        try:
            subject, obj = ql.boxes[subject_id], ql.boxes[object_id]
        except KeyError as exc:
            raise ConsistencyError(f"segment {index}: node {exc.args[0]} has no quantized box") from None
        s, o = subject.box, obj.box
        words = [
            _token(K.C, subject.class_label),
            _token(K.XP, s.x),
            _token(K.YP, s.y),
            _token(K.W, s.w),
            _token(K.H, s.h),
            _token(K.C, obj.class_label),
        ]
        if mode is BacsMode.RELATIVE:
            words.append(_offset_tokens(o.x - s.x, K.IXP, K.IXN))
            words.append(_offset_tokens(o.y - s.y, K.IYP, K.IYN))
        else:
            words.append(_token(K.XP, o.x))
            words.append(_token(K.YP, o.y))
        words.append(_token(K.W, o.w))
        words.append(_token(K.H, o.h))
        segments.append(tuple(words))
    imgar = _token(K.IMGAR, ql.ar_index) if include_imgar else None
    return BacsSequence(mode=mode, imgar=imgar, segments=tuple(segments))


# --- alignment ---


def verify_alignment(
    tokens: Sequence[BacsToken],
    expected_k: int,
    mode: BacsMode = BacsMode.RELATIVE,
    expect_imgar: bool = False,
) -> List[Tuple[int, int]]:
    """Check word kinds position by position; return ``[start, end)`` of each segment.

    Raises AlignmentError at the first position whose kind breaks the pattern, or
    at the first missing / surplus position when the length is wrong.
    """

    if expected_k < 1:
        raise ConsistencyError(f"expected segment count must be positive, got {expected_k}")
    pattern = segment_pattern(mode)
    offset = 1 if expect_imgar else 0
    expected_len = SEGMENT_LENGTH * expected_k + offset

    def allowed(position: int) -> FrozenSet[BacsKind]:
        if position < offset:
            return frozenset({K.IMGAR})
        return pattern[(position - offset) % SEGMENT_LENGTH]

    for position in range(min(len(tokens), expected_len)):
        kinds = allowed(position)
        if tokens[position].kind not in kinds:
            raise AlignmentError(
                f"found {tokens[position].kind.value}",
                position,
                (k.value for k in kinds),
            )
    if len(tokens) != expected_len:
        position = min(len(tokens), expected_len)
        expected = (k.value for k in allowed(position)) if position < expected_len else ()
        raise AlignmentError(
            f"expected {expected_len} words for {expected_k} segments, found {len(tokens)}",
            position,
            expected,
        )
    return [
        (offset + SEGMENT_LENGTH * k, offset + SEGMENT_LENGTH * (k + 1)) for k in range(expected_k)
    ]


def parse_bacs(
    text: str,
    expected_k: int,
    mode: BacsMode = BacsMode.RELATIVE,
    expect_imgar: bool = False,
    grid_max: int = DEFAULT_GRID_MAX,
    ar_bins: int = 31,
) -> BacsSequence:
    """Read and align a BACS line; unreadable words are reported as misalignment."""

    tokens = []
    for position, word in enumerate(text.split()):
        try:
            tokens.append(parse_token(word, grid_max, ar_bins))
        except SequenceFormatError as exc:
            raise AlignmentError(str(exc), position) from exc
    bounds = verify_alignment(tokens, expected_k, mode, expect_imgar)
    return BacsSequence(
        mode=mode,
        imgar=tokens[0] if expect_imgar else None,
        segments=tuple(tuple(tokens[start:end]) for start, end in bounds),
    )


def serialize_bacs(seq: BacsSequence) -> str:
    return " ".join(format_token(token) for token in seq.tokens())


# --- restoration ---


def merge_boxes(candidates: Sequence[LabeledGridBox]) -> LabeledGridBox:
    """Merge the boxes predicted for one node.

    Same class everywhere: component-wise mean, rounded half-up. Mixed classes:
    the candidate with the lower-median area.
    """

    if not candidates:
        raise MetricDomainError("cannot merge an empty candidate list")
    if len(candidates) == 1:
        return candidates[0]
    labels = {candidate.class_label for candidate in candidates}
    if len(labels) == 1:
        n = len(candidates)
        boxes = [candidate.box for candidate in candidates]
        return LabeledGridBox(
            class_label=candidates[0].class_label,
            box=GridBox(
                x=round_half_up(sum(b.x for b in boxes) / n),
                y=round_half_up(sum(b.y for b in boxes) / n),
                w=round_half_up(sum(b.w for b in boxes) / n),
                h=round_half_up(sum(b.h for b in boxes) / n),
            ),
        )
    ranked = sorted(candidates, key=lambda candidate: candidate.box.area)
    return ranked[(len(ranked) - 1) // 2]


def execute_bacs(
    seq: BacsSequence,
    nodes: NodeSequence,
    grid_max: int = DEFAULT_GRID_MAX,
    quantizer: Optional[ArQuantizer] = None,
    frame: Optional[GridFrame] = None,
) -> QuantizedLayout:
    """Run the brick actions and merge boxes that belong to the same node.

    The canvas is ``frame`` when given, else the one the imgar action names,
    else a square ``grid_max`` grid.
    """

    if len(nodes) != len(seq.segments):
        raise ConsistencyError(
            f"{len(nodes)} node pairs for {len(seq.segments)} segments"
        )
    verify_alignment(seq.tokens(), len(nodes), seq.mode, seq.imgar is not None)
    if frame is None:
        if seq.imgar is not None:
            frame = frame_for_ar_index(int(seq.imgar.value), grid_max, quantizer)
        else:
            frame = square_frame(grid_max, quantizer)

    candidates: Dict[int, List[LabeledGridBox]] = defaultdict(list)
    for (subject_id, object_id), words in zip(nodes.pairs, seq.segments):
        c_s, xs, ys, ws, hs, c_o, ox, oy, wo, ho = words
        sx, sy = int(xs.value), int(ys.value)
        if seq.mode is BacsMode.RELATIVE:
            obj_x = sx + (ox.value if ox.kind is K.IXP else -ox.value)
            obj_y = sy + (oy.value if oy.kind is K.IYP else -oy.value)
        else:
            obj_x, obj_y = int(ox.value), int(oy.value)
        candidates[subject_id].append(
            LabeledGridBox(
                class_label=str(c_s.value),
                box=clamp_grid_box(sx, sy, int(ws.value), int(hs.value), frame),
            )
        )
        candidates[object_id].append(
            LabeledGridBox(
                class_label=str(c_o.value),
                box=clamp_grid_box(obj_x, obj_y, int(wo.value), int(ho.value), frame),
            )
        )

    boxes = {}
    for node_id, group in candidates.items():
        merged = merge_boxes(group)
        b = merged.box
        boxes[node_id] = LabeledGridBox(
            class_label=merged.class_label, box=clamp_grid_box(b.x, b.y, b.w, b.h, frame)
        )
    return QuantizedLayout(
        grid_w=frame.grid_w, grid_h=frame.grid_h, ar_index=frame.ar_index, boxes=boxes
    )

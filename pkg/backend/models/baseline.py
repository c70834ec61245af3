"""Geometry statistics used by the statistical SF-to-BACS translator."""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from backend.models.sequences import Triplet

Vec2 = Tuple[float, float]
Vec4 = Tuple[float, float, float, float]

TABLE_FORMAT_VERSION = 1


def _running(mean: Tuple[float, ...], value: Tuple[float, ...], count: int) -> Tuple[float, ...]:
    return tuple(m + (v - m) / count for m, v in zip(mean, value))


class GeometryStats(BaseModel):
    """Running means of one relationship's geometry, in grid cells."""

    model_config = ConfigDict(frozen=True)

    count: int = Field(ge=1)
    mean_subject: Vec4 = Field(description="Subject (x, y, w, h)")
    mean_object_delta: Vec2 = Field(description="Object corner minus subject corner (dx, dy)")
    mean_object_size: Vec2 = Field(description="Object (w, h)")

    @classmethod
    def single(cls, subject: Vec4, delta: Vec2, size: Vec2) -> "GeometryStats":
        return cls(
            count=1,
            mean_subject=tuple(float(v) for v in subject),
            mean_object_delta=tuple(float(v) for v in delta),
            mean_object_size=tuple(float(v) for v in size),
        )

    def observe(self, subject: Vec4, delta: Vec2, size: Vec2) -> "GeometryStats":
        count = self.count + 1
        return GeometryStats(
            count=count,
            mean_subject=_running(self.mean_subject, subject, count),
            mean_object_delta=_running(self.mean_object_delta, delta, count),
            mean_object_size=_running(self.mean_object_size, size, count),
        )

    def merge(self, other: "GeometryStats") -> "GeometryStats":
        total = self.count + other.count

        def pooled(a: Tuple[float, ...], b: Tuple[float, ...]) -> Tuple[float, ...]:
            return tuple((x * self.count + y * other.count) / total for x, y in zip(a, b))

        return GeometryStats(
            count=total,
            mean_subject=pooled(self.mean_subject, other.mean_subject),
            mean_object_delta=pooled(self.mean_object_delta, other.mean_object_delta),
            mean_object_size=pooled(self.mean_object_size, other.mean_object_size),
        )


def _merge_maps(a: Dict, b: Dict) -> Dict:
    merged = dict(a)
    for key, stats in b.items():
        merged[key] = merged[key].merge(stats) if key in merged else stats
    return merged


class BaselineTable(BaseModel):
    """Backoff table: per triplet, per predicate, and global geometry statistics."""

    model_config = ConfigDict(frozen=True)

    by_triplet: Dict[Triplet, GeometryStats] = Field(default_factory=dict)
    by_predicate: Dict[str, GeometryStats] = Field(default_factory=dict)
    global_stats: Optional[GeometryStats] = None
    ar_counts: Dict[int, int] = Field(default_factory=dict, description="imgar index histogram")

    @property
    def trained(self) -> bool:
        return self.global_stats is not None

    @property
    def modal_ar_index(self) -> Optional[int]:
        """Most frequent imgar value, smallest index on ties."""
        if not self.ar_counts:
            return None
        return min(self.ar_counts, key=lambda index: (-self.ar_counts[index], index))

    def merge(self, other: "BaselineTable") -> "BaselineTable":
        if self.global_stats is None:
            global_stats = other.global_stats
        elif other.global_stats is None:
            global_stats = self.global_stats
        else:
            global_stats = self.global_stats.merge(other.global_stats)
        ar_counts = dict(self.ar_counts)
        for index, count in other.ar_counts.items():
            ar_counts[index] = ar_counts.get(index, 0) + count
        return BaselineTable(
            by_triplet=_merge_maps(self.by_triplet, other.by_triplet),
            by_predicate=_merge_maps(self.by_predicate, other.by_predicate),
            global_stats=global_stats,
            ar_counts=ar_counts,
        )

"""Exception hierarchy shared by the codecs, the metric and the pipeline."""

from __future__ import annotations

from typing import Iterable, Optional


class LayoutToolkitError(ValueError):
    """Base class for every domain error raised by the toolkit."""


class CorpusParseError(LayoutToolkitError):
    """A corpus document violates the schema."""

    def __init__(self, message: str, sample_id: Optional[str] = None, field: Optional[str] = None):
        self.sample_id = sample_id
        self.field = field
        prefix = []
        if sample_id is not None:
            prefix.append(f"sample '{sample_id}'")
        if field:
            prefix.append(f"field '{field}'")
        super().__init__(f"{', '.join(prefix)}: {message}" if prefix else message)


class EmptyGraphError(LayoutToolkitError):
    """A scene graph has no relationships left."""


class SequenceFormatError(LayoutToolkitError):
    """A token line cannot be read (bad token syntax or token count)."""


class AlignmentError(LayoutToolkitError):
    """A BACS token stream does not follow the brick-action pattern."""

    def __init__(
        self,
        reason: str,
        position: int,
        expected: Iterable[str] = (),
        line: Optional[int] = None,
    ):
        self.reason = reason
        self.position = position
        self.expected = tuple(sorted(expected))
        self.line = line
        where = f"line {line}, " if line is not None else ""
        wanted = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}position {position}: {reason}{wanted}")

    def at_line(self, line: int) -> "AlignmentError":
        """Return a copy of this error annotated with a 1-based file line."""
        return AlignmentError(self.reason, self.position, self.expected, line)


class ConsistencyError(LayoutToolkitError):
    """Cross references between sequences, graphs and layouts do not resolve."""


class MetricDomainError(LayoutToolkitError):
    """An operation was called outside its mathematical domain."""


class UndefinedOrderError(MetricDomainError):
    """An n-gram order exceeds the number of relationships."""


class UntrainedModelError(LayoutToolkitError):
    """The baseline translator was asked to predict before training."""


class TableFormatError(LayoutToolkitError):
    """A serialized baseline table is corrupt or has the wrong version."""


class ConfigError(LayoutToolkitError):
    """A configuration source holds an unknown key or an invalid value."""

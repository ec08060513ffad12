"""On-disk formats: stream, score, and label TSV files.

All three are plain tab-separated UTF-8 text.  Floats are written with
``repr`` (shortest round-trip form), so write-then-read reproduces the
in-memory values bit for bit.
"""

from __future__ import annotations

import math
from typing import IO, Iterable, Iterator

from hyperwatch.detector import ScoredEvent


class StreamFormatError(ValueError):
    """Malformed input file; carries the 1-based offending line number."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _parse_timestamp(text: str, line_number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise StreamFormatError(line_number, f"bad timestamp {text!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise StreamFormatError(line_number, f"timestamp {text!r} is not finite")
    if value < 0:
        raise StreamFormatError(line_number, "timestamp must be non-negative")
    return value


def _format_timestamp(value: float) -> str:
    # Integer-valued timestamps (the common case) are written without a
    # fractional part; repr keeps everything else round-trip exact.
    if value.is_integer() and abs(value) <= 2 ** 53:
        return str(int(value))
    return repr(value)


def read_stream(fh: IO[str]) -> Iterator[tuple[tuple[str, ...], float]]:
    """Yield (nodes, timestamp) per line, validating as it goes.

    Checks per line: two tab-separated fields, a finite non-negative
    timestamp that never decreases, and at least one non-empty node
    token.  Duplicate node tokens within a line are collapsed, keeping
    first occurrence order.
    """
    previous = -math.inf
    for line_number, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line:
            raise StreamFormatError(line_number, "blank line")
        fields = line.split("\t")
        if len(fields) != 2:
            raise StreamFormatError(line_number, f"expected 2 tab-separated fields, got {len(fields)}")
        timestamp = _parse_timestamp(fields[0], line_number)
        if timestamp < previous:
            raise StreamFormatError(line_number, "timestamps must be non-decreasing")
        previous = timestamp
        tokens = fields[1].split(",")
        if any(not token for token in tokens):
            raise StreamFormatError(line_number, "empty node token")
        yield tuple(dict.fromkeys(tokens)), timestamp


def write_stream(fh: IO[str], events: Iterable[tuple[Iterable[str], float]]) -> None:
    for nodes, timestamp in events:
        fh.write(f"{_format_timestamp(timestamp)}\t{','.join(nodes)}\n")


def write_scores(fh: IO[str], events: Iterable[ScoredEvent]) -> None:
    for event in events:
        fh.write(
            f"{event.index}\t{_format_timestamp(event.timestamp)}\t{event.score_u!r}\t{event.score_b!r}\n"
        )


def read_scores(fh: IO[str]) -> Iterator[ScoredEvent]:
    """Yield ScoredEvents, enforcing indices 0..n-1 in file order."""
    expected_index = 0
    for line_number, line in enumerate(fh, start=1):
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 4:
            raise StreamFormatError(line_number, f"expected 4 tab-separated fields, got {len(fields)}")
        try:
            index = int(fields[0])
            timestamp = float(fields[1])
            score_u = float(fields[2])
            score_b = float(fields[3])
        except ValueError:
            raise StreamFormatError(line_number, "unparseable score line") from None
        if index != expected_index:
            raise StreamFormatError(line_number, f"expected index {expected_index}, got {index}")
        expected_index += 1
        yield ScoredEvent(index, timestamp, score_u, score_b)


def write_labels(fh: IO[str], labels: Iterable[tuple[int, int]]) -> None:
    for index, label in labels:
        fh.write(f"{index}\t{label}\n")


def read_labels(fh: IO[str]) -> dict[int, int]:
    """Read a label file into {index: label}; indices must be unique."""
    labels: dict[int, int] = {}
    for line_number, line in enumerate(fh, start=1):
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 2:
            raise StreamFormatError(line_number, f"expected 2 tab-separated fields, got {len(fields)}")
        try:
            index = int(fields[0])
            label = int(fields[1])
        except ValueError:
            raise StreamFormatError(line_number, "unparseable label line") from None
        if label not in (0, 1):
            raise StreamFormatError(line_number, "label must be 0 or 1")
        if index in labels:
            raise StreamFormatError(line_number, f"duplicate label index {index}")
        labels[index] = label
    return labels

"""
Run Trace

Append-only JSONL event log of one run. Each line is the canonical JSON of
one record (sorted keys, compact separators, ASCII only):

    {"digest": "...", "duration_s": null, "elapsed_s": 0.0012, "kind": "round_start",
     "payload": {...}, "round": 1, "sequence": 1, "timestamp": "2026-..."}

``digest`` is the sha256 of the canonical record without the digest. A line
that does not re-serialize to itself, or whose digest does not match, has
been altered.

Wall-clock fields (timestamp, elapsed_s, duration_s) and the digest are
volatile; ``masked`` drops them for replay comparison.

Author: Vladimir K.S.
"""

import hashlib
import json
import threading
import time
from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, TextIO

from pydantic import NonNegativeFloat, NonNegativeInt

from ..core.models import FrozenModel
from ..errors import TraceFormatError

EVENT_KINDS: tuple[str, ...] = (
    "run_start",
    "round_start",
    "agent_call",
    "population_built",
    "candidate_executed",
    "candidates_scored",
    "round_best_selected",
    "grounding_acquired",
    "verifier_result",
    "round_end",
    "run_end",
)

VOLATILE_FIELDS = frozenset({"timestamp", "elapsed_s", "duration_s", "digest"})


class TraceIntegrityError(TraceFormatError):
    """Raised when a trace line was altered after it was written."""

    def __init__(self, line_number: int, sequence: Optional[int], kind: str, detail: str) -> None:
        self.line_number = line_number
        self.sequence = sequence
        self.kind = kind
        self.detail = detail
        super().__init__(f"trace line {line_number} ({kind}) failed integrity check: {detail}")


class TraceEvent(FrozenModel):
    sequence: NonNegativeInt
    kind: str
    round: Optional[int] = None
    payload: dict[str, Any]
    timestamp: str
    elapsed_s: NonNegativeFloat
    duration_s: Optional[NonNegativeFloat] = None
    digest: str

    def masked(self) -> dict[str, Any]:
        return {k: v for k, v in self.model_dump(mode="json").items() if k not in VOLATILE_FIELDS}


def canonical(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def record_digest(record: dict[str, Any]) -> str:
    body = {k: v for k, v in record.items() if k != "digest"}
    return hashlib.sha256(canonical(body).encode("ascii")).hexdigest()


class TraceWriter:
    """
    Sequenced event emitter; flushes every event to ``stream`` when given and
    always keeps the events in memory.

    Usage:
        with path.open("w", encoding="ascii") as handle:
            trace = TraceWriter(handle)
            trace.emit("run_start", payload={"user_prompt": "..."})
    """

    def __init__(self, stream: Optional[TextIO] = None) -> None:
        self.stream = stream
        self.events: list[TraceEvent] = []
        self._started = time.monotonic()
        self._lock = threading.Lock()

    def emit(
        self,
        kind: str,
        round: Optional[int] = None,
        payload: Optional[dict[str, Any]] = None,
        duration_s: Optional[float] = None,
    ) -> TraceEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {kind!r}")
        with self._lock:
            record: dict[str, Any] = {
                "sequence": len(self.events),
                "kind": kind,
                "round": round,
                "payload": payload or {},
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "elapsed_s": round_s(time.monotonic() - self._started),
                "duration_s": None if duration_s is None else round_s(duration_s),
            }
            record["digest"] = record_digest(record)
            event = TraceEvent.model_validate(record)
            self.events.append(event)
            if self.stream is not None:
                self.stream.write(canonical(record) + "\n")
                self.stream.flush()
        return event

    def of_kind(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]


def round_s(seconds: float) -> float:
    return round(max(seconds, 0.0), 6)


# ====================
# Reading
# ====================


@dataclass
class TraceReadResult:
    events: list[TraceEvent]
    warnings: list[str] = field(default_factory=list)
    truncated: bool = False

    @property
    def complete(self) -> bool:
        return not self.truncated and bool(self.events) and self.events[-1].kind == "run_end"


def _check_line(number: int, raw: str, record: Any) -> None:
    if not isinstance(record, dict):
        raise TraceIntegrityError(number, None, "?", "record is not an object")
    sequence = record.get("sequence")
    kind = str(record.get("kind", "?"))
    if canonical(record) != raw:
        raise TraceIntegrityError(number, sequence, kind, "line is not in canonical form")
    if record.get("digest") != record_digest(record):
        raise TraceIntegrityError(number, sequence, kind, "digest mismatch")


def parse_trace(lines: Iterable[bytes], strict: bool = True) -> TraceReadResult:
    """
    Parse raw trace lines (each still carrying its newline).

    With ``strict`` every line must be intact. Without it, reading stops at
    the first damaged line with a warning, which is how a partially written
    trace is inspected.

    Raises:
        TraceFormatError: On an empty trace, or (strict) any damaged line
    """
    events: list[TraceEvent] = []
    result = TraceReadResult(events)
    for number, chunk in enumerate(lines, start=1):
        try:
            if not chunk.endswith(b"\n"):
                raise TraceIntegrityError(number, None, "?", "line is not newline-terminated")
            raw = chunk[:-1].decode("ascii")
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as e:
                raise TraceIntegrityError(number, None, "?", f"not JSON: {e}") from e
            _check_line(number, raw, record)
            event = TraceEvent.model_validate(record)
            if event.sequence != len(events):
                raise TraceIntegrityError(
                    number, event.sequence, event.kind, f"expected sequence {len(events)}"
                )
            if event.kind not in EVENT_KINDS:
                raise TraceIntegrityError(number, event.sequence, event.kind, "unknown event kind")
        except (TraceIntegrityError, UnicodeDecodeError, ValueError) as e:
            if strict:
                if isinstance(e, TraceIntegrityError):
                    raise
                raise TraceIntegrityError(number, None, "?", str(e)) from e
            result.truncated = True
            result.warnings.append(f"trace damaged or truncated at line {number}: {e}")
            break
        events.append(event)

    if not events and not result.truncated:
        raise TraceFormatError("trace is empty")
    if not events:
        raise TraceFormatError(result.warnings[0])
    if events[-1].kind != "run_end":
        result.warnings.append("trace has no run_end event; the run did not finish")
    return result


def read_trace(path: Path, strict: bool = True) -> TraceReadResult:
    """
    Read a trace file.

    Raises:
        TraceFormatError: If the file is missing, empty, or (strict) damaged
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise TraceFormatError(f"cannot read trace {path}: {e}") from e
    return parse_trace(data.splitlines(keepends=True), strict=strict)

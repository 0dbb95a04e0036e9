"""
Deterministic Replay

Re-executes a recorded sim-backend run and compares the fresh trace with the
recorded one event by event, wall-clock fields and digests masked. The
recorded trace is integrity-checked first, so an edited line is reported as
a divergence at that event even when the edit would not change the run.

Author: Vladimir K.S.
"""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional

from ..backends import Backends, build_backends
from ..config import RunConfig
from ..core.state import RunState
from ..errors import ConfigError, ReplayDivergence, TraceFormatError
from .trace import TraceEvent, TraceIntegrityError, TraceWriter, read_trace

logger = logging.getLogger(__name__)


def _difference(recorded: dict[str, Any], replayed: dict[str, Any]) -> str:
    for field in sorted(set(recorded) | set(replayed)):
        if recorded.get(field) == replayed.get(field):
            continue
        if field == "payload" and isinstance(recorded.get(field), dict):
            keys = sorted(
                k
                for k in set(recorded["payload"]) | set(replayed.get("payload") or {})
                if recorded["payload"].get(k) != (replayed.get("payload") or {}).get(k)
            )
            return f"payload field(s) {', '.join(keys)} differ"
        return f"{field} differs: recorded {recorded.get(field)!r}, replayed {replayed.get(field)!r}"
    return "events differ"


def compare_traces(recorded: Sequence[TraceEvent], replayed: Sequence[TraceEvent]) -> None:
    """
    Raises:
        ReplayDivergence: At the first event that differs, or is missing on either side
    """
    for position, (old, new) in enumerate(zip(recorded, replayed)):
        old_masked, new_masked = old.masked(), new.masked()
        if old_masked != new_masked:
            raise ReplayDivergence(position, old.kind, _difference(old_masked, new_masked))
    if len(recorded) > len(replayed):
        extra = recorded[len(replayed)]
        raise ReplayDivergence(len(replayed), extra.kind, "replay produced no such event")
    if len(replayed) > len(recorded):
        extra = replayed[len(recorded)]
        raise ReplayDivergence(len(recorded), extra.kind, "recorded trace ends before this event")


def load_recorded(path: Path) -> list[TraceEvent]:
    """
    Read a trace strictly, turning integrity failures into a divergence at the damaged event.

    Raises:
        ReplayDivergence: If a line was altered
        TraceFormatError: If the trace is empty or unreadable
    """
    try:
        return read_trace(path, strict=True).events
    except TraceIntegrityError as e:
        sequence = e.sequence if isinstance(e.sequence, int) else e.line_number - 1
        raise ReplayDivergence(sequence, e.kind, e.detail) from e


def replay_trace(
    path: Path, config: RunConfig, backends: Optional[Backends] = None
) -> RunState:
    """
    Re-run the trace at ``path`` under ``config`` and require an identical trace.

    Returns:
        The re-executed run state

    Raises:
        ConfigError: If ``config`` does not use the sim backend profile
        TraceFormatError: If the trace does not start with run_start
        ReplayDivergence: At the first divergent event
    """
    from ..engine import Engine

    if config.backend_profile != "sim" and backends is None:
        raise ConfigError("replay needs the sim backend profile; real backends are not deterministic")
    recorded = load_recorded(path)
    if recorded[0].kind != "run_start":
        raise TraceFormatError(f"trace {path} does not start with run_start")
    user_prompt = str(recorded[0].payload["user_prompt"])

    trace = TraceWriter()
    engine = Engine(
        config,
        backends if backends is not None else build_backends(config, user_prompt),
        trace=trace,
    )
    state = engine.run(user_prompt)
    compare_traces(recorded, trace.events)
    logger.info("replay of %s matched %d events", path, len(recorded))
    return state

"""
Run Store

On-disk layout of persisted runs:

    <out>/<run-id>/
        config.json             RunConfig snapshot (self-contained replay input)
        trace.jsonl             event trace, one canonical JSON record per line
        images/r<round>_s<slot>.png
        final.png               the global best's image
        summary.json            RunSummary

Run ids are ``<UTC timestamp>-<hash>`` for single runs and
``p<index>-<hash>`` inside a batch; the hash covers prompt and run seed.

Author: Vladimir K.S.
"""

import hashlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, NonNegativeInt

from ..backends import Backends, build_backends
from ..config import RunConfig, load_config
from ..core.images import MemoryImageStore
from ..core.state import RunState, TerminationReason
from ..errors import ConfigError, RaiseError
from .trace import TraceWriter

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
TRACE_FILE = "trace.jsonl"
SUMMARY_FILE = "summary.json"
IMAGES_DIR = "images"
FINAL_STEM = "final"

EXTENSIONS = {"image/png": ".png", "image/jpeg": ".jpg", "image/webp": ".webp"}


class RunSummary(BaseModel):
    """Per-run record written to summary.json; batch metrics aggregate these."""

    model_config = ConfigDict(extra="forbid")

    run_id: str
    user_prompt: str
    category: Optional[str] = None
    termination: TerminationReason
    rounds: NonNegativeInt
    total_samples: NonNegativeInt
    total_agent_calls: NonNegativeInt
    total_scorer_calls: NonNegativeInt
    global_best: Optional[str] = None
    global_best_fitness: Optional[float] = None
    final_image: Optional[str] = None

    @classmethod
    def from_state(
        cls, run_id: str, state: RunState, category: Optional[str] = None
    ) -> "RunSummary":
        assert state.termination is not None
        best = state.global_best_scored
        return cls(
            run_id=run_id,
            user_prompt=state.user_prompt,
            category=category,
            termination=state.termination,
            rounds=len(state.rounds),
            total_samples=state.total_samples,
            total_agent_calls=state.total_agent_calls,
            total_scorer_calls=state.total_scorer_calls,
            global_best=str(best.key) if best else None,
            global_best_fitness=best.fitness if best else None,
            final_image=best.output.content_id if best else None,
        )


def make_run_id(user_prompt: str, run_seed: int, index: Optional[int] = None) -> str:
    digest = hashlib.sha256(f"{run_seed}\n{user_prompt}".encode("utf-8")).hexdigest()[:8]
    if index is not None:
        return f"p{index:04d}-{digest}"
    return f"{datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%SZ')}-{digest}"


class RunDirectory:
    """Paths and writers of one run directory."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)

    @property
    def run_id(self) -> str:
        return self.path.name

    @property
    def config_path(self) -> Path:
        return self.path / CONFIG_FILE

    @property
    def trace_path(self) -> Path:
        return self.path / TRACE_FILE

    @property
    def summary_path(self) -> Path:
        return self.path / SUMMARY_FILE

    @property
    def images_dir(self) -> Path:
        return self.path / IMAGES_DIR

    def final_path(self, media_type: str = "image/png") -> Path:
        return self.path / f"{FINAL_STEM}{EXTENSIONS.get(media_type, '.png')}"

    def write_config(self, config: RunConfig) -> None:
        self.config_path.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def read_config(self) -> RunConfig:
        """
        Load the config snapshot; environment endpoint overrides do not apply.

        Raises:
            ConfigError: If the snapshot is missing or invalid
        """
        if not self.config_path.is_file():
            raise ConfigError(f"run directory {self.path} has no {CONFIG_FILE}")
        return load_config(self.config_path, environ={})

    def write_images(self, state: RunState, store: MemoryImageStore) -> None:
        """Every scored candidate image plus the final image."""
        self.images_dir.mkdir(parents=True, exist_ok=True)
        for record in state.rounds:
            for scored in record.scored:
                suffix = EXTENSIONS.get(scored.output.media_type, ".png")
                target = self.images_dir / f"{scored.key}{suffix}"
                target.write_bytes(store.get(scored.output))
        final = state.final_image
        if final is not None:
            self.final_path(final.media_type).write_bytes(store.get(final))

    def write_summary(self, summary: RunSummary) -> None:
        self.summary_path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def read_summary(self) -> RunSummary:
        return RunSummary.model_validate_json(self.summary_path.read_text(encoding="utf-8"))


class RunStore:
    """
    Root directory holding run directories.

    Usage:
        store = RunStore(Path("runs"))
        run_dir = store.create(make_run_id(prompt, config.run_seed))
    """

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    def create(self, run_id: str) -> RunDirectory:
        """Create ``<root>/<run_id>``, suffixing ``-1``, ``-2``... if it already exists."""
        self.root.mkdir(parents=True, exist_ok=True)
        candidate, n = run_id, 0
        while (self.root / candidate).exists():
            n += 1
            candidate = f"{run_id}-{n}"
        path = self.root / candidate
        path.mkdir()
        (path / IMAGES_DIR).mkdir()
        return RunDirectory(path)

    def runs(self) -> list[RunDirectory]:
        """Run directories under the root that carry a trace, sorted by name."""
        if not self.root.is_dir():
            return []
        return [
            RunDirectory(p)
            for p in sorted(self.root.iterdir())
            if p.is_dir() and (p / TRACE_FILE).is_file()
        ]


def execute_run(
    user_prompt: str,
    config: RunConfig,
    run_dir: RunDirectory,
    *,
    backends: Optional[Backends] = None,
    category: Optional[str] = None,
) -> tuple[RunState, RunSummary]:
    """
    Run one prompt and persist everything into ``run_dir``.

    The trace is flushed per event, so a run that dies mid-way still leaves a
    readable partial trace.
    """
    from ..engine import Engine

    run_dir.write_config(config)
    store = MemoryImageStore()
    with run_dir.trace_path.open("w", encoding="ascii", newline="\n") as handle:
        engine = Engine(
            config,
            backends if backends is not None else build_backends(config, user_prompt),
            store=store,
            trace=TraceWriter(handle),
        )
        state = engine.run(user_prompt)
    try:
        run_dir.write_images(state, store)
    except (OSError, RaiseError) as e:
        logger.error("could not write images of %s: %s", run_dir.run_id, e)
    summary = RunSummary.from_state(run_dir.run_id, state, category)
    run_dir.write_summary(summary)
    logger.info("run %s persisted to %s", run_dir.run_id, run_dir.path)
    return state, summary

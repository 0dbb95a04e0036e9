"""
Candidate Execution

Dispatches each candidate to the generator (no reference image) or the
editor (reference image present) and stores the returned bytes. A
population runs on a thread pool bounded by ``config.parallelism``; results
are assembled by the calling thread in slot order, whatever order the
workers finish in.

A failing candidate is recorded and skipped; only a round in which every
candidate fails raises.

Author: Vladimir K.S.
"""

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from pydantic import NonNegativeFloat, model_validator

from .backends.base import Backends
from .config import RunConfig
from .core.images import ImageStore
from .core.models import Candidate, CandidateKey, FrozenModel, ImageRef
from .errors import ExecutionError, RaiseError

logger = logging.getLogger(__name__)


class ExecutionResult(FrozenModel):
    """Outcome of one candidate: an image, or a failure note and no image."""

    candidate: CandidateKey
    output: Optional[ImageRef] = None
    failure: Optional[str] = None
    duration_s: NonNegativeFloat = 0.0

    @model_validator(mode="after")
    def _image_xor_failure(self) -> "ExecutionResult":
        if (self.output is None) == (self.failure is None):
            raise ValueError("a result carries either an image or a failure note")
        return self

    @property
    def ok(self) -> bool:
        return self.output is not None


def execute_candidate(
    candidate: Candidate, config: RunConfig, backends: Backends, store: ImageStore
) -> ImageRef:
    """
    Run one candidate and store its image.

    Raises:
        RaiseError: Any backend or storage failure (TransportError, ImageStoreError)
    """
    if candidate.reference is None:
        data = backends.generator.generate(
            candidate.prompt,
            candidate.seed,
            steps=config.steps,
            width=config.width,
            height=config.height,
        )
    else:
        data = backends.editor.edit(
            candidate.prompt,
            candidate.seed,
            store.get(candidate.reference),
            steps=config.steps,
        )
    return store.put(data)


def _run_one(
    candidate: Candidate, config: RunConfig, backends: Backends, store: ImageStore
) -> ExecutionResult:
    started = time.perf_counter()
    try:
        output = execute_candidate(candidate, config, backends, store)
    except RaiseError as e:
        logger.warning("candidate %s (%s) failed: %s", candidate.key, candidate.kind.value, e)
        return ExecutionResult(
            candidate=candidate.key, failure=str(e), duration_s=time.perf_counter() - started
        )
    return ExecutionResult(
        candidate=candidate.key, output=output, duration_s=time.perf_counter() - started
    )


def execute_population(
    candidates: Sequence[Candidate],
    config: RunConfig,
    backends: Backends,
    store: ImageStore,
) -> list[ExecutionResult]:
    """
    Execute ``candidates`` with at most ``config.parallelism`` in flight.

    Returns:
        One result per candidate, in slot order

    Raises:
        ExecutionError: If the population is empty or every candidate failed
            (the per-candidate results ride along on the exception)
    """
    if not candidates:
        raise ExecutionError("cannot execute an empty population")
    workers = min(config.parallelism, len(candidates))
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="raise-exec") as pool:
        futures = [pool.submit(_run_one, c, config, backends, store) for c in candidates]
        results = [future.result() for future in futures]
    results.sort(key=lambda r: r.candidate.slot)

    if not any(r.ok for r in results):
        raise ExecutionError(
            f"all {len(results)} candidates of round {candidates[0].round} failed", results
        )
    return results

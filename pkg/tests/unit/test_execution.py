"""
Tests for Candidate Execution

Tests for:
- execute_candidate() - generator vs. editor dispatch
- execute_population() - slot order, partial failures, all-fail error

Author: Vladimir K.S.
"""

import threading
import time

import pytest
from pydantic import ValidationError

from raise_t2i.backends.base import Backends
from raise_t2i.core.models import CandidateKind
from raise_t2i.errors import ExecutionError, TransportError
from raise_t2i.execution import ExecutionResult, execute_candidate, execute_population
from tests.utils.fixtures import ScriptedChat, image_ref, make_candidate, png


class RecordingGenerator:
    """Returns a one-bit image per call; fails for prompts listed in ``failing``."""

    def __init__(self, failing=(), delay_by_slot=False):
        self.failing = set(failing)
        self.delay_by_slot = delay_by_slot
        self.calls = []
        self.in_flight = 0
        self.peak = 0
        self._lock = threading.Lock()

    def generate(self, prompt, seed, *, steps, width, height):
        with self._lock:
            self.calls.append((prompt, seed, steps, width, height))
            self.in_flight += 1
            self.peak = max(self.peak, self.in_flight)
        try:
            if self.delay_by_slot:
                # later slots finish first
                time.sleep(0.01 * (10 - seed))
            if prompt in self.failing:
                raise TransportError(f"generator refused {prompt!r}")
            return png([seed % 2 == 0])
        finally:
            with self._lock:
                self.in_flight -= 1


class RecordingEditor:
    def __init__(self):
        self.references = []

    def edit(self, instruction, seed, reference, *, steps):
        self.references.append(reference)
        return png([True, True])


def backends(generator=None, editor=None):
    return Backends(
        generator=generator or RecordingGenerator(),
        editor=editor or RecordingEditor(),
        scorer=None,
        chat=ScriptedChat([]),
    )


def population(n, **kwargs):
    return [make_candidate(1, slot, seed=slot, prompt=f"prompt {slot}", **kwargs) for slot in range(n)]


class TestExecuteCandidate:
    def test_generation_passes_the_image_settings(self, config, memory_store):
        generator = RecordingGenerator()
        ref = execute_candidate(
            make_candidate(seed=4), config, backends(generator), memory_store
        )
        assert generator.calls == [("a prompt", 4, 28, 1024, 1024)]
        assert ref in memory_store

    def test_edit_sends_the_reference_bytes(self, config, memory_store):
        parent = image_ref(memory_store, [True, False])
        editor = RecordingEditor()
        candidate = make_candidate(kind=CandidateKind.EDIT_TOP, reference=parent)
        execute_candidate(candidate, config, backends(editor=editor), memory_store)
        assert editor.references == [memory_store.get(parent)]


class TestExecutePopulation:
    def test_results_come_back_in_slot_order(self, config, memory_store):
        generator = RecordingGenerator(delay_by_slot=True)
        results = execute_population(
            population(6), config.with_overrides(parallelism=6), backends(generator), memory_store
        )
        assert [r.candidate.slot for r in results] == list(range(6))
        assert all(r.ok for r in results)

    def test_parallelism_bounds_in_flight_calls(self, config, memory_store):
        generator = RecordingGenerator(delay_by_slot=True)
        execute_population(
            population(8), config.with_overrides(parallelism=2), backends(generator), memory_store
        )
        assert generator.peak <= 2

    def test_partial_failure_is_recorded(self, config, memory_store):
        generator = RecordingGenerator(failing={"prompt 1", "prompt 3"})
        results = execute_population(population(4), config, backends(generator), memory_store)
        assert [r.ok for r in results] == [True, False, True, False]
        assert "refused" in results[1].failure
        assert results[1].output is None

    def test_all_failing_raises_with_results(self, config, memory_store):
        generator = RecordingGenerator(failing={f"prompt {i}" for i in range(3)})
        with pytest.raises(ExecutionError) as excinfo:
            execute_population(population(3), config, backends(generator), memory_store)
        assert len(excinfo.value.results) == 3
        assert not any(r.ok for r in excinfo.value.results)

    def test_empty_population(self, config, memory_store):
        with pytest.raises(ExecutionError):
            execute_population([], config, backends(), memory_store)

    def test_non_image_bytes_fail_the_candidate(self, config, memory_store):
        class Garbage:
            def generate(self, prompt, seed, *, steps, width, height):
                return b"not an image" if seed == 0 else png([True])

        results = execute_population(population(2), config, backends(Garbage()), memory_store)
        assert [r.ok for r in results] == [False, True]


def test_result_carries_image_xor_failure(memory_store):
    with pytest.raises(ValidationError):
        ExecutionResult(candidate=make_candidate().key)
    with pytest.raises(ValidationError):
        ExecutionResult(candidate=make_candidate().key, output=image_ref(memory_store), failure="x")

"""
Integration Tests for Full Workflows

Tests for:
- Persisted run -> replay reproduces the recorded trace
- Replay of an altered trace reports the altered event
- Batch of runs -> efficiency report from traces and from summaries
- Partial trace of an interrupted run stays readable

Author: Vladimir K.S.
"""

import pytest

from raise_t2i.errors import ReplayDivergence
from raise_t2i.ops.metrics import report_from_run_dirs, report_from_summaries
from raise_t2i.ops.replay import replay_trace
from raise_t2i.ops.store import RunStore, execute_run, make_run_id
from raise_t2i.ops.trace import read_trace
from raise_t2i.sim.oracle import sim_config
from tests.conftest import PROMPT

pytestmark = pytest.mark.integration


@pytest.fixture
def store(tmp_path):
    return RunStore(tmp_path / "runs")


def persist(store, config, world, seed=0, index=0, prompt=PROMPT):
    run_config = sim_config(config, world, run_seed=seed)
    run_dir = store.create(make_run_id(prompt, seed, index=index))
    state, summary = execute_run(prompt, run_config, run_dir)
    return run_dir, state, summary


class TestReplayWorkflow:
    def test_recorded_run_replays(self, store, config, world):
        run_dir, state, _ = persist(store, config, world, seed=5)
        replayed = replay_trace(run_dir.trace_path, run_dir.read_config())
        assert replayed.termination == state.termination
        assert replayed.global_best == state.global_best
        assert replayed.total_samples == state.total_samples

    def test_altered_event_is_reported(self, store, config, world):
        run_dir, _, _ = persist(store, config, world)
        lines = run_dir.trace_path.read_text().splitlines(keepends=True)
        assert '"kind":"round_start"' in lines[1]
        lines[1] = lines[1].replace('"kind":"round_start"', '"kind":"round_stars"')
        run_dir.trace_path.write_text("".join(lines))
        with pytest.raises(ReplayDivergence) as excinfo:
            replay_trace(run_dir.trace_path, run_dir.read_config())
        assert excinfo.value.sequence == 1
        assert "digest" in excinfo.value.detail

    def test_different_world_diverges(self, store, config, world, trivial_world):
        run_dir, _, _ = persist(store, config, world)
        with pytest.raises(ReplayDivergence):
            replay_trace(run_dir.trace_path, sim_config(config, trivial_world))


class TestBatchWorkflow:
    @pytest.mark.parametrize(
        ("world_name", "samples", "agent_calls"),
        [("trivial_world", 16, 6), ("impossible_world", 32, 14)],
    )
    def test_average_budget(self, store, config, request, world_name, samples, agent_calls):
        world = request.getfixturevalue(world_name)
        summaries = [
            persist(store, config, world, seed=seed, index=seed, prompt=f"{PROMPT} #{seed}")[2]
            for seed in range(4)
        ]
        from_summaries = report_from_summaries(summaries)
        assert from_summaries.runs == 4
        assert from_summaries.avg_samples == samples
        assert from_summaries.avg_agent_calls == agent_calls
        assert report_from_run_dirs(store.runs()) == from_summaries

    def test_interrupted_trace_is_readable(self, store, config, world):
        run_dir, _, _ = persist(store, config, world)
        data = run_dir.trace_path.read_bytes()
        cut = data.rindex(b"\n", 0, len(data) * 2 // 3) + 5
        run_dir.trace_path.write_bytes(data[:cut])
        result = read_trace(run_dir.trace_path, strict=False)
        assert not result.complete
        assert result.truncated
        assert result.events[0].kind == "run_start"
        assert any("truncated" in w for w in result.warnings)

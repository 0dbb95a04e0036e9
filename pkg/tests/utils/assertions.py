"""
Test Utilities - Custom Assertions

Custom assertion helpers for run-level invariants.

Provides:
- Budget assertions (samples, agent calls)
- Schedule assertions (per-round candidate kinds)
- Stopping-rule assertions
- Selection assertions (global best monotone, argmax, from a round-best)

Author: Vladimir K.S.
"""

from collections import Counter
from collections.abc import Sequence

from raise_t2i.config import RunConfig
from raise_t2i.core.state import RunState, TerminationKind
from raise_t2i.ops.trace import TraceEvent


def assert_budget(state: RunState, samples: int, agent_calls: int) -> None:
    """
    Assert the run's totals, and that they equal the per-round sums.

    Raises:
        AssertionError: If either total differs
    """
    assert state.total_samples == samples, f"samples {state.total_samples} != {samples}"
    assert state.total_agent_calls == agent_calls, (
        f"agent calls {state.total_agent_calls} != {agent_calls}"
    )
    assert state.total_samples == sum(r.samples for r in state.rounds)
    assert state.total_agent_calls == sum(r.agent_calls for r in state.rounds)


def kind_counts(state: RunState, round: int) -> dict[str, int]:
    record = state.record(round)
    assert record is not None, f"no record for round {round}"
    return dict(Counter(c.kind.value for c in record.candidates))


def assert_stop_rules(state: RunState, config: RunConfig) -> None:
    """
    Assert the stopping rules held for one run.

    - a non-error run ends no earlier than k_min (unless forced) and no later than the last round
    - adaptive terminations happen only at rounds >= k_min
    """
    termination = state.termination
    assert termination is not None, "run has no termination reason"
    assert termination.round <= config.last_round
    if termination.kind is TerminationKind.ERROR:
        return
    if config.adaptive_stopping:
        assert termination.round >= config.k_min, f"stopped at {termination.round} < k_min"
    if termination.kind in (
        TerminationKind.ANALYZER_END,
        TerminationKind.VERIFIER_ALL_SATISFIED,
    ):
        assert termination.round >= config.k_min
    if termination.kind is TerminationKind.MAX_ROUNDS:
        assert termination.round == config.last_round


def assert_selection_invariants(state: RunState, events: Sequence[TraceEvent]) -> None:
    """
    Assert selection correctness over one run.

    - the global-best fitness is non-decreasing across rounds
    - the final global best is some round's round-best
    - the final global best is the argmax over all scored candidates,
      earlier round then lower slot winning ties
    """
    fitnesses = [
        e.payload["global_best_fitness"] for e in events if e.kind == "round_best_selected"
    ]
    assert fitnesses == sorted(fitnesses), f"global best fitness decreased: {fitnesses}"

    if state.global_best is None:
        return
    round_bests = {r.round_best for r in state.completed_rounds}
    assert state.global_best in round_bests, "global best is not a round-best"

    scored = [
        s for r in state.completed_rounds for s in r.scored if s.fitness is not None
    ]
    expected = min(scored, key=lambda s: (-s.fitness, s.key.round, s.key.slot))  # type: ignore[operator]
    assert state.global_best == expected.key, f"{state.global_best} is not the argmax {expected.key}"

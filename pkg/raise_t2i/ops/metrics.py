"""
Efficiency Metrics

Aggregates per-run totals into the efficiency report: average samples
generated and average agent calls per prompt, plus termination and
round-count histograms and per-category averages.

A report can be built from run summaries (what ``batch`` writes) or
recomputed from raw traces (what ``report`` does); both must agree.

Author: Vladimir K.S.
"""

from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

from ..errors import RaiseError, TraceFormatError
from .store import RunDirectory, RunSummary
from .trace import TraceEvent, read_trace


class CategoryStats(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    runs: PositiveInt
    avg_samples: float
    avg_agent_calls: float


class MetricsReport(BaseModel):
    """
    Aggregate over ``runs`` runs.

    ``avg_samples`` is exactly ``sum(total_samples) / runs``; the same holds
    for agent and scorer calls.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    runs: PositiveInt
    avg_samples: float
    avg_agent_calls: float
    avg_scorer_calls: float
    terminations: dict[str, int] = Field(default_factory=dict)
    rounds: dict[int, int] = Field(default_factory=dict)
    categories: dict[str, CategoryStats] = Field(default_factory=dict)


class RunTotals(BaseModel):
    """The per-run numbers a report is built from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    run_id: str
    category: Optional[str] = None
    termination: str
    rounds: NonNegativeInt
    total_samples: NonNegativeInt
    total_agent_calls: NonNegativeInt
    total_scorer_calls: NonNegativeInt

    @classmethod
    def from_summary(cls, summary: RunSummary) -> "RunTotals":
        return cls(
            run_id=summary.run_id,
            category=summary.category,
            termination=summary.termination.kind.value,
            rounds=summary.rounds,
            total_samples=summary.total_samples,
            total_agent_calls=summary.total_agent_calls,
            total_scorer_calls=summary.total_scorer_calls,
        )


def totals_from_trace(
    run_id: str, events: Sequence[TraceEvent], category: Optional[str] = None
) -> RunTotals:
    """
    Recompute a run's totals from its round_end events.

    Raises:
        TraceFormatError: If the trace has no run_end event
    """
    end = next((e for e in events if e.kind == "run_end"), None)
    if end is None:
        raise TraceFormatError(f"trace of {run_id} has no run_end event")
    round_ends = [e for e in events if e.kind == "round_end"]
    return RunTotals(
        run_id=run_id,
        category=category,
        termination=str(end.payload["termination"]["kind"]),
        rounds=len(round_ends),
        total_samples=sum(int(e.payload["samples"]) for e in round_ends),
        total_agent_calls=sum(int(e.payload["agent_calls"]) for e in round_ends),
        total_scorer_calls=sum(int(e.payload["scorer_calls"]) for e in round_ends),
    )


def _mean(values: list[int]) -> float:
    return sum(values) / len(values)


def build_report(totals: Iterable[RunTotals]) -> MetricsReport:
    """
    Raises:
        RaiseError: If there are no runs to aggregate
    """
    runs = list(totals)
    if not runs:
        raise RaiseError("no runs to report on")
    by_category: dict[str, list[RunTotals]] = defaultdict(list)
    for run in runs:
        if run.category:
            by_category[run.category].append(run)
    return MetricsReport(
        runs=len(runs),
        avg_samples=_mean([r.total_samples for r in runs]),
        avg_agent_calls=_mean([r.total_agent_calls for r in runs]),
        avg_scorer_calls=_mean([r.total_scorer_calls for r in runs]),
        terminations=dict(sorted(Counter(r.termination for r in runs).items())),
        rounds=dict(sorted(Counter(r.rounds for r in runs).items())),
        categories={
            name: CategoryStats(
                runs=len(members),
                avg_samples=_mean([r.total_samples for r in members]),
                avg_agent_calls=_mean([r.total_agent_calls for r in members]),
            )
            for name, members in sorted(by_category.items())
        },
    )


def report_from_summaries(summaries: Iterable[RunSummary]) -> MetricsReport:
    return build_report(RunTotals.from_summary(s) for s in summaries)


def report_from_run_dirs(run_dirs: Iterable[RunDirectory]) -> MetricsReport:
    """
    Recompute the report from each run's trace; the category comes from the
    run's summary when one was written.
    """
    totals = []
    for run_dir in run_dirs:
        category = None
        if run_dir.summary_path.is_file():
            category = run_dir.read_summary().category
        events = read_trace(run_dir.trace_path).events
        totals.append(totals_from_trace(run_dir.run_id, events, category))
    return build_report(totals)

"""
Run State

Per-round records and the run-level container the engine mutates from its
single control thread. Budget totals are derived from the round records, so
``total_samples`` and ``total_agent_calls`` always equal the per-round sums.

Author: Vladimir K.S.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, computed_field

from ..config import RunConfig
from .models import (
    AnalyzerOutput,
    Candidate,
    CandidateKey,
    EditRewriteOutput,
    FrozenModel,
    GenRewriteOutput,
    GroundingEvidence,
    ImageRef,
    ScoredCandidate,
    VerifierOutput,
)


class TerminationKind(str, Enum):
    ANALYZER_END = "analyzer_end"
    VERIFIER_ALL_SATISFIED = "verifier_all_satisfied"
    MAX_ROUNDS = "max_rounds"
    ERROR = "error"


class TerminationReason(FrozenModel):
    kind: TerminationKind
    round: PositiveInt
    detail: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.kind is TerminationKind.ERROR


class RoundRecord(FrozenModel):
    """
    Everything one round produced.

    A round cut short (analyzer end before generation, or a terminal error)
    has ``completed=False`` and carries only what happened before the cut.
    ``samples`` counts attempted executions; ``scored`` holds the successful ones.
    """

    round: PositiveInt
    analyzer: Optional[AnalyzerOutput] = None
    gen_rewrite: Optional[GenRewriteOutput] = None
    edit_rewrite: Optional[EditRewriteOutput] = None
    candidates: tuple[Candidate, ...] = ()
    scored: tuple[ScoredCandidate, ...] = ()
    failed_slots: tuple[NonNegativeInt, ...] = ()
    round_best: Optional[CandidateKey] = None
    evidence: Optional[GroundingEvidence] = None
    grounded: bool = False
    verifier: Optional[VerifierOutput] = None
    agent_calls: NonNegativeInt = 0
    samples: NonNegativeInt = 0
    scorer_calls: NonNegativeInt = 0
    completed: bool = False
    notes: tuple[str, ...] = ()

    def scored_for(self, key: CandidateKey) -> Optional[ScoredCandidate]:
        return next((s for s in self.scored if s.key == key), None)

    @property
    def round_best_scored(self) -> Optional[ScoredCandidate]:
        return self.scored_for(self.round_best) if self.round_best is not None else None


class RunState(BaseModel):
    """Full history of one run; the final output is the global best's image."""

    model_config = ConfigDict(extra="forbid")

    user_prompt: str = Field(min_length=1)
    config: RunConfig
    rounds: list[RoundRecord] = Field(default_factory=list)
    global_best: Optional[CandidateKey] = None
    termination: Optional[TerminationReason] = None

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total_samples(self) -> int:
        return sum(r.samples for r in self.rounds)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total_agent_calls(self) -> int:
        return sum(r.agent_calls for r in self.rounds)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total_scorer_calls(self) -> int:
        return sum(r.scorer_calls for r in self.rounds)

    @property
    def completed_rounds(self) -> list[RoundRecord]:
        return [r for r in self.rounds if r.completed]

    def record(self, round_index: int) -> Optional[RoundRecord]:
        return next((r for r in self.rounds if r.round == round_index), None)

    def lookup(self, key: CandidateKey) -> Optional[ScoredCandidate]:
        record = self.record(key.round)
        return record.scored_for(key) if record is not None else None

    @property
    def global_best_scored(self) -> Optional[ScoredCandidate]:
        return self.lookup(self.global_best) if self.global_best is not None else None

    @property
    def global_best_record(self) -> Optional[RoundRecord]:
        """Round whose round-best is the global best; its verifier feedback travels with it."""
        return self.record(self.global_best.round) if self.global_best is not None else None

    @property
    def final_image(self) -> Optional[ImageRef]:
        best = self.global_best_scored
        return best.output if best is not None else None

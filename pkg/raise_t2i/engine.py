"""
Evolution Engine

The per-round control loop:

    analyze -> (analyzer end?) -> schedule -> rewrite prompts -> build population
    -> execute -> score against the user prompt -> select bests
    -> ground + verify the round-best -> (all satisfied? last round?)

The final output is the global best: the highest-fitness candidate over all
rounds, earlier round then lower slot winning ties. The engine owns RunState
from a single thread; only candidate execution fans out.

Budget per completed round: one analyzer, one generation-rewriter and one
verifier call, plus the editing rewriter in late rounds; ``samples_per_round``
executions. A run that stops on the analyzer's decision adds that single
analyzer call for the round it stopped in.

Author: Vladimir K.S.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

from .agents import AgentCallRecord, AgentClient, BestContext, RoundBestExtras
from .backends import Backends, build_backends
from .backends.base import ScorerBackend
from .checks import CheckResult
from .config import RunConfig
from .core.images import ImageStore, MemoryImageStore
from .core.models import (
    AnalyzerDecision,
    AnalyzerOutput,
    Candidate,
    EditRewriteOutput,
    GenRewriteOutput,
    GroundingEvidence,
    ScoredCandidate,
    VerifierOutput,
)
from .core.state import RoundRecord, RunState, TerminationKind, TerminationReason
from .errors import (
    AgentProtocolError,
    ExecutionError,
    RaiseError,
    TransportError,
)
from .execution import ExecutionResult, execute_population
from .grounding import acquire_grounding
from .ops.trace import TraceWriter
from .refinement import build_population, choose_random_edit, random_edit_stream, schedule_actions

logger = logging.getLogger(__name__)


# ====================
# Scoring and selection
# ====================


def score_candidates(
    results: Sequence[ExecutionResult],
    candidates: Sequence[Candidate],
    user_prompt: str,
    scorer: ScorerBackend,
    store: ImageStore,
) -> CheckResult[list[ScoredCandidate]]:
    """
    Score every successful result against the ORIGINAL user prompt.

    A scorer failure (or a non-finite score) leaves that candidate with
    ``fitness=None``; it is kept, noted, and never selected. Failed
    executions are omitted. One scorer call is made per successful result.
    """
    by_key = {c.key: c for c in candidates}
    scored: list[ScoredCandidate] = []
    notes: list[str] = []
    for result in results:
        if result.output is None:
            continue
        fitness: Optional[float]
        try:
            fitness = float(scorer.score(store.get(result.output), user_prompt))
        except (RaiseError, ValueError) as e:
            fitness = None
            notes.append(f"scorer failed for {result.candidate}: {e}")
        else:
            if not math.isfinite(fitness):
                notes.append(f"scorer returned non-finite fitness for {result.candidate}")
                fitness = None
        scored.append(
            ScoredCandidate(candidate=by_key[result.candidate], output=result.output, fitness=fitness)
        )
    for note in notes:
        logger.warning(note)
    return CheckResult(scored, notes)


def _beats(challenger: ScoredCandidate, incumbent: ScoredCandidate) -> bool:
    assert challenger.fitness is not None and incumbent.fitness is not None
    if challenger.fitness != incumbent.fitness:
        return challenger.fitness > incumbent.fitness
    return (challenger.candidate.round, challenger.candidate.slot) < (
        incumbent.candidate.round,
        incumbent.candidate.slot,
    )


def select_bests(
    scored: Sequence[ScoredCandidate], prior_global_best: Optional[ScoredCandidate]
) -> tuple[Optional[ScoredCandidate], Optional[ScoredCandidate]]:
    """
    Return (round_best, global_best).

    round_best is the max-fitness selectable candidate of this round (lower
    slot wins ties); global_best is the max over the prior global best and
    this round (earlier round wins ties). round_best is None when nothing in
    the round could be scored.
    """
    round_best: Optional[ScoredCandidate] = None
    for candidate in scored:
        if candidate.selectable and (round_best is None or _beats(candidate, round_best)):
            round_best = candidate
    if round_best is None:
        return None, prior_global_best
    if prior_global_best is None or _beats(round_best, prior_global_best):
        return round_best, round_best
    return round_best, prior_global_best


def decide_stop(
    round: int,
    analyzer_decision: Optional[AnalyzerDecision],
    verifier_flag: Optional[bool],
    config: RunConfig,
) -> Optional[TerminationReason]:
    """
    Stopping rule. Called twice per round:

    - before generation (``verifier_flag`` None): the analyzer's end decision
      stops the run once ``round >= k_min``;
    - after verification: all-satisfied stops once ``round >= k_min``, and the
      last round stops regardless.

    Adaptive stops are disabled when ``force_rounds`` is set.

    Returns:
        The termination reason, or None to continue
    """
    adaptive = config.adaptive_stopping and round >= config.k_min
    if verifier_flag is None:
        if adaptive and analyzer_decision is AnalyzerDecision.END:
            return TerminationReason(kind=TerminationKind.ANALYZER_END, round=round)
        return None
    if adaptive and verifier_flag:
        return TerminationReason(kind=TerminationKind.VERIFIER_ALL_SATISFIED, round=round)
    if round >= config.last_round:
        return TerminationReason(kind=TerminationKind.MAX_ROUNDS, round=round)
    return None


# ====================
# Run loop
# ====================


class RoundAborted(Exception):
    """Internal: a terminal failure inside a round."""

    def __init__(self, detail: str) -> None:
        self.detail = detail
        super().__init__(detail)


@dataclass
class _Round:
    """Mutable accumulator turned into a RoundRecord when the round ends."""

    index: int
    analyzer: Optional[AnalyzerOutput] = None
    gen_rewrite: Optional[GenRewriteOutput] = None
    edit_rewrite: Optional[EditRewriteOutput] = None
    candidates: list[Candidate] = field(default_factory=list)
    scored: list[ScoredCandidate] = field(default_factory=list)
    failed_slots: list[int] = field(default_factory=list)
    round_best: Optional[ScoredCandidate] = None
    evidence: Optional[GroundingEvidence] = None
    grounded: bool = False
    verifier: Optional[VerifierOutput] = None
    agent_calls: int = 0
    samples: int = 0
    scorer_calls: int = 0
    notes: list[str] = field(default_factory=list)

    def record(self, completed: bool) -> RoundRecord:
        return RoundRecord(
            round=self.index,
            analyzer=self.analyzer,
            gen_rewrite=self.gen_rewrite,
            edit_rewrite=self.edit_rewrite,
            candidates=tuple(self.candidates),
            scored=tuple(self.scored),
            failed_slots=tuple(self.failed_slots),
            round_best=self.round_best.key if self.round_best else None,
            evidence=self.evidence,
            grounded=self.grounded,
            verifier=self.verifier,
            agent_calls=self.agent_calls,
            samples=self.samples,
            scorer_calls=self.scorer_calls,
            completed=completed,
            notes=tuple(self.notes),
        )


class Engine:
    """
    Runs one prompt to termination against a backend set.

    Usage:
        engine = Engine(config, backends)
        state = engine.run("a photo of a bear above a clock")
        final = engine.store.get(state.final_image)

    Attributes:
        store: Image store holding every candidate image of the run
        trace: Event trace of the run
    """

    def __init__(
        self,
        config: RunConfig,
        backends: Backends,
        *,
        store: Optional[ImageStore] = None,
        trace: Optional[TraceWriter] = None,
    ) -> None:
        self.config = config
        self.backends = backends
        self.store: ImageStore = store if store is not None else MemoryImageStore()
        self.trace = trace if trace is not None else TraceWriter()
        self.agents = AgentClient(
            backends.chat,
            self.store,
            model=config.agent_model,
            schema_retries=config.agent_schema_retries,
            observer=self._on_agent_call,
        )
        # Generation prompt behind every candidate; edits inherit their parent's
        self._lineage: dict[str, str] = {}
        self._round: Optional[_Round] = None

    # ====================
    # Trace helpers
    # ====================

    def _on_agent_call(self, record: AgentCallRecord) -> None:
        if record.outcome == "ok" and self._round is not None:
            self._round.agent_calls += 1
        payload = record.model_dump(mode="json", exclude={"latency_s"})
        self.trace.emit(
            "agent_call",
            self._round.index if self._round else None,
            payload,
            duration_s=record.latency_s,
        )
        if record.notes and self._round is not None:
            self._round.notes.extend(record.notes)

    def _note(self, message: str) -> None:
        logger.warning(message)
        if self._round is not None:
            self._round.notes.append(message)

    # ====================
    # Context assembly
    # ====================

    def _analyzer_context(
        self, state: RunState
    ) -> tuple[Optional[BestContext], Optional[RoundBestExtras]]:
        best = state.global_best_scored
        best_record = state.global_best_record
        if best is None or best_record is None:
            return None, None
        context = BestContext(
            prompt=self._lineage[str(best.key)], image=best.output, feedback=best_record.verifier
        )
        previous = state.completed_rounds[-1] if state.completed_rounds else None
        extras = None
        if previous is not None and previous.round_best not in (None, best.key):
            round_best = previous.round_best_scored
            assert round_best is not None
            extras = RoundBestExtras(
                prompt=self._lineage[str(round_best.key)], feedback=previous.verifier
            )
        return context, extras

    # ====================
    # Round
    # ====================

    def _run_round(self, state: RunState, i: int) -> Optional[TerminationReason]:
        config = self.config
        rnd = self._round = _Round(index=i)
        self.trace.emit("round_start", i, {"round": i})

        context, extras = self._analyzer_context(state)
        analysis = self.agents.analyze(state.user_prompt, context, extras, i)
        rnd.analyzer = analysis
        stop = decide_stop(i, analysis.decision, None, config)
        if stop is not None:
            logger.info("round %d: analyzer ended the run", i)
            state.rounds.append(rnd.record(completed=False))
            self.trace.emit("round_end", i, self._round_end_payload(rnd, completed=False))
            return stop

        plan = schedule_actions(i, config)
        checklist = analysis.checklist
        satisfied, unsatisfied = checklist.satisfied_texts, checklist.unsatisfied_texts
        if not unsatisfied:
            satisfied, unsatisfied = [], [r.text for r in checklist.requirements]

        best = state.global_best_scored
        current_prompt = self._lineage[str(best.key)] if best else state.user_prompt
        parent_image = best.output if best else None

        rnd.gen_rewrite = self.agents.rewrite_generation(
            state.user_prompt, current_prompt, parent_image, satisfied, unsatisfied,
            analysis.reasoning,
        )
        if plan.has_edits:
            if parent_image is None:
                self._note(f"round {i}: no global-best image to edit; edit slots become rewrites")
                plan = plan.without_edits()
            else:
                try:
                    edit = self.agents.rewrite_editing(
                        state.user_prompt, current_prompt, parent_image, satisfied, unsatisfied,
                        analysis.reasoning,
                    )
                    rnd.edit_rewrite = choose_random_edit(
                        edit, random_edit_stream(config.run_seed, i)
                    )
                except (AgentProtocolError, TransportError) as e:
                    self._note(f"round {i}: editing rewriter failed ({e}); edit slots become rewrites")
                    plan = plan.without_edits()

        population = build_population(
            plan,
            config,
            state.user_prompt,
            gen_rewrite=rnd.gen_rewrite,
            edit_rewrite=rnd.edit_rewrite,
            parent_image=parent_image,
        )
        rnd.candidates = population
        for candidate in population:
            self._lineage[str(candidate.key)] = (
                current_prompt if candidate.kind.is_edit else candidate.prompt
            )
        self.trace.emit(
            "population_built",
            i,
            {
                "plan": {kind.value: n for kind, n in plan.counts.items()},
                "candidates": [c.model_dump(mode="json") for c in population],
            },
        )

        rnd.samples = len(population)
        try:
            results = execute_population(population, config, self.backends, self.store)
        except ExecutionError as e:
            self._trace_results(rnd, e.results)
            raise RoundAborted(str(e)) from e
        self._trace_results(rnd, results)

        scoring = score_candidates(
            results, population, state.user_prompt, self.backends.scorer, self.store
        )
        rnd.scored = scoring.value
        rnd.scorer_calls = len(scoring.value)
        rnd.notes.extend(scoring.warnings)
        self.trace.emit(
            "candidates_scored",
            i,
            {
                "scores": [
                    {"candidate": str(s.key), "fitness": s.fitness} for s in scoring.value
                ],
                "scorer_calls": rnd.scorer_calls,
                "notes": scoring.warnings,
            },
        )

        round_best, global_best = select_bests(rnd.scored, state.global_best_scored)
        if round_best is None or global_best is None:
            raise RoundAborted(f"round {i}: no candidate could be scored")
        rnd.round_best = round_best
        self.trace.emit(
            "round_best_selected",
            i,
            {
                "round_best": str(round_best.key),
                "round_best_fitness": round_best.fitness,
                "global_best": str(global_best.key),
                "global_best_fitness": global_best.fitness,
            },
        )

        grounding = acquire_grounding(
            round_best.output, config, self.backends.grounding, self.store
        )
        rnd.evidence = grounding.value
        rnd.grounded = grounding.value is not None
        rnd.notes.extend(grounding.warnings)
        self.trace.emit(
            "grounding_acquired",
            i,
            {
                "grounded": rnd.grounded,
                "evidence": rnd.evidence.model_dump(mode="json") if rnd.evidence else None,
                "notes": grounding.warnings,
            },
        )

        rnd.verifier = self.agents.verify(
            round_best.output,
            rnd.evidence,
            checklist.questions,
            [r.text for r in checklist.requirements],
        )
        self.trace.emit(
            "verifier_result",
            i,
            {
                "verification": "grounded" if rnd.grounded else "ungrounded",
                "verifier": rnd.verifier.model_dump(mode="json"),
            },
        )

        state.rounds.append(rnd.record(completed=True))
        state.global_best = global_best.key
        self.trace.emit("round_end", i, self._round_end_payload(rnd, completed=True, state=state))
        logger.info(
            "round %d: best %s (%.4f), global best %s (%.4f), all satisfied: %s",
            i,
            round_best.key,
            round_best.fitness,
            global_best.key,
            global_best.fitness,
            rnd.verifier.all_satisfied,
        )
        return decide_stop(i, analysis.decision, rnd.verifier.all_satisfied, config)

    def _trace_results(self, rnd: _Round, results: Sequence[ExecutionResult]) -> None:
        for result in results:
            if not result.ok:
                rnd.failed_slots.append(result.candidate.slot)
                rnd.notes.append(f"candidate {result.candidate} failed: {result.failure}")
            self.trace.emit(
                "candidate_executed",
                rnd.index,
                result.model_dump(mode="json", exclude={"duration_s"}),
                duration_s=result.duration_s,
            )

    @staticmethod
    def _round_end_payload(
        rnd: _Round, completed: bool, state: Optional[RunState] = None
    ) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "completed": completed,
            "agent_calls": rnd.agent_calls,
            "samples": rnd.samples,
            "scorer_calls": rnd.scorer_calls,
            "round_best": str(rnd.round_best.key) if rnd.round_best else None,
            "failed_slots": rnd.failed_slots,
            "notes": rnd.notes,
        }
        if rnd.analyzer is not None:
            checklist = rnd.analyzer.checklist
            payload["decision"] = rnd.analyzer.decision.value
            payload["checklist"] = checklist.model_dump(mode="json")
        if state is not None and state.global_best is not None:
            payload["global_best"] = str(state.global_best)
        return payload

    def _abort_round(self, state: RunState, i: int, detail: str) -> TerminationReason:
        rnd = self._round
        assert rnd is not None
        rnd.notes.append(detail)
        state.rounds.append(rnd.record(completed=False))
        self.trace.emit("round_end", i, self._round_end_payload(rnd, completed=False))
        return TerminationReason(kind=TerminationKind.ERROR, round=i, detail=detail)

    # ====================
    # Run
    # ====================

    def run(self, user_prompt: str) -> RunState:
        """
        Run ``user_prompt`` to termination.

        Never raises for backend, agent or decoding failures: they end the run
        with termination kind ``error`` and the partial state is returned.
        """
        config = self.config
        state = RunState(user_prompt=user_prompt, config=config)
        self.trace.emit(
            "run_start",
            None,
            {
                "user_prompt": user_prompt,
                "k_min": config.k_min,
                "k_max": config.k_max,
                "last_round": config.last_round,
                "adaptive_stopping": config.adaptive_stopping,
                "samples_per_round": config.samples_per_round,
                "enable_editing": config.enable_editing,
                "enable_grounding_tools": config.enable_grounding_tools,
                "backend_profile": config.backend_profile,
                "agent_model": config.agent_model,
            },
        )
        logger.info("run started: %r (rounds %d..%d)", user_prompt, config.k_min, config.last_round)

        for i in range(1, config.last_round + 1):
            try:
                stop = self._run_round(state, i)
            except (RoundAborted, RaiseError) as e:
                detail = e.detail if isinstance(e, RoundAborted) else str(e)
                logger.error("round %d aborted: %s", i, detail)
                stop = self._abort_round(state, i, detail)
            except Exception as e:
                # A backend or decoder bug still ends the run with a run_end event
                logger.exception("round %d failed unexpectedly", i)
                stop = self._abort_round(state, i, f"unexpected {type(e).__name__}: {e}")
            if stop is not None:
                state.termination = stop
                break
        self._round = None

        assert state.termination is not None
        best = state.global_best_scored
        self.trace.emit(
            "run_end",
            state.termination.round,
            {
                "termination": state.termination.model_dump(mode="json"),
                "rounds": len(state.rounds),
                "completed_rounds": len(state.completed_rounds),
                "total_samples": state.total_samples,
                "total_agent_calls": state.total_agent_calls,
                "total_scorer_calls": state.total_scorer_calls,
                "global_best": str(best.key) if best else None,
                "global_best_fitness": best.fitness if best else None,
                "final_image": best.output.content_id if best else None,
            },
        )
        logger.info(
            "run ended: %s at round %d (%d samples, %d agent calls)",
            state.termination.kind.value,
            state.termination.round,
            state.total_samples,
            state.total_agent_calls,
        )
        return state


def run(
    user_prompt: str,
    config: RunConfig,
    backends: Optional[Backends] = None,
    *,
    store: Optional[ImageStore] = None,
    trace: Optional[TraceWriter] = None,
) -> RunState:
    """
    Run one prompt; backends default to ``build_backends(config, user_prompt)``.

    Example:
        >>> state = run("a photo of a bear above a clock", RunConfig(backend_profile="sim"))
        >>> state.termination.kind
    """
    engine = Engine(
        config,
        backends if backends is not None else build_backends(config, user_prompt),
        store=store,
        trace=trace,
    )
    return engine.run(user_prompt)


__all__ = ["Engine", "decide_stop", "run", "score_candidates", "select_bests"]

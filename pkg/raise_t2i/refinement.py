"""
Refinement Actions

Decides which refinement actions a round uses and turns the global best
(the parent) plus the rewriters' outputs into the round's candidate
population.

Schedule:
    round <= k_min  early_resample x resample + early_rewrite x rewrite
    round >  k_min  late_rewrite x rewrite + edit_top + edit_random + edit_comp
                    (the three edit slots become rewrites when editing is off
                    or the editing rewriter failed)

Slots are numbered 0..n-1 in kind order resample < rewrite < edit_top <
edit_random < edit_comp, and every candidate's seed is derived from
(run_seed, round, slot) with a published 64-bit mix.

Author: Vladimir K.S.
"""

import hashlib
from typing import Optional

import numpy as np
from pydantic import NonNegativeInt, PositiveInt, model_validator

from .config import RunConfig
from .core.models import (
    EDIT_KINDS,
    KIND_ORDER,
    Candidate,
    CandidateKind,
    EditRewriteOutput,
    FrozenModel,
    GenRewriteOutput,
    ImageRef,
)
from .errors import RefinementError

MASK64 = (1 << 64) - 1

RANDOM_EDIT_STREAM = "random_edit"


class ActionPlan(FrozenModel):
    """Per-kind candidate counts for one round."""

    round: PositiveInt
    late: bool
    counts: dict[CandidateKind, NonNegativeInt]

    @model_validator(mode="after")
    def _phase(self) -> "ActionPlan":
        kinds = {kind for kind, n in self.counts.items() if n > 0}
        if self.late:
            if CandidateKind.RESAMPLE in kinds:
                raise ValueError("late rounds never resample")
            edits = [self.counts.get(kind, 0) for kind in EDIT_KINDS]
            if any(edits) and edits != [1, 1, 1]:
                raise ValueError("late rounds carry each edit kind exactly once, or none")
        elif kinds & EDIT_KINDS:
            raise ValueError("early rounds never edit")
        return self

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def count(self, kind: CandidateKind) -> int:
        return self.counts.get(kind, 0)

    @property
    def has_edits(self) -> bool:
        return self.count(CandidateKind.EDIT_TOP) > 0

    def without_edits(self) -> "ActionPlan":
        """The same plan with the three edit slots reassigned to rewrites."""
        edits = sum(self.count(kind) for kind in EDIT_KINDS)
        counts = {k: n for k, n in self.counts.items() if k not in EDIT_KINDS}
        counts[CandidateKind.REWRITE] = counts.get(CandidateKind.REWRITE, 0) + edits
        return ActionPlan(round=self.round, late=self.late, counts=counts)


def schedule_actions(round: int, config: RunConfig) -> ActionPlan:
    """
    Return the action plan of ``round``.

    Example:
        >>> schedule_actions(1, RunConfig()).counts
        {<CandidateKind.RESAMPLE: 'resample'>: 4, <CandidateKind.REWRITE: 'rewrite'>: 4}

    Raises:
        RefinementError: If ``round`` lies outside 1..last round
    """
    if not 1 <= round <= config.last_round:
        raise RefinementError(f"round {round} outside 1..{config.last_round}")
    if round <= config.k_min:
        counts = {
            CandidateKind.RESAMPLE: config.early_resample,
            CandidateKind.REWRITE: config.early_rewrite,
        }
        return ActionPlan(round=round, late=False, counts=_nonzero(counts))
    counts = {
        CandidateKind.REWRITE: config.late_rewrite,
        CandidateKind.EDIT_TOP: 1,
        CandidateKind.EDIT_RANDOM: 1,
        CandidateKind.EDIT_COMP: 1,
    }
    plan = ActionPlan(round=round, late=True, counts=counts)
    return plan if config.enable_editing else plan.without_edits()


def _nonzero(counts: dict[CandidateKind, int]) -> dict[CandidateKind, int]:
    return {kind: n for kind, n in counts.items() if n > 0}


# ====================
# Seeds and streams
# ====================


def splitmix64(value: int) -> int:
    """The SplitMix64 output function; a bijection on 64-bit integers."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(run_seed: int, round: int, slot: int) -> int:
    """
    Seed of candidate (round, slot): ``splitmix64(splitmix64(run_seed) + (round << 32 | slot))``.

    Injective over (round, slot) for a fixed run seed while round and slot fit in 32 bits.
    """
    if not (0 <= round < 1 << 32 and 0 <= slot < 1 << 32):
        raise RefinementError(f"round/slot out of range: ({round}, {slot})")
    offset = (round << 32) | slot
    return splitmix64((splitmix64(run_seed & MASK64) + offset) & MASK64)


def stream_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")


def random_edit_stream(run_seed: int, round: int) -> np.random.Generator:
    """Dedicated RNG for the random-edit draw of ``round``."""
    return np.random.default_rng([run_seed, round, stream_key(RANDOM_EDIT_STREAM)])


# ====================
# Candidate builders
# ====================


def make_resample_candidates(
    user_prompt: str, count: int, round: int, config: RunConfig, first_slot: int = 0
) -> list[Candidate]:
    """``count`` candidates that keep the user prompt and only change the seed."""
    return [
        Candidate(
            round=round,
            slot=slot,
            seed=derive_seed(config.run_seed, round, slot),
            prompt=user_prompt,
            kind=CandidateKind.RESAMPLE,
        )
        for slot in range(first_slot, first_slot + count)
    ]


def make_rewrite_candidates(
    rewritten_prompt: str, count: int, round: int, config: RunConfig, first_slot: int = 0
) -> list[Candidate]:
    """``count`` candidates sharing the rewritten prompt, each with its own seed."""
    if count and not rewritten_prompt:
        raise RefinementError("rewrite candidates need a nonempty prompt")
    return [
        Candidate(
            round=round,
            slot=slot,
            seed=derive_seed(config.run_seed, round, slot),
            prompt=rewritten_prompt,
            kind=CandidateKind.REWRITE,
        )
        for slot in range(first_slot, first_slot + count)
    ]


def choose_random_edit(edit_output: EditRewriteOutput, rng: np.random.Generator) -> EditRewriteOutput:
    """
    Fill in ``random_edit``: uniform over the planned edits other than the top
    edit, or the only planned edit when there is nothing else to pick.

    Raises:
        RefinementError: If there are no planned edits
    """
    if not edit_output.planned_edits:
        raise RefinementError("editing rewriter planned no edits")
    others = [e for e in edit_output.planned_edits if e != edit_output.top_edit]
    choice = others[int(rng.integers(len(others)))] if others else edit_output.planned_edits[0]
    return edit_output.model_copy(update={"random_edit": choice})


def make_edit_candidates(
    edit_output: EditRewriteOutput,
    parent_image: Optional[ImageRef],
    round: int,
    config: RunConfig,
    rng_stream: np.random.Generator,
    first_slot: int = 0,
) -> list[Candidate]:
    """
    The edit triple (top, random, comprehensive), all editing ``parent_image``.

    ``random_edit`` is drawn from ``rng_stream`` unless already set.

    Raises:
        RefinementError: If there are no planned edits or no parent image
    """
    if parent_image is None:
        raise RefinementError("edit candidates need the global-best image as reference")
    if edit_output.random_edit is None:
        edit_output = choose_random_edit(edit_output, rng_stream)
    prompts = {
        CandidateKind.EDIT_TOP: edit_output.top_edit,
        CandidateKind.EDIT_RANDOM: edit_output.random_edit,
        CandidateKind.EDIT_COMP: edit_output.comprehensive_edit,
    }
    candidates = []
    for offset, kind in enumerate(k for k in KIND_ORDER if k in EDIT_KINDS):
        slot = first_slot + offset
        candidates.append(
            Candidate(
                round=round,
                slot=slot,
                seed=derive_seed(config.run_seed, round, slot),
                prompt=prompts[kind],
                reference=parent_image,
                kind=kind,
            )
        )
    return candidates


def build_population(
    plan: ActionPlan,
    config: RunConfig,
    user_prompt: str,
    *,
    gen_rewrite: Optional[GenRewriteOutput] = None,
    edit_rewrite: Optional[EditRewriteOutput] = None,
    parent_image: Optional[ImageRef] = None,
    rng_stream: Optional[np.random.Generator] = None,
) -> list[Candidate]:
    """
    Build the round's population in slot order.

    Raises:
        RefinementError: If the plan needs a rewriter output (or parent image) that is missing
    """
    population: list[Candidate] = []
    resamples = plan.count(CandidateKind.RESAMPLE)
    population += make_resample_candidates(user_prompt, resamples, plan.round, config)

    rewrites = plan.count(CandidateKind.REWRITE)
    if rewrites:
        if gen_rewrite is None:
            raise RefinementError(f"round {plan.round} plans rewrites but has no rewritten prompt")
        population += make_rewrite_candidates(
            gen_rewrite.adjusted_prompt, rewrites, plan.round, config, first_slot=len(population)
        )

    if plan.has_edits:
        if edit_rewrite is None:
            raise RefinementError(f"round {plan.round} plans edits but has no edit instructions")
        stream = rng_stream or random_edit_stream(config.run_seed, plan.round)
        population += make_edit_candidates(
            edit_rewrite, parent_image, plan.round, config, stream, first_slot=len(population)
        )

    if len(population) != plan.total:
        raise RefinementError(f"population of {len(population)} does not match plan {plan.total}")
    return population

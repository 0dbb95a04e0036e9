"""
Test Utilities - Builders and Scripted Backends

Helper functions for building domain values and agent replies in tests.

Provides:
- ScriptedChat: a chat backend replaying canned replies
- RecordingChat: a pass-through chat backend keeping every payload
- Agent reply builders (analyzer, rewriters, verifier)
- Candidate and scored-candidate builders
- Simulated PNG images

Author: Vladimir K.S.
"""

import json
from collections.abc import Sequence
from typing import Any, Optional, Union

from raise_t2i.core.images import ImageStore
from raise_t2i.core.models import (
    Candidate,
    CandidateKind,
    ImageRef,
    ScoredCandidate,
    VerificationAnswer,
    VerificationTriplet,
    VerifierOutput,
)
from raise_t2i.sim.world import SimImage

Reply = Union[str, dict[str, Any], Exception]


class ScriptedChat:
    """
    Chat backend answering from a fixed list of replies.

    Dict replies are JSON-encoded, strings are returned verbatim and
    exceptions are raised.

    Attributes:
        payloads: Every payload received, in order
    """

    def __init__(self, replies: Sequence[Reply]) -> None:
        self.replies = list(replies)
        self.payloads: list[dict[str, Any]] = []

    def complete(self, payload: dict[str, Any]) -> str:
        self.payloads.append(payload)
        if not self.replies:
            raise AssertionError("ScriptedChat ran out of replies")
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply if isinstance(reply, str) else json.dumps(reply)

    def texts(self, index: int = -1) -> list[str]:
        """Text parts of the user message of payload ``index``."""
        content = self.payloads[index]["messages"][-1]["content"]
        return [part["text"] for part in content if part["type"] == "text"]


class RecordingChat:
    """
    Chat backend that forwards to ``inner`` and keeps every payload.

    Usage:
        chat = RecordingChat(SimChatBackend(world, k_min=2))
        chat.for_role("analyzer")  # analyzer payloads, in call order
    """

    def __init__(self, inner: Any) -> None:
        self.inner = inner
        self.payloads: list[dict[str, Any]] = []

    def complete(self, payload: dict[str, Any]) -> str:
        self.payloads.append(payload)
        return str(self.inner.complete(payload))

    def for_role(self, role: str) -> list[dict[str, Any]]:
        return [p for p in self.payloads if p["response_format"]["json_schema"]["name"] == role]


# ====================
# Agent replies
# ====================


def analyzer_reply(
    requirements: Sequence[str],
    satisfied: Sequence[str] = (),
    questions: Optional[Sequence[str]] = None,
    choice: str = "continue",
    prompt: str = "a prompt",
) -> dict[str, Any]:
    return {
        "analyzer_reasoning": "reasoning",
        "original_prompt": prompt,
        "current_prompt": prompt,
        "requirements_analysis": list(requirements),
        "satisfied_requirements": list(satisfied),
        "unsatisfied_requirements": [r for r in requirements if r not in satisfied],
        "binary_questions": list(questions)
        if questions is not None
        else [f"Is it true that {r}?" for r in requirements],
        "model_choice": choice,
    }


def gen_rewriter_reply(adjusted: str, prompt: str = "a prompt") -> dict[str, Any]:
    return {
        "rewriter_reasoning": "rewrite",
        "original_prompt": prompt,
        "current_prompt": prompt,
        "planned_adjustments": ["make it better"],
        "adjusted_prompt": adjusted,
    }


def edit_rewriter_reply(edits: Sequence[str], prompt: str = "a prompt") -> dict[str, Any]:
    return {
        "rewriter_reasoning": "edit",
        "original_prompt": prompt,
        "current_prompt": prompt,
        "planned_edits": list(edits),
        "single_editing_prompt": edits[0],
        "comprehensive_editing_prompt": "; ".join(edits),
    }


def verifier_reply(
    questions: Sequence[str], answers: Sequence[str], all_satisfied: Optional[bool] = None
) -> dict[str, Any]:
    flag = all(a == "Yes" for a in answers) if all_satisfied is None else all_satisfied
    return {
        "verifier_reasoning": "looked",
        "current_image_caption": "an image",
        "questions_answers_and_explanations": [
            [q, a, "because"] for q, a in zip(questions, answers)
        ],
        "verifier_summary": "summary",
        "all_satisfied": flag,
    }


def verifier_output(answers: Sequence[bool], all_satisfied: Optional[bool] = None) -> VerifierOutput:
    return VerifierOutput(
        reasoning="r",
        image_caption="c",
        triplets=tuple(
            VerificationTriplet(
                question=f"q{i}",
                answer=VerificationAnswer.YES if a else VerificationAnswer.NO,
                explanation="e",
            )
            for i, a in enumerate(answers)
        ),
        summary="s",
        all_satisfied=all(answers) if all_satisfied is None else all_satisfied,
    )


# ====================
# Candidates and images
# ====================


def png(bits: Sequence[bool], canvas: int = 64) -> bytes:
    return SimImage(bits=tuple(bits)).encode(canvas)


def image_ref(store: ImageStore, bits: Sequence[bool] = (True, False)) -> ImageRef:
    return store.put(png(bits))


def fake_ref(name: str = "img") -> ImageRef:
    return ImageRef(content_id=name, width=64, height=64)


def make_candidate(
    round: int = 1,
    slot: int = 0,
    kind: CandidateKind = CandidateKind.REWRITE,
    prompt: str = "a prompt",
    reference: Optional[ImageRef] = None,
    seed: int = 1,
) -> Candidate:
    if kind.is_edit and reference is None:
        reference = fake_ref("parent")
    return Candidate(
        round=round, slot=slot, seed=seed, prompt=prompt, kind=kind, reference=reference
    )


def make_scored(round: int, slot: int, fitness: Optional[float]) -> ScoredCandidate:
    return ScoredCandidate(
        candidate=make_candidate(round, slot),
        output=fake_ref(f"r{round}s{slot}"),
        fitness=fitness,
    )

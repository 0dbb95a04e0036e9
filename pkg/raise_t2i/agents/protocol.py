"""
Agent Protocol

Renders the four agent requests from run context, sends them to the chat
backend as OpenAI-shaped chat-completions payloads, and parses the replies
into validated domain outputs.

Rendering is a pure function of its inputs. Each user part is either a
``name: value`` text line (lists and objects as compact JSON) or one image.

A schema violation is answered with a re-ask that appends a corrective text
part, up to ``schema_retries`` times; a rewriter that returns the current
prompt unchanged gets a single reminder. All attempts of one logical call
form one AgentCallRecord and count as one agent call.

Usage:
    client = AgentClient(chat_backend, image_store, model="...", schema_retries=2)
    analysis = client.analyze(user_prompt, None, None, round=1)

Author: Vladimir K.S.
"""

import base64
import json
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Annotated, Any, Literal, Optional, TypeVar, Union

from pydantic import Field, NonNegativeFloat, PositiveInt, ValidationError, model_validator

from ..backends.base import ChatBackend
from ..checks import align_triplets, reconcile_verifier
from ..core.images import ImageStore
from ..core.models import (
    AnalyzerOutput,
    BinaryQuestion,
    EditRewriteOutput,
    FrozenModel,
    GenRewriteOutput,
    GroundingEvidence,
    ImageRef,
    VerifierOutput,
)
from ..errors import AgentProtocolError, SchemaViolation, TransportError
from ..grounding import serialize_evidence
from .schemas import (
    SYSTEM_PROMPTS,
    AgentRole,
    AnalyzerReply,
    EditRewriterReply,
    GenRewriterReply,
    VerifierReply,
    parse_reply,
    response_format,
)

logger = logging.getLogger(__name__)

PROMPT_UNCHANGED = "adjusted_prompt equals the current prompt"

T = TypeVar("T")


# ====================
# Requests
# ====================


class TextPart(FrozenModel):
    kind: Literal["text"] = "text"
    text: str


class ImagePart(FrozenModel):
    kind: Literal["image"] = "image"
    image: ImageRef


Part = Annotated[Union[TextPart, ImagePart], Field(discriminator="kind")]


class ChatRequest(FrozenModel):
    system_text: str
    user_parts: tuple[Part, ...]
    response_schema_id: AgentRole

    @model_validator(mode="after")
    def _shipped_system_prompt(self) -> "ChatRequest":
        if self.system_text != SYSTEM_PROMPTS[self.response_schema_id]:
            raise ValueError(f"system_text is not the shipped {self.response_schema_id.value} prompt")
        return self

    def with_part(self, part: Union[TextPart, ImagePart]) -> "ChatRequest":
        return self.model_copy(update={"user_parts": self.user_parts + (part,)})


def text_part(name: str, value: Any) -> TextPart:
    rendered = value if isinstance(value, str) else json.dumps(value, ensure_ascii=False)
    return TextPart(text=f"{name}: {rendered}")


def verifier_feedback(output: VerifierOutput) -> dict[str, Any]:
    """A stored verifier output in its wire shape, as the analyzer reads it back."""
    return {
        "verifier_reasoning": output.reasoning,
        "current_image_caption": output.image_caption,
        "questions_answers_and_explanations": [
            [t.question, t.answer.value, t.explanation] for t in output.triplets
        ],
        "verifier_summary": output.summary,
        "all_satisfied": output.all_satisfied,
    }


@dataclass(frozen=True)
class BestContext:
    """Prompt, image and verifier feedback of the global best."""

    prompt: str
    image: ImageRef
    feedback: Optional[VerifierOutput]


@dataclass(frozen=True)
class RoundBestExtras:
    """Prompt and feedback of the previous round-best when it is not the global best."""

    prompt: str
    feedback: Optional[VerifierOutput]


def _request(role: AgentRole, parts: list[Union[TextPart, ImagePart]]) -> ChatRequest:
    return ChatRequest(
        system_text=SYSTEM_PROMPTS[role], user_parts=tuple(parts), response_schema_id=role
    )


def render_analyzer_request(
    user_prompt: str,
    global_best: Optional[BestContext],
    round_best_extras: Optional[RoundBestExtras],
    round: int,
) -> ChatRequest:
    parts: list[Union[TextPart, ImagePart]] = [
        text_part("original_prompt", user_prompt),
        text_part("round_index", str(round)),
    ]
    if global_best is None:
        parts.append(text_part("current_prompt", user_prompt))
    else:
        parts.append(text_part("current_prompt", global_best.prompt))
        parts.append(TextPart(text="current_image:"))
        parts.append(ImagePart(image=global_best.image))
        if global_best.feedback is not None:
            parts.append(
                text_part("current_verifier_output", verifier_feedback(global_best.feedback))
            )
    if round_best_extras is not None:
        parts.append(text_part("reference_prompt", round_best_extras.prompt))
        if round_best_extras.feedback is not None:
            parts.append(
                text_part(
                    "reference_verifier_output", verifier_feedback(round_best_extras.feedback)
                )
            )
    return _request(AgentRole.ANALYZER, parts)


def _rewriter_parts(
    user_prompt: str,
    current_prompt: str,
    best_image: Optional[ImageRef],
    satisfied: Sequence[str],
    unsatisfied: Sequence[str],
    analyzer_reasoning: str,
) -> list[Union[TextPart, ImagePart]]:
    parts: list[Union[TextPart, ImagePart]] = [
        text_part("original_prompt", user_prompt),
        text_part(
            "analyzer_output",
            {
                "analyzer_reasoning": analyzer_reasoning,
                "current_prompt": current_prompt,
                "satisfied_requirements": list(satisfied),
                "unsatisfied_requirements": list(unsatisfied),
            },
        ),
    ]
    if best_image is not None:
        parts.append(TextPart(text="current_image:"))
        parts.append(ImagePart(image=best_image))
    return parts


def render_gen_rewriter_request(
    user_prompt: str,
    current_prompt: str,
    best_image: Optional[ImageRef],
    satisfied: Sequence[str],
    unsatisfied: Sequence[str],
    analyzer_reasoning: str = "",
) -> ChatRequest:
    parts = _rewriter_parts(
        user_prompt, current_prompt, best_image, satisfied, unsatisfied, analyzer_reasoning
    )
    return _request(AgentRole.GEN_REWRITER, parts)


def render_edit_rewriter_request(
    user_prompt: str,
    current_prompt: str,
    best_image: ImageRef,
    satisfied: Sequence[str],
    unsatisfied: Sequence[str],
    analyzer_reasoning: str = "",
) -> ChatRequest:
    parts = _rewriter_parts(
        user_prompt, current_prompt, best_image, satisfied, unsatisfied, analyzer_reasoning
    )
    return _request(AgentRole.EDIT_REWRITER, parts)


def render_verifier_request(
    image: ImageRef,
    evidence: Optional[GroundingEvidence],
    questions: Sequence[BinaryQuestion],
    requirements: Sequence[str] = (),
) -> ChatRequest:
    parts: list[Union[TextPart, ImagePart]] = [
        TextPart(text="current_image:"),
        ImagePart(image=image),
        text_part("requirements_analysis", list(requirements)),
        text_part("binary_questions", [q.text for q in questions]),
    ]
    if evidence is not None:
        parts.append(TextPart(text=serialize_evidence(evidence)))
    return _request(AgentRole.VERIFIER, parts)


def build_payload(request: ChatRequest, store: ImageStore, model: str) -> dict[str, Any]:
    """OpenAI chat-completions payload; one base64 data URL per image part."""
    content: list[dict[str, Any]] = []
    for part in request.user_parts:
        if isinstance(part, TextPart):
            content.append({"type": "text", "text": part.text})
        else:
            encoded = base64.b64encode(store.get(part.image)).decode("ascii")
            url = f"data:{part.image.media_type};base64,{encoded}"
            content.append({"type": "image_url", "image_url": {"url": url}})
    return {
        "model": model,
        "messages": [
            {"role": "system", "content": [{"type": "text", "text": request.system_text}]},
            {"role": "user", "content": content},
        ],
        "response_format": response_format(request.response_schema_id),
        "temperature": 0,
    }


# ====================
# Calls
# ====================


class AgentCallRecord(FrozenModel):
    """One logical agent call; ``attempts`` includes the re-asks."""

    role: AgentRole
    attempts: PositiveInt
    outcome: Literal["ok", "error"]
    error: Optional[str] = None
    violations: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    latency_s: NonNegativeFloat = 0.0


@dataclass
class _Parsed:
    value: Any
    notes: list[str]


class AgentClient:
    """
    Issues agent calls against one chat backend.

    Attributes:
        schema_retries: Re-asks allowed after a schema violation
        observer: Called with the AgentCallRecord of every call, success or not
    """

    def __init__(
        self,
        chat: ChatBackend,
        store: ImageStore,
        *,
        model: str,
        schema_retries: int = 2,
        observer: Optional[Callable[[AgentCallRecord], None]] = None,
    ) -> None:
        self.chat = chat
        self.store = store
        self.model = model
        self.schema_retries = schema_retries
        self.observer = observer

    def _emit(self, record: AgentCallRecord) -> None:
        if self.observer is not None:
            self.observer(record)

    def _call(self, request: ChatRequest, parse: Callable[[str], _Parsed]) -> Any:
        role = request.response_schema_id
        violations: list[str] = []
        attempts = 0
        reasks = 0
        reminded = False
        started = time.perf_counter()
        while True:
            attempts += 1
            try:
                raw = self.chat.complete(build_payload(request, self.store, self.model))
            except TransportError as e:
                self._emit(
                    AgentCallRecord(
                        role=role,
                        attempts=attempts,
                        outcome="error",
                        error=str(e),
                        violations=tuple(violations),
                        latency_s=time.perf_counter() - started,
                    )
                )
                raise
            try:
                parsed = parse(raw)
            except (SchemaViolation, ValidationError) as e:
                violation = (
                    e if isinstance(e, SchemaViolation) else SchemaViolation("invalid output", str(e))
                )
                violations.append(str(violation))
                # One reminder for an unchanged prompt, counted apart from schema re-asks
                if violation.invariant == PROMPT_UNCHANGED:
                    exhausted = reminded
                    reminded = True
                else:
                    reasks += 1
                    exhausted = reasks > self.schema_retries
                logger.warning(
                    "%s reply rejected (attempt %d): %s", role.value, attempts, violation
                )
                if exhausted:
                    self._emit(
                        AgentCallRecord(
                            role=role,
                            attempts=attempts,
                            outcome="error",
                            error=str(violation),
                            violations=tuple(violations),
                            latency_s=time.perf_counter() - started,
                        )
                    )
                    raise AgentProtocolError(role.value, attempts, str(violation)) from e
                request = request.with_part(self._correction(role, violation))
                continue
            self._emit(
                AgentCallRecord(
                    role=role,
                    attempts=attempts,
                    outcome="ok",
                    violations=tuple(violations),
                    notes=tuple(parsed.notes),
                    latency_s=time.perf_counter() - started,
                )
            )
            return parsed.value

    @staticmethod
    def _correction(role: AgentRole, violation: SchemaViolation) -> TextPart:
        if violation.invariant == PROMPT_UNCHANGED:
            return text_part(
                "reminder",
                "the adjusted_prompt must be significantly different from the current_prompt",
            )
        return text_part(
            "correction",
            f"your previous reply was rejected ({violation}). Return ONLY a corrected JSON "
            f"object matching the {role.value} schema.",
        )

    # ====================
    # The four agents
    # ====================

    def analyze(
        self,
        user_prompt: str,
        global_best: Optional[BestContext],
        round_best_extras: Optional[RoundBestExtras],
        round: int,
    ) -> AnalyzerOutput:
        """
        Extract the requirement checklist for ``round``.

        Raises:
            AgentProtocolError: If the reply stays invalid after all re-asks
            TransportError: If the chat backend fails
        """
        request = render_analyzer_request(user_prompt, global_best, round_best_extras, round)

        def parse(raw: str) -> _Parsed:
            return _Parsed(parse_reply(AnalyzerReply, raw).to_output(round), [])

        return self._call(request, parse)  # type: ignore[no-any-return]

    def rewrite_generation(
        self,
        user_prompt: str,
        current_prompt: str,
        best_image: Optional[ImageRef],
        satisfied: Sequence[str],
        unsatisfied: Sequence[str],
        analyzer_reasoning: str = "",
    ) -> GenRewriteOutput:
        """
        Plan a rewritten generation prompt that differs from ``current_prompt``.

        Raises:
            AgentProtocolError: If the reply stays invalid, or repeats the current prompt twice
            TransportError: If the chat backend fails
        """
        request = render_gen_rewriter_request(
            user_prompt, current_prompt, best_image, satisfied, unsatisfied, analyzer_reasoning
        )

        def parse(raw: str) -> _Parsed:
            output = parse_reply(GenRewriterReply, raw).to_output()
            if output.adjusted_prompt.strip() == current_prompt.strip():
                raise SchemaViolation(PROMPT_UNCHANGED)
            return _Parsed(output, [])

        return self._call(request, parse)  # type: ignore[no-any-return]

    def rewrite_editing(
        self,
        user_prompt: str,
        current_prompt: str,
        best_image: ImageRef,
        satisfied: Sequence[str],
        unsatisfied: Sequence[str],
        analyzer_reasoning: str = "",
    ) -> EditRewriteOutput:
        """
        Plan edit instructions for the best image; ``random_edit`` is left unset.

        Raises:
            AgentProtocolError: If the reply stays invalid after all re-asks
            TransportError: If the chat backend fails
        """
        request = render_edit_rewriter_request(
            user_prompt, current_prompt, best_image, satisfied, unsatisfied, analyzer_reasoning
        )

        def parse(raw: str) -> _Parsed:
            return _Parsed(parse_reply(EditRewriterReply, raw).to_output(), [])

        return self._call(request, parse)  # type: ignore[no-any-return]

    def verify(
        self,
        round_best_image: ImageRef,
        evidence: Optional[GroundingEvidence],
        questions: Sequence[BinaryQuestion],
        requirements: Sequence[str] = (),
    ) -> VerifierOutput:
        """
        Answer every binary question about the round-best image.

        Triplets come back aligned 1:1 with ``questions`` and ``all_satisfied``
        equals the conjunction of the answers; corrections are recorded as
        notes on the call record.

        Raises:
            AgentProtocolError: If the triplet count stays wrong after all re-asks
            TransportError: If the chat backend fails
        """
        request = render_verifier_request(round_best_image, evidence, questions, requirements)

        def parse(raw: str) -> _Parsed:
            aligned = align_triplets(parse_reply(VerifierReply, raw).to_output(), questions)
            consistent = reconcile_verifier(aligned.value)
            return _Parsed(consistent.value, aligned.warnings + consistent.warnings)

        return self._call(request, parse)  # type: ignore[no-any-return]

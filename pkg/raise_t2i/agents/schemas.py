"""
Agent Reply Schemas

Wire-level pydantic models for the four agent replies, with field names
exactly as the system prompts declare them, plus their conversion into
domain outputs. Every failure to parse or convert is raised as a
SchemaViolation so the caller can re-ask with a corrective note.

The JSON schemas of these models are published in docs/agent-schemas.md.

Author: Vladimir K.S.
"""

import json
import re
from enum import Enum
from typing import Annotated, Any, Literal, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..checks import is_major, validate_checklist
from ..core.models import (
    AnalyzerDecision,
    AnalyzerOutput,
    BinaryQuestion,
    EditRewriteOutput,
    GenRewriteOutput,
    Requirement,
    RequirementChecklist,
    VerificationAnswer,
    VerificationTriplet,
    VerifierOutput,
)
from ..errors import SchemaViolation
from .prompts import (
    ANALYZER_SYSTEM_PROMPT,
    EDIT_REWRITER_SYSTEM_PROMPT,
    GEN_REWRITER_SYSTEM_PROMPT,
    VERIFIER_SYSTEM_PROMPT,
)

NonEmpty = Annotated[str, Field(min_length=1)]

REPLY_NOT_JSON = "reply is not a JSON document"
REPLY_SCHEMA = "reply does not match the agent schema"
UNKNOWN_REQUIREMENT = "classified requirement not in requirements_analysis"
DUPLICATE_REQUIREMENT_TEXT = "duplicate requirement in requirements_analysis"

_FENCED = re.compile(r"```(?:json)?\s*([\s\S]*?)```", re.IGNORECASE)


class AgentRole(str, Enum):
    ANALYZER = "analyzer"
    GEN_REWRITER = "gen_rewriter"
    EDIT_REWRITER = "edit_rewriter"
    VERIFIER = "verifier"


SYSTEM_PROMPTS: dict[AgentRole, str] = {
    AgentRole.ANALYZER: ANALYZER_SYSTEM_PROMPT,
    AgentRole.GEN_REWRITER: GEN_REWRITER_SYSTEM_PROMPT,
    AgentRole.EDIT_REWRITER: EDIT_REWRITER_SYSTEM_PROMPT,
    AgentRole.VERIFIER: VERIFIER_SYSTEM_PROMPT,
}


class WireModel(BaseModel):
    model_config = ConfigDict(extra="ignore")


class AnalyzerReply(WireModel):
    analyzer_reasoning: str
    original_prompt: str
    current_prompt: str
    requirements_analysis: list[NonEmpty] = Field(min_length=1)
    satisfied_requirements: list[str]
    unsatisfied_requirements: list[str]
    binary_questions: list[NonEmpty]
    model_choice: Literal["continue", "ending"]

    def to_output(self, round: int) -> AnalyzerOutput:
        """
        Map the text lists onto an indexed checklist and validate it for ``round``.

        Raises:
            SchemaViolation: On unknown or duplicated requirement texts, or any checklist invariant
        """
        texts = self.requirements_analysis
        if len(set(texts)) != len(texts):
            raise SchemaViolation(DUPLICATE_REQUIREMENT_TEXT)
        position = {text: i for i, text in enumerate(texts)}
        for text in self.satisfied_requirements + self.unsatisfied_requirements:
            if text not in position:
                raise SchemaViolation(UNKNOWN_REQUIREMENT, repr(text))
        checklist = RequirementChecklist(
            requirements=tuple(
                Requirement(index=i, text=text, major=is_major(text)) for i, text in enumerate(texts)
            ),
            questions=tuple(
                BinaryQuestion(index=i, text=text) for i, text in enumerate(self.binary_questions)
            ),
            satisfied=frozenset(position[t] for t in self.satisfied_requirements),
            unsatisfied=frozenset(position[t] for t in self.unsatisfied_requirements),
        )
        validate_checklist(checklist, round)
        return AnalyzerOutput(
            reasoning=self.analyzer_reasoning,
            original_prompt_echo=self.original_prompt,
            current_prompt_echo=self.current_prompt,
            checklist=checklist,
            # The wire token is "ending"; the domain enum is END.
            decision=AnalyzerDecision.END
            if self.model_choice == "ending"
            else AnalyzerDecision.CONTINUE,
        )


class GenRewriterReply(WireModel):
    rewriter_reasoning: str
    original_prompt: str
    current_prompt: str
    planned_adjustments: list[NonEmpty] = Field(min_length=1)
    adjusted_prompt: NonEmpty

    def to_output(self) -> GenRewriteOutput:
        return GenRewriteOutput(
            reasoning=self.rewriter_reasoning,
            planned_adjustments=tuple(self.planned_adjustments),
            adjusted_prompt=self.adjusted_prompt,
        )


class EditRewriterReply(WireModel):
    rewriter_reasoning: str
    original_prompt: str
    current_prompt: str
    planned_edits: list[NonEmpty] = Field(min_length=1)
    single_editing_prompt: NonEmpty
    comprehensive_editing_prompt: NonEmpty

    def to_output(self) -> EditRewriteOutput:
        return EditRewriteOutput(
            reasoning=self.rewriter_reasoning,
            planned_edits=tuple(self.planned_edits),
            top_edit=self.single_editing_prompt,
            comprehensive_edit=self.comprehensive_editing_prompt,
        )


class VerifierReply(WireModel):
    verifier_reasoning: str
    current_image_caption: str
    questions_answers_and_explanations: list[tuple[str, Literal["Yes", "No"], str]]
    verifier_summary: str
    all_satisfied: bool

    def to_output(self) -> VerifierOutput:
        return VerifierOutput(
            reasoning=self.verifier_reasoning,
            image_caption=self.current_image_caption,
            triplets=tuple(
                VerificationTriplet(
                    question=question, answer=VerificationAnswer(answer), explanation=explanation
                )
                for question, answer, explanation in self.questions_answers_and_explanations
            ),
            summary=self.verifier_summary,
            all_satisfied=self.all_satisfied,
        )


REPLY_MODELS: dict[AgentRole, type[WireModel]] = {
    AgentRole.ANALYZER: AnalyzerReply,
    AgentRole.GEN_REWRITER: GenRewriterReply,
    AgentRole.EDIT_REWRITER: EditRewriterReply,
    AgentRole.VERIFIER: VerifierReply,
}

R = TypeVar("R", bound=WireModel)


def parse_reply(model: type[R], raw: str) -> R:
    """
    Parse a raw chat reply into ``model``; tolerates a fenced ```json block.

    Raises:
        SchemaViolation: If the reply is not JSON or does not match the schema
    """
    text = raw.strip()
    fenced = _FENCED.search(text)
    if fenced:
        text = fenced.group(1)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(REPLY_NOT_JSON, str(e)) from e
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise SchemaViolation(REPLY_SCHEMA, f"{where}: {first['msg']}") from e


# Keywords outside the strict structured-output subset; pydantic still enforces them on parse.
_UNSUPPORTED_KEYWORDS = frozenset(
    {"minLength", "maxLength", "pattern", "format", "minItems", "maxItems", "default"}
)
# Keywords whose value maps names to subschemas
_NAMED_SUBSCHEMAS = ("properties", "$defs")


def strict_schema(schema: Any) -> Any:
    """
    Rewrite a pydantic JSON schema into the strict structured-output subset.

    Every object closes with ``additionalProperties: false`` and requires all
    of its properties. Fixed-length tuples become plain string arrays and
    length or format constraints are dropped. The input is not modified.
    """
    if isinstance(schema, list):
        return [strict_schema(item) for item in schema]
    if not isinstance(schema, dict):
        return schema
    out: dict[str, Any] = {}
    for key, value in schema.items():
        if key in _UNSUPPORTED_KEYWORDS or key == "prefixItems":
            continue
        if key in _NAMED_SUBSCHEMAS:
            out[key] = {name: strict_schema(sub) for name, sub in value.items()}
        else:
            out[key] = strict_schema(value)
    if "prefixItems" in schema:
        out["items"] = {"type": "string"}
    if "properties" in out:
        out["required"] = list(out["properties"])
        out["additionalProperties"] = False
    return out


def response_format(role: AgentRole) -> dict:
    """OpenAI ``response_format`` directive for ``role``'s reply schema."""
    return {
        "type": "json_schema",
        "json_schema": {
            "name": role.value,
            "schema": strict_schema(REPLY_MODELS[role].model_json_schema()),
            "strict": True,
        },
    }

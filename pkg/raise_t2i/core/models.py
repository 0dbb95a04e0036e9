"""
Domain Types

Immutable value types shared by every module: images, requirements and their
binary questions, agent outputs, candidates, grounding evidence and verifier
results. The canonical serialized form of each type is
``model.model_dump(mode="json")``, with field names exactly as declared here.

Field-level invariants (non-empty text, bounded depth, bbox ordering) are
enforced on construction. Cross-field checklist invariants are left to
``raise_t2i.checks`` so that an invalid agent reply can be rejected with a
named violation instead of a generic parse error.

Author: Vladimir K.S.
"""

import math
from enum import Enum
from typing import Annotated, Optional

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    field_serializer,
    field_validator,
    model_validator,
)


class FrozenModel(BaseModel):
    """Base for immutable domain values."""

    model_config = ConfigDict(frozen=True, extra="forbid")


def _single_line(value: str) -> str:
    if "\n" in value or "\r" in value:
        raise ValueError("must be a single line")
    if value != value.strip():
        raise ValueError("must not carry leading or trailing whitespace")
    return value


SingleLine = Annotated[str, Field(min_length=1), AfterValidator(_single_line)]


# ====================
# Images
# ====================


class ImageRef(FrozenModel):
    """Opaque handle to stored image bytes; the engine never decodes pixels."""

    content_id: str = Field(min_length=1)
    width: PositiveInt
    height: PositiveInt
    media_type: str = "image/png"


# ====================
# Requirements
# ====================


class Requirement(FrozenModel):
    index: NonNegativeInt
    text: str = Field(min_length=1)
    major: bool


class BinaryQuestion(FrozenModel):
    index: NonNegativeInt
    text: str = Field(min_length=1)


class RequirementChecklist(FrozenModel):
    """
    Ordered requirements, their one-to-one binary questions, and the
    satisfied/unsatisfied partition of requirement indices.

    Construction does not check the partition or the bijection; call
    ``raise_t2i.checks.validate_checklist`` before using a checklist.
    """

    requirements: tuple[Requirement, ...]
    questions: tuple[BinaryQuestion, ...]
    satisfied: frozenset[int] = frozenset()
    unsatisfied: frozenset[int] = frozenset()

    @field_serializer("satisfied", "unsatisfied")
    def _sorted_indices(self, value: frozenset[int]) -> list[int]:
        return sorted(value)

    @property
    def indices(self) -> list[int]:
        return [r.index for r in self.requirements]

    def texts(self, indices: frozenset[int]) -> list[str]:
        """Requirement texts for ``indices``, in checklist order."""
        return [r.text for r in self.requirements if r.index in indices]

    @property
    def satisfied_texts(self) -> list[str]:
        return self.texts(self.satisfied)

    @property
    def unsatisfied_texts(self) -> list[str]:
        return self.texts(self.unsatisfied)

    @property
    def major_unsatisfied(self) -> list[Requirement]:
        return [r for r in self.requirements if r.major and r.index in self.unsatisfied]


# ====================
# Agent outputs
# ====================


class AnalyzerDecision(str, Enum):
    CONTINUE = "continue"
    END = "end"


class AnalyzerOutput(FrozenModel):
    reasoning: str
    original_prompt_echo: str
    current_prompt_echo: str
    checklist: RequirementChecklist
    decision: AnalyzerDecision


class GenRewriteOutput(FrozenModel):
    reasoning: str
    planned_adjustments: tuple[str, ...] = Field(min_length=1)
    adjusted_prompt: str = Field(min_length=1)


class EditRewriteOutput(FrozenModel):
    """Editing-rewriter reply; ``random_edit`` is filled in by the refinement module."""

    reasoning: str
    planned_edits: tuple[str, ...] = Field(min_length=1)
    top_edit: str = Field(min_length=1)
    comprehensive_edit: str = Field(min_length=1)
    random_edit: Optional[str] = None

    @model_validator(mode="after")
    def _random_edit_is_planned(self) -> "EditRewriteOutput":
        if self.random_edit is not None and self.random_edit not in self.planned_edits:
            raise ValueError("random_edit must be one of planned_edits")
        return self


# ====================
# Candidates
# ====================


class CandidateKind(str, Enum):
    RESAMPLE = "resample"
    REWRITE = "rewrite"
    EDIT_TOP = "edit_top"
    EDIT_RANDOM = "edit_random"
    EDIT_COMP = "edit_comp"

    @property
    def is_edit(self) -> bool:
        return self in EDIT_KINDS


EDIT_KINDS = frozenset({CandidateKind.EDIT_TOP, CandidateKind.EDIT_RANDOM, CandidateKind.EDIT_COMP})

# Slot order within a round; fixes tie-breaking.
KIND_ORDER: tuple[CandidateKind, ...] = (
    CandidateKind.RESAMPLE,
    CandidateKind.REWRITE,
    CandidateKind.EDIT_TOP,
    CandidateKind.EDIT_RANDOM,
    CandidateKind.EDIT_COMP,
)


class CandidateKey(FrozenModel):
    """(round, slot) address of a candidate within a run."""

    round: PositiveInt
    slot: NonNegativeInt

    def __str__(self) -> str:
        return f"r{self.round}_s{self.slot}"


class Candidate(FrozenModel):
    round: PositiveInt
    slot: NonNegativeInt
    seed: NonNegativeInt
    prompt: str = Field(min_length=1)
    reference: Optional[ImageRef] = None
    kind: CandidateKind

    @model_validator(mode="after")
    def _reference_iff_edit(self) -> "Candidate":
        if (self.reference is not None) != self.kind.is_edit:
            raise ValueError("reference image must be present exactly on edit candidates")
        return self

    @property
    def key(self) -> CandidateKey:
        return CandidateKey(round=self.round, slot=self.slot)


class ScoredCandidate(FrozenModel):
    """
    An executed candidate with its fitness.

    ``fitness`` is None when the scorer failed for this candidate; such a
    candidate is never selected as a best.
    """

    candidate: Candidate
    output: ImageRef
    fitness: Optional[float]

    @field_validator("fitness")
    @classmethod
    def _finite(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not math.isfinite(value):
            raise ValueError("fitness must be finite")
        return value

    @property
    def key(self) -> CandidateKey:
        return self.candidate.key

    @property
    def selectable(self) -> bool:
        return self.fitness is not None


# ====================
# Grounding evidence
# ====================

# Bounds the verifier context; larger detections keep the biggest boxes
MAX_REGIONS = 32


class Region(FrozenModel):
    label: SingleLine
    bbox: tuple[NonNegativeInt, NonNegativeInt, NonNegativeInt, NonNegativeInt]
    mean_depth: int = Field(ge=0, le=255)

    @field_validator("bbox")
    @classmethod
    def _ordered(cls, value: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
        x_min, y_min, x_max, y_max = value
        if x_min > x_max or y_min > y_max:
            raise ValueError("bbox must satisfy x_min <= x_max and y_min <= y_max")
        return value

    @property
    def area(self) -> int:
        x_min, y_min, x_max, y_max = self.bbox
        return (x_max - x_min) * (y_max - y_min)

    def fits(self, width: int, height: int) -> bool:
        return self.bbox[2] <= width and self.bbox[3] <= height


class GroundingEvidence(FrozenModel):
    """Caption, at most MAX_REGIONS labeled regions, and the image size they refer to."""

    caption: SingleLine
    regions: tuple[Region, ...] = Field(default=(), max_length=MAX_REGIONS)
    image_width: PositiveInt
    image_height: PositiveInt

    @model_validator(mode="after")
    def _regions_fit(self) -> "GroundingEvidence":
        for region in self.regions:
            if not region.fits(self.image_width, self.image_height):
                raise ValueError(f"region {region.label!r} exceeds the image size")
        return self


# ====================
# Verification
# ====================


class VerificationAnswer(str, Enum):
    YES = "Yes"
    NO = "No"


class VerificationTriplet(FrozenModel):
    question: str
    answer: VerificationAnswer
    explanation: str


class VerifierOutput(FrozenModel):
    reasoning: str
    image_caption: str
    triplets: tuple[VerificationTriplet, ...]
    summary: str
    all_satisfied: bool

    @property
    def answers_conjunction(self) -> bool:
        return all(t.answer is VerificationAnswer.YES for t in self.triplets)

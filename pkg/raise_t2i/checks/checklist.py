"""
Checklist Invariants

Checks run in a fixed order; the first violated invariant is raised as a
SchemaViolation whose ``invariant`` names it, so the agent protocol can quote
it back to the model in a corrective re-ask.

Author: Vladimir K.S.
Coverage Requirement: 100%
"""

from collections import Counter

from ..core.models import RequirementChecklist
from ..errors import SchemaViolation

# Invariant names, in check order
DUPLICATE_REQUIREMENT = "duplicate requirement index"
COUNT_MISMATCH = "question/requirement count mismatch"
UNPAIRED_QUESTION = "question index without matching requirement"
PARTITION_OVERLAP = "satisfied/unsatisfied overlap"
PARTITION_UNKNOWN = "partition names an unknown requirement"
PARTITION_INCOMPLETE = "satisfied/unsatisfied do not cover all requirements"
FIRST_ROUND_SATISFIED = "round 1 checklist must treat all requirements as unsatisfied"


def validate_checklist(checklist: RequirementChecklist, round: int) -> RequirementChecklist:
    """
    Validate a checklist for use in ``round``.

    Args:
        checklist: Checklist as parsed from the analyzer
        round: 1-based round index; round 1 additionally requires satisfied == {}

    Returns:
        The same checklist, unchanged

    Raises:
        SchemaViolation: Naming the first violated invariant

    Example:
        >>> validate_checklist(checklist, round=1)  # raises if anything is satisfied
    """
    indices = checklist.indices
    duplicates = sorted(i for i, n in Counter(indices).items() if n > 1)
    if duplicates:
        raise SchemaViolation(DUPLICATE_REQUIREMENT, f"indices {duplicates}")

    if len(checklist.questions) != len(checklist.requirements):
        raise SchemaViolation(
            COUNT_MISMATCH,
            f"{len(checklist.requirements)} requirements, {len(checklist.questions)} questions",
        )

    known = set(indices)
    question_indices = [q.index for q in checklist.questions]
    if set(question_indices) != known or len(set(question_indices)) != len(question_indices):
        unpaired = sorted(set(question_indices) ^ known)
        raise SchemaViolation(UNPAIRED_QUESTION, f"indices {unpaired}")

    overlap = checklist.satisfied & checklist.unsatisfied
    if overlap:
        raise SchemaViolation(PARTITION_OVERLAP, f"indices {sorted(overlap)}")

    unknown = (checklist.satisfied | checklist.unsatisfied) - known
    if unknown:
        raise SchemaViolation(PARTITION_UNKNOWN, f"indices {sorted(unknown)}")

    missing = known - checklist.satisfied - checklist.unsatisfied
    if missing:
        raise SchemaViolation(PARTITION_INCOMPLETE, f"indices {sorted(missing)}")

    if round == 1 and checklist.satisfied:
        raise SchemaViolation(FIRST_ROUND_SATISFIED, f"satisfied {sorted(checklist.satisfied)}")

    return checklist

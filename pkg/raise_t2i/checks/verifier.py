"""
Verifier Output Checks

Two checks on a parsed verifier reply:

- ``align_triplets``: one triplet per binary question, in question order.
  A count mismatch is a hard violation (the reply is re-asked); a matching
  count with drifted question wording is realigned to the canonical text.
- ``enforce_verifier_consistency``: the stored ``all_satisfied`` flag is the
  conjunction of the answers, whatever the backend claimed.

Author: Vladimir K.S.
Coverage Requirement: 100%
"""

import logging
from collections.abc import Sequence

from ..core.models import BinaryQuestion, VerifierOutput
from ..errors import SchemaViolation
from .result import CheckResult

logger = logging.getLogger(__name__)

TRIPLET_COUNT_MISMATCH = "triplet/question count mismatch"


def align_triplets(
    raw: VerifierOutput, questions: Sequence[BinaryQuestion]
) -> CheckResult[VerifierOutput]:
    """
    Align triplets 1:1 with ``questions``.

    Raises:
        SchemaViolation: If the number of triplets differs from the number of questions
    """
    if len(raw.triplets) != len(questions):
        raise SchemaViolation(
            TRIPLET_COUNT_MISMATCH,
            f"{len(questions)} questions, {len(raw.triplets)} triplets",
        )
    warnings: list[str] = []
    triplets = []
    for position, (triplet, question) in enumerate(zip(raw.triplets, questions)):
        if triplet.question != question.text:
            warnings.append(
                f"triplet {position} question realigned from {triplet.question!r} "
                f"to {question.text!r}"
            )
            triplet = triplet.model_copy(update={"question": question.text})
        triplets.append(triplet)
    if not warnings:
        return CheckResult(raw)
    return CheckResult(raw.model_copy(update={"triplets": tuple(triplets)}), warnings)


def reconcile_verifier(raw: VerifierOutput) -> CheckResult[VerifierOutput]:
    """Force ``all_satisfied`` to the conjunction of answers, noting any correction."""
    conjunction = raw.answers_conjunction
    if raw.all_satisfied == conjunction:
        return CheckResult(raw)
    note = (
        f"verifier all_satisfied corrected from {raw.all_satisfied} to {conjunction} "
        "to match its answers"
    )
    logger.warning(note)
    return CheckResult(raw.model_copy(update={"all_satisfied": conjunction}), [note])


def enforce_verifier_consistency(raw: VerifierOutput) -> VerifierOutput:
    """
    Return ``raw`` with ``all_satisfied`` equal to the conjunction of answers.

    An empty triplet list is vacuously all-satisfied.

    Example:
        >>> enforce_verifier_consistency(output_with_yes_no_and_flag_true).all_satisfied
        False
    """
    return reconcile_verifier(raw).value

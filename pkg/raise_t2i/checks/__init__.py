"""
Invariant checks for agent outputs.

Layers applied to every structured reply before the engine uses it:
- Field invariants: enforced by the pydantic models on construction
- Checklist invariants: bijection, partition, first-round rule (checklist.py)
- Verifier alignment: one triplet per question, canonical wording (verifier.py)
- Verifier conjunction: all_satisfied equals the AND of answers (verifier.py)
- Requirement importance: keyword major/minor classification (major.py)

All check code in this package requires 100% test coverage.
"""

from .checklist import validate_checklist
from .major import MAJOR_KEYWORDS, MINOR_KEYWORDS, is_major
from .result import CheckResult
from .verifier import (
    TRIPLET_COUNT_MISMATCH,
    align_triplets,
    enforce_verifier_consistency,
    reconcile_verifier,
)

__all__ = [
    # Checklist
    "validate_checklist",
    # Major/minor
    "MAJOR_KEYWORDS",
    "MINOR_KEYWORDS",
    "is_major",
    # Verifier
    "TRIPLET_COUNT_MISMATCH",
    "align_triplets",
    "enforce_verifier_consistency",
    "reconcile_verifier",
    # Results
    "CheckResult",
]

"""
Core model: domain types, run state and the image store.

Author: Vladimir K.S.
"""

from .images import ImageStore, ImageStoreError, MemoryImageStore, content_id, probe_image
from .models import (
    EDIT_KINDS,
    KIND_ORDER,
    AnalyzerDecision,
    AnalyzerOutput,
    BinaryQuestion,
    Candidate,
    CandidateKey,
    CandidateKind,
    EditRewriteOutput,
    GenRewriteOutput,
    GroundingEvidence,
    ImageRef,
    Region,
    Requirement,
    RequirementChecklist,
    ScoredCandidate,
    VerificationAnswer,
    VerificationTriplet,
    VerifierOutput,
)
from .state import RoundRecord, RunState, TerminationKind, TerminationReason

__all__ = [
    "EDIT_KINDS",
    "KIND_ORDER",
    "AnalyzerDecision",
    "AnalyzerOutput",
    "BinaryQuestion",
    "Candidate",
    "CandidateKey",
    "CandidateKind",
    "EditRewriteOutput",
    "GenRewriteOutput",
    "GroundingEvidence",
    "ImageRef",
    "ImageStore",
    "ImageStoreError",
    "MemoryImageStore",
    "Region",
    "Requirement",
    "RequirementChecklist",
    "RoundRecord",
    "RunState",
    "ScoredCandidate",
    "TerminationKind",
    "TerminationReason",
    "VerificationAnswer",
    "VerificationTriplet",
    "VerifierOutput",
    "content_id",
    "probe_image",
]

"""
Exception hierarchy for RAISE-T2I.

Every error the engine raises on purpose derives from RaiseError so the CLI
can turn it into a diagnostic instead of a traceback.

Author: Vladimir K.S.
"""

from typing import Any, Optional


class RaiseError(Exception):
    """Base class for all RAISE-T2I errors."""

    pass


class ConfigError(RaiseError):
    """Raised when a configuration document fails validation."""

    pass


class SchemaViolation(RaiseError):
    """
    Raised when a structured value breaks one of its invariants.

    Attributes:
        invariant: Short name of the first violated invariant
    """

    def __init__(self, invariant: str, detail: Optional[str] = None) -> None:
        self.invariant = invariant
        self.detail = detail
        message = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(message)


class AgentProtocolError(RaiseError):
    """Raised when an agent reply stays invalid after all re-asks."""

    def __init__(self, role: str, attempts: int, last_violation: str) -> None:
        self.role = role
        self.attempts = attempts
        self.last_violation = last_violation
        super().__init__(
            f"{role} reply still invalid after {attempts} attempt(s): {last_violation}"
        )


class TransportError(RaiseError):
    """Raised when a backend cannot be reached or answers with an HTTP error."""

    pass


class RefinementError(RaiseError):
    """Raised when a candidate population cannot be built."""

    pass


class ExecutionError(RaiseError):
    """Raised when every candidate of a round failed to execute."""

    def __init__(self, message: str, results: Optional[list[Any]] = None) -> None:
        self.results = results or []
        super().__init__(message)


class TraceFormatError(RaiseError):
    """Raised when a trace file is empty, corrupted or not a trace at all."""

    pass


class ReplayDivergence(RaiseError):
    """Raised when a re-executed run does not reproduce its recorded trace."""

    def __init__(self, sequence: int, kind: str, detail: str) -> None:
        self.sequence = sequence
        self.kind = kind
        self.detail = detail
        super().__init__(f"divergence at event #{sequence} ({kind}): {detail}")

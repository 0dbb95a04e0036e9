"""
Check result container shared by the correcting checks.

Author: Vladimir K.S.
"""

from dataclasses import dataclass, field
from typing import Generic, TypeVar

T = TypeVar("T")


@dataclass
class CheckResult(Generic[T]):
    """A (possibly corrected) value plus the degradation notes produced on the way."""

    value: T
    warnings: list[str] = field(default_factory=list)

    @property
    def degraded(self) -> bool:
        return bool(self.warnings)

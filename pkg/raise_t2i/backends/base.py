"""
Backend Interfaces

Five backends sit behind the engine: generator, editor, fitness scorer,
grounding tool and chat agent. Real (HTTP) and simulated implementations
satisfy the same protocols; every failure surfaces as TransportError.

Author: Vladimir K.S.
"""

from dataclasses import dataclass
from typing import Any, Optional, Protocol


class GeneratorBackend(Protocol):
    def generate(self, prompt: str, seed: int, *, steps: int, width: int, height: int) -> bytes:
        """Return PNG bytes for (prompt, seed)."""
        ...


class EditorBackend(Protocol):
    def edit(self, instruction: str, seed: int, reference: bytes, *, steps: int) -> bytes:
        """Return PNG bytes of ``reference`` edited by ``instruction``."""
        ...


class ScorerBackend(Protocol):
    def score(self, image: bytes, prompt: str) -> float:
        """Return the alignment fitness of ``image`` against ``prompt``; higher is better."""
        ...


class GroundingBackend(Protocol):
    def ground(self, image: bytes) -> dict[str, Any]:
        """Return raw evidence ``{caption, width, height, regions: [{label, bbox, mean_depth}]}``."""
        ...


class ChatBackend(Protocol):
    def complete(self, payload: dict[str, Any]) -> str:
        """Send a chat-completions payload and return the assistant message text."""
        ...


@dataclass(frozen=True)
class Backends:
    """The backend set one engine run talks to."""

    generator: GeneratorBackend
    editor: EditorBackend
    scorer: ScorerBackend
    chat: ChatBackend
    grounding: Optional[GroundingBackend] = None

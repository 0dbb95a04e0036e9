"""
Backend wiring.

``build_backends`` returns the backend set for a run according to
``config.backend_profile``: HTTP clients for ``real``, the simulated world
for ``sim``.
"""

from ..config import RunConfig
from .base import (
    Backends,
    ChatBackend,
    EditorBackend,
    GeneratorBackend,
    GroundingBackend,
    ScorerBackend,
)
from .http import HttpChat, HttpEditor, HttpGenerator, HttpGrounding, HttpScorer, make_session


def build_backends(config: RunConfig, user_prompt: str) -> Backends:
    """
    Wire the backends one run talks to.

    The simulated world needs the user prompt to tell resample candidates
    from rewrites, so backends are built per run.
    """
    if config.backend_profile == "sim":
        from ..sim.backends import sim_backends

        return sim_backends(config.world, user_prompt, k_min=config.k_min)

    settings = config.backends
    grounding = HttpGrounding(settings) if settings.grounding_url else None
    return Backends(
        generator=HttpGenerator(settings),
        editor=HttpEditor(settings),
        scorer=HttpScorer(settings),
        chat=HttpChat(settings),
        grounding=grounding,
    )


__all__ = [
    "Backends",
    "ChatBackend",
    "EditorBackend",
    "GeneratorBackend",
    "GroundingBackend",
    "ScorerBackend",
    "HttpChat",
    "HttpEditor",
    "HttpGenerator",
    "HttpGrounding",
    "HttpScorer",
    "build_backends",
    "make_session",
]

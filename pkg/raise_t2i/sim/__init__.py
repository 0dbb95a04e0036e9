"""
Simulated backends over a hidden requirement world.

Only the world primitives are re-exported here; the backend adapters and the
Monte Carlo oracle live in ``raise_t2i.sim.backends``, ``raise_t2i.sim.agents``
and ``raise_t2i.sim.oracle``.
"""

from .world import (
    REQUIREMENT_TEMPLATES,
    SimEditError,
    SimImage,
    SimPayloadError,
    WorldSpec,
    parse_targets,
    question_text,
    requirement_text,
    sim_edit,
    sim_generate,
    sim_score,
)

__all__ = [
    "REQUIREMENT_TEMPLATES",
    "SimEditError",
    "SimImage",
    "SimPayloadError",
    "WorldSpec",
    "parse_targets",
    "question_text",
    "requirement_text",
    "sim_edit",
    "sim_generate",
    "sim_score",
]

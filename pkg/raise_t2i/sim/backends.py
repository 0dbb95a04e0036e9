"""
Simulated Backends

Generator, editor, scorer and grounding tool over the hidden requirement
world, with the same call shapes as the HTTP clients. World errors surface as
TransportError, the way a failing service would.

Author: Vladimir K.S.
"""

from typing import Any

from ..backends.base import Backends
from ..errors import TransportError
from .world import (
    SimEditError,
    SimImage,
    SimPayloadError,
    WorldSpec,
    requirement_text,
    sim_edit,
    sim_generate,
    sim_score,
)


def _decode(data: bytes, service: str) -> SimImage:
    try:
        return SimImage.decode(data)
    except SimPayloadError as e:
        raise TransportError(f"sim {service}: {e}") from e


class SimGenerator:
    """Resample vs. rewrite is told apart by comparing against the run's user prompt."""

    def __init__(self, world: WorldSpec, user_prompt: str) -> None:
        self.world = world
        self.user_prompt = user_prompt

    def generate(self, prompt: str, seed: int, *, steps: int, width: int, height: int) -> bytes:
        image = sim_generate(prompt, seed, self.world, self.user_prompt)
        return image.encode(self.world.canvas)


class SimEditor:
    def __init__(self, world: WorldSpec) -> None:
        self.world = world

    def edit(self, instruction: str, seed: int, reference: bytes, *, steps: int) -> bytes:
        parent = _decode(reference, "editor")
        try:
            image = sim_edit(instruction, seed, parent, self.world)
        except SimEditError as e:
            raise TransportError(f"sim editor: {e}") from e
        return image.encode(self.world.canvas)


class SimScorer:
    """Fitness is the satisfied fraction; the prompt is ignored."""

    def __init__(self, world: WorldSpec) -> None:
        self.world = world

    def score(self, image: bytes, prompt: str) -> float:
        return sim_score(_decode(image, "scorer"), self.world)


class SimGrounding:
    """One region per satisfied requirement, all at the same depth."""

    def __init__(self, world: WorldSpec) -> None:
        self.world = world

    def ground(self, image: bytes) -> dict[str, Any]:
        decoded = _decode(image, "grounding")
        satisfied = [k for k in range(self.world.m) if decoded.satisfied(k)]
        return {
            "caption": f"simulated image satisfying {len(satisfied)} of {self.world.m} requirements",
            "width": self.world.canvas,
            "height": self.world.canvas,
            "regions": [
                {
                    "label": f"req-{k} satisfied ({requirement_text(k)})",
                    "bbox": [0, 0, 1, 1],
                    "mean_depth": 128,
                }
                for k in satisfied
            ],
        }


def sim_backends(world: WorldSpec, user_prompt: str, k_min: int) -> Backends:
    """The full simulated backend set for one run of ``user_prompt``."""
    from .agents import SimChatBackend

    return Backends(
        generator=SimGenerator(world, user_prompt),
        editor=SimEditor(world),
        scorer=SimScorer(world),
        chat=SimChatBackend(world, k_min=k_min),
        grounding=SimGrounding(world),
    )

"""
Scripted Agents

A chat backend that plays the analyzer, both rewriters and the verifier over
the hidden requirement world. It reads the same OpenAI-style payload a real
agent endpoint would receive: the role comes from the ``response_format``
schema name, text parts are ``name: value`` lines, and images arrive as
base64 data URLs carrying the world's bit vector.

Behavior:
    analyzer       surfaces max(1, ceil(analyzer_recall * m)) requirements
                   (the first ones), marks satisfied the ones set in the
                   attached image, and ends once every surfaced major
                   requirement is set and the image comes from round k_min or later
    gen rewriter   appends a numbered refinement pass naming the unsatisfied requirements
    edit rewriter  one "fix" instruction per unsatisfied requirement
    verifier       answers from the true bits, each answer flipped with
                   probability verifier_flip (keyed by image and question)

Author: Vladimir K.S.
"""

import base64
import binascii
import hashlib
import json
import math
import re
from typing import Any, Optional

import numpy as np

from ..agents.schemas import AgentRole
from ..checks import is_major
from ..errors import TransportError
from .world import (
    SimImage,
    SimPayloadError,
    WorldSpec,
    parse_targets,
    question_text,
    requirement_text,
)

_PASS = re.compile(r"refined pass (\d+)")
_PART_NAME = re.compile(r"^([a-z_]+): ", re.DOTALL)


def surfaced_requirements(world: WorldSpec) -> list[int]:
    """Indices the scripted analyzer reports: the first ``max(1, ceil(recall * m))``."""
    count = max(1, math.ceil(world.analyzer_recall * world.m))
    return list(range(min(count, world.m)))


class _Message:
    """Named text parts and images of one chat payload."""

    def __init__(self, payload: dict[str, Any]) -> None:
        try:
            self.role = AgentRole(payload["response_format"]["json_schema"]["name"])
            content = payload["messages"][-1]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise TransportError(f"sim agent: unrecognized request: {e}") from e
        self.texts: dict[str, str] = {}
        self.images: list[bytes] = []
        for part in content:
            if part.get("type") == "text":
                match = _PART_NAME.match(part["text"])
                if match and match.group(1) not in self.texts:
                    self.texts[match.group(1)] = part["text"][match.end() :]
            elif part.get("type") == "image_url":
                url = part["image_url"]["url"]
                try:
                    self.images.append(base64.b64decode(url.split(",", 1)[1], validate=True))
                except (IndexError, binascii.Error) as e:
                    raise TransportError(f"sim agent: malformed image data URL: {e}") from e

    def text(self, name: str, default: str = "") -> str:
        return self.texts.get(name, default)

    def json(self, name: str) -> Any:
        try:
            return json.loads(self.texts[name])
        except (KeyError, json.JSONDecodeError) as e:
            raise TransportError(f"sim agent: missing or malformed {name!r} part") from e

    def image(self) -> Optional[SimImage]:
        if not self.images:
            return None
        try:
            return SimImage.decode(self.images[0])
        except SimPayloadError as e:
            raise TransportError(f"sim agent: {e}") from e


# ====================
# Roles
# ====================


def _analyzer(message: _Message, world: WorldSpec, k_min: int) -> dict[str, Any]:
    round_index = int(message.text("round_index", "1"))
    image = message.image()
    surfaced = surfaced_requirements(world)
    satisfied = [k for k in surfaced if image is not None and image.satisfied(k)]
    unsatisfied = [k for k in surfaced if k not in satisfied]
    majors_done = all(k in satisfied for k in surfaced if is_major(requirement_text(k)))
    ending = image is not None and majors_done and round_index - 1 >= k_min
    return {
        "analyzer_reasoning": f"{len(satisfied)} of {len(surfaced)} requirements look satisfied",
        "original_prompt": message.text("original_prompt"),
        "current_prompt": message.text("current_prompt"),
        "requirements_analysis": [requirement_text(k) for k in surfaced],
        "satisfied_requirements": [requirement_text(k) for k in satisfied],
        "unsatisfied_requirements": [requirement_text(k) for k in unsatisfied],
        "binary_questions": [question_text(k) for k in surfaced],
        "model_choice": "ending" if ending else "continue",
    }


def _gen_rewriter(message: _Message) -> dict[str, Any]:
    analysis = message.json("analyzer_output")
    original = message.text("original_prompt")
    current = str(analysis.get("current_prompt", original))
    unsatisfied = [str(t) for t in analysis.get("unsatisfied_requirements", [])]
    passes = [int(n) for n in _PASS.findall(current)]
    next_pass = (max(passes) if passes else 0) + 1
    adjustments = [f"emphasize {text}" for text in unsatisfied] or ["restate the scene"]
    return {
        "rewriter_reasoning": f"pass {next_pass} targets {len(unsatisfied)} requirement(s)",
        "original_prompt": original,
        "current_prompt": current,
        "planned_adjustments": adjustments,
        "adjusted_prompt": f"{original}, refined pass {next_pass}: " + "; ".join(unsatisfied),
    }


def _edit_rewriter(message: _Message, world: WorldSpec) -> dict[str, Any]:
    analysis = message.json("analyzer_output")
    unsatisfied = [str(t) for t in analysis.get("unsatisfied_requirements", [])]
    targets = [k for text in unsatisfied for k in parse_targets(text, world.m)]
    edits = [f"[req-{k}] fix: {requirement_text(k)}" for k in targets]
    if not edits:
        edits = [f"[req-{k}] fix: {requirement_text(k)}" for k in surfaced_requirements(world)]
    return {
        "rewriter_reasoning": f"{len(edits)} edit(s) planned",
        "original_prompt": message.text("original_prompt"),
        "current_prompt": str(analysis.get("current_prompt", "")),
        "planned_edits": edits,
        "single_editing_prompt": edits[0],
        "comprehensive_editing_prompt": "; ".join(edits),
    }


def _flipped(image: bytes, question: str, world: WorldSpec) -> bool:
    if world.verifier_flip <= 0.0:
        return False
    key = hashlib.sha256(image + question.encode("utf-8")).digest()
    rng = np.random.default_rng([world.world_seed, int.from_bytes(key[:8], "big")])
    return bool(rng.random() < world.verifier_flip)


def _verifier(message: _Message, world: WorldSpec) -> dict[str, Any]:
    image = message.image()
    if image is None:
        raise TransportError("sim agent: verifier request carries no image")
    questions = [str(q) for q in message.json("binary_questions")]
    triplets = []
    for question in questions:
        targets = parse_targets(question, world.m)
        truth = bool(targets) and all(image.satisfied(k) for k in targets)
        answer = truth != _flipped(message.images[0], question, world)
        explanation = "the requirement is visible" if answer else "the requirement is missing"
        triplets.append([question, "Yes" if answer else "No", explanation])
    yes = sum(1 for t in triplets if t[1] == "Yes")
    return {
        "verifier_reasoning": f"checked {len(questions)} question(s)",
        "current_image_caption": f"simulated image satisfying {image.popcount} of {image.m}",
        "questions_answers_and_explanations": triplets,
        "verifier_summary": f"{yes} of {len(questions)} answered Yes",
        "all_satisfied": yes == len(questions),
    }


def sim_agents(payload: dict[str, Any], world: WorldSpec, k_min: int) -> dict[str, Any]:
    """
    Structured reply of the scripted agent addressed by ``payload``.

    Raises:
        TransportError: If the payload is not a recognizable agent request
    """
    message = _Message(payload)
    if message.role is AgentRole.ANALYZER:
        return _analyzer(message, world, k_min)
    if message.role is AgentRole.GEN_REWRITER:
        return _gen_rewriter(message)
    if message.role is AgentRole.EDIT_REWRITER:
        return _edit_rewriter(message, world)
    return _verifier(message, world)


class SimChatBackend:
    """ChatBackend answering every agent role from the hidden world."""

    def __init__(self, world: WorldSpec, k_min: int) -> None:
        self.world = world
        self.k_min = k_min

    def complete(self, payload: dict[str, Any]) -> str:
        return json.dumps(sim_agents(payload, self.world, self.k_min))

"""
Simulated Requirement World

A hidden world of ``m`` atomic requirements. An "image" is a satisfaction bit
vector carried inside a real PNG (tEXt metadata chunk), so the engine keeps
treating image bytes as opaque while the simulated scorer, editor, grounding
tool and agents can read the truth back out.

Randomness is keyed by request content (world seed, candidate seed, draw
class), never by call order, so concurrent execution stays deterministic and
sweeps over a probability share their random numbers.

Author: Vladimir K.S.
"""

import re
from io import BytesIO
from typing import Annotated

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

Probability = Annotated[float, Field(ge=0.0, le=1.0)]

# PNG tEXt key holding the bit string
PAYLOAD_KEY = "raise-sim-bits"

# Draw classes; part of every RNG key
_DRAW_RESAMPLE = 0
_DRAW_REWRITE = 1
_DRAW_EDIT = 2

# Major requirements first, then minor ones; reused cyclically when m exceeds the list
REQUIREMENT_TEMPLATES: tuple[str, ...] = (
    "a bear is present",
    "exactly two clocks are visible",
    "the bear is above the clock",
    "the clock face is red",
    "the sign text reads 'OPEN'",
    "the bear is made of wood",
    "soft natural lighting",
    "a calm mood",
    "the subject is in sharp focus",
    "centered framing",
)

_TARGET_PATTERN = re.compile(r"req-(\d+)")


class SimPayloadError(ValueError):
    """Raised when bytes do not carry a decodable satisfaction vector."""

    pass


class SimEditError(ValueError):
    """Raised when an edit instruction names no requirement of the world."""

    pass


class WorldSpec(BaseModel):
    """Parameters of the hidden world; every probability lies in [0, 1]."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: PositiveInt = 6
    p_resample: Probability = 0.3
    p_rewrite: Probability = 0.5
    p_edit_target: Probability = 0.8
    p_edit_side: Probability = 0.1
    analyzer_recall: Probability = 1.0
    verifier_flip: Probability = 0.0
    world_seed: NonNegativeInt = 0
    canvas: PositiveInt = 64


class SimImage(BaseModel):
    """Satisfaction bit vector of one simulated image."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    bits: tuple[bool, ...] = Field(min_length=1)

    @property
    def m(self) -> int:
        return len(self.bits)

    @property
    def popcount(self) -> int:
        return sum(self.bits)

    @property
    def all_set(self) -> bool:
        return all(self.bits)

    def satisfied(self, index: int) -> bool:
        return 0 <= index < len(self.bits) and self.bits[index]

    def encode(self, canvas: int = 64) -> bytes:
        """Render a ``canvas`` x ``canvas`` PNG carrying the bits as tEXt metadata."""
        shade = int(255 * self.popcount / self.m)
        image = Image.new("RGB", (canvas, canvas), (shade, shade, 255 - shade))
        info = PngInfo()
        info.add_text(PAYLOAD_KEY, "".join("1" if bit else "0" for bit in self.bits))
        buffer = BytesIO()
        image.save(buffer, format="PNG", pnginfo=info)
        return buffer.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "SimImage":
        """
        Recover the bit vector from PNG bytes.

        Raises:
            SimPayloadError: If the bytes are not a PNG or carry no payload
        """
        try:
            with Image.open(BytesIO(data)) as image:
                payload = image.info.get(PAYLOAD_KEY)
        except (Image.DecompressionBombError, OSError, ValueError, SyntaxError) as e:
            raise SimPayloadError(f"not a simulated image: {e}") from e
        if not payload or set(payload) - {"0", "1"}:
            raise SimPayloadError("image carries no satisfaction payload")
        return cls(bits=tuple(ch == "1" for ch in payload))


# ====================
# Requirement texts
# ====================


def requirement_text(index: int) -> str:
    """Checklist text of requirement ``index``; the ``req-k`` tag is what edits target."""
    template = REQUIREMENT_TEMPLATES[index % len(REQUIREMENT_TEMPLATES)]
    return f"req-{index}: {template}"


def question_text(index: int) -> str:
    template = REQUIREMENT_TEMPLATES[index % len(REQUIREMENT_TEMPLATES)]
    return f"req-{index}: Is it true that {template}?"


def parse_targets(text: str, m: int) -> list[int]:
    """Requirement indices named by ``req-k`` tags in ``text``, deduplicated, in order."""
    targets: list[int] = []
    for match in _TARGET_PATTERN.finditer(text):
        index = int(match.group(1))
        if index < m and index not in targets:
            targets.append(index)
    return targets


# ====================
# Backends
# ====================


def _draws(world: WorldSpec, seed: int, draw_class: int, count: int = 1) -> np.ndarray:
    rng = np.random.default_rng([world.world_seed, seed, draw_class])
    return rng.random((count, world.m))


def sim_generate(prompt: str, seed: int, world: WorldSpec, user_prompt: str) -> SimImage:
    """
    Sample a fresh image.

    Bit k is set independently with probability ``p_resample`` when ``prompt``
    is the user prompt, ``p_rewrite`` otherwise.
    """
    resample = prompt == user_prompt
    p = world.p_resample if resample else world.p_rewrite
    u = _draws(world, seed, _DRAW_RESAMPLE if resample else _DRAW_REWRITE)[0]
    return SimImage(bits=tuple(bool(x) for x in u < p))


def sim_edit(instruction: str, seed: int, reference: SimImage, world: WorldSpec) -> SimImage:
    """
    Apply an instruction to ``reference``.

    Each targeted bit is set with probability ``p_edit_target``; every other
    set bit is cleared with probability ``p_edit_side``; the rest is copied.

    Raises:
        SimEditError: If the instruction targets no requirement of the world
    """
    targets = parse_targets(instruction, world.m)
    if not targets:
        raise SimEditError(f"edit instruction targets no requirement: {instruction!r}")
    u_target, u_side = _draws(world, seed, _DRAW_EDIT, count=2)
    bits = list(reference.bits[: world.m])
    bits += [False] * (world.m - len(bits))
    for k in range(world.m):
        if k in targets:
            if u_target[k] < world.p_edit_target:
                bits[k] = True
        elif bits[k] and u_side[k] < world.p_edit_side:
            bits[k] = False
    return SimImage(bits=tuple(bits))


def sim_score(image: SimImage, world: WorldSpec) -> float:
    """Fitness is the satisfied fraction, exactly ``popcount / m``."""
    return sum(image.satisfied(k) for k in range(world.m)) / world.m

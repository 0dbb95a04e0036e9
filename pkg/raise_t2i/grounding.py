"""
Grounding Evidence

Turns the grounding tool's raw reply for the round-best image into validated
GroundingEvidence, and renders evidence into the text block the verifier
reads:

    detected_caption: <caption>
    image_size: (<w>, <h>)
    Region Label: <label>
    Bounding Box: [<x_min>, <y_min>, <x_max>, <y_max>]
    Average Depth: <d>
    ... (three lines per region)

The text format is normative; ``parse_evidence`` inverts it exactly.

Author: Vladimir K.S.
"""

import logging
import math
import re
from typing import Any, Optional

from pydantic import ValidationError

from .backends.base import GroundingBackend
from .checks import CheckResult
from .config import RunConfig
from .core.images import ImageStore
from .core.models import MAX_REGIONS, GroundingEvidence, ImageRef, Region
from .errors import SchemaViolation, TransportError

logger = logging.getLogger(__name__)

CAPTION_PREFIX = "detected_caption: "
SIZE_PREFIX = "image_size: "
LABEL_PREFIX = "Region Label: "
BOX_PREFIX = "Bounding Box: "
DEPTH_PREFIX = "Average Depth: "

MALFORMED_EVIDENCE = "malformed evidence text"

_SIZE = re.compile(r"\((\d+), (\d+)\)")
_BOX = re.compile(r"\[(\d+), (\d+), (\d+), (\d+)\]")
_DEPTH = re.compile(r"\d+")


def round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def _one_line(value: Any) -> str:
    return " ".join(str(value).split())


def _region(raw: Any) -> Region:
    if not isinstance(raw, dict):
        raise ValueError("region is not an object")
    bbox = raw.get("bbox")
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise ValueError(f"bbox must hold 4 coordinates, got {bbox!r}")
    coords = []
    for value in bbox:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ValueError(f"bbox coordinates must be integers, got {bbox!r}")
        coords.append(int(value))
    return Region(
        label=_one_line(raw.get("label", "")),
        bbox=(coords[0], coords[1], coords[2], coords[3]),
        mean_depth=round_half_up(float(raw["mean_depth"])),
    )


def evidence_from_payload(
    raw: dict[str, Any], image: ImageRef
) -> CheckResult[Optional[GroundingEvidence]]:
    """
    Validate a grounding reply against the image it describes.

    Invalid regions are dropped with a note; the remaining ones are ordered by
    bbox area (largest first, stable) and capped at MAX_REGIONS. A reply
    without a usable caption or size yields no evidence at all.
    """
    notes: list[str] = []
    caption = _one_line(raw.get("caption", ""))
    try:
        width = int(raw.get("width", image.width))
        height = int(raw.get("height", image.height))
    except (TypeError, ValueError):
        return CheckResult(None, ["grounding reply carries a non-integer image size"])
    if not caption:
        return CheckResult(None, ["grounding reply carries no caption"])

    regions: list[Region] = []
    for position, entry in enumerate(raw.get("regions") or []):
        try:
            region = _region(entry)
        except (KeyError, TypeError, ValueError, OverflowError, ValidationError) as e:
            notes.append(f"region {position} rejected: {_one_line(e)}")
            continue
        if not region.fits(width, height):
            notes.append(
                f"region {position} rejected: bbox {list(region.bbox)} exceeds image size "
                f"({width}, {height})"
            )
            continue
        regions.append(region)

    regions.sort(key=lambda r: r.area, reverse=True)
    if len(regions) > MAX_REGIONS:
        notes.append(f"{len(regions) - MAX_REGIONS} smallest region(s) dropped over the cap")
        regions = regions[:MAX_REGIONS]

    try:
        evidence = GroundingEvidence(
            caption=caption, regions=tuple(regions), image_width=width, image_height=height
        )
    except ValidationError as e:
        return CheckResult(None, notes + [f"grounding evidence rejected: {_one_line(e)}"])
    return CheckResult(evidence, notes)


def acquire_grounding(
    image: ImageRef,
    config: RunConfig,
    backend: Optional[GroundingBackend],
    store: ImageStore,
) -> CheckResult[Optional[GroundingEvidence]]:
    """
    Ground ``image`` with the vision-tool backend.

    Never raises: with tools disabled, no backend, or a failing backend the
    value is None (the verification runs ungrounded) and the reason is noted.
    """
    if not config.enable_grounding_tools:
        return CheckResult(None, ["grounding tools disabled"])
    if backend is None:
        return CheckResult(None, ["no grounding backend configured"])
    try:
        raw = backend.ground(store.get(image))
    except (TransportError, ValueError) as e:
        note = f"grounding backend failed: {e}"
        logger.warning(note)
        return CheckResult(None, [note])
    result = evidence_from_payload(raw, image)
    for note in result.warnings:
        logger.warning(note)
    return result


def serialize_evidence(evidence: GroundingEvidence) -> str:
    """
    Render evidence as the verifier's text block.

    Example:
        >>> print(serialize_evidence(evidence))
        detected_caption: a red car parked on a street
        image_size: (512, 512)
        Region Label: a red car
        Bounding Box: [40, 60, 200, 180]
        Average Depth: 112
    """
    lines = [
        f"{CAPTION_PREFIX}{evidence.caption}",
        f"{SIZE_PREFIX}({evidence.image_width}, {evidence.image_height})",
    ]
    for region in evidence.regions:
        x_min, y_min, x_max, y_max = region.bbox
        lines.append(f"{LABEL_PREFIX}{region.label}")
        lines.append(f"{BOX_PREFIX}[{x_min}, {y_min}, {x_max}, {y_max}]")
        lines.append(f"{DEPTH_PREFIX}{region.mean_depth}")
    return "\n".join(lines)


def _field(line: str, prefix: str) -> str:
    if not line.startswith(prefix):
        raise SchemaViolation(MALFORMED_EVIDENCE, f"expected {prefix.strip()!r}, got {line!r}")
    return line[len(prefix) :]


def parse_evidence(text: str) -> GroundingEvidence:
    """
    Invert ``serialize_evidence``.

    Raises:
        SchemaViolation: If ``text`` is not a serialized evidence block
    """
    lines = text.split("\n")
    if len(lines) < 2 or (len(lines) - 2) % 3:
        raise SchemaViolation(MALFORMED_EVIDENCE, f"{len(lines)} lines")
    caption = _field(lines[0], CAPTION_PREFIX)
    size = _SIZE.fullmatch(_field(lines[1], SIZE_PREFIX))
    if size is None:
        raise SchemaViolation(MALFORMED_EVIDENCE, f"bad size line {lines[1]!r}")
    blocks = []
    for start in range(2, len(lines), 3):
        label = _field(lines[start], LABEL_PREFIX)
        box = _BOX.fullmatch(_field(lines[start + 1], BOX_PREFIX))
        depth = _field(lines[start + 2], DEPTH_PREFIX)
        if box is None or not _DEPTH.fullmatch(depth):
            raise SchemaViolation(MALFORMED_EVIDENCE, f"bad region block at line {start + 1}")
        x_min, y_min, x_max, y_max = (int(v) for v in box.groups())
        blocks.append((label, (x_min, y_min, x_max, y_max), int(depth)))
    try:
        regions = [Region(label=lb, bbox=bbox, mean_depth=d) for lb, bbox, d in blocks]
        return GroundingEvidence(
            caption=caption,
            regions=tuple(regions),
            image_width=int(size.group(1)),
            image_height=int(size.group(2)),
        )
    except ValidationError as e:
        raise SchemaViolation(MALFORMED_EVIDENCE, _one_line(e)) from e

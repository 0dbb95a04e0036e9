"""
Major/Minor Requirement Classifier

A requirement is MAJOR when it concerns subjects, counts, attributes, spatial
relations, colors or text rendered in the image, and MINOR when it only
concerns lighting, mood, focus or framing. Major requirements gate the
analyzer's early stop.

The classification is keyword-based.

Author: Vladimir K.S.
"""

import re

# ====================
# MAJOR KEYWORDS (checked first, always win)
# ====================

COUNT_WORDS: tuple[str, ...] = (
    "exactly", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "single", "pair", "several", "multiple", "number of", "count",
)

COLOR_WORDS: tuple[str, ...] = (
    "red", "green", "blue", "yellow", "orange", "purple", "pink", "brown",
    "black", "white", "gray", "grey", "golden", "silver", "color", "colour",
)

SPATIAL_WORDS: tuple[str, ...] = (
    "above", "below", "under", "over", "on top", "beneath", "behind",
    "in front", "left", "right", "next to", "beside", "between", "inside",
    "near", "on the",
)

TEXT_WORDS: tuple[str, ...] = (
    "text", "reads", "written", "letters", "sign", "caption", "label", "word",
)

MAJOR_KEYWORDS: tuple[str, ...] = COUNT_WORDS + COLOR_WORDS + SPATIAL_WORDS + TEXT_WORDS

# ====================
# MINOR KEYWORDS (photographic qualities)
# ====================

MINOR_KEYWORDS: tuple[str, ...] = (
    "lighting", "light", "exposure", "shadow",      # Lighting
    "mood", "atmosphere", "tone", "calm", "serene",  # Mood
    "focus", "sharp", "depth of field", "blur",      # Focus
    "framing", "framed", "composition", "centered",  # Framing
    "camera angle", "close-up", "wide shot",         # Camera
)


def _contains(text: str, keyword: str) -> bool:
    return re.search(rf"\b{re.escape(keyword)}\b", text) is not None


def is_major(text: str) -> bool:
    """
    Classify one requirement statement.

    Args:
        text: Requirement text as produced by the analyzer

    Returns:
        False only when the text mentions a minor aspect and no major one

    Example:
        >>> is_major("the bear is above the clock")
        True
        >>> is_major("soft natural lighting")
        False
    """
    lowered = text.lower()
    if any(_contains(lowered, word) for word in MAJOR_KEYWORDS):
        return True
    return not any(_contains(lowered, word) for word in MINOR_KEYWORDS)

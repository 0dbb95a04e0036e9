"""
RAISE-T2I - Requirement-Adaptive Evolutionary Refinement for Text-to-Image

A training-free orchestration engine: per round it extracts a requirement
checklist, builds a population of refinement candidates (resample, prompt
rewrite, instructional edit), executes them against pluggable backends,
scores and selects, verifies the round-best against binary questions, and
stops as soon as the requirements allow.

Author: Vladimir K.S.
License: MIT
"""

__version__ = "0.0.1"
__author__ = "Vladimir K.S."
__license__ = "MIT"

# Package-level constants
PACKAGE_NAME = "raise-t2i"

ENV_GENERATOR_URL = "RAISE_GENERATOR_URL"
ENV_EDITOR_URL = "RAISE_EDITOR_URL"
ENV_AGENT_URL = "RAISE_AGENT_URL"
ENV_SCORER_URL = "RAISE_SCORER_URL"
ENV_GROUNDING_URL = "RAISE_GROUNDING_URL"

__all__ = [
    "__version__",
    "__author__",
    "__license__",
    "PACKAGE_NAME",
    "ENV_GENERATOR_URL",
    "ENV_EDITOR_URL",
    "ENV_AGENT_URL",
    "ENV_SCORER_URL",
    "ENV_GROUNDING_URL",
]

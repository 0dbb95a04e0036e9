"""
Run Configuration

A run is configured by a single JSON (or YAML) document whose keys mirror
RunConfig field names. Environment variables may override backend endpoints
and nothing else.

Example:
    {
        "k_min": 2,
        "k_max": 4,
        "run_seed": 7,
        "backend_profile": "sim",
        "world": {"m": 6, "p_rewrite": 0.5}
    }

Author: Vladimir K.S.
"""

import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

from . import (
    ENV_AGENT_URL,
    ENV_EDITOR_URL,
    ENV_GENERATOR_URL,
    ENV_GROUNDING_URL,
    ENV_SCORER_URL,
)
from .errors import ConfigError
from .sim.world import WorldSpec

EditVariant = Literal["top", "random", "comp"]

LATE_EDITS: tuple[EditVariant, ...] = ("top", "random", "comp")

# Environment variable -> BackendSettings field
ENDPOINT_ENV: dict[str, str] = {
    ENV_GENERATOR_URL: "generator_url",
    ENV_EDITOR_URL: "editor_url",
    ENV_AGENT_URL: "agent_url",
    ENV_SCORER_URL: "scorer_url",
    ENV_GROUNDING_URL: "grounding_url",
}


class BackendSettings(BaseModel):
    """Endpoints and transport policy shared by all HTTP backends."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    generator_url: Optional[str] = None
    editor_url: Optional[str] = None
    agent_url: Optional[str] = None
    scorer_url: Optional[str] = None
    grounding_url: Optional[str] = None
    timeout_s: PositiveFloat = 300.0
    retries: NonNegativeInt = 2
    generator_model: Optional[str] = None
    editor_model: Optional[str] = None


class RunConfig(BaseModel):
    """
    Everything a run needs besides the user prompt.

    Defaults: 2..4 rounds, 4 resample + 4 rewrite candidates in early rounds,
    5 rewrite + 3 edit candidates in late rounds, 1024x1024 images at 28 steps.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    k_min: PositiveInt = 2
    k_max: PositiveInt = 4
    early_resample: NonNegativeInt = 4
    early_rewrite: NonNegativeInt = 4
    late_rewrite: NonNegativeInt = 5
    late_edits: tuple[EditVariant, ...] = LATE_EDITS
    run_seed: NonNegativeInt = 0
    parallelism: PositiveInt = 4
    width: PositiveInt = 1024
    height: PositiveInt = 1024
    steps: PositiveInt = 28
    enable_editing: bool = True
    enable_grounding_tools: bool = True
    force_rounds: Optional[PositiveInt] = None
    backend_profile: Literal["real", "sim"] = "real"
    agent_model: str = "mistral-small-3.2-24b-instruct"
    agent_schema_retries: NonNegativeInt = 2
    backends: BackendSettings = Field(default_factory=BackendSettings)
    world: WorldSpec = Field(default_factory=WorldSpec)

    @model_validator(mode="after")
    def _check_schedule(self) -> "RunConfig":
        if self.k_min > self.k_max:
            raise ValueError(f"k_min ({self.k_min}) must not exceed k_max ({self.k_max})")
        if tuple(sorted(self.late_edits)) != tuple(sorted(LATE_EDITS)):
            raise ValueError("late_edits is fixed to the set {top, random, comp}")
        early = self.early_resample + self.early_rewrite
        late = self.late_rewrite + len(self.late_edits)
        if early != late:
            raise ValueError(
                f"per-round candidate count must be fixed: early rounds produce {early}, "
                f"late rounds produce {late}"
            )
        if early == 0:
            raise ValueError("rounds must produce at least one candidate")
        return self

    @property
    def samples_per_round(self) -> int:
        return self.early_resample + self.early_rewrite

    @property
    def last_round(self) -> int:
        """Hard round cap; ``force_rounds`` replaces k_max when set."""
        return self.force_rounds if self.force_rounds is not None else self.k_max

    @property
    def adaptive_stopping(self) -> bool:
        return self.force_rounds is None

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a revalidated copy with ``overrides`` applied (None values are skipped)."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return config_from_mapping(data)


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    field = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"invalid config field '{field}': {first['msg']}"


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    """
    Validate a raw mapping into a RunConfig.

    Raises:
        ConfigError: Naming the first offending field
    """
    try:
        return RunConfig.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e


def apply_env_overrides(
    config: RunConfig, environ: Optional[Mapping[str, str]] = None
) -> RunConfig:
    """Replace backend endpoints with any RAISE_*_URL environment variables that are set."""
    env = os.environ if environ is None else environ
    updates = {field: env[name] for name, field in ENDPOINT_ENV.items() if env.get(name)}
    if not updates:
        return config
    backends = config.backends.model_copy(update=updates)
    return config.model_copy(update={"backends": backends})


def load_config(path: Optional[Path], environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Load, validate and env-override a configuration file.

    Args:
        path: JSON or YAML document; None yields the defaults
        environ: Environment mapping (default: os.environ)

    Raises:
        ConfigError: If the file cannot be read, is not a mapping, or fails validation
    """
    data: Any = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping of RunConfig fields")
    return apply_env_overrides(config_from_mapping(data), environ)

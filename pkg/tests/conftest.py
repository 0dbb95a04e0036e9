"""
Pytest Configuration and Shared Fixtures

Provides test fixtures for:
- Run configurations (defaults, sim profile, forced rounds)
- Simulated worlds (default, trivially satisfiable, unsatisfiable)
- Engines wired to the simulated backends
- In-memory image stores and traces
- Fake filesystem run stores (pyfakefs)

Author: Vladimir K.S.
"""

from collections.abc import Callable
from pathlib import Path

import pytest
from pyfakefs.fake_filesystem import FakeFilesystem
from PIL import Image

import raise_t2i.engine  # noqa: F401  (loaded before any fake filesystem is active)
import raise_t2i.sim.agents  # noqa: F401
from raise_t2i import ENV_AGENT_URL, ENV_EDITOR_URL, ENV_GENERATOR_URL, ENV_GROUNDING_URL, ENV_SCORER_URL
from raise_t2i.config import RunConfig
from raise_t2i.core.images import MemoryImageStore
from raise_t2i.core.state import RunState
from raise_t2i.engine import Engine
from raise_t2i.ops.store import RunStore
from raise_t2i.ops.trace import TraceWriter
from raise_t2i.sim.backends import sim_backends
from raise_t2i.sim.world import WorldSpec

# Image plugins are imported lazily; load them while the real filesystem is visible
Image.init()

PROMPT = "a photo of a wooden bear above two red clocks"


# ====================
# Configuration Fixtures
# ====================


@pytest.fixture
def config() -> RunConfig:
    """
    Default schedule against the simulated backends.

    Returns:
        RunConfig with k_min=2, k_max=4, 8 candidates per round, sim profile
    """
    return RunConfig(backend_profile="sim", parallelism=2)


@pytest.fixture
def forced_config(config: RunConfig) -> Callable[[int], RunConfig]:
    """
    Factory for fixed-budget configurations.

    Usage:
        forced_config(4)  # exactly four rounds, no adaptive stop
    """

    def _make(rounds: int) -> RunConfig:
        return config.with_overrides(force_rounds=rounds)

    return _make


# ====================
# World Fixtures
# ====================


@pytest.fixture
def world() -> WorldSpec:
    """Default moderate world (m=6, p_rewrite=0.5, p_edit_target=0.8)."""
    return WorldSpec()


@pytest.fixture
def trivial_world() -> WorldSpec:
    """Every rewrite candidate satisfies every requirement."""
    return WorldSpec(m=4, p_resample=0.0, p_rewrite=1.0)


@pytest.fixture
def impossible_world() -> WorldSpec:
    """Nothing ever satisfies anything."""
    return WorldSpec(p_resample=0.0, p_rewrite=0.0, p_edit_target=0.0, p_edit_side=0.0)


# ====================
# Engine Fixtures
# ====================


@pytest.fixture
def run_sim() -> Callable[..., tuple[RunState, Engine]]:
    """
    Run the engine against a simulated world.

    Usage:
        state, engine = run_sim(config, world)
        state, engine = run_sim(config, world, prompt="a cat")

    Returns:
        Callable returning the final RunState and the engine (store + trace)
    """

    def _run(
        config: RunConfig, world: WorldSpec, prompt: str = PROMPT
    ) -> tuple[RunState, Engine]:
        run_config = config.model_copy(update={"world": world, "backend_profile": "sim"})
        engine = Engine(
            run_config,
            sim_backends(world, prompt, k_min=run_config.k_min),
            store=MemoryImageStore(),
            trace=TraceWriter(),
        )
        return engine.run(prompt), engine

    return _run


@pytest.fixture
def memory_store() -> MemoryImageStore:
    return MemoryImageStore()


# ====================
# Filesystem Fixtures
# ====================


@pytest.fixture
def run_store(fs: FakeFilesystem) -> RunStore:
    """
    Run store rooted in the fake filesystem.

    Creates:
    - /work/runs/

    Returns:
        RunStore at /work/runs
    """
    fs.create_dir("/work/runs")
    return RunStore(Path("/work/runs"))


# ====================
# Autouse Fixtures
# ====================


@pytest.fixture(autouse=True)
def reset_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """
    Automatically clear endpoint overrides for each test.

    Clears:
    - RAISE_*_URL environment variables
    """
    for name in (
        ENV_GENERATOR_URL,
        ENV_EDITOR_URL,
        ENV_AGENT_URL,
        ENV_SCORER_URL,
        ENV_GROUNDING_URL,
    ):
        monkeypatch.delenv(name, raising=False)

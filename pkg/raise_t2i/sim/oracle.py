"""
Convergence Oracle

Empirical satisfaction rate and budget of the engine over a simulated world,
plus an independent straight-line Monte Carlo of the same stochastic process.
The two are computed from different random numbers and agree only in
distribution, so comparisons use a tolerance.

Author: Vladimir K.S.
"""

import logging
from collections import Counter
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

from ..checks import is_major
from ..config import RunConfig
from ..core.images import MemoryImageStore
from ..core.state import TerminationKind
from .agents import surfaced_requirements
from .backends import sim_backends
from .world import SimImage, WorldSpec, requirement_text

logger = logging.getLogger(__name__)


class ConvergenceReport(BaseModel):
    """Aggregate over ``trials`` independent runs of one prompt."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    trials: PositiveInt
    satisfied_runs: NonNegativeInt
    mean_rounds: float
    mean_samples: float
    mean_agent_calls: float
    rounds: dict[int, int] = Field(default_factory=dict)
    terminations: dict[str, int] = Field(default_factory=dict)

    @property
    def satisfaction_rate(self) -> float:
        return self.satisfied_runs / self.trials


def _report(outcomes: list[tuple[bool, int, int, int, str]]) -> ConvergenceReport:
    trials = len(outcomes)
    return ConvergenceReport(
        trials=trials,
        satisfied_runs=sum(1 for o in outcomes if o[0]),
        mean_rounds=sum(o[1] for o in outcomes) / trials,
        mean_samples=sum(o[2] for o in outcomes) / trials,
        mean_agent_calls=sum(o[3] for o in outcomes) / trials,
        rounds=dict(sorted(Counter(o[1] for o in outcomes).items())),
        terminations=dict(sorted(Counter(o[4] for o in outcomes).items())),
    )


def sim_config(config: RunConfig, world: WorldSpec, run_seed: Optional[int] = None) -> RunConfig:
    """``config`` pointed at ``world`` with the sim profile."""
    update = {"world": world, "backend_profile": "sim"}
    if run_seed is not None:
        update["run_seed"] = run_seed
    return config.model_copy(update=update)


def oracle_convergence(
    world: WorldSpec,
    config: RunConfig,
    trials: int,
    user_prompt: str = "a photo of a wooden bear above two red clocks",
) -> ConvergenceReport:
    """
    Run the full engine ``trials`` times with run seeds
    ``config.run_seed, config.run_seed + 1, ...``.

    A run counts as satisfied when its final image sets every bit of the world.
    """
    from ..engine import Engine

    if trials < 1:
        raise ValueError("trials must be at least 1")
    outcomes = []
    for trial in range(trials):
        run_config = sim_config(config, world, config.run_seed + trial)
        store = MemoryImageStore()
        engine = Engine(
            run_config, sim_backends(world, user_prompt, k_min=run_config.k_min), store=store
        )
        state = engine.run(user_prompt)
        final = state.final_image
        satisfied = False
        if final is not None:
            image = SimImage.decode(store.get(final))
            satisfied = image.m == world.m and image.all_set
        assert state.termination is not None
        outcomes.append(
            (
                satisfied,
                state.termination.round,
                state.total_samples,
                state.total_agent_calls,
                state.termination.kind.value,
            )
        )
    report = _report(outcomes)
    logger.info(
        "oracle: %d/%d runs satisfied, mean rounds %.2f",
        report.satisfied_runs,
        report.trials,
        report.mean_rounds,
    )
    return report


# ====================
# Straight-line Monte Carlo
# ====================


def _edit(
    parent: np.ndarray, targets: list[int], world: WorldSpec, rng: np.random.Generator
) -> np.ndarray:
    u_target, u_side = rng.random(world.m), rng.random(world.m)
    child = parent.copy()
    for k in range(world.m):
        if k in targets:
            if u_target[k] < world.p_edit_target:
                child[k] = True
        elif child[k] and u_side[k] < world.p_edit_side:
            child[k] = False
    return child


def _trial(
    world: WorldSpec, config: RunConfig, rng: np.random.Generator
) -> tuple[bool, int, int, int, str]:
    m = world.m
    surfaced = surfaced_requirements(world)
    majors = [k for k in surfaced if is_major(requirement_text(k))]
    adaptive = config.adaptive_stopping
    best: Optional[np.ndarray] = None
    best_fitness = -1.0
    samples = calls = 0

    for i in range(1, config.last_round + 1):
        calls += 1
        if (
            adaptive
            and best is not None
            and i - 1 >= config.k_min
            and all(best[k] for k in majors)
        ):
            return bool(best.all()), i, samples, calls, TerminationKind.ANALYZER_END.value

        unsatisfied = [k for k in surfaced if best is None or not best[k]] or surfaced
        calls += 1
        population: list[np.ndarray] = []
        if i <= config.k_min:
            population += [rng.random(m) < world.p_resample for _ in range(config.early_resample)]
            population += [rng.random(m) < world.p_rewrite for _ in range(config.early_rewrite)]
        elif config.enable_editing and best is not None:
            calls += 1
            population += [rng.random(m) < world.p_rewrite for _ in range(config.late_rewrite)]
            others = unsatisfied[1:]
            random_target = others[int(rng.integers(len(others)))] if others else unsatisfied[0]
            for targets in ([unsatisfied[0]], [random_target], unsatisfied):
                population.append(_edit(best, targets, world, rng))
        else:
            rewrites = config.late_rewrite + len(config.late_edits)
            population += [rng.random(m) < world.p_rewrite for _ in range(rewrites)]
        samples += len(population)

        fitness = [float(p.sum()) / m for p in population]
        round_best = int(np.argmax(fitness))
        if fitness[round_best] > best_fitness:
            best, best_fitness = population[round_best], fitness[round_best]

        calls += 1
        answers = [
            bool(population[round_best][k]) != bool(rng.random() < world.verifier_flip)
            for k in surfaced
        ]
        if adaptive and i >= config.k_min and all(answers):
            return bool(best.all()), i, samples, calls, TerminationKind.VERIFIER_ALL_SATISFIED.value

    assert best is not None
    return bool(best.all()), config.last_round, samples, calls, TerminationKind.MAX_ROUNDS.value


def monte_carlo_convergence(
    world: WorldSpec, config: RunConfig, trials: int, seed: int = 0
) -> ConvergenceReport:
    """
    Simulate the run process directly on bit vectors, without the engine,
    agents or image encoding.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng([seed, world.world_seed])
    return _report([_trial(world, config, rng) for _ in range(trials)])

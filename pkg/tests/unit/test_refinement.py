"""
Tests for Refinement Actions

Tests for:
- schedule_actions() - early/late phases, editing switch, round range
- ActionPlan - phase rules and without_edits()
- derive_seed() / splitmix64() - published mix, injectivity
- choose_random_edit() - uniform over non-top edits, deterministic per stream
- make_*_candidates() - prompts, slots, preset random edit, missing parent
- build_population() - slot order, seeds, references, missing inputs

Author: Vladimir K.S.
"""

import pytest
from pydantic import ValidationError

from raise_t2i.core.models import CandidateKind, EditRewriteOutput, GenRewriteOutput
from raise_t2i.errors import RefinementError
from raise_t2i.refinement import (
    ActionPlan,
    build_population,
    choose_random_edit,
    derive_seed,
    make_edit_candidates,
    make_resample_candidates,
    make_rewrite_candidates,
    random_edit_stream,
    schedule_actions,
    splitmix64,
)
from tests.utils.fixtures import fake_ref

R, W = CandidateKind.RESAMPLE, CandidateKind.REWRITE
ET, ER, EC = CandidateKind.EDIT_TOP, CandidateKind.EDIT_RANDOM, CandidateKind.EDIT_COMP


def gen_output(prompt="a refined prompt"):
    return GenRewriteOutput(reasoning="r", planned_adjustments=("a",), adjusted_prompt=prompt)


def edit_output(edits=("fix a", "fix b", "fix c"), random_edit=None):
    return EditRewriteOutput(
        reasoning="r",
        planned_edits=tuple(edits),
        top_edit=edits[0],
        comprehensive_edit="; ".join(edits),
        random_edit=random_edit,
    )


# ====================
# Schedule
# ====================


class TestSchedule:
    @pytest.mark.parametrize("round", [1, 2])
    def test_early_rounds(self, config, round):
        plan = schedule_actions(round, config)
        assert not plan.late
        assert plan.counts == {R: 4, W: 4}

    @pytest.mark.parametrize("round", [3, 4])
    def test_late_rounds(self, config, round):
        plan = schedule_actions(round, config)
        assert plan.late
        assert plan.counts == {W: 5, ET: 1, ER: 1, EC: 1}
        assert plan.total == 8

    def test_editing_off_turns_edits_into_rewrites(self, config):
        plan = schedule_actions(3, config.with_overrides(enable_editing=False))
        assert plan.counts == {W: 8}
        assert not plan.has_edits

    @pytest.mark.parametrize("round", [0, 5])
    def test_round_outside_range(self, config, round):
        with pytest.raises(RefinementError):
            schedule_actions(round, config)

    def test_forced_rounds_extend_the_late_phase(self, forced_config):
        assert schedule_actions(6, forced_config(6)).late

    def test_zero_resample_is_left_out(self, config):
        plan = schedule_actions(1, config.with_overrides(early_resample=0, early_rewrite=8))
        assert plan.counts == {W: 8}


class TestActionPlan:
    def test_late_rounds_never_resample(self):
        with pytest.raises(ValidationError):
            ActionPlan(round=3, late=True, counts={R: 1, W: 7})

    def test_early_rounds_never_edit(self):
        with pytest.raises(ValidationError):
            ActionPlan(round=1, late=False, counts={W: 7, ET: 1})

    def test_edits_come_as_a_triple(self):
        with pytest.raises(ValidationError):
            ActionPlan(round=3, late=True, counts={W: 6, ET: 1, EC: 1})

    def test_without_edits_keeps_the_total(self, config):
        plan = schedule_actions(4, config)
        fallback = plan.without_edits()
        assert fallback.counts == {W: 8}
        assert fallback.total == plan.total
        assert fallback.round == 4


# ====================
# Seeds
# ====================


class TestSeeds:
    def test_splitmix64_reference_value(self):
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_seeds_are_distinct_within_a_run(self):
        seeds = {derive_seed(7, r, s) for r in range(1, 65) for s in range(16)}
        assert len(seeds) == 64 * 16

    def test_run_seed_changes_every_candidate_seed(self):
        assert all(derive_seed(0, 1, s) != derive_seed(1, 1, s) for s in range(8))

    def test_seeds_are_stable(self):
        assert derive_seed(123, 2, 5) == derive_seed(123, 2, 5)
        assert 0 <= derive_seed(123, 2, 5) < 1 << 64

    def test_out_of_range_slot(self):
        with pytest.raises(RefinementError):
            derive_seed(0, 1, -1)
        with pytest.raises(RefinementError):
            derive_seed(0, 1 << 32, 0)


class TestRandomEdit:
    def test_draw_avoids_the_top_edit(self):
        for seed in range(50):
            chosen = choose_random_edit(edit_output(), random_edit_stream(seed, 3))
            assert chosen.random_edit in ("fix b", "fix c")

    def test_draw_is_deterministic_per_stream(self):
        first = choose_random_edit(edit_output(), random_edit_stream(5, 3))
        again = choose_random_edit(edit_output(), random_edit_stream(5, 3))
        assert first.random_edit == again.random_edit

    def test_both_alternatives_are_reachable(self):
        picks = {
            choose_random_edit(edit_output(), random_edit_stream(seed, 3)).random_edit
            for seed in range(50)
        }
        assert picks == {"fix b", "fix c"}

    def test_single_planned_edit_is_reused(self):
        chosen = choose_random_edit(edit_output(("only",)), random_edit_stream(0, 3))
        assert chosen.random_edit == "only"

    def test_random_edit_must_be_planned(self):
        with pytest.raises(ValidationError):
            edit_output(random_edit="something else")


# ====================
# Population
# ====================


class TestBuildPopulation:
    def test_early_population(self, config):
        population = build_population(
            schedule_actions(1, config), config, "user prompt", gen_rewrite=gen_output()
        )
        assert [c.slot for c in population] == list(range(8))
        assert [c.kind for c in population] == [R] * 4 + [W] * 4
        assert {c.prompt for c in population[:4]} == {"user prompt"}
        assert {c.prompt for c in population[4:]} == {"a refined prompt"}
        assert len({c.seed for c in population}) == 8
        assert all(c.reference is None for c in population)

    def test_late_population_edits_the_parent(self, config):
        parent = fake_ref("parent")
        population = build_population(
            schedule_actions(3, config),
            config,
            "user prompt",
            gen_rewrite=gen_output(),
            edit_rewrite=edit_output(),
            parent_image=parent,
        )
        assert [c.kind for c in population] == [W] * 5 + [ET, ER, EC]
        edits = population[5:]
        assert [c.slot for c in edits] == [5, 6, 7]
        assert all(c.reference == parent for c in edits)
        assert edits[0].prompt == "fix a"
        assert edits[1].prompt in ("fix b", "fix c")
        assert edits[2].prompt == "fix a; fix b; fix c"

    def test_seeds_follow_the_slot(self, config):
        population = build_population(
            schedule_actions(2, config), config, "p", gen_rewrite=gen_output()
        )
        assert [c.seed for c in population] == [
            derive_seed(config.run_seed, 2, slot) for slot in range(8)
        ]

    def test_missing_rewrite_output(self, config):
        with pytest.raises(RefinementError, match="rewritten prompt"):
            build_population(schedule_actions(1, config), config, "p")

    def test_missing_edit_output(self, config):
        with pytest.raises(RefinementError, match="edit instructions"):
            build_population(
                schedule_actions(3, config), config, "p", gen_rewrite=gen_output()
            )

    def test_missing_parent_image(self, config):
        with pytest.raises(RefinementError, match="reference"):
            build_population(
                schedule_actions(3, config),
                config,
                "p",
                gen_rewrite=gen_output(),
                edit_rewrite=edit_output(),
            )

    def test_fallback_plan_needs_no_edits(self, config):
        plan = schedule_actions(3, config).without_edits()
        population = build_population(plan, config, "p", gen_rewrite=gen_output())
        assert [c.kind for c in population] == [W] * 8


class TestCandidateBuilders:
    def test_resample_keeps_the_user_prompt(self, config):
        candidates = make_resample_candidates("user prompt", 3, 1, config, first_slot=2)
        assert [c.slot for c in candidates] == [2, 3, 4]
        assert {c.prompt for c in candidates} == {"user prompt"}
        assert {c.kind for c in candidates} == {R}

    def test_rewrite_needs_a_prompt(self, config):
        assert make_rewrite_candidates("", 0, 1, config) == []
        with pytest.raises(RefinementError):
            make_rewrite_candidates("", 2, 1, config)

    def test_edit_triple_keeps_a_preset_random_edit(self, config):
        candidates = make_edit_candidates(
            edit_output(random_edit="fix c"),
            fake_ref("parent"),
            3,
            config,
            random_edit_stream(config.run_seed, 3),
            first_slot=5,
        )
        assert [(c.slot, c.kind, c.prompt) for c in candidates] == [
            (5, ET, "fix a"),
            (6, ER, "fix c"),
            (7, EC, "fix a; fix b; fix c"),
        ]

    def test_edit_triple_needs_a_parent(self, config):
        with pytest.raises(RefinementError, match="reference"):
            make_edit_candidates(
                edit_output(), None, 3, config, random_edit_stream(config.run_seed, 3)
            )

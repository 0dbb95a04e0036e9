"""
Tests for Region and Evidence Bounds

CRITICAL: This module requires 100% test coverage.

Tests for:
- Region bbox ordering and depth range
- GroundingEvidence: regions inside the image, region cap, single-line text
- Candidate: reference image exactly on edit kinds
- ScoredCandidate: finite fitness or none

Author: Vladimir K.S.
"""

import pytest
from pydantic import ValidationError

from raise_t2i.core.models import (
    MAX_REGIONS,
    CandidateKind,
    GroundingEvidence,
    Region,
    ScoredCandidate,
)
from tests.utils.fixtures import fake_ref, make_candidate

pytestmark = pytest.mark.checks


class TestRegion:
    def test_valid_region(self):
        region = Region(label="a bear", bbox=(0, 0, 10, 20), mean_depth=255)
        assert region.area == 200
        assert region.fits(10, 20)
        assert not region.fits(9, 20)

    def test_degenerate_box_is_allowed(self):
        assert Region(label="dot", bbox=(5, 5, 5, 5), mean_depth=0).area == 0

    @pytest.mark.parametrize("bbox", [(10, 0, 5, 5), (0, 10, 5, 5)])
    def test_inverted_box_is_rejected(self, bbox):
        with pytest.raises(ValidationError):
            Region(label="x", bbox=bbox, mean_depth=0)

    @pytest.mark.parametrize("depth", [-1, 256])
    def test_depth_out_of_range_is_rejected(self, depth):
        with pytest.raises(ValidationError):
            Region(label="x", bbox=(0, 0, 1, 1), mean_depth=depth)

    @pytest.mark.parametrize("label", ["", "two\nlines", " padded"])
    def test_label_must_be_one_clean_line(self, label):
        with pytest.raises(ValidationError):
            Region(label=label, bbox=(0, 0, 1, 1), mean_depth=0)


class TestGroundingEvidence:
    def test_region_outside_image_is_rejected(self):
        with pytest.raises(ValidationError):
            GroundingEvidence(
                caption="c",
                regions=(Region(label="x", bbox=(0, 0, 65, 10), mean_depth=1),),
                image_width=64,
                image_height=64,
            )

    def test_region_cap(self):
        regions = tuple(
            Region(label=f"r{i}", bbox=(0, 0, 1, 1), mean_depth=1) for i in range(MAX_REGIONS + 1)
        )
        with pytest.raises(ValidationError):
            GroundingEvidence(caption="c", regions=regions, image_width=4, image_height=4)

    def test_no_regions_is_valid(self):
        evidence = GroundingEvidence(caption="empty street", image_width=8, image_height=8)
        assert evidence.regions == ()


class TestCandidateShape:
    def test_reference_only_on_edit_kinds(self):
        with pytest.raises(ValidationError):
            make_candidate(kind=CandidateKind.REWRITE, reference=fake_ref())
        candidate = make_candidate(kind=CandidateKind.EDIT_TOP)
        assert candidate.reference is not None

    def test_non_finite_fitness_is_rejected(self):
        with pytest.raises(ValidationError):
            ScoredCandidate(candidate=make_candidate(), output=fake_ref(), fitness=float("nan"))

    def test_missing_fitness_is_never_selectable(self):
        scored = ScoredCandidate(candidate=make_candidate(), output=fake_ref(), fitness=None)
        assert not scored.selectable

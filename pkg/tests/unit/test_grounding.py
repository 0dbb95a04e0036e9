"""
Tests for Grounding Evidence

Tests for:
- evidence_from_payload() - region validation, ordering, cap, rounding
- acquire_grounding() - disabled, missing and failing backends degrade to None
- serialize_evidence() / parse_evidence() - normative text format
- Round-trip of 1000 random valid evidence values

Author: Vladimir K.S.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raise_t2i.core.models import MAX_REGIONS, GroundingEvidence, Region
from raise_t2i.errors import SchemaViolation, TransportError
from raise_t2i.grounding import (
    MALFORMED_EVIDENCE,
    acquire_grounding,
    evidence_from_payload,
    parse_evidence,
    round_half_up,
    serialize_evidence,
)
from tests.utils.fixtures import fake_ref, image_ref


def payload(regions, caption="a bear and a clock", width=64, height=64):
    return {"caption": caption, "width": width, "height": height, "regions": regions}


def region(label="thing", bbox=(0, 0, 10, 10), depth=100):
    return {"label": label, "bbox": list(bbox), "mean_depth": depth}


class StaticGrounding:
    def __init__(self, reply=None, error=None):
        self.reply, self.error = reply, error

    def ground(self, image):
        if self.error:
            raise self.error
        return self.reply


# ====================
# Payload validation
# ====================


class TestEvidenceFromPayload:
    def test_regions_are_ordered_by_area_largest_first(self):
        result = evidence_from_payload(
            payload(
                [
                    region("small", (0, 0, 2, 2)),
                    region("big", (0, 0, 20, 20)),
                    region("medium-a", (0, 0, 5, 5)),
                    region("medium-b", (10, 10, 15, 15)),
                ]
            ),
            fake_ref(),
        )
        assert result.value is not None
        assert [r.label for r in result.value.regions] == ["big", "medium-a", "medium-b", "small"]
        assert result.warnings == []

    @pytest.mark.parametrize(
        "bad",
        [
            region(bbox=(0, 0, 1.5, 2)),
            {"label": "x", "bbox": [0, 0, 1], "mean_depth": 1},
            {"label": "x", "bbox": [0, 0, 1, 1]},
            region(bbox=(0, 0, 100, 10)),
            region(bbox=(5, 0, 1, 1)),
            region(depth=300),
            region(depth=float("nan")),
            region(depth=float("inf")),
            region(label=""),
            region(bbox=(True, 0, 1, 1)),
            "not a region",
        ],
    )
    def test_invalid_region_is_dropped_with_a_note(self, bad):
        result = evidence_from_payload(payload([bad, region("kept")]), fake_ref())
        assert result.value is not None
        assert [r.label for r in result.value.regions] == ["kept"]
        assert len(result.warnings) == 1
        assert result.warnings[0].startswith("region 0 rejected")

    def test_depth_is_rounded_half_up(self):
        result = evidence_from_payload(payload([region(depth=127.5)]), fake_ref())
        assert result.value is not None
        assert result.value.regions[0].mean_depth == 128
        assert round_half_up(2.5) == 3
        assert round_half_up(2.49) == 2

    def test_multiline_label_is_flattened(self):
        result = evidence_from_payload(payload([region("a red\nclock")]), fake_ref())
        assert result.value is not None
        assert result.value.regions[0].label == "a red clock"

    def test_regions_beyond_the_cap_drop_the_smallest(self):
        regions = [region(f"r{i}", (0, 0, i + 1, 1)) for i in range(MAX_REGIONS + 8)]
        result = evidence_from_payload(payload(regions), fake_ref())
        assert result.value is not None
        assert len(result.value.regions) == MAX_REGIONS
        assert result.value.regions[-1].label == "r8"
        assert any("over the cap" in w for w in result.warnings)

    def test_missing_caption_yields_no_evidence(self):
        result = evidence_from_payload(payload([region()], caption=""), fake_ref())
        assert result.value is None
        assert result.degraded

    def test_non_integer_size_yields_no_evidence(self):
        result = evidence_from_payload(payload([], width="wide"), fake_ref())
        assert result.value is None

    def test_size_defaults_to_the_image(self):
        result = evidence_from_payload({"caption": "c", "regions": []}, fake_ref())
        assert result.value is not None
        assert (result.value.image_width, result.value.image_height) == (64, 64)


# ====================
# Acquisition
# ====================


class TestAcquireGrounding:
    def test_good_backend_yields_evidence(self, config, memory_store):
        ref = image_ref(memory_store)
        result = acquire_grounding(
            ref, config, StaticGrounding(payload([region()])), memory_store
        )
        assert result.value is not None
        assert result.value.caption == "a bear and a clock"

    def test_disabled_tools_skip_the_backend(self, config, memory_store):
        off = config.with_overrides(enable_grounding_tools=False)
        result = acquire_grounding(
            image_ref(memory_store), off, StaticGrounding(error=AssertionError()), memory_store
        )
        assert result.value is None
        assert result.warnings == ["grounding tools disabled"]

    def test_missing_backend_degrades(self, config, memory_store):
        result = acquire_grounding(image_ref(memory_store), config, None, memory_store)
        assert result.value is None
        assert result.warnings == ["no grounding backend configured"]

    def test_failing_backend_degrades(self, config, memory_store):
        result = acquire_grounding(
            image_ref(memory_store),
            config,
            StaticGrounding(error=TransportError("down")),
            memory_store,
        )
        assert result.value is None
        assert "down" in result.warnings[0]


# ====================
# Text format
# ====================


class TestEvidenceText:
    def test_serialized_format(self):
        evidence = GroundingEvidence(
            caption="a red car parked on a street",
            regions=(Region(label="a red car", bbox=(40, 60, 200, 180), mean_depth=112),),
            image_width=512,
            image_height=512,
        )
        assert serialize_evidence(evidence) == (
            "detected_caption: a red car parked on a street\n"
            "image_size: (512, 512)\n"
            "Region Label: a red car\n"
            "Bounding Box: [40, 60, 200, 180]\n"
            "Average Depth: 112"
        )

    def test_caption_only(self):
        evidence = GroundingEvidence(caption="empty", image_width=8, image_height=4)
        assert serialize_evidence(evidence) == "detected_caption: empty\nimage_size: (8, 4)"
        assert parse_evidence(serialize_evidence(evidence)) == evidence

    @pytest.mark.parametrize(
        "text",
        [
            "garbage",
            "detected_caption: c\nimage_size: (8, 4)\nRegion Label: x",
            "caption: c\nimage_size: (8, 4)",
            "detected_caption: c\nimage_size: 8x4",
            "detected_caption: c\nimage_size: (8, 4)\nRegion Label: x\nBounding Box: [0, 0, 1]\nAverage Depth: 3",
            "detected_caption: c\nimage_size: (8, 4)\nRegion Label: x\nBounding Box: [0, 0, 9, 1]\nAverage Depth: 3",
            "detected_caption: c\nimage_size: (8, 4)\nRegion Label: x\nBounding Box: [0, 0, 1, 1]\nAverage Depth: deep",
        ],
    )
    def test_malformed_text_is_rejected(self, text):
        with pytest.raises(SchemaViolation) as excinfo:
            parse_evidence(text)
        assert excinfo.value.invariant == MALFORMED_EVIDENCE


LABELS = st.from_regex(r"[A-Za-z0-9]([A-Za-z0-9 ,.:'()-]{0,30}[A-Za-z0-9])?", fullmatch=True)


@st.composite
def evidence_values(draw):
    width = draw(st.integers(min_value=1, max_value=4096))
    height = draw(st.integers(min_value=1, max_value=4096))
    regions = []
    for _ in range(draw(st.integers(min_value=0, max_value=MAX_REGIONS))):
        x_min = draw(st.integers(min_value=0, max_value=width))
        x_max = draw(st.integers(min_value=x_min, max_value=width))
        y_min = draw(st.integers(min_value=0, max_value=height))
        y_max = draw(st.integers(min_value=y_min, max_value=height))
        regions.append(
            Region(
                label=draw(LABELS),
                bbox=(x_min, y_min, x_max, y_max),
                mean_depth=draw(st.integers(min_value=0, max_value=255)),
            )
        )
    return GroundingEvidence(
        caption=draw(LABELS), regions=tuple(regions), image_width=width, image_height=height
    )


@pytest.mark.property
@settings(max_examples=1000, deadline=None)
@given(evidence=evidence_values())
def test_serialized_evidence_parses_back_to_the_same_value(evidence):
    assert parse_evidence(serialize_evidence(evidence)) == evidence

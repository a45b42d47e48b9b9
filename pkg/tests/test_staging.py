import itertools
import json
import random

import pytest

from opstage.errors import EmptyVote, ValidationError
from opstage.staging import (
    ChestAssessment,
    FinalStage,
    OpacityLevel,
    SubRegion,
    determine_final_stage,
    majority_vote,
    stage_document,
)

L = OpacityLevel


def stage(levels, large=False):
    return determine_final_stage(ChestAssessment.from_levels(levels, large))


def all_cases():
    for levels in itertools.product(range(4), repeat=6):
        for large in (False, True):
            yield levels, large


@pytest.mark.parametrize(
    "votes,expected",
    [
        ([L.LEVEL1, L.LEVEL1, L.LEVEL2], L.LEVEL1),
        ([L.LEVEL1, L.LEVEL2], L.LEVEL2),
        ([L.NORMAL] * 3, L.NORMAL),
        ([0, 3, 3, 0, 1], L.LEVEL3),
    ],
)
def test_majority_vote(votes, expected):
    assert majority_vote(votes) is expected


def test_vote_empty():
    with pytest.raises(EmptyVote):
        majority_vote([])


@pytest.mark.parametrize("level", list(L))
@pytest.mark.parametrize("n", [1, 2, 5])
def test_vote_idempotent(level, n):
    assert majority_vote([level] * n) is level


@pytest.mark.parametrize(
    "levels,large,expected",
    [
        ([0] * 6, False, FinalStage.NORMAL),
        ([1, 1, 1, 0, 0, 0], False, FinalStage.STAGE_I),
        ([0] * 6, True, FinalStage.STAGE_III),
        ([2, 2, 2, 2, 0, 0], False, FinalStage.STAGE_II),
        ([3, 0, 0, 0, 0, 0], False, FinalStage.STAGE_II),
        ([1, 1, 0, 0, 0, 0], False, FinalStage.NORMAL),
        ([1, 0, 0, 0, 0, 0], False, FinalStage.NORMAL),
        ([2, 0, 0, 0, 0, 0], False, FinalStage.STAGE_I),
        ([2, 2, 2, 0, 0, 0], False, FinalStage.STAGE_I),
    ],
)
def test_worked_examples(levels, large, expected):
    assert stage(levels, large) is expected


def test_exhaustive_total_and_monotone():
    seen = 0
    for levels, large in all_cases():
        s = stage(levels, large)
        assert isinstance(s, FinalStage)
        seen += 1
        if not large:
            assert stage(levels, True) >= s
        for i in range(6):
            if levels[i] < 3:
                up = list(levels)
                up[i] += 1
                assert stage(up, large) >= s
    assert seen == 8192


def test_permutation_invariance():
    rng = random.Random(0)
    for _ in range(1000):
        levels = [rng.randrange(4) for _ in range(6)]
        large = rng.random() < 0.1
        shuffled = levels[:]
        rng.shuffle(shuffled)
        assert stage(levels, large) is stage(shuffled, large)


def test_stage_labels():
    assert [s.label for s in FinalStage] == ["normal", "stage-1", "stage-2", "stage-3"]


def test_document_roundtrip():
    doc = {r.value: 0 for r in SubRegion}
    doc["large_opacities"] = False
    assert stage_document(json.dumps(doc)) == "normal"
    doc["left-top"] = 3
    assert stage_document(json.dumps(doc)) == "stage-2"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("right-bottom"),
        lambda d: d.update({"left-top": 4}),
        lambda d: d.update({"left-top": "1"}),
        lambda d: d.update({"left-top": True}),
        lambda d: d.update({"large_opacities": 1}),
        lambda d: d.update({"center": 0}),
    ],
)
def test_document_validation(mutate):
    doc = {r.value: 0 for r in SubRegion}
    doc["large_opacities"] = False
    mutate(doc)
    with pytest.raises(ValidationError):
        stage_document(json.dumps(doc))


def test_assessment_requires_all_regions():
    with pytest.raises(ValidationError):
        ChestAssessment({SubRegion.LEFT_TOP: 1})

"""GBZ70-2015 staging: per-region reader voting and the final-stage rule table."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import EmptyVote, ValidationError


class SubRegion(str, enum.Enum):
    LEFT_TOP = "left-top"
    LEFT_MIDDLE = "left-middle"
    LEFT_BOTTOM = "left-bottom"
    RIGHT_TOP = "right-top"
    RIGHT_MIDDLE = "right-middle"
    RIGHT_BOTTOM = "right-bottom"


_REGIONS = tuple(SubRegion)


class OpacityLevel(enum.IntEnum):
    NORMAL = 0
    LEVEL1 = 1
    LEVEL2 = 2
    LEVEL3 = 3


_REGION_OF = {**{r: r for r in SubRegion}, **{r.value: r for r in SubRegion}}
_LEVEL_OF = {int(v): v for v in OpacityLevel}


class FinalStage(enum.IntEnum):
    NORMAL = 0
    STAGE_I = 1
    STAGE_II = 2
    STAGE_III = 3

    @property
    def label(self) -> str:
        return "normal" if self is FinalStage.NORMAL else f"stage-{int(self)}"


@dataclass(frozen=True)
class ChestAssessment:
    levels: Mapping[SubRegion, OpacityLevel]
    large_opacities: bool = False

    def __post_init__(self):
        try:
            levels = {_REGION_OF[k]: _LEVEL_OF[v] for k, v in dict(self.levels).items()}
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"invalid sub-region or level: {exc}") from None
        if len(levels) != len(SubRegion) or len(self.levels) != len(SubRegion):
            missing = sorted(r.value for r in set(SubRegion) - set(levels))
            raise ValidationError(f"assessment must grade all six sub-regions; missing {missing}")
        object.__setattr__(self, "levels", MappingProxyType(levels))
        object.__setattr__(self, "large_opacities", bool(self.large_opacities))

    @classmethod
    def from_levels(cls, levels: Iterable[int], large_opacities: bool = False):
        """Build from six levels given in ``SubRegion`` declaration order."""
        levels = list(levels)
        if len(levels) != len(SubRegion):
            raise ValidationError("exactly six levels required")
        return cls(dict(zip(_REGIONS, levels)), large_opacities)

    @classmethod
    def from_json(cls, doc: Mapping):
        if not isinstance(doc, Mapping):
            raise ValidationError("assessment document must be a JSON object")
        unknown = set(doc) - {r.value for r in SubRegion} - {"large_opacities"}
        if unknown:
            raise ValidationError(f"unknown assessment keys: {sorted(unknown)}")
        levels = {}
        for region in SubRegion:
            if region.value not in doc:
                raise ValidationError(f"missing sub-region {region.value!r}")
            v = doc[region.value]
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 3:
                raise ValidationError(f"{region.value}: level must be an integer 0-3, got {v!r}")
            levels[region] = v
        large = doc.get("large_opacities", False)
        if not isinstance(large, bool):
            raise ValidationError("large_opacities must be a boolean")
        return cls(levels, large)


def majority_vote(reader_labels: Iterable[int]) -> OpacityLevel:
    """Most frequent level; ties resolve to the more severe level."""
    counts = Counter(OpacityLevel(v) for v in reader_labels)
    if not counts:
        raise EmptyVote("no reader labels to vote on")
    return max(counts, key=lambda lvl: (counts[lvl], lvl))


def determine_final_stage(a: ChestAssessment) -> FinalStage:
    # first matching rule from the top wins
    if a.large_opacities:
        return FinalStage.STAGE_III
    n = [0, 0, 0, 0]
    for level in a.levels.values():
        n[level] += 1
    if n[OpacityLevel.LEVEL3] >= 1 or n[OpacityLevel.LEVEL2] >= 4:
        return FinalStage.STAGE_II
    if n[OpacityLevel.LEVEL2] >= 1 or n[OpacityLevel.LEVEL1] >= 3:
        return FinalStage.STAGE_I
    return FinalStage.NORMAL


def stage_document(text: str) -> str:
    """Parse an assessment JSON string and return the stage label."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"assessment is not valid JSON: {exc}") from None
    return determine_final_stage(ChestAssessment.from_json(doc)).label

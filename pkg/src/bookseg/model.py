"""Region and rule vocabulary: region objects, type rules with zone
constraints, and the candidate-type predicate.

Zones are stored in relative page coordinates ([0,1] per axis) so one rule
set applies across pages of different scan sizes; they are scaled to absolute
pixels at evaluation time.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .geometry import Rect, RotatedRect

IMAGE = "image"
PARAGRAPH = "paragraph"
MARGINALIA = "marginalia"
PAGE_NUMBER = "page-number"
SIGNATURE_MARK = "signature-mark"
HEADING = "heading"
IMAGE_DESCRIPTION = "image-description"

KNOWN_TYPES = (IMAGE, PARAGRAPH, MARGINALIA, PAGE_NUMBER, SIGNATURE_MARK,
               HEADING, IMAGE_DESCRIPTION)

POSITIONS = ("top", "bottom", "left", "right")


def validate_type_id(type_id: str) -> str:
    """Known ids pass through; anything else is a custom label and must be non-empty."""
    if not isinstance(type_id, str) or not type_id.strip():
        raise InvalidInputError(f"region type must be a non-empty string, got {type_id!r}")
    return type_id


@dataclass(eq=False)
class Region:
    """A page region in one coordinate space (working during the pipeline,
    original afterwards)."""

    id: str
    region_type: Optional[str]
    contour: np.ndarray               # (N, 2) int32
    rect: Rect
    area: int                         # foreground pixel count
    rotated_rect: Optional[RotatedRect] = None
    candidates: Tuple[str, ...] = ()
    fixed: bool = False
    flagged: bool = False             # set when a fallback kept an unverified type

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "type": self.region_type,
            "contour": np.asarray(self.contour).reshape(-1, 2).astype(int).tolist(),
            "rect": [float(self.rect.x), float(self.rect.y), float(self.rect.w), float(self.rect.h)],
            "area": int(self.area),
            "candidates": list(self.candidates),
            "fixed": bool(self.fixed),
            "flagged": bool(self.flagged),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        contour = np.asarray(d["contour"], dtype=np.int32).reshape(-1, 2)
        rect = Rect(*d["rect"])
        return cls(id=d["id"], region_type=d.get("type"), contour=contour, rect=rect,
                   area=int(d.get("area", 0)), candidates=tuple(d.get("candidates", ())),
                   fixed=bool(d.get("fixed", False)), flagged=bool(d.get("flagged", False)))


@dataclass(frozen=True)
class TypeRule:
    """Constraint row for one region type.

    `zones` are relative rects; empty means no positional restriction.
    `max_occurrence` is 1 or None for unbounded; `priority_position` picks the
    survivor when max_occurrence is 1.
    """

    type_id: str
    min_area: float
    zones: Tuple[Rect, ...] = ()
    max_occurrence: Optional[int] = None
    priority_position: Optional[str] = None

    def validate(self) -> None:
        validate_type_id(self.type_id)
        if self.min_area < 0:
            raise InvalidInputError(f"rule {self.type_id}: min_area must be >= 0")
        for z in self.zones:
            if not (0.0 <= z.x and 0.0 <= z.y and z.x2 <= 1.0 + 1e-9 and z.y2 <= 1.0 + 1e-9
                    and z.w >= 0 and z.h >= 0):
                raise InvalidInputError(f"rule {self.type_id}: zone {z} outside the unit square")
        if self.max_occurrence not in (None, 1):
            raise InvalidInputError(f"rule {self.type_id}: max_occurrence must be 1 or unbounded")
        if (self.max_occurrence == 1) != (self.priority_position is not None):
            raise InvalidInputError(
                f"rule {self.type_id}: priority_position is required exactly when max_occurrence is 1")
        if self.priority_position is not None and self.priority_position not in POSITIONS:
            raise InvalidInputError(f"rule {self.type_id}: unknown priority position {self.priority_position}")


# Working-scale area floors, calibrated for pages resized to 1600 px height.
MIN_AREA_PARAGRAPH = 2000
MIN_AREA_MARGINALIA = 2000
MIN_AREA_PAGE_NUMBER = 500


def default_rules() -> List[TypeRule]:
    """Stock rule set: images anywhere, paragraphs anywhere, marginalia in the
    left/right quarter, a single page number in the top/bottom quarter."""
    return [
        TypeRule(IMAGE, min_area=0),
        TypeRule(PARAGRAPH, min_area=MIN_AREA_PARAGRAPH),
        TypeRule(MARGINALIA, min_area=MIN_AREA_MARGINALIA, zones=(
            Rect(0.0, 0.0, 0.25, 1.0),
            Rect(0.75, 0.0, 0.25, 1.0),
        )),
        TypeRule(PAGE_NUMBER, min_area=MIN_AREA_PAGE_NUMBER, zones=(
            Rect(0.0, 0.0, 1.0, 0.25),
            Rect(0.0, 0.75, 1.0, 0.25),
        ), max_occurrence=1, priority_position="top"),
    ]


DEFAULT_PRIORITY = (PAGE_NUMBER, MARGINALIA, PARAGRAPH)


def within(rect: Rect, zones: Sequence[Rect]) -> bool:
    """True iff some single zone fully contains `rect`; zones are not unioned."""
    return any(z.contains_rect(rect) for z in zones)


def candidate_types(region: Region, rules: Sequence[TypeRule], page_size: Tuple[int, int],
                    area_factor: float = 1.0) -> Tuple[str, ...]:
    """Types whose rule the region satisfies: area strictly above the floor and,
    when the rule has zones, the bounding rect inside one scaled zone.

    `area_factor` rescales the region's area into the space the floors are
    calibrated for (used when evaluating original-resolution regions).
    Order follows the rule list; membership is what matters.
    """
    width, height = page_size
    out = []
    for rule in rules:
        if region.area * area_factor <= rule.min_area:
            continue
        if rule.zones:
            scaled = [z.scale(width, height) for z in rule.zones]
            if not within(region.rect, scaled):
                continue
        out.append(rule.type_id)
    return tuple(out)

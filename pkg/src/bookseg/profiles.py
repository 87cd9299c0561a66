"""Per-book segmentation profiles: every tunable the pipeline, corrections
and line segmentation consume, with JSON persistence and validation.

One profile file (`larex-profile.json`) lives beside each book's images so a
tuned setup can be copied to other books with similar layouts.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

from .errors import ProfileError
from .geometry import Rect
from .model import DEFAULT_PRIORITY, IMAGE, TypeRule, default_rules
from .errors import InvalidInputError

SCHEMA_VERSION = 1

REMOVAL_MODES = ("contour", "straight-rect", "rotated-rect")


@dataclass
class SegmentationProfile:
    target_height: int = 1600
    image_kernel: Tuple[int, int] = (5, 5)        # (width, height)
    text_kernel: Tuple[int, int] = (21, 15)
    image_area_threshold: int = 3000
    image_removal_mode: str = "straight-rect"
    image_dilation_enabled: bool = True
    binarization_threshold: Optional[int] = None  # None = Otsu
    roi: Optional[Rect] = None                    # relative page coordinates
    rules: List[TypeRule] = field(default_factory=default_rules)
    priority: Tuple[str, ...] = DEFAULT_PRIORITY
    skew_min_area: int = 1500
    heading_height_factor: float = 1.4
    heading_area_factor: float = 1.4

    def text_rules(self) -> List[TypeRule]:
        return [r for r in self.rules if r.type_id != IMAGE]

    def rule_for(self, type_id: str) -> Optional[TypeRule]:
        for r in self.rules:
            if r.type_id == type_id:
                return r
        return None

    def validate(self) -> None:
        """Raise ProfileError enumerating every invalid field."""
        problems: List[str] = []
        if self.target_height <= 0:
            problems.append(f"target_height: must be positive, got {self.target_height}")
        for name, kernel in (("image_kernel", self.image_kernel), ("text_kernel", self.text_kernel)):
            if len(kernel) != 2 or any(k < 1 or k % 2 == 0 for k in kernel):
                problems.append(f"{name}: dimensions must be odd and >= 1, got {kernel}")
        if self.image_area_threshold < 0:
            problems.append(f"image_area_threshold: must be >= 0, got {self.image_area_threshold}")
        if self.image_removal_mode not in REMOVAL_MODES:
            problems.append(f"image_removal_mode: expected one of {REMOVAL_MODES}, got {self.image_removal_mode!r}")
        if self.binarization_threshold is not None and not (0 <= self.binarization_threshold <= 255):
            problems.append(f"binarization_threshold: must be in [0, 255], got {self.binarization_threshold}")
        if self.roi is not None:
            r = self.roi
            if not (0.0 <= r.x and 0.0 <= r.y and r.x2 <= 1.0 and r.y2 <= 1.0 and r.w > 0 and r.h > 0):
                problems.append(f"roi: must be a non-empty rect inside the unit square, got {r}")
        if self.skew_min_area < 0:
            problems.append(f"skew_min_area: must be >= 0, got {self.skew_min_area}")
        for name, factor in (("heading_height_factor", self.heading_height_factor),
                             ("heading_area_factor", self.heading_area_factor)):
            if factor <= 0:
                problems.append(f"{name}: must be positive, got {factor}")
        seen = set()
        for rule in self.rules:
            try:
                rule.validate()
            except InvalidInputError as e:
                problems.append(f"rules: {e}")
            if rule.type_id in seen:
                problems.append(f"rules: duplicate rule for type {rule.type_id!r}")
            seen.add(rule.type_id)
        if len(set(self.priority)) != len(self.priority):
            problems.append("priority: duplicate entries")
        # image regions are assigned in their own pass, so priority covers text rules only
        missing = [r.type_id for r in self.text_rules() if r.type_id not in self.priority]
        if missing:
            problems.append(f"priority: missing text rule types {missing}")
        if problems:
            raise ProfileError("; ".join(problems))


def default_profile() -> SegmentationProfile:
    return SegmentationProfile()


def _rect_to_list(r: Optional[Rect]):
    return None if r is None else [r.x, r.y, r.w, r.h]


def _rect_from_list(v) -> Optional[Rect]:
    return None if v is None else Rect(*(float(c) for c in v))


def profile_to_dict(profile: SegmentationProfile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "target_height": profile.target_height,
        "image_kernel": list(profile.image_kernel),
        "text_kernel": list(profile.text_kernel),
        "image_area_threshold": profile.image_area_threshold,
        "image_removal_mode": profile.image_removal_mode,
        "image_dilation_enabled": profile.image_dilation_enabled,
        "binarization_threshold": profile.binarization_threshold,
        "roi": _rect_to_list(profile.roi),
        "skew_min_area": profile.skew_min_area,
        "heading_height_factor": profile.heading_height_factor,
        "heading_area_factor": profile.heading_area_factor,
        "rules": [
            {
                "type": r.type_id,
                "min_area": r.min_area,
                "zones": [_rect_to_list(z) for z in r.zones],
                "max_occurrence": r.max_occurrence,
                "priority_position": r.priority_position,
            }
            for r in profile.rules
        ],
        "priority": list(profile.priority),
    }


def profile_from_dict(doc: dict) -> SegmentationProfile:
    """Build and validate a profile from its JSON form."""
    if not isinstance(doc, dict):
        raise ProfileError(f"profile document must be an object, got {type(doc).__name__}")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ProfileError(f"unsupported profile schema_version {version}")
    defaults = SegmentationProfile()
    try:
        rules_doc = doc.get("rules")
        if rules_doc is None:
            rules = default_rules()
        else:
            rules = [
                TypeRule(
                    type_id=r["type"],
                    min_area=float(r.get("min_area", 0)),
                    zones=tuple(_rect_from_list(z) for z in r.get("zones", [])),
                    max_occurrence=r.get("max_occurrence"),
                    priority_position=r.get("priority_position"),
                )
                for r in rules_doc
            ]
        profile = SegmentationProfile(
            target_height=int(doc.get("target_height", defaults.target_height)),
            image_kernel=tuple(doc.get("image_kernel", defaults.image_kernel)),
            text_kernel=tuple(doc.get("text_kernel", defaults.text_kernel)),
            image_area_threshold=int(doc.get("image_area_threshold", defaults.image_area_threshold)),
            image_removal_mode=doc.get("image_removal_mode", defaults.image_removal_mode),
            image_dilation_enabled=bool(doc.get("image_dilation_enabled", defaults.image_dilation_enabled)),
            binarization_threshold=doc.get("binarization_threshold"),
            roi=_rect_from_list(doc.get("roi")),
            skew_min_area=int(doc.get("skew_min_area", defaults.skew_min_area)),
            heading_height_factor=float(doc.get("heading_height_factor", defaults.heading_height_factor)),
            heading_area_factor=float(doc.get("heading_area_factor", defaults.heading_area_factor)),
            rules=rules,
            priority=tuple(doc.get("priority", DEFAULT_PRIORITY)),
        )
    except ProfileError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ProfileError(f"malformed profile document: {e}") from e
    profile.validate()
    return profile


def save_profile(profile: SegmentationProfile, path: Union[str, Path]) -> Path:
    profile.validate()
    path = Path(path)
    path.write_text(json.dumps(profile_to_dict(profile), indent=2) + "\n", encoding="utf-8")
    return path


def load_profile(path: Union[str, Path]) -> SegmentationProfile:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ProfileError(f"{path}: cannot read: {e}") from e
    except json.JSONDecodeError as e:
        raise ProfileError(f"{path}: invalid JSON: {e}") from e
    return profile_from_dict(doc)

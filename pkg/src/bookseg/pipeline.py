"""Page segmentation pipeline: image detection, text region growing, rule
classification, priority and occurrence resolution, reading order, and
rescaling back to original image coordinates.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import cv2
import numpy as np

from . import imaging
from .errors import NotFoundError
from .geometry import Rect, bounding_rect, clamp_points, rect_corners, round_points, rotated_rect_from_cv
from .model import IMAGE, MARGINALIA, PAGE_NUMBER, SIGNATURE_MARK, Region, candidate_types
from .profiles import SegmentationProfile

# types read after the running text; everything else is body text
AUX_TYPES = (MARGINALIA, PAGE_NUMBER, SIGNATURE_MARK)


@dataclass(eq=False)
class PageSegmentation:
    """Layout of one page, region coordinates in original image space.

    `unclassified` holds regions every rule rejected plus occurrence-limit
    drops; they are not part of the result but the UI shows them as
    diagnostics. `profile` is the profile the page was segmented with, kept so
    later edits can re-classify cut pieces.
    """

    page_id: str
    original_size: Tuple[int, int]            # (width, height)
    regions: List[Region]
    reading_order: List[str]
    unclassified: List[Region] = field(default_factory=list)
    image_filename: Optional[str] = None
    profile: Optional[SegmentationProfile] = None

    def region_by_id(self, region_id: str) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise NotFoundError(f"no region {region_id!r} on page {self.page_id!r}")

    def has_region(self, region_id: str) -> bool:
        return any(r.id == region_id for r in self.regions)

    def with_regions(self, regions: List[Region]) -> "PageSegmentation":
        return PageSegmentation(
            page_id=self.page_id,
            original_size=self.original_size,
            regions=regions,
            reading_order=reading_order(regions),
            unclassified=list(self.unclassified),
            image_filename=self.image_filename,
            profile=self.profile,
        )

    def to_dict(self) -> dict:
        return {
            "page_id": self.page_id,
            "image_filename": self.image_filename,
            "size": [int(self.original_size[0]), int(self.original_size[1])],
            "regions": [r.to_dict() for r in self.regions],
            "reading_order": list(self.reading_order),
            "unclassified": [r.to_dict() for r in self.unclassified],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PageSegmentation":
        return cls(
            page_id=d["page_id"],
            original_size=(int(d["size"][0]), int(d["size"][1])),
            regions=[Region.from_dict(r) for r in d.get("regions", [])],
            reading_order=list(d.get("reading_order", [])),
            unclassified=[Region.from_dict(r) for r in d.get("unclassified", [])],
            image_filename=d.get("image_filename"),
        )


def working_area_factor(profile: SegmentationProfile, original_size: Tuple[int, int]) -> float:
    """Squared scale turning original-resolution areas into working-scale ones,
    where the rule area floors are calibrated."""
    height = original_size[1]
    if height <= 0 or height <= profile.target_height:
        return 1.0
    s = profile.target_height / height
    return s * s


def classify_original_region(region: Region, profile: SegmentationProfile,
                             original_size: Tuple[int, int]) -> Tuple[str, ...]:
    """Candidate types for a region already in original coordinates."""
    factor = working_area_factor(profile, original_size)
    return candidate_types(region, profile.text_rules(), original_size, area_factor=factor)


def pick_by_priority(candidates: Sequence[str], priority: Sequence[str]) -> Optional[str]:
    for type_id in priority:
        if type_id in candidates:
            return type_id
    return None


def detect_images(r: np.ndarray, profile: SegmentationProfile):
    """Find components larger than the image area threshold on a dilated scratch
    copy, erase them per the removal mode, and return (imageRegions, cleaned)."""
    kw, kh = profile.image_kernel
    scratch = imaging.dilate(r, kw, kh) if profile.image_dilation_enabled else r
    cleaned = r.copy()
    regions: List[Region] = []
    for comp in imaging.connected_components(scratch):
        if comp.area <= profile.image_area_threshold:
            continue
        if profile.image_removal_mode == "contour":
            shape = comp.contour
            contour = comp.contour
            rect = comp.rect
        elif profile.image_removal_mode == "rotated-rect":
            shape = comp.rotated_rect
            contour = round_points(comp.rotated_rect.box_points())
            rect = bounding_rect(contour)
        else:
            shape = comp.rect
            contour = rect_corners(comp.rect)
            rect = comp.rect
        cleaned = imaging.erase_pixels(cleaned, shape)
        regions.append(Region(
            id=f"img-{len(regions)}",
            region_type=IMAGE,
            contour=np.asarray(contour, dtype=np.int32),
            rect=rect,
            area=comp.area,
            rotated_rect=comp.rotated_rect,
        ))
    return regions, cleaned


def grow_text_regions(r: np.ndarray, profile: SegmentationProfile) -> List[Region]:
    """Dilate with the text kernel so words fuse into blocks; one region per
    resulting component."""
    kw, kh = profile.text_kernel
    dilated = imaging.dilate(r, kw, kh)
    regions: List[Region] = []
    for comp in imaging.connected_components(dilated):
        regions.append(Region(
            id=f"txt-{len(regions)}",
            region_type=None,
            contour=comp.contour,
            rect=comp.rect,
            area=comp.area,
            rotated_rect=comp.rotated_rect,
        ))
    return regions


def classify_regions(regions: Sequence[Region], profile: SegmentationProfile,
                     page_size: Tuple[int, int]) -> List[Region]:
    """Attach rule candidate sets; an empty set marks the region unclassified."""
    rules = profile.text_rules()
    return [replace(r, candidates=candidate_types(r, rules, page_size)) for r in regions]


def resolve_priorities(regions: Sequence[Region], profile: SegmentationProfile) -> List[Region]:
    """Give each region its highest-priority candidate; candidate-less regions
    are dropped here (the caller keeps them as diagnostics)."""
    out = []
    for r in regions:
        chosen = pick_by_priority(r.candidates, profile.priority)
        if chosen is not None:
            out.append(replace(r, region_type=chosen))
    return out


def _position_key(position: str, region: Region):
    rect = region.rect
    edge = {
        "top": rect.y,
        "bottom": -rect.y2,
        "left": rect.x,
        "right": -rect.x2,
    }[position]
    # ties: larger area first, then leftmost, then stable id
    return (edge, -region.area, rect.x, region.id)


def resolve_max_occurrence(regions: Sequence[Region], profile: SegmentationProfile) -> List[Region]:
    """Enforce max_occurrence=1 rules: keep the holder best matching the rule's
    priority position; losers fall back to their next candidate down the
    priority list or drop out entirely.

    Types are visited in priority order, so a loser re-assigned to a lower
    type still takes part in that type's contest.
    """
    current: List[Optional[Region]] = list(regions)
    for type_id in profile.priority:
        rule = profile.rule_for(type_id)
        if rule is None or rule.max_occurrence != 1:
            continue
        holders = [(i, r) for i, r in enumerate(current) if r is not None and r.region_type == type_id]
        if len(holders) <= 1:
            continue
        winner_i, _ = min(holders, key=lambda ir: _position_key(rule.priority_position, ir[1]))
        rank = {t: k for k, t in enumerate(profile.priority)}
        for i, r in holders:
            if i == winner_i:
                continue
            lower = [t for t in r.candidates if t in rank and rank[t] > rank[type_id]]
            if lower:
                next_type = min(lower, key=lambda t: rank[t])
                current[i] = replace(r, region_type=next_type)
            else:
                current[i] = None
    return [r for r in current if r is not None]


def _cluster_columns(regions: List[Region]) -> List[List[Region]]:
    """Group body regions whose horizontal extents transitively overlap."""
    ordered = sorted(regions, key=lambda r: (r.rect.x, r.rect.y, r.id))
    columns: List[List[Region]] = []
    spans: List[Tuple[float, float]] = []
    for r in ordered:
        placed = False
        for i, (x0, x1) in enumerate(spans):
            if r.rect.x < x1 and r.rect.x2 > x0:
                columns[i].append(r)
                spans[i] = (min(x0, r.rect.x), max(x1, r.rect.x2))
                placed = True
                break
        if not placed:
            columns.append([r])
            spans.append((r.rect.x, r.rect.x2))
    # merge clusters that became overlapping as spans grew
    merged = True
    while merged:
        merged = False
        for i in range(len(spans)):
            for j in range(i + 1, len(spans)):
                if spans[i][0] < spans[j][1] and spans[i][1] > spans[j][0]:
                    columns[i].extend(columns[j])
                    spans[i] = (min(spans[i][0], spans[j][0]), max(spans[i][1], spans[j][1]))
                    del columns[j], spans[j]
                    merged = True
                    break
            if merged:
                break
    order = sorted(range(len(columns)), key=lambda i: spans[i][0])
    return [columns[i] for i in order]


def reading_order(regions: Sequence[Region]) -> List[str]:
    """Body text column by column, top to bottom; marginalia, page numbers and
    signature marks afterwards, top to bottom."""
    text = [r for r in regions if r.region_type not in (None, IMAGE)]
    body = [r for r in text if r.region_type not in AUX_TYPES]
    aux = [r for r in text if r.region_type in AUX_TYPES]
    ordered: List[str] = []
    for column in _cluster_columns(body):
        column.sort(key=lambda r: (r.rect.y, r.rect.x, r.id))
        ordered.extend(r.id for r in column)
    aux.sort(key=lambda r: (r.rect.y, r.rect.x, r.id))
    ordered.extend(r.id for r in aux)
    return ordered


def _rescale_region(region: Region, fx: float, fy: float, size: Tuple[int, int]) -> Region:
    if fx == 1.0 and fy == 1.0:
        return region
    width, height = size
    pts = np.asarray(region.contour, dtype=np.float64) * np.array([fx, fy])
    pts = clamp_points(round_points(pts), width, height)
    rect = bounding_rect(pts)
    rrect = rotated_rect_from_cv(cv2.minAreaRect(pts.reshape(-1, 1, 2).astype(np.float32)))
    return replace(region, contour=pts, rect=rect, area=int(round(region.area * fx * fy)),
                   rotated_rect=rrect)


def segment_page(image: np.ndarray, profile: SegmentationProfile,
                 page_id: str = "page", image_filename: Optional[str] = None) -> PageSegmentation:
    """Run the full rule-based segmentation of one page image.

    Steps: binarize, mask ROI, resize to the working height, detect and erase
    images, grow text regions, classify by rules, resolve priorities and
    occurrence limits, order for reading, then rescale everything to original
    coordinates.
    """
    profile.validate()
    binary = imaging.binarize(image, profile.binarization_threshold)
    orig_h, orig_w = binary.shape[:2]
    roi = profile.roi.scale(orig_w, orig_h) if profile.roi is not None else None
    masked = imaging.apply_roi(binary, roi)
    working, transform = imaging.resize_to_height(masked, profile.target_height)
    wh, ww = working.shape[:2]

    image_regions, cleaned = detect_images(working, profile)
    grown = grow_text_regions(cleaned, profile)
    classified = classify_regions(grown, profile, (ww, wh))
    typed = resolve_priorities(classified, profile)
    kept = resolve_max_occurrence(typed, profile)
    kept_ids = {r.id for r in kept}
    diagnostics = [r for r in classified if not r.candidates]
    diagnostics += [r for r in typed if r.id not in kept_ids]

    size = (orig_w, orig_h)
    fx, fy = transform.fx, transform.fy
    regions = [_rescale_region(r, fx, fy, size) for r in image_regions + kept]
    diagnostics = [_rescale_region(r, fx, fy, size) for r in diagnostics]

    return PageSegmentation(
        page_id=page_id,
        original_size=size,
        regions=regions,
        reading_order=reading_order(regions),
        unclassified=diagnostics,
        image_filename=image_filename,
        profile=profile,
    )

"""Manual correction gestures over a PageSegmentation, recorded as a
replayable edit log.

All operations are pure: they return a new PageSegmentation and leave the
input untouched. Geometry in edits is in original image coordinates so logs
survive profile changes that alter the working resolution.
"""

import json
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np

from .errors import InvalidInputError, NotFoundError, ReplayError
from .geometry import Rect, bounding_rect, rect_corners, round_points, rotated_rect_from_cv
from .model import IMAGE, Region, validate_type_id
from .pipeline import PageSegmentation, classify_original_region, pick_by_priority

EDIT_KINDS = ("cut-polyline", "fix-rect", "fix-polygon", "delete", "retype", "merge")
_GEOMETRY_KINDS = ("cut-polyline", "fix-rect", "fix-polygon")


@dataclass
class Edit:
    """One correction gesture, self-contained enough to replay."""

    kind: str
    geometry: Optional[np.ndarray] = None   # (N, 2) float, original coordinates
    targets: Tuple[str, ...] = ()
    new_type: Optional[str] = None
    timestamp: float = 0.0

    def validate(self) -> None:
        if self.kind not in EDIT_KINDS:
            raise InvalidInputError(f"unknown edit kind {self.kind!r}")
        has_geometry = self.geometry is not None and np.asarray(self.geometry).size > 0
        if (self.kind in _GEOMETRY_KINDS) != has_geometry:
            raise InvalidInputError(f"edit kind {self.kind} geometry mismatch")
        if self.kind == "cut-polyline":
            if len(self.targets) != 1:
                raise InvalidInputError("cut-polyline needs exactly one target region")
            if np.asarray(self.geometry).reshape(-1, 2).shape[0] < 2:
                raise InvalidInputError("cut polyline needs at least 2 points")
        elif self.kind == "fix-rect":
            if np.asarray(self.geometry).reshape(-1, 2).shape[0] != 2:
                raise InvalidInputError("fix-rect geometry is two opposite corners")
        elif self.kind == "fix-polygon":
            if np.asarray(self.geometry).reshape(-1, 2).shape[0] < 3:
                raise InvalidInputError("fix polygon needs at least 3 points")
        if self.kind in ("delete", "retype") and len(self.targets) != 1:
            raise InvalidInputError(f"{self.kind} needs exactly one target region")
        if self.kind == "merge" and len(self.targets) < 2:
            raise InvalidInputError("merge needs at least two target regions")
        if self.kind in ("fix-rect", "fix-polygon", "retype", "merge"):
            if not self.new_type:
                raise InvalidInputError(f"{self.kind} needs new_type")
            validate_type_id(self.new_type)

    def to_dict(self) -> dict:
        geometry = None
        if self.geometry is not None:
            geometry = np.asarray(self.geometry, dtype=float).reshape(-1, 2).tolist()
        return {
            "kind": self.kind,
            "geometry": geometry,
            "targets": list(self.targets),
            "new_type": self.new_type,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Edit":
        geometry = d.get("geometry")
        return cls(
            kind=d.get("kind", ""),
            geometry=None if geometry is None else np.asarray(geometry, dtype=float).reshape(-1, 2),
            targets=tuple(d.get("targets", ())),
            new_type=d.get("new_type"),
            timestamp=float(d.get("timestamp", 0.0)),
        )


@dataclass
class EditLog:
    """Ordered edits for one page; persists beside the page as `<stem>.edits.json`."""

    edits: List[Edit] = field(default_factory=list)

    def append(self, edit: Edit) -> None:
        edit.validate()
        self.edits.append(edit)

    def to_dict(self) -> dict:
        return {"schema_version": 1, "edits": [e.to_dict() for e in self.edits]}

    @classmethod
    def from_dict(cls, d: dict) -> "EditLog":
        return cls(edits=[Edit.from_dict(e) for e in d.get("edits", [])])

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EditLog":
        path = Path(path)
        try:
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            raise InvalidInputError(f"{path}: invalid edit log: {e}") from e


def _support_mask(region: Region, pad: int = 2):
    """Filled contour mask in a padded local frame; returns (mask, origin)."""
    rect = region.rect.as_int()
    x0, y0 = int(rect.x) - pad, int(rect.y) - pad
    w, h = int(rect.w) + 2 * pad, int(rect.h) + 2 * pad
    mask = np.zeros((h, w), dtype=np.uint8)
    pts = np.asarray(region.contour, dtype=np.int32).reshape(-1, 1, 2) - np.array([x0, y0], dtype=np.int32)
    cv2.drawContours(mask, [pts], -1, 255, cv2.FILLED)
    return mask, (x0, y0)


def _polygon_pixel_area(contour: np.ndarray) -> int:
    pts = np.asarray(contour, dtype=np.int32).reshape(-1, 2)
    if pts.shape[0] == 0:
        return 0
    region = Region(id="tmp", region_type=None, contour=pts, rect=bounding_rect(pts), area=0)
    mask, _ = _support_mask(region, pad=1)
    return int(np.count_nonzero(mask))


def _classify_piece(piece: Region, parent: Region, seg: PageSegmentation) -> Region:
    """Cut pieces get re-classified under the page's profile; pieces matching no
    rule keep the parent's type and are flagged for review."""
    if parent.region_type == IMAGE:
        return replace(piece, region_type=IMAGE, candidates=(IMAGE,))
    if seg.profile is None:
        return replace(piece, region_type=parent.region_type, flagged=True)
    cands = classify_original_region(piece, seg.profile, seg.original_size)
    chosen = pick_by_priority(cands, seg.profile.priority)
    if chosen is None:
        return replace(piece, region_type=parent.region_type, candidates=cands, flagged=True)
    return replace(piece, region_type=chosen, candidates=cands)


def cut_region(seg: PageSegmentation, region_id: str, polyline: np.ndarray) -> PageSegmentation:
    """Split a region along a drawn polyline.

    The polyline is rasterized 1 px wide (4-connected, so it actually severs
    8-connected support) over the region's filled contour; each remaining
    component becomes a piece and the severed line pixels are folded back into
    the nearest piece, conserving the parent's pixel support exactly.
    """
    region = seg.region_by_id(region_id)
    support, origin = _support_mask(region)
    pts = round_points(np.asarray(polyline, dtype=np.float64).reshape(-1, 2)) - np.array(origin, dtype=np.int32)
    line = np.zeros_like(support)
    cv2.polylines(line, [pts.reshape(-1, 1, 2)], False, 255, thickness=1, lineType=cv2.LINE_4)
    severed = support.copy()
    severed[line > 0] = 0
    n, labels = cv2.connectedComponents((severed > 0).astype(np.uint8), connectivity=8)
    if n - 1 < 2:
        warnings.warn(f"cut polyline does not separate region {region_id}; no-op")
        return seg

    # hand the line pixels inside the support back to adjacent pieces
    claimed = labels.astype(np.int32)
    remaining = (line > 0) & (support > 0)
    kernel = np.ones((3, 3), dtype=np.uint8)
    while remaining.any():
        progress = False
        for lbl in range(1, n):
            grown = cv2.dilate((claimed == lbl).astype(np.uint8), kernel) > 0
            take = grown & remaining
            if take.any():
                claimed[take] = lbl
                remaining &= ~take
                progress = True
        if not progress:
            claimed[remaining] = 1
            break

    ox, oy = origin
    pieces: List[Region] = []
    for lbl in range(1, n):
        mask = (claimed == lbl).astype(np.uint8)
        contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        if not contours:
            continue
        contour = max(contours, key=cv2.contourArea).reshape(-1, 2).astype(np.int32)
        contour += np.array([ox, oy], dtype=np.int32)
        piece = Region(
            id=f"{region_id}.{len(pieces) + 1}",
            region_type=None,
            contour=contour,
            rect=bounding_rect(contour),
            area=int(np.count_nonzero(mask)),
            rotated_rect=rotated_rect_from_cv(cv2.minAreaRect(contour.reshape(-1, 1, 2))),
            fixed=region.fixed,
        )
        pieces.append(_classify_piece(piece, region, seg))

    regions: List[Region] = []
    for r in seg.regions:
        if r.id == region_id:
            regions.extend(pieces)
        else:
            regions.append(r)
    return seg.with_regions(regions)


def _next_numbered_id(seg: PageSegmentation, prefix: str) -> str:
    pattern = re.compile(rf"^{re.escape(prefix)}-(\d+)$")
    highest = 0
    for r in seg.regions:
        m = pattern.match(r.id)
        if m:
            highest = max(highest, int(m.group(1)))
    return f"{prefix}-{highest + 1}"


def fix_region(seg: PageSegmentation, geometry: Union[Rect, np.ndarray], region_type: str) -> PageSegmentation:
    """Add a user-drawn region that stays fixed through later re-segmentation.

    Automatic regions whose bounding rect lies fully inside the fixed region's
    bounding rect are suppressed by it.
    """
    validate_type_id(region_type)
    width, height = seg.original_size
    if isinstance(geometry, Rect):
        if geometry.w <= 0 or geometry.h <= 0:
            raise InvalidInputError(f"degenerate fix rectangle {geometry}")
        contour = rect_corners(geometry)
    else:
        pts = round_points(np.asarray(geometry, dtype=np.float64).reshape(-1, 2))
        if pts.shape[0] < 3:
            raise InvalidInputError("fix polygon needs at least 3 points")
        if cv2.contourArea(pts.reshape(-1, 1, 2).astype(np.float32)) <= 0.0:
            raise InvalidInputError("degenerate fix polygon")
        contour = pts
    contour = np.clip(contour, [0, 0], [max(0, width - 1), max(0, height - 1)]).astype(np.int32)
    rect = bounding_rect(contour)
    area = _polygon_pixel_area(contour)
    if area <= 0:
        raise InvalidInputError("degenerate fix shape")
    fixed = Region(
        id=_next_numbered_id(seg, "fix"),
        region_type=region_type,
        contour=contour,
        rect=rect,
        area=area,
        rotated_rect=rotated_rect_from_cv(cv2.minAreaRect(contour.reshape(-1, 1, 2))),
        fixed=True,
    )
    survivors = [r for r in seg.regions if r.fixed or not rect.contains_rect(r.rect)]
    return seg.with_regions(survivors + [fixed])


def delete_region(seg: PageSegmentation, region_id: str) -> PageSegmentation:
    seg.region_by_id(region_id)
    return seg.with_regions([r for r in seg.regions if r.id != region_id])


def retype_region(seg: PageSegmentation, region_id: str, new_type: str) -> PageSegmentation:
    validate_type_id(new_type)
    region = seg.region_by_id(region_id)
    regions = [replace(r, region_type=new_type, flagged=False) if r is region else r
               for r in seg.regions]
    return seg.with_regions(regions)


def merge_regions(seg: PageSegmentation, region_ids: Sequence[str], region_type: str) -> PageSegmentation:
    """Replace several regions by one spanning their convex hull."""
    validate_type_id(region_type)
    ids = list(region_ids)
    if len(set(ids)) < 2:
        raise InvalidInputError("merge needs at least two distinct regions")
    members = [seg.region_by_id(i) for i in ids]
    stacked = np.vstack([np.asarray(r.contour, dtype=np.int32).reshape(-1, 2) for r in members])
    hull = cv2.convexHull(stacked.reshape(-1, 1, 2)).reshape(-1, 2).astype(np.int32)
    merged = Region(
        id=_next_numbered_id(seg, "merge"),
        region_type=region_type,
        contour=hull,
        rect=bounding_rect(hull),
        area=_polygon_pixel_area(hull),
        rotated_rect=rotated_rect_from_cv(cv2.minAreaRect(hull.reshape(-1, 1, 2))),
        fixed=any(r.fixed for r in members),
    )
    id_set = set(ids)
    regions: List[Region] = []
    for r in seg.regions:
        if r.id == ids[0]:
            regions.append(merged)
        elif r.id not in id_set:
            regions.append(r)
    return seg.with_regions(regions)


def apply_edit(seg: PageSegmentation, edit: Edit) -> PageSegmentation:
    edit.validate()
    if edit.kind == "cut-polyline":
        return cut_region(seg, edit.targets[0], edit.geometry)
    if edit.kind == "fix-rect":
        (x0, y0), (x1, y1) = np.asarray(edit.geometry, dtype=np.float64).reshape(2, 2)
        rect = Rect(min(x0, x1), min(y0, y1), abs(x1 - x0), abs(y1 - y0))
        return fix_region(seg, rect, edit.new_type)
    if edit.kind == "fix-polygon":
        return fix_region(seg, np.asarray(edit.geometry), edit.new_type)
    if edit.kind == "delete":
        return delete_region(seg, edit.targets[0])
    if edit.kind == "retype":
        return retype_region(seg, edit.targets[0], edit.new_type)
    return merge_regions(seg, edit.targets, edit.new_type)


def replay(seg: PageSegmentation, log: Union[EditLog, Sequence[Edit]]) -> PageSegmentation:
    """Fold the log over a segmentation; raises ReplayError naming the failing index."""
    edits = log.edits if isinstance(log, EditLog) else list(log)
    for i, edit in enumerate(edits):
        try:
            seg = apply_edit(seg, edit)
        except Exception as e:
            raise ReplayError(f"edit {i} ({edit.kind}): {e}") from e
    return seg


def replay_lenient(seg: PageSegmentation, log: Union[EditLog, Sequence[Edit]]):
    """Like replay but skips failing edits; returns (segmentation, skip diagnostics)."""
    edits = log.edits if isinstance(log, EditLog) else list(log)
    skipped: List[str] = []
    for i, edit in enumerate(edits):
        try:
            seg = apply_edit(seg, edit)
        except Exception as e:
            skipped.append(f"edit {i} ({edit.kind}) skipped: {e}")
    return seg, skipped

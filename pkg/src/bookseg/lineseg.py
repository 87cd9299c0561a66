"""Text line sub-segmentation: per-region deskew by exhaustive projection
search, line band detection on the horizontal projection profile, mapping
line polygons back to original coordinates, and line-driven cuts.

Line detection runs on the original-resolution binarized page; working-scale
rasters lose too much glyph detail.
"""

import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np

from . import corrections, imaging
from .errors import NotFoundError
from .geometry import AffineTransform, bounding_rect, clamp_points, round_points
from .model import IMAGE, Region
from .pipeline import PageSegmentation
from .profiles import SegmentationProfile

SKEW_RANGE = 10.0   # degrees searched either side of upright
SKEW_STEP = 0.1


@dataclass(eq=False)
class TextLine:
    parent_region_id: str
    polygon: np.ndarray          # (N, 2) int32, original coordinates
    baseline_y: int              # bottom row of the band, deskewed crop frame
    index: int                   # top-to-bottom within the region
    band: Tuple[int, int] = (0, 0)

    def to_dict(self) -> dict:
        return {
            "parent": self.parent_region_id,
            "polygon": np.asarray(self.polygon).reshape(-1, 2).astype(int).tolist(),
            "baseline_y": int(self.baseline_y),
            "index": int(self.index),
        }


@dataclass(eq=False)
class LineSegmentationResult:
    page_id: str
    lines: List[TextLine] = field(default_factory=list)
    per_region_angle: Dict[str, float] = field(default_factory=dict)

    def lines_of(self, region_id: str) -> List[TextLine]:
        return [l for l in self.lines if l.parent_region_id == region_id]

    def to_dict(self) -> dict:
        return {
            "page_id": self.page_id,
            "lines": [l.to_dict() for l in self.lines],
            "angles": {k: float(v) for k, v in self.per_region_angle.items()},
        }


def estimate_skew(raster: np.ndarray, min_area: int = 1500,
                  angle_range: float = SKEW_RANGE, step: float = SKEW_STEP) -> Optional[float]:
    """Angle in [-range, +range] whose deskew maximizes the variance of the
    horizontal projection profile; None when foreground is below `min_area`.
    """
    ys, xs = np.nonzero(raster)
    if len(ys) < min_area:
        return None
    if len(ys) > 60000:  # deterministic subsample keeps the search fast
        stride = len(ys) // 50000 + 1
        ys, xs = ys[::stride], xs[::stride]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    best_angle = -angle_range
    best_score = -1.0
    steps = int(round(2 * angle_range / step))
    histograms = []
    for i in range(steps + 1):
        angle = -angle_range + i * step
        rad = np.radians(angle)
        # y coordinate after rotating the content by -angle
        proj = xs * np.sin(rad) + ys * np.cos(rad)
        histograms.append((angle, np.bincount((proj - proj.min()).astype(np.int64))))
    # variance over a common support so angles that spread the same mass over
    # more rows score lower; otherwise a single solid bar favors the extremes
    length = max(len(h) for _, h in histograms)
    for angle, bins in histograms:
        score = float(np.pad(bins, (0, length - len(bins))).var())
        if score > best_score:
            best_score = score
            best_angle = angle
    return round(best_angle, 4)


def fallback_angle(angles: Sequence[Tuple[float, float]]) -> float:
    """Area-weighted mean of (angle, segmentArea) measurements; 0 when empty."""
    total = sum(a for _, a in angles)
    if total <= 0:
        return 0.0
    return sum(angle * area for angle, area in angles) / total


def detect_lines(deskewed: np.ndarray, merge_gap: int = 2) -> List[Tuple[int, int]]:
    """Row bands [start, stop) where the smoothed horizontal projection exceeds
    max(2, 5% of peak); bands separated by fewer than `merge_gap` rows merge."""
    counts = (np.asarray(deskewed) > 0).sum(axis=1).astype(np.float64)
    if counts.sum() == 0:
        return []
    smoothed = np.convolve(counts, np.ones(3) / 3.0, mode="same")
    threshold = max(2.0, 0.05 * smoothed.max())
    mask = np.concatenate([[False], smoothed > threshold, [False]])
    changes = np.flatnonzero(np.diff(mask.astype(np.int8)))
    bands = [(int(changes[i]), int(changes[i + 1])) for i in range(0, len(changes), 2)]
    merged: List[Tuple[int, int]] = []
    for band in bands:
        if merged and band[0] - merged[-1][1] < merge_gap:
            merged[-1] = (merged[-1][0], band[1])
        else:
            merged.append(band)
    return merged


@dataclass(eq=False)
class RegionLineAnalysis:
    """Deskewed view of one region plus everything needed to place cuts."""

    region_id: str
    lines: List[TextLine]
    measured_angle: Optional[float]
    used_angle: float
    bands: List[Tuple[int, int]]
    deskewed: np.ndarray
    inverse: AffineTransform
    origin: Tuple[int, int]
    foreground: int


def _masked_crop(binary: np.ndarray, region: Region):
    h, w = binary.shape[:2]
    rect = region.rect.as_int().clamp(w, h)
    x0, y0 = int(rect.x), int(rect.y)
    x1, y1 = int(rect.x2), int(rect.y2)
    crop = binary[y0:y1, x0:x1]
    mask = np.zeros_like(crop)
    pts = np.asarray(region.contour, dtype=np.int32).reshape(-1, 1, 2) - np.array([x0, y0], dtype=np.int32)
    cv2.drawContours(mask, [pts], -1, 255, cv2.FILLED)
    masked = np.where(mask > 0, crop, 0).astype(np.uint8)
    return masked, mask, (x0, y0)


def _analyze(region: Region, masked: np.ndarray, mask: np.ndarray, origin: Tuple[int, int],
             measured: Optional[float], fallback: float, page_size: Tuple[int, int]) -> RegionLineAnalysis:
    used = measured if measured is not None else fallback
    deskewed, inverse = imaging.rotate_raster(masked, -used)
    mask_rot, _ = imaging.rotate_raster(mask, -used)
    bands = detect_lines(deskewed)
    width, height = page_size
    lines: List[TextLine] = []
    for index, (start, stop) in enumerate(bands):
        slab = np.zeros_like(mask_rot)
        slab[start:stop, :] = mask_rot[start:stop, :]
        contours, _ = cv2.findContours(slab, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        if contours:
            contour = max(contours, key=cv2.contourArea).reshape(-1, 2)
        else:
            # mask misses the band (degenerate warp edge): keep lines and bands 1:1
            cw = mask_rot.shape[1]
            contour = np.array([[0, start], [cw - 1, start], [cw - 1, stop - 1], [0, stop - 1]])
        pts = inverse.apply(contour) + np.array(origin, dtype=np.float64)
        polygon = clamp_points(round_points(pts), width, height)
        lines.append(TextLine(parent_region_id=region.id, polygon=polygon,
                              baseline_y=int(stop - 1), index=index, band=(start, stop)))
    return RegionLineAnalysis(
        region_id=region.id,
        lines=lines,
        measured_angle=measured,
        used_angle=used,
        bands=bands,
        deskewed=deskewed,
        inverse=inverse,
        origin=origin,
        foreground=int(np.count_nonzero(masked)),
    )


def region_line_analysis(binary: np.ndarray, region: Region, profile: SegmentationProfile,
                         fallback: float = 0.0) -> RegionLineAnalysis:
    masked, mask, origin = _masked_crop(binary, region)
    measured = estimate_skew(masked, profile.skew_min_area)
    h, w = binary.shape[:2]
    return _analyze(region, masked, mask, origin, measured, fallback, (w, h))


def segment_region_lines(binary: np.ndarray, region: Region, profile: SegmentationProfile,
                         fallback: float = 0.0) -> List[TextLine]:
    """Text lines of one region; image regions yield none."""
    if region.region_type == IMAGE:
        return []
    return region_line_analysis(binary, region, profile, fallback).lines


def segment_page_lines(binary: np.ndarray, seg: PageSegmentation,
                       profile: SegmentationProfile) -> LineSegmentationResult:
    """Line-segment every text region of a page.

    Regions whose skew cannot be measured reuse the area-weighted mean angle
    of the regions that could.
    """
    text_regions = [r for r in seg.regions if r.region_type != IMAGE]
    h, w = binary.shape[:2]
    staged = []
    measured_pairs: List[Tuple[float, float]] = []
    for region in text_regions:
        masked, mask, origin = _masked_crop(binary, region)
        measured = estimate_skew(masked, profile.skew_min_area)
        fg = int(np.count_nonzero(masked))
        if measured is not None:
            measured_pairs.append((measured, float(fg)))
        staged.append((region, masked, mask, origin, measured))
    fallback = fallback_angle(measured_pairs)
    result = LineSegmentationResult(page_id=seg.page_id)
    for region, masked, mask, origin, measured in staged:
        analysis = _analyze(region, masked, mask, origin, measured, fallback, (w, h))
        result.lines.extend(analysis.lines)
        result.per_region_angle[region.id] = analysis.used_angle
    return result


def _boundary_row(bands: Sequence[Tuple[int, int]], line_index: int, side: str) -> Optional[float]:
    """Midpoint of the inter-line gap on the chosen side; None at region edges."""
    if side == "below":
        if line_index >= len(bands) - 1:
            return None
        return (bands[line_index][1] + bands[line_index + 1][0]) / 2.0
    if side == "above":
        if line_index <= 0:
            return None
        return (bands[line_index - 1][1] + bands[line_index][0]) / 2.0
    raise NotFoundError(f"unknown cut side {side!r}")


def _cut_polyline(analysis: RegionLineAnalysis, row: float) -> np.ndarray:
    """Horizontal line across the deskewed crop mapped back to original coords."""
    w = analysis.deskewed.shape[1]
    ends = np.array([[-2.0, row], [w + 1.0, row]])
    return analysis.inverse.apply(ends) + np.array(analysis.origin, dtype=np.float64)


def cut_at_line(seg: PageSegmentation, binary: np.ndarray, region_id: str, line_index: int,
                side: str, fallback: float = 0.0):
    """Split a region along the gap above/below one of its lines.

    Returns (segmentation, primitive edits applied) so callers can persist the
    cut as plain polyline edits.
    """
    region = seg.region_by_id(region_id)
    profile = seg.profile or SegmentationProfile()
    analysis = region_line_analysis(binary, region, profile, fallback)
    if not (0 <= line_index < len(analysis.lines)):
        raise NotFoundError(f"region {region_id} has no line {line_index}")
    row = _boundary_row(analysis.bands, line_index, side)
    if row is None:
        warnings.warn(f"no material {side} line {line_index} of region {region_id}; no-op")
        return seg, []
    edit = corrections.Edit(kind="cut-polyline", geometry=_cut_polyline(analysis, row),
                            targets=(region_id,))
    return corrections.apply_edit(seg, edit), [edit]


def _piece_containing(seg: PageSegmentation, parent_id: str, line_polygon: np.ndarray) -> str:
    """Of the pieces a cut produced, the one overlapping the line most."""
    pieces = [r for r in seg.regions if r.id.startswith(parent_id + ".")]
    if not pieces:
        return parent_id
    pts = np.asarray(line_polygon, dtype=np.int32).reshape(-1, 2)
    rect = bounding_rect(pts).as_int()
    x0, y0 = int(rect.x), int(rect.y)
    frame = (int(rect.h), int(rect.w))
    line_mask = np.zeros(frame, dtype=np.uint8)
    cv2.drawContours(line_mask, [pts.reshape(-1, 1, 2) - np.array([x0, y0])], -1, 255, cv2.FILLED)
    best_id, best_overlap = pieces[0].id, -1
    for piece in pieces:
        piece_mask = np.zeros(frame, dtype=np.uint8)
        ppts = np.asarray(piece.contour, dtype=np.int32).reshape(-1, 1, 2) - np.array([x0, y0])
        cv2.drawContours(piece_mask, [ppts], -1, 255, cv2.FILLED)
        overlap = int(np.count_nonzero((piece_mask > 0) & (line_mask > 0)))
        if overlap > best_overlap:
            best_id, best_overlap = piece.id, overlap
    return best_id


def retype_line(seg: PageSegmentation, binary: np.ndarray, region_id: str, line_index: int,
                new_type: str, fallback: float = 0.0):
    """Give one line its own region of `new_type`: cuts above and below the
    line (where material exists), then retypes the middle piece.

    Returns (segmentation, primitive edits applied).
    """
    region = seg.region_by_id(region_id)
    profile = seg.profile or SegmentationProfile()
    analysis = region_line_analysis(binary, region, profile, fallback)
    if not (0 <= line_index < len(analysis.lines)):
        raise NotFoundError(f"region {region_id} has no line {line_index}")
    line_polygon = analysis.lines[line_index].polygon
    edits: List[corrections.Edit] = []
    target = region_id
    for side in ("above", "below"):
        row = _boundary_row(analysis.bands, line_index, side)
        if row is None:
            continue
        edit = corrections.Edit(kind="cut-polyline", geometry=_cut_polyline(analysis, row),
                                targets=(target,))
        cut_seg = corrections.apply_edit(seg, edit)
        if cut_seg is seg:
            continue
        seg = cut_seg
        edits.append(edit)
        target = _piece_containing(seg, target, line_polygon)
    retype = corrections.Edit(kind="retype", targets=(target,), new_type=new_type)
    seg = corrections.apply_edit(seg, retype)
    edits.append(retype)
    return seg, edits


def heading_candidates(bands: Sequence[Tuple[int, int]], deskewed: np.ndarray,
                       height_factor: float = 1.4, area_factor: float = 1.4) -> List[int]:
    """Indices of bands that look like headings: clearly taller than the
    region's median band and built from clearly larger glyph components.
    Regions with fewer than 3 lines never flag."""
    if len(bands) < 3:
        return []
    heights = [stop - start for start, stop in bands]
    median_height = float(np.median(heights))
    all_comps = imaging.connected_components(deskewed)
    if not all_comps:
        return []
    region_mean = float(np.mean([c.area for c in all_comps]))
    flagged: List[int] = []
    for i, (start, stop) in enumerate(bands):
        band_comps = imaging.connected_components(deskewed[start:stop])
        if not band_comps:
            continue
        band_mean = float(np.mean([c.area for c in band_comps]))
        if heights[i] > height_factor * median_height and band_mean > area_factor * region_mean:
            flagged.append(i)
    return flagged


def region_heading_candidates(binary: np.ndarray, region: Region, profile: SegmentationProfile,
                              fallback: float = 0.0) -> List[int]:
    analysis = region_line_analysis(binary, region, profile, fallback)
    return heading_candidates(analysis.bands, analysis.deskewed,
                              profile.heading_height_factor, profile.heading_area_factor)

"""Raster primitives: binarization, resizing, ROI masking, dilation,
connected components, pixel erasure and rotation.

A raster is a 2-D uint8 array, 0 = background, 255 = foreground (ink).
All operations are pure: inputs are never mutated.
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Union

import cv2
import numpy as np

from .errors import InvalidInputError
from .geometry import AffineTransform, Rect, RotatedRect, ScaleTransform, rotated_rect_from_cv

FOREGROUND = 255
BACKGROUND = 0


@dataclass
class Component:
    """One 8-connected foreground component."""

    label: int
    area: int                 # pixel count
    contour: np.ndarray       # outer contour, (N, 2) int32
    rect: Rect

    @cached_property
    def rotated_rect(self) -> RotatedRect:
        # lazy: most components are filtered by area before anyone needs this
        return rotated_rect_from_cv(cv2.minAreaRect(self.contour.reshape(-1, 1, 2)))


def load_image(path: Union[str, Path]) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise InvalidInputError(f"unreadable image: {path}")
    return img


def binarize(image: np.ndarray, threshold: Optional[int] = None) -> np.ndarray:
    """Threshold to ink/background. Color input is converted to luminance first.

    Default threshold is Otsu's; pass `threshold` to override (ink = value <= threshold).
    Already-binary input comes out with the same ink pixels: Otsu lands on the lowest
    maximizing threshold, so {0, 255} images keep black as foreground.
    """
    if image is None:
        raise InvalidInputError("empty image")
    arr = np.asarray(image)
    if arr.size == 0:
        raise InvalidInputError("empty image")
    if arr.dtype == bool:
        return np.where(arr, FOREGROUND, BACKGROUND).astype(np.uint8)
    if arr.ndim == 3:
        code = cv2.COLOR_BGRA2GRAY if arr.shape[2] == 4 else cv2.COLOR_BGR2GRAY
        gray = cv2.cvtColor(arr, code)
    else:
        gray = arr
    if gray.dtype == np.uint16:
        gray = (gray // 257).astype(np.uint8)
    elif gray.dtype != np.uint8:
        gray = np.clip(gray, 0, 255).astype(np.uint8)
    t = otsu_threshold(gray) if threshold is None else int(threshold)
    return np.where(gray <= t, FOREGROUND, BACKGROUND).astype(np.uint8)


def otsu_threshold(gray: np.ndarray) -> int:
    """Threshold maximizing between-class variance; first maximum on plateaus.

    Class 0 is `value <= t`, so a flat page yields t=0 and no foreground.
    """
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    cum = np.cumsum(hist * np.arange(256, dtype=np.float64))
    grand = cum[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum / w0
        mu1 = (grand - cum) / w1
        sigma = w0 * w1 * (mu0 - mu1) ** 2
    sigma = np.nan_to_num(sigma, nan=0.0)
    return int(np.argmax(sigma))


def resize_to_height(r: np.ndarray, target_height: int):
    """Downscale to target height preserving aspect ratio; never upscales.

    Returns (raster, transform mapping working coordinates to original ones).
    Nearest-neighbor keeps the raster strictly binary.
    """
    if target_height <= 0:
        raise InvalidInputError(f"target height must be positive, got {target_height}")
    h, w = r.shape[:2]
    if h <= target_height:
        return r.copy(), ScaleTransform(1.0, 1.0)
    new_w = max(1, int(round(w * target_height / h)))
    out = cv2.resize(r, (new_w, target_height), interpolation=cv2.INTER_NEAREST)
    return out, ScaleTransform(w / new_w, h / target_height)


def apply_roi(r: np.ndarray, roi: Optional[Rect]) -> np.ndarray:
    """Blank everything outside `roi` (working-coordinate pixels); None is identity."""
    if roi is None:
        return r.copy()
    h, w = r.shape[:2]
    clipped = roi.as_int().clamp(w, h)
    if clipped.w <= 0 or clipped.h <= 0:
        raise InvalidInputError(f"roi {roi} does not intersect a {w}x{h} raster")
    out = np.zeros_like(r)
    x0, y0 = int(clipped.x), int(clipped.y)
    x1, y1 = int(clipped.x2), int(clipped.y2)
    out[y0:y1, x0:x1] = r[y0:y1, x0:x1]
    return out


def dilate(r: np.ndarray, kernel_width: int, kernel_height: int) -> np.ndarray:
    """Binary dilation with a rectangular structuring element (odd dimensions)."""
    for k in (kernel_width, kernel_height):
        if k < 1 or k % 2 == 0:
            raise InvalidInputError(f"kernel dimensions must be odd and >= 1, got {kernel_width}x{kernel_height}")
    if kernel_width == 1 and kernel_height == 1:
        return r.copy()
    kernel = np.ones((kernel_height, kernel_width), dtype=np.uint8)
    return cv2.dilate(r, kernel, borderType=cv2.BORDER_CONSTANT, borderValue=0)


def connected_components(r: np.ndarray) -> List[Component]:
    """8-connected foreground components in raster-scan discovery order."""
    mask = (np.asarray(r) > 0).astype(np.uint8)
    if mask.size == 0 or not mask.any():
        return []
    n, labels, stats, _ = cv2.connectedComponentsWithStats(mask, connectivity=8)
    # CCOMP keeps the outer boundary of components nested inside other
    # components' holes, which EXTERNAL would drop
    contours, hierarchy = cv2.findContours(mask, cv2.RETR_CCOMP, cv2.CHAIN_APPROX_SIMPLE)
    hierarchy = hierarchy.reshape(-1, 4)
    by_label = {}
    for c, (_, _, _, parent) in zip(contours, hierarchy):
        if parent != -1:
            continue
        pts = c.reshape(-1, 2).astype(np.int32)
        lbl = int(labels[pts[0, 1], pts[0, 0]])
        by_label[lbl] = pts
    out: List[Component] = []
    for lbl in range(1, n):
        contour = by_label.get(lbl)
        if contour is None:
            continue
        x, y, w, h, area = (int(v) for v in stats[lbl])
        out.append(Component(label=lbl, area=area, contour=contour,
                             rect=Rect(x, y, w, h)))
    return out


def erase_pixels(r: np.ndarray, shape: Union[np.ndarray, Rect, RotatedRect, None]) -> np.ndarray:
    """Blank the pixels covered by a contour polygon, straight rect, or rotated rect."""
    out = r.copy()
    if shape is None:
        return out
    if isinstance(shape, RotatedRect):
        pts = np.rint(shape.box_points()).astype(np.int32)
        cv2.fillPoly(out, [pts.reshape(-1, 1, 2)], BACKGROUND)
        return out
    if isinstance(shape, Rect):
        h, w = out.shape[:2]
        c = shape.as_int().clamp(w, h)
        out[int(c.y):int(c.y2), int(c.x):int(c.x2)] = BACKGROUND
        return out
    pts = np.asarray(shape)
    if pts.size == 0:
        return out
    cv2.drawContours(out, [pts.astype(np.int32).reshape(-1, 1, 2)], -1, BACKGROUND, cv2.FILLED)
    return out


def rotate_raster(r: np.ndarray, angle: float):
    """Rotate by `angle` degrees (positive = counter-clockwise on screen) onto an
    enlarged canvas. Returns (rotated, transform mapping rotated coords back)."""
    if abs(angle) > 45.0:
        raise InvalidInputError(f"rotation angle out of range: {angle}")
    h, w = r.shape[:2]
    if angle == 0.0:
        ident = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return r.copy(), AffineTransform(ident)
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, 1.0)
    cos = abs(m[0, 0])
    sin = abs(m[0, 1])
    new_w = int(np.ceil(w * cos + h * sin))
    new_h = int(np.ceil(w * sin + h * cos))
    m[0, 2] += new_w / 2.0 - w / 2.0
    m[1, 2] += new_h / 2.0 - h / 2.0
    rotated = cv2.warpAffine(r, m, (new_w, new_h), flags=cv2.INTER_NEAREST,
                             borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    inverse = cv2.invertAffineTransform(m)
    return rotated, AffineTransform(inverse)

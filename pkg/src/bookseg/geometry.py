"""Rectangles, rotated rectangles and coordinate transforms.

Coordinates are pixel based: x grows right, y grows down.  Angles are in
degrees, positive meaning counter-clockwise on screen, and rotated-rect
angles refer to the long axis, normalised to (-90, 90].
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np


class Rect(NamedTuple):
    """Axis-aligned rectangle, numeric fields so it also serves for relative zones."""

    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains_point(self, px: float, py: float) -> bool:
        return self.x <= px < self.x2 and self.y <= py < self.y2

    def contains_rect(self, other: "Rect") -> bool:
        """True when `other` lies fully inside self (shared edges count as inside)."""
        return (other.x >= self.x and other.y >= self.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def intersects(self, other: "Rect") -> bool:
        return not (other.x >= self.x2 or other.x2 <= self.x
                    or other.y >= self.y2 or other.y2 <= self.y)

    def scale(self, fx: float, fy: float) -> "Rect":
        return Rect(self.x * fx, self.y * fy, self.w * fx, self.h * fy)

    def as_int(self) -> "Rect":
        """Integer rect covering the same extent (floor origin, ceil far corner)."""
        x0 = int(np.floor(self.x))
        y0 = int(np.floor(self.y))
        x1 = int(np.ceil(self.x2))
        y1 = int(np.ceil(self.y2))
        return Rect(x0, y0, x1 - x0, y1 - y0)

    def clamp(self, width: int, height: int) -> "Rect":
        x0 = min(max(self.x, 0), width)
        y0 = min(max(self.y, 0), height)
        x1 = min(max(self.x2, 0), width)
        y1 = min(max(self.y2, 0), height)
        return Rect(x0, y0, x1 - x0, y1 - y0)


class RotatedRect(NamedTuple):
    """Min-area rectangle: center, size with long >= short, long-axis angle."""

    cx: float
    cy: float
    long: float
    short: float
    angle: float

    def box_points(self) -> np.ndarray:
        """Corner points (4, 2) float, in drawing order."""
        a = np.radians(self.angle)
        # long axis direction on screen; y axis points down, hence the minus
        du = np.array([np.cos(a), -np.sin(a)])
        dv = np.array([np.sin(a), np.cos(a)])
        c = np.array([self.cx, self.cy])
        hl = self.long / 2.0
        hs = self.short / 2.0
        return np.array([c - du * hl - dv * hs,
                         c + du * hl - dv * hs,
                         c + du * hl + dv * hs,
                         c - du * hl + dv * hs])


def rotated_rect_from_cv(raw) -> RotatedRect:
    """Normalise cv2.minAreaRect output, whose angle convention varies by version.

    The angle is recomputed from the long edge direction so the result is stable:
    positive = long axis tilted counter-clockwise on screen, range (-90, 90].
    """
    (cx, cy), (w, h), angle = raw
    box = _cv_box_points(cx, cy, w, h, angle)
    e0 = box[1] - box[0]
    e1 = box[2] - box[1]
    n0 = float(np.hypot(*e0))
    n1 = float(np.hypot(*e1))
    if n0 >= n1:
        long_v, long_len, short_len = e0, n0, n1
    else:
        long_v, long_len, short_len = e1, n1, n0
    if long_len <= 0.0:
        return RotatedRect(float(cx), float(cy), 0.0, 0.0, 0.0)
    deg = float(np.degrees(np.arctan2(-long_v[1], long_v[0])))
    if deg <= -90.0:
        deg += 180.0
    elif deg > 90.0:
        deg -= 180.0
    return RotatedRect(float(cx), float(cy), long_len, short_len, deg)


def _cv_box_points(cx, cy, w, h, angle) -> np.ndarray:
    """Corner points under the cv2 convention (angle clockwise-positive on screen)."""
    a = np.radians(angle)
    du = np.array([np.cos(a), np.sin(a)])
    dv = np.array([-np.sin(a), np.cos(a)])
    c = np.array([cx, cy], dtype=np.float64)
    hw, hh = w / 2.0, h / 2.0
    return np.array([c - du * hw - dv * hh,
                     c + du * hw - dv * hh,
                     c + du * hw + dv * hh,
                     c - du * hw + dv * hh])


@dataclass(frozen=True)
class ScaleTransform:
    """Maps working coordinates back to original ones (and forward)."""

    fx: float
    fy: float

    def to_original(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts * np.array([self.fx, self.fy])

    def to_working(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts / np.array([self.fx, self.fy])


@dataclass(frozen=True)
class AffineTransform:
    """2x3 affine matrix applied to row-wise (x, y) points."""

    matrix: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        ones = np.ones((pts.shape[0], 1))
        return np.hstack([pts, ones]) @ np.asarray(self.matrix, dtype=np.float64).T


def round_points(points: np.ndarray) -> np.ndarray:
    """Round half away from zero to int32; plain np.round would round half to even."""
    pts = np.asarray(points, dtype=np.float64)
    return (np.sign(pts) * np.floor(np.abs(pts) + 0.5)).astype(np.int32)


def clamp_points(points: np.ndarray, width: int, height: int) -> np.ndarray:
    pts = np.asarray(points).copy()
    pts[..., 0] = np.clip(pts[..., 0], 0, width - 1)
    pts[..., 1] = np.clip(pts[..., 1], 0, height - 1)
    return pts


def bounding_rect(points: Sequence) -> Rect:
    pts = np.asarray(points).reshape(-1, 2)
    x0 = float(pts[:, 0].min())
    y0 = float(pts[:, 1].min())
    x1 = float(pts[:, 0].max())
    y1 = float(pts[:, 1].max())
    return Rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def rect_corners(rect: Rect) -> np.ndarray:
    """Pixel-inclusive corner polygon of an integer rect."""
    r = rect.as_int()
    x2 = r.x + r.w - 1
    y2 = r.y + r.h - 1
    return np.array([[r.x, r.y], [x2, r.y], [x2, y2], [r.x, y2]], dtype=np.int32)

"""PageXML (PAGE 2017-07-15) serialization for segmentations and line files.

The writer is canonical: fixed attribute order, fixed metadata timestamps,
two-space indentation. Reading a written file and writing it again yields
byte-identical output, which the service's finalize step and the batch CLI
rely on for determinism.
"""

import re
import warnings
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import List, Optional, Tuple, Union

import cv2
import numpy as np

from .errors import InvalidInputError
from .geometry import Rect, bounding_rect, rect_corners
from .lineseg import LineSegmentationResult, TextLine
from .model import IMAGE, IMAGE_DESCRIPTION, Region
from .pipeline import PageSegmentation

XMLNS = "http://schema.primaresearch.org/PAGE/gts/pagecontent/2017-07-15"
XSI = "http://www.w3.org/2001/XMLSchema-instance"
SCHEMA_LOCATION = f"{XMLNS} {XMLNS}/pagecontent.xsd"
CREATOR = "bookseg 0.1.0"
FIXED_TIMESTAMP = "1970-01-01T00:00:00"  # fixed so output bytes are reproducible

# TextRegion @type values the 2017-07-15 schema accepts
TEXT_TYPE_ENUM = frozenset((
    "paragraph", "heading", "caption", "header", "footer", "page-number",
    "drop-capital", "credit", "floating", "signature-mark", "catch-word",
    "marginalia", "footnote", "footnote-continued", "endnote", "TOC-entry",
    "list-label", "other",
))

_ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9._-]*$")


def _to_xml_type(region_type: str) -> Tuple[str, Optional[str]]:
    """Map an internal type to (schema type, custom label or None)."""
    if region_type == IMAGE_DESCRIPTION:
        return "caption", None
    if region_type in TEXT_TYPE_ENUM:
        return region_type, None
    return "other", region_type


def _from_xml_type(xml_type: str, label: Optional[str]) -> str:
    if xml_type == "caption":
        return IMAGE_DESCRIPTION
    if xml_type == "other":
        return label if label else "other"
    return xml_type


def _format_points(contour: np.ndarray, size: Tuple[int, int], owner: str) -> str:
    """Round half away from zero, clamp into [0, width] x [0, height]."""
    width, height = size
    pts = np.asarray(contour, dtype=np.float64).reshape(-1, 2)
    rounded = np.sign(pts) * np.floor(np.abs(pts) + 0.5)
    clamped = np.clip(rounded, [0, 0], [width, height]).astype(np.int64)
    if not np.array_equal(rounded, clamped):
        warnings.warn(f"{owner}: coordinates outside the image were clamped")
    return " ".join(f"{x},{y}" for x, y in clamped)


def _parse_points(text: str) -> np.ndarray:
    pairs = []
    for token in (text or "").split():
        x, _, y = token.partition(",")
        pairs.append((int(x), int(y)))
    return np.asarray(pairs, dtype=np.int32)


def _custom_tokens(region: Region) -> Optional[str]:
    tokens = []
    if region.fixed:
        tokens.append("fixed")
    if region.flagged:
        tokens.append("flagged")
    _, label = (None, None) if region.region_type in (None, IMAGE) else _to_xml_type(region.region_type)
    if label:
        tokens.append(f"label:{label}")  # keep last: the label may contain spaces
    return " ".join(tokens) if tokens else None


def _parse_custom(custom: Optional[str]):
    fixed = flagged = False
    label = None
    if custom:
        head = custom
        idx = custom.find("label:")
        if idx >= 0:
            label = custom[idx + len("label:"):]
            head = custom[:idx]
        flags = head.split()
        fixed = "fixed" in flags
        flagged = "flagged" in flags
    return fixed, flagged, label


def _region_contour_for_output(region: Region) -> np.ndarray:
    pts = np.asarray(region.contour).reshape(-1, 2)
    if pts.shape[0] >= 3:
        return pts
    warnings.warn(f"region {region.id}: contour has fewer than 3 points, emitting its bounding rect")
    return rect_corners(region.rect)


def build_page_tree(seg: PageSegmentation, lines: Optional[LineSegmentationResult] = None) -> ET.Element:
    size = seg.original_size
    root = ET.Element("PcGts")
    root.set("xmlns", XMLNS)
    root.set("xmlns:xsi", XSI)
    root.set("xsi:schemaLocation", SCHEMA_LOCATION)

    meta = ET.SubElement(root, "Metadata")
    ET.SubElement(meta, "Creator").text = CREATOR
    ET.SubElement(meta, "Created").text = FIXED_TIMESTAMP
    ET.SubElement(meta, "LastChange").text = FIXED_TIMESTAMP

    page = ET.SubElement(root, "Page")
    page.set("imageFilename", seg.image_filename or f"{seg.page_id}.png")
    page.set("imageWidth", str(int(size[0])))
    page.set("imageHeight", str(int(size[1])))

    if seg.reading_order:
        ro = ET.SubElement(page, "ReadingOrder")
        group = ET.SubElement(ro, "OrderedGroup")
        group.set("id", "ro-1")
        for i, rid in enumerate(seg.reading_order):
            ref = ET.SubElement(group, "RegionRefIndexed")
            ref.set("index", str(i))
            ref.set("regionRef", rid)

    lines_by_region = {}
    if lines is not None:
        for line in lines.lines:
            lines_by_region.setdefault(line.parent_region_id, []).append(line)

    for region in seg.regions:
        if region.region_type is None:
            warnings.warn(f"region {region.id} has no type and was not written")
            continue
        contour = _region_contour_for_output(region)
        if region.region_type == IMAGE:
            el = ET.SubElement(page, "ImageRegion")
            el.set("id", region.id)
            custom = _custom_tokens(region)
            if custom:
                el.set("custom", custom)
        else:
            el = ET.SubElement(page, "TextRegion")
            el.set("id", region.id)
            xml_type, _ = _to_xml_type(region.region_type)
            el.set("type", xml_type)
            custom = _custom_tokens(region)
            if custom:
                el.set("custom", custom)
        coords = ET.SubElement(el, "Coords")
        coords.set("points", _format_points(contour, size, f"region {region.id}"))
        for line in sorted(lines_by_region.get(region.id, []), key=lambda l: l.index):
            line_el = ET.SubElement(el, "TextLine")
            line_el.set("id", f"{region.id}-l{line.index}")
            line_coords = ET.SubElement(line_el, "Coords")
            line_coords.set("points", _format_points(line.polygon, size, f"line {region.id}-l{line.index}"))
    return root


def serialize_page_tree(root: ET.Element) -> bytes:
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True) + b"\n"


def write_page_xml(seg: PageSegmentation, lines: Optional[LineSegmentationResult],
                   destination_dir: Union[str, Path], suffix: str = ".xml") -> Path:
    """Write `<imageStem><suffix>` into `destination_dir` and return the path."""
    destination_dir = Path(destination_dir)
    stem = Path(seg.image_filename).stem if seg.image_filename else seg.page_id
    path = destination_dir / f"{stem}{suffix}"
    payload = serialize_page_tree(build_page_tree(seg, lines))
    try:
        destination_dir.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as e:
        raise InvalidInputError(f"cannot write {path}: {e}") from e
    return path


def _strip(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _polygon_pixel_count(contour: np.ndarray) -> int:
    pts = np.asarray(contour, dtype=np.int32).reshape(-1, 2)
    if pts.shape[0] == 0:
        return 0
    rect = bounding_rect(pts).as_int()
    mask = np.zeros((int(rect.h) + 2, int(rect.w) + 2), dtype=np.uint8)
    local = pts.reshape(-1, 1, 2) - np.array([int(rect.x) - 1, int(rect.y) - 1], dtype=np.int32)
    cv2.drawContours(mask, [local], -1, 255, cv2.FILLED)
    return int(np.count_nonzero(mask))


def validate_page_xml(source: Union[str, Path, bytes]) -> List[str]:
    """Structural checks against the schema subset this package emits.

    Returns a list of problems; empty means the document is valid.
    """
    problems: List[str] = []
    try:
        if isinstance(source, bytes):
            root = ET.fromstring(source)
        else:
            root = ET.parse(str(source)).getroot()
    except ET.ParseError as e:
        line, column = getattr(e, "position", (0, 0))
        return [f"parse error at line {line}, column {column}: {e.msg if hasattr(e, 'msg') else e}"]
    except OSError as e:
        return [f"cannot read: {e}"]

    if root.tag != f"{{{XMLNS}}}PcGts":
        problems.append(f"root element is {root.tag}, expected PcGts in namespace {XMLNS}")
        return problems

    meta = root.find(f"{{{XMLNS}}}Metadata")
    if meta is None:
        problems.append("missing Metadata")
    else:
        for field in ("Creator", "Created", "LastChange"):
            if meta.find(f"{{{XMLNS}}}{field}") is None:
                problems.append(f"Metadata missing {field}")

    page = root.find(f"{{{XMLNS}}}Page")
    if page is None:
        problems.append("missing Page")
        return problems
    if not page.get("imageFilename"):
        problems.append("Page missing imageFilename")
    try:
        width = int(page.get("imageWidth", ""))
        height = int(page.get("imageHeight", ""))
        if width <= 0 or height <= 0:
            problems.append("Page dimensions must be positive")
    except ValueError:
        problems.append("Page imageWidth/imageHeight must be integers")
        return problems

    seen_region = False
    ids = set()
    text_ids = set()
    for child in page:
        tag = _strip(child.tag)
        if tag == "ReadingOrder":
            if seen_region:
                problems.append("ReadingOrder must precede region elements")
            continue
        if tag not in ("TextRegion", "ImageRegion"):
            problems.append(f"unexpected element {tag} in Page")
            continue
        seen_region = True
        rid = child.get("id", "")
        if not _ID_PATTERN.match(rid):
            problems.append(f"region id {rid!r} is not a valid id")
        if rid in ids:
            problems.append(f"duplicate region id {rid!r}")
        ids.add(rid)
        if tag == "TextRegion":
            text_ids.add(rid)
            rtype = child.get("type")
            if rtype not in TEXT_TYPE_ENUM:
                problems.append(f"region {rid}: type {rtype!r} not in schema enumeration")
        coords = child.find(f"{{{XMLNS}}}Coords")
        if coords is None:
            problems.append(f"region {rid}: missing Coords")
            continue
        problems.extend(_check_points(coords.get("points", ""), width, height, f"region {rid}"))
        line_ids = set()
        for line_el in child.findall(f"{{{XMLNS}}}TextLine"):
            if tag == "ImageRegion":
                problems.append(f"region {rid}: ImageRegion cannot hold TextLine")
            lid = line_el.get("id", "")
            if not _ID_PATTERN.match(lid):
                problems.append(f"line id {lid!r} is not a valid id")
            if lid in line_ids:
                problems.append(f"duplicate line id {lid!r}")
            line_ids.add(lid)
            line_coords = line_el.find(f"{{{XMLNS}}}Coords")
            if line_coords is None:
                problems.append(f"line {lid}: missing Coords")
            else:
                problems.extend(_check_points(line_coords.get("points", ""), width, height, f"line {lid}"))

    ro = page.find(f"{{{XMLNS}}}ReadingOrder")
    if ro is not None:
        group = ro.find(f"{{{XMLNS}}}OrderedGroup")
        if group is None:
            problems.append("ReadingOrder missing OrderedGroup")
        else:
            if not _ID_PATTERN.match(group.get("id", "")):
                problems.append("OrderedGroup missing id")
            indices = []
            for ref in group.findall(f"{{{XMLNS}}}RegionRefIndexed"):
                try:
                    indices.append(int(ref.get("index", "")))
                except ValueError:
                    problems.append("RegionRefIndexed index must be an integer")
                target = ref.get("regionRef", "")
                if target not in text_ids:
                    problems.append(f"reading order references unknown text region {target!r}")
            if sorted(indices) != list(range(len(indices))):
                problems.append("reading order indices must be 0..n-1 without gaps")
    return problems


def _check_points(text: str, width: int, height: int, owner: str) -> List[str]:
    problems = []
    try:
        pts = _parse_points(text)
    except ValueError:
        return [f"{owner}: points {text!r} are not integer pairs"]
    if pts.shape[0] < 3:
        problems.append(f"{owner}: needs at least 3 points")
        return problems
    if (pts[:, 0] < 0).any() or (pts[:, 0] > width).any() or (pts[:, 1] < 0).any() or (pts[:, 1] > height).any():
        problems.append(f"{owner}: coordinates outside [0,{width}]x[0,{height}]")
    return problems


def read_page_xml(path: Union[str, Path]):
    """Parse a written document back into (PageSegmentation, lines or None).

    Area and rects are recomputed from the polygons; structural violations
    raise with the offending detail.
    """
    path = Path(path)
    problems = validate_page_xml(path)
    if problems:
        raise InvalidInputError(f"{path}: " + "; ".join(problems))
    root = ET.parse(str(path)).getroot()
    page = root.find(f"{{{XMLNS}}}Page")
    image_filename = page.get("imageFilename")
    width = int(page.get("imageWidth"))
    height = int(page.get("imageHeight"))
    page_id = Path(image_filename).stem

    regions: List[Region] = []
    all_lines: List[TextLine] = []
    for child in page:
        tag = _strip(child.tag)
        if tag not in ("TextRegion", "ImageRegion"):
            continue
        rid = child.get("id")
        fixed, flagged, label = _parse_custom(child.get("custom"))
        if tag == "ImageRegion":
            rtype = IMAGE
        else:
            rtype = _from_xml_type(child.get("type"), label)
        contour = _parse_points(child.find(f"{{{XMLNS}}}Coords").get("points"))
        regions.append(Region(
            id=rid,
            region_type=rtype,
            contour=contour,
            rect=bounding_rect(contour),
            area=_polygon_pixel_count(contour),
            fixed=fixed,
            flagged=flagged,
        ))
        for index, line_el in enumerate(child.findall(f"{{{XMLNS}}}TextLine")):
            polygon = _parse_points(line_el.find(f"{{{XMLNS}}}Coords").get("points"))
            all_lines.append(TextLine(
                parent_region_id=rid,
                polygon=polygon,
                baseline_y=int(polygon[:, 1].max()) if polygon.size else 0,
                index=index,
            ))

    reading = []
    ro = page.find(f"{{{XMLNS}}}ReadingOrder")
    if ro is not None:
        group = ro.find(f"{{{XMLNS}}}OrderedGroup")
        refs = sorted(group.findall(f"{{{XMLNS}}}RegionRefIndexed"), key=lambda r: int(r.get("index")))
        reading = [r.get("regionRef") for r in refs]

    seg = PageSegmentation(
        page_id=page_id,
        original_size=(width, height),
        regions=regions,
        reading_order=reading,
        image_filename=image_filename,
    )
    lines = None
    if all_lines:
        lines = LineSegmentationResult(page_id=page_id, lines=all_lines)
    return seg, lines

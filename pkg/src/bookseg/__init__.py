"""Semi-automatic layout analysis for scanned early printed books.

Rule-based connected-component segmentation with human correction gestures,
per-book profiles, projection-profile line segmentation, PageXML output, and
a headless CLI plus HTTP service.
"""

__version__ = "0.1.0"

from .corrections import Edit, EditLog, apply_edit, cut_region, delete_region, fix_region, merge_regions, replay, retype_region
from .errors import BooksegError, InvalidInputError, NotFoundError, ProfileError, ReplayError
from .imaging import binarize, connected_components, dilate, load_image, resize_to_height, rotate_raster
from .lineseg import LineSegmentationResult, TextLine, detect_lines, estimate_skew, fallback_angle, segment_page_lines, segment_region_lines
from .model import Region, TypeRule, candidate_types, default_rules, within
from .pagexml import read_page_xml, validate_page_xml, write_page_xml
from .pipeline import PageSegmentation, reading_order, segment_page
from .profiles import SegmentationProfile, default_profile, load_profile, profile_from_dict, profile_to_dict, save_profile

__all__ = [
    "__version__",
    "BooksegError", "InvalidInputError", "NotFoundError", "ProfileError", "ReplayError",
    "binarize", "connected_components", "dilate", "load_image", "resize_to_height", "rotate_raster",
    "Region", "TypeRule", "candidate_types", "default_rules", "within",
    "SegmentationProfile", "default_profile", "load_profile", "profile_from_dict", "profile_to_dict", "save_profile",
    "PageSegmentation", "reading_order", "segment_page",
    "Edit", "EditLog", "apply_edit", "cut_region", "delete_region", "fix_region", "merge_regions", "replay", "retype_region",
    "LineSegmentationResult", "TextLine", "detect_lines", "estimate_skew", "fallback_angle", "segment_page_lines", "segment_region_lines",
    "read_page_xml", "validate_page_xml", "write_page_xml",
]

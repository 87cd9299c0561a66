"""Headless batch runner and evaluation diff.

`bookseg run` applies a saved profile to a book directory and writes PageXML
for every page; `bookseg diff` scores a prediction against ground truth;
`bookseg serve` starts the HTTP service.
"""

import argparse
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import cv2
import numpy as np

from . import corrections, lineseg, pagexml
from .errors import BooksegError
from .geometry import bounding_rect
from .imaging import binarize, load_image
from .pipeline import segment_page
from .profiles import default_profile, load_profile
from .service import IMAGE_SUFFIXES, PROFILE_FILENAME


def _page_files(book_dir: Path) -> List[Path]:
    return sorted((p for p in book_dir.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
                  key=lambda p: p.name)


def _process_page(path: Path, profile, out_dir: Path, with_lines: bool, apply_edits: bool) -> dict:
    result = {"page": path.stem, "counts": Counter(), "failure": None}
    try:
        image = load_image(path)
        seg = segment_page(image, profile, page_id=path.stem, image_filename=path.name)
        if apply_edits:
            log_path = path.with_suffix(".edits.json")
            if log_path.is_file():
                seg = corrections.replay(seg, corrections.EditLog.load(log_path))
        lines = None
        if with_lines:
            binary = binarize(image, profile.binarization_threshold)
            lines = lineseg.segment_page_lines(binary, seg, profile)
        pagexml.write_page_xml(seg, None, out_dir)
        if lines is not None:
            pagexml.write_page_xml(seg, lines, out_dir, suffix=".lines.xml")
        result["counts"] = Counter(r.region_type for r in seg.regions)
    except Exception as e:
        result["failure"] = str(e)
    return result


def _format_counts(counts: Counter) -> str:
    if not counts:
        return "none"
    return ", ".join(f"{t}={counts[t]}" for t in sorted(counts))


def run_command(args) -> int:
    book_dir = Path(args.books)
    if not book_dir.is_dir():
        print(f"error: book directory {book_dir} does not exist", file=sys.stderr)
        return 1
    out_dir = Path(args.out) if args.out else book_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.profile:
        profile = load_profile(args.profile)
    elif (book_dir / PROFILE_FILENAME).is_file():
        profile = load_profile(book_dir / PROFILE_FILENAME)
    else:
        profile = default_profile()
    profile.validate()

    pages = _page_files(book_dir)
    results = []
    if args.jobs > 1 and len(pages) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(
                lambda p: _process_page(p, profile, out_dir, args.lines, args.apply_edits), pages))
    else:
        results = [_process_page(p, profile, out_dir, args.lines, args.apply_edits) for p in pages]

    results.sort(key=lambda r: r["page"])
    total = Counter()
    failures = []
    for r in results:
        if r["failure"]:
            failures.append(r)
            print(f"{r['page']}: FAILED: {r['failure']}")
        else:
            n = sum(r["counts"].values())
            print(f"{r['page']}: {n} regions ({_format_counts(r['counts'])})")
            total.update(r["counts"])
    print("summary:")
    print(f"  pages: {len(results)}")
    print(f"  failures: {len(failures)}")
    print(f"  regions: {sum(total.values())} ({_format_counts(total)})")
    if failures and args.strict:
        return 1
    return 0


def _fill_mask(contour: np.ndarray, frame: Tuple[int, int, int, int]) -> np.ndarray:
    x0, y0, w, h = frame
    mask = np.zeros((h, w), dtype=np.uint8)
    pts = np.asarray(contour, dtype=np.int32).reshape(-1, 1, 2) - np.array([x0, y0], dtype=np.int32)
    cv2.drawContours(mask, [pts], -1, 1, cv2.FILLED)
    return mask


def _iou(a, b) -> float:
    if not a.rect.intersects(b.rect):
        return 0.0
    x0 = int(min(a.rect.x, b.rect.x))
    y0 = int(min(a.rect.y, b.rect.y))
    x1 = int(max(a.rect.x2, b.rect.x2)) + 1
    y1 = int(max(a.rect.y2, b.rect.y2)) + 1
    frame = (x0, y0, x1 - x0, y1 - y0)
    ma = _fill_mask(a.contour, frame)
    mb = _fill_mask(b.contour, frame)
    inter = int(np.count_nonzero(ma & mb))
    union = int(np.count_nonzero(ma | mb))
    return inter / union if union else 0.0


def diff_command(args) -> int:
    gt_seg, _ = pagexml.read_page_xml(args.gt)
    pred_seg, _ = pagexml.read_page_xml(args.pred)
    if gt_seg.original_size != pred_seg.original_size:
        print(f"error: image dimensions differ: {gt_seg.original_size} vs {pred_seg.original_size}",
              file=sys.stderr)
        return 2

    types = sorted({r.region_type for r in gt_seg.regions} | {r.region_type for r in pred_seg.regions})
    unmatched_gt: List[str] = []
    unmatched_pred: List[str] = []
    for t in types:
        gt_rs = [r for r in gt_seg.regions if r.region_type == t]
        pred_rs = [r for r in pred_seg.regions if r.region_type == t]
        pairs = []
        for gi, g in enumerate(gt_rs):
            for pi, p in enumerate(pred_rs):
                score = _iou(g, p)
                if score >= 0.5:
                    pairs.append((score, gi, pi))
        pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
        used_g, used_p = set(), set()
        matched = 0
        for score, gi, pi in pairs:
            if gi in used_g or pi in used_p:
                continue
            used_g.add(gi)
            used_p.add(pi)
            matched += 1
        precision = matched / len(pred_rs) if pred_rs else 1.0
        recall = matched / len(gt_rs) if gt_rs else 1.0
        print(f"{t}: precision {precision:.2f} recall {recall:.2f} "
              f"(gt {len(gt_rs)}, pred {len(pred_rs)}, matched {matched})")
        unmatched_gt += [g.id for gi, g in enumerate(gt_rs) if gi not in used_g]
        unmatched_pred += [p.id for pi, p in enumerate(pred_rs) if pi not in used_p]
    if unmatched_gt:
        print(f"unmatched gt: {', '.join(sorted(unmatched_gt))}")
    if unmatched_pred:
        print(f"unmatched pred: {', '.join(sorted(unmatched_pred))}")
    return 0


def serve_command(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(books_dir=args.books, line_workers=args.line_workers)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bookseg",
                                     description="Layout analysis for scanned early printed books")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="segment every page of a book directory to PageXML")
    p_run.add_argument("--books", required=True, help="book directory containing page images")
    p_run.add_argument("--profile", default=None, help="profile JSON (default: book's larex-profile.json)")
    p_run.add_argument("--out", default=None, help="output directory (default: the book directory)")
    p_run.add_argument("--lines", action="store_true", help="also write <stem>.lines.xml with text lines")
    p_run.add_argument("--apply-edits", action="store_true", help="replay <stem>.edits.json logs when present")
    p_run.add_argument("--strict", action="store_true", help="exit nonzero when any page fails")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel page workers")
    p_run.set_defaults(func=run_command)

    p_diff = sub.add_parser("diff", help="region precision/recall of a prediction against ground truth")
    p_diff.add_argument("gt", help="ground-truth PageXML")
    p_diff.add_argument("pred", help="predicted PageXML")
    p_diff.set_defaults(func=diff_command)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--books", required=True, help="corpus root directory")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--line-workers", type=int, default=2)
    p_serve.set_defaults(func=serve_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BooksegError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

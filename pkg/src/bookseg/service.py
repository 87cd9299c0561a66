"""Book-oriented HTTP service: page listing, segmentation with live profile
overrides, persisted edit gestures, line segmentation jobs, and PageXML
finalization.

Books are directories of page images under one corpus root (env var
LAREX_BOOKS_DIR or the `books_dir` argument). Each book carries its profile
in `larex-profile.json` and per-page edit logs in `<stem>.edits.json`; the
displayed state is always replay(segmentPage(image, profile), editLog).
"""

import hashlib
import json
import os
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import FileResponse

from . import corrections, lineseg, pagexml
from .errors import BooksegError, InvalidInputError, NotFoundError, ProfileError
from .imaging import binarize, load_image
from .pipeline import PageSegmentation, segment_page
from .profiles import (SegmentationProfile, default_profile, load_profile,
                       profile_from_dict, profile_to_dict, save_profile)

PROFILE_FILENAME = "larex-profile.json"
IMAGE_SUFFIXES = (".png", ".tif", ".tiff", ".jpg", ".jpeg")
ENV_BOOKS_DIR = "LAREX_BOOKS_DIR"
ENV_LINE_WORKERS = "LAREX_LINE_WORKERS"


@dataclass
class LineJob:
    id: str
    book_id: str
    page_ids: List[str]
    total: int
    done: int = 0
    failures: Dict[str, str] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    cancelled: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    def status(self) -> dict:
        with self.lock:
            if self.cancelled:
                state = "cancelled"
            elif self.done >= self.total:
                state = "done"
            else:
                state = "running"
            return {
                "id": self.id,
                "book": self.book_id,
                "state": state,
                "total": self.total,
                "done": self.done,
                "failures": dict(self.failures),
                "files": list(self.files),
            }


class BookStore:
    """Filesystem-backed corpus: segmentation cache, edit logs, line jobs."""

    def __init__(self, root: Path, line_workers: int = 2):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._page_locks: Dict[Tuple[str, str], threading.Lock] = {}
        self._seg_cache: Dict[Tuple[str, str], Tuple[str, PageSegmentation, List[str]]] = {}
        self._line_cache: Dict[Tuple[str, str], Tuple[str, lineseg.LineSegmentationResult]] = {}
        self._binary_cache: Dict[Tuple[str, str, Optional[int]], np.ndarray] = {}
        self._meta_cache: Dict[Tuple[str, str], Tuple[int, int]] = {}
        self._jobs: Dict[str, LineJob] = {}
        self._job_counter = 0
        self._executor = ThreadPoolExecutor(max_workers=max(1, line_workers))

    # ----- directory layout -----

    def book_dir(self, book_id: str) -> Path:
        if not book_id or "/" in book_id or "\\" in book_id or book_id in (".", ".."):
            raise NotFoundError(f"unknown book {book_id!r}")
        path = self.root / book_id
        if not path.is_dir():
            raise NotFoundError(f"unknown book {book_id!r}")
        return path

    def list_books(self) -> List[dict]:
        if not self.root.is_dir():
            raise NotFoundError(f"books directory {self.root} does not exist")
        books = []
        for path in sorted(self.root.iterdir()):
            if path.is_dir():
                books.append({"id": path.name, "page_count": len(self._page_files(path))})
        return books

    @staticmethod
    def _page_files(book_dir: Path) -> List[Path]:
        files = [p for p in book_dir.iterdir()
                 if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
        return sorted(files, key=lambda p: p.name)

    def list_pages(self, book_id: str) -> List[dict]:
        book = self.book_dir(book_id)
        pages = []
        for path in self._page_files(book):
            width, height = self._page_size(book_id, path)
            pages.append({"id": path.stem, "filename": path.name, "width": width, "height": height})
        return pages

    def page_path(self, book_id: str, page_id: str) -> Path:
        book = self.book_dir(book_id)
        for path in self._page_files(book):
            if path.stem == page_id:
                return path
        raise NotFoundError(f"unknown page {page_id!r} in book {book_id!r}")

    def _page_size(self, book_id: str, path: Path) -> Tuple[int, int]:
        key = (book_id, path.name)
        with self._lock:
            if key in self._meta_cache:
                return self._meta_cache[key]
        img = load_image(path)
        h, w = img.shape[:2]
        with self._lock:
            self._meta_cache[key] = (w, h)
        return w, h

    def _page_lock(self, book_id: str, page_id: str) -> threading.Lock:
        with self._lock:
            return self._page_locks.setdefault((book_id, page_id), threading.Lock())

    # ----- profiles -----

    def profile_path(self, book_id: str) -> Path:
        return self.book_dir(book_id) / PROFILE_FILENAME

    def get_profile(self, book_id: str) -> SegmentationProfile:
        path = self.profile_path(book_id)
        if path.is_file():
            return load_profile(path)
        return default_profile()

    def put_profile(self, book_id: str, doc: dict) -> SegmentationProfile:
        profile = profile_from_dict(doc)
        save_profile(profile, self.profile_path(book_id))
        self._invalidate(book_id)
        return profile

    def _invalidate(self, book_id: str, page_id: Optional[str] = None) -> None:
        with self._lock:
            for key in list(self._seg_cache):
                if key[0] == book_id and (page_id is None or key[1] == page_id):
                    del self._seg_cache[key]

    # ----- edit logs -----

    def log_path(self, book_id: str, page_id: str) -> Path:
        return self.page_path(book_id, page_id).with_suffix(".edits.json")

    def get_log(self, book_id: str, page_id: str) -> corrections.EditLog:
        path = self.log_path(book_id, page_id)
        if path.is_file():
            return corrections.EditLog.load(path)
        return corrections.EditLog()

    # ----- segmentation state -----

    def _binary(self, book_id: str, page_id: str, threshold: Optional[int]) -> np.ndarray:
        key = (book_id, page_id, threshold)
        with self._lock:
            cached = self._binary_cache.get(key)
        if cached is not None:
            return cached
        image = load_image(self.page_path(book_id, page_id))
        binary = binarize(image, threshold)
        with self._lock:
            if len(self._binary_cache) > 32:
                self._binary_cache.clear()
            self._binary_cache[key] = binary
        return binary

    @staticmethod
    def _state_key(profile: SegmentationProfile, log: corrections.EditLog, image_path: Path) -> str:
        payload = json.dumps({
            "profile": profile_to_dict(profile),
            "log": log.to_dict(),
            "image": [image_path.name, image_path.stat().st_mtime_ns],
        }, sort_keys=True)
        return hashlib.sha1(payload.encode("utf-8")).hexdigest()

    def _compute_state(self, book_id: str, page_id: str, profile: SegmentationProfile,
                       log: corrections.EditLog):
        path = self.page_path(book_id, page_id)
        image = load_image(path)
        seg = segment_page(image, profile, page_id=page_id, image_filename=path.name)
        seg, skipped = corrections.replay_lenient(seg, log)
        return seg, skipped

    def state(self, book_id: str, page_id: str,
              override: Optional[SegmentationProfile] = None):
        """Current (segmentation, warnings) for a page; cached per page until
        the profile, log or image changes. Overrides are never persisted."""
        profile = override if override is not None else self.get_profile(book_id)
        profile.validate()
        log = self.get_log(book_id, page_id)
        path = self.page_path(book_id, page_id)
        key = self._state_key(profile, log, path)
        cache_id = (book_id, page_id)
        with self._lock:
            hit = self._seg_cache.get(cache_id)
        if hit is not None and hit[0] == key:
            return hit[1], list(hit[2])
        seg, skipped = self._compute_state(book_id, page_id, profile, log)
        with self._lock:
            self._seg_cache[cache_id] = (key, seg, list(skipped))
        return seg, skipped

    def check_consistency(self, book_id: str, page_id: str) -> bool:
        """Recompute from scratch and compare with the served state."""
        seg, _ = self.state(book_id, page_id)
        profile = self.get_profile(book_id)
        log = self.get_log(book_id, page_id)
        fresh, _ = self._compute_state(book_id, page_id, profile, log)
        return fresh.to_dict() == seg.to_dict()

    def apply_edit(self, book_id: str, page_id: str, edit: corrections.Edit):
        """Apply one gesture and persist it; the log is untouched when the
        edit fails."""
        with self._page_lock(book_id, page_id):
            seg, state_warnings = self.state(book_id, page_id)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                new_seg = corrections.apply_edit(seg, edit)
            edit.timestamp = time.time()
            log = self.get_log(book_id, page_id)
            log.append(edit)
            log.save(self.log_path(book_id, page_id))
            path = self.page_path(book_id, page_id)
            profile = self.get_profile(book_id)
            key = self._state_key(profile, log, path)
            with self._lock:
                self._seg_cache[(book_id, page_id)] = (key, new_seg, list(state_warnings))
            notes = state_warnings + [str(w.message) for w in caught]
            return new_seg, notes, len(log.edits)

    # ----- lines -----

    @staticmethod
    def _geometry_hash(seg: PageSegmentation) -> str:
        digest = hashlib.sha1()
        for r in seg.regions:
            digest.update(r.id.encode("utf-8"))
            digest.update(str(r.region_type).encode("utf-8"))
            digest.update(np.ascontiguousarray(np.asarray(r.contour, dtype=np.int64)).tobytes())
        return digest.hexdigest()

    def lines(self, book_id: str, page_id: str):
        """Line segmentation of the current state, cached by region geometry."""
        seg, _ = self.state(book_id, page_id)
        geom = self._geometry_hash(seg)
        cache_id = (book_id, page_id)
        with self._lock:
            hit = self._line_cache.get(cache_id)
        if hit is not None and hit[0] == geom:
            return hit[1], seg
        profile = seg.profile or self.get_profile(book_id)
        binary = self._binary(book_id, page_id, profile.binarization_threshold)
        result = lineseg.segment_page_lines(binary, seg, profile)
        with self._lock:
            self._line_cache[cache_id] = (geom, result)
        return result, seg

    def line_cut(self, book_id: str, page_id: str, region_id: str, line_index: int, side: str):
        with self._page_lock(book_id, page_id):
            result, seg = self.lines(book_id, page_id)
            profile = seg.profile or self.get_profile(book_id)
            binary = self._binary(book_id, page_id, profile.binarization_threshold)
            fallback = result.per_region_angle.get(region_id, 0.0)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                new_seg, edits = lineseg.cut_at_line(seg, binary, region_id, line_index, side, fallback)
            return self._persist_derived(book_id, page_id, new_seg, edits, caught)

    def line_retype(self, book_id: str, page_id: str, region_id: str, line_index: int, new_type: str):
        with self._page_lock(book_id, page_id):
            result, seg = self.lines(book_id, page_id)
            profile = seg.profile or self.get_profile(book_id)
            binary = self._binary(book_id, page_id, profile.binarization_threshold)
            fallback = result.per_region_angle.get(region_id, 0.0)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                new_seg, edits = lineseg.retype_line(seg, binary, region_id, line_index, new_type, fallback)
            return self._persist_derived(book_id, page_id, new_seg, edits, caught)

    def _persist_derived(self, book_id: str, page_id: str, seg: PageSegmentation,
                         edits: List[corrections.Edit], caught) -> Tuple[PageSegmentation, List[str], int]:
        log = self.get_log(book_id, page_id)
        now = time.time()
        for edit in edits:
            edit.timestamp = now
            log.append(edit)
        if edits:
            log.save(self.log_path(book_id, page_id))
        path = self.page_path(book_id, page_id)
        profile = self.get_profile(book_id)
        key = self._state_key(profile, log, path)
        with self._lock:
            self._seg_cache[(book_id, page_id)] = (key, seg, [])
        return seg, [str(w.message) for w in caught], len(log.edits)

    # ----- finalize -----

    def finalize(self, book_id: str, page_id: str) -> dict:
        with self._page_lock(book_id, page_id):
            seg, _ = self.state(book_id, page_id)
            book = self.book_dir(book_id)
            xml_path = pagexml.write_page_xml(seg, None, book)
            lines_path = None
            geom = self._geometry_hash(seg)
            with self._lock:
                hit = self._line_cache.get((book_id, page_id))
            if hit is not None and hit[0] == geom:
                lines_path = str(pagexml.write_page_xml(seg, hit[1], book, suffix=".lines.xml"))
            else:
                existing = book / f"{self.page_path(book_id, page_id).stem}.lines.xml"
                if existing.is_file():
                    lines_path = str(existing)
            return {"xml": str(xml_path), "lines": lines_path}

    # ----- line jobs -----

    def start_line_job(self, book_id: str, page_ids: List[str]) -> LineJob:
        self.book_dir(book_id)
        if not page_ids:
            raise InvalidInputError("line job needs at least one page")
        with self._lock:
            self._job_counter += 1
            job = LineJob(id=f"job-{self._job_counter}", book_id=book_id,
                          page_ids=list(page_ids), total=len(page_ids))
            self._jobs[job.id] = job
        for page_id in page_ids:
            self._executor.submit(self._run_job_page, job, page_id)
        return job

    def _run_job_page(self, job: LineJob, page_id: str) -> None:
        if job.cancelled:
            with job.lock:
                job.done += 1
            return
        try:
            result, seg = self.lines(job.book_id, page_id)
            book = self.book_dir(job.book_id)
            path = pagexml.write_page_xml(seg, result, book, suffix=".lines.xml")
            with job.lock:
                job.files.append(str(path))
        except Exception as e:
            with job.lock:
                job.failures[page_id] = str(e)
        finally:
            with job.lock:
                job.done += 1

    def get_job(self, book_id: str, job_id: str) -> LineJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None or job.book_id != book_id:
            raise NotFoundError(f"unknown line job {job_id!r}")
        return job

    def cancel_job(self, book_id: str, job_id: str) -> LineJob:
        job = self.get_job(book_id, job_id)
        with job.lock:
            job.cancelled = True
        return job


def _seg_payload(seg: PageSegmentation, notes: List[str], log_length: Optional[int] = None) -> dict:
    payload = {"segmentation": seg.to_dict(), "warnings": list(notes)}
    if log_length is not None:
        payload["log_length"] = log_length
    return payload


def create_app(books_dir: Optional[os.PathLike] = None,
               line_workers: Optional[int] = None) -> FastAPI:
    root = Path(books_dir) if books_dir is not None else Path(os.environ.get(ENV_BOOKS_DIR, "."))
    workers = line_workers if line_workers is not None else int(os.environ.get(ENV_LINE_WORKERS, "2"))
    store = BookStore(root, line_workers=workers)
    app = FastAPI(title="bookseg service", version="0.1.0")
    app.state.store = store

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (InvalidInputError, ProfileError) as e:
            raise HTTPException(status_code=422, detail=str(e))
        except BooksegError as e:
            raise HTTPException(status_code=400, detail=str(e))

    def parse_override(body) -> Optional[SegmentationProfile]:
        if not body:
            return None
        doc = body.get("profile")
        if doc is None:
            return None
        return profile_from_dict(doc)

    @app.get("/books")
    def list_books():
        return {"books": run(store.list_books)}

    @app.get("/books/{book_id}/pages")
    def list_pages(book_id: str):
        return {"pages": run(store.list_pages, book_id)}

    @app.get("/books/{book_id}/pages/{page_id}/image")
    def page_image(book_id: str, page_id: str):
        path = run(store.page_path, book_id, page_id)
        return FileResponse(path)

    @app.get("/books/{book_id}/profile")
    def get_profile(book_id: str):
        return {"profile": profile_to_dict(run(store.get_profile, book_id))}

    @app.put("/books/{book_id}/profile")
    def put_profile(book_id: str, body: dict = Body(...)):
        profile = run(store.put_profile, book_id, body)
        return {"profile": profile_to_dict(profile)}

    @app.post("/books/{book_id}/pages/{page_id}/segmentation")
    def segmentation(book_id: str, page_id: str, body: Optional[dict] = Body(default=None)):
        override = run(parse_override, body)
        seg, notes = run(store.state, book_id, page_id, override)
        log = run(store.get_log, book_id, page_id)
        return _seg_payload(seg, notes, len(log.edits))

    @app.post("/books/{book_id}/pages/{page_id}/edits")
    def post_edit(book_id: str, page_id: str, body: dict = Body(...)):
        edit = corrections.Edit.from_dict(body)
        seg, notes, log_length = run(store.apply_edit, book_id, page_id, edit)
        return _seg_payload(seg, notes, log_length)

    @app.get("/books/{book_id}/pages/{page_id}/lines")
    def get_lines(book_id: str, page_id: str):
        result, _ = run(store.lines, book_id, page_id)
        return result.to_dict()

    @app.post("/books/{book_id}/pages/{page_id}/lines/cut")
    def post_line_cut(book_id: str, page_id: str, body: dict = Body(...)):
        seg, notes, log_length = run(store.line_cut, book_id, page_id,
                                     str(body.get("region_id")), int(body.get("line_index", -1)),
                                     str(body.get("side", "below")))
        return _seg_payload(seg, notes, log_length)

    @app.post("/books/{book_id}/pages/{page_id}/lines/retype")
    def post_line_retype(book_id: str, page_id: str, body: dict = Body(...)):
        seg, notes, log_length = run(store.line_retype, book_id, page_id,
                                     str(body.get("region_id")), int(body.get("line_index", -1)),
                                     str(body.get("new_type", "")))
        return _seg_payload(seg, notes, log_length)

    @app.post("/books/{book_id}/pages/{page_id}/finalize")
    def finalize(book_id: str, page_id: str):
        return run(store.finalize, book_id, page_id)

    @app.get("/books/{book_id}/pages/{page_id}/consistency")
    def consistency(book_id: str, page_id: str):
        return {"consistent": run(store.check_consistency, book_id, page_id)}

    @app.post("/books/{book_id}/linejobs")
    def start_linejob(book_id: str, body: dict = Body(...)):
        job = run(store.start_line_job, book_id, list(body.get("pages", [])))
        return job.status()

    @app.get("/books/{book_id}/linejobs/{job_id}")
    def job_status(book_id: str, job_id: str):
        return run(store.get_job, book_id, job_id).status()

    @app.post("/books/{book_id}/linejobs/{job_id}/cancel")
    def job_cancel(book_id: str, job_id: str):
        return run(store.cancel_job, book_id, job_id).status()

    frontend = os.environ.get("LAREX_FRONTEND_DIR")
    if frontend and Path(frontend).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=frontend, html=True), name="ui")

    return app

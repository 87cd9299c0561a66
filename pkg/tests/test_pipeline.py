"""Page segmentation pipeline: image pass, text pass, classification,
occurrence limits, reading order, and full-page runs on the synthetic book."""

import numpy as np
import pytest

import synth
from bookseg.errors import NotFoundError, ProfileError
from bookseg.geometry import Rect
from bookseg.imaging import FOREGROUND
from bookseg.model import (IMAGE, MARGINALIA, PAGE_NUMBER, PARAGRAPH,
                           SIGNATURE_MARK, Region, TypeRule)
from bookseg.pipeline import (PageSegmentation, detect_images,
                              grow_text_regions, pick_by_priority,
                              reading_order, resolve_max_occurrence,
                              resolve_priorities, segment_page,
                              working_area_factor)
from bookseg.profiles import SegmentationProfile, default_profile


def region_stub(rid, rect: Rect, type_id=None, candidates=(), area=None) -> Region:
    contour = np.array([[rect.x, rect.y], [rect.x2 - 1, rect.y],
                        [rect.x2 - 1, rect.y2 - 1], [rect.x, rect.y2 - 1]], dtype=np.int32)
    return Region(id=rid, region_type=type_id, contour=contour, rect=rect,
                  area=int(rect.area if area is None else area), candidates=tuple(candidates))


def occurrence_profile(priority, capped, position="top") -> SegmentationProfile:
    rules = [TypeRule(t, min_area=0, max_occurrence=1 if t == capped else None,
                      priority_position=position if t == capped else None)
             for t in priority]
    return SegmentationProfile(rules=rules, priority=tuple(priority))


# ------------------------------------------------------------ image pass ---

def test_detect_images_finds_large_blob_and_erases_it():
    r = np.zeros((400, 400), dtype=np.uint8)
    r[50:150, 50:150] = FOREGROUND          # 10000 px: image
    r[200:210, 200:260] = FOREGROUND        # 600 px: text-ish
    regions, cleaned = detect_images(r, default_profile())
    assert [x.region_type for x in regions] == [IMAGE]
    assert regions[0].id == "img-0"
    assert int(np.count_nonzero(cleaned[40:160, 40:160])) == 0
    assert int(np.count_nonzero(cleaned)) == 600


def test_detect_images_threshold_counts_dilated_area():
    # raw blob below the threshold, dilated above: detection works on scratch
    r = np.zeros((300, 300), dtype=np.uint8)
    r[100:150, 100:155] = FOREGROUND        # 2750 < 3000; dilated 5x5 -> 3186
    regions, _ = detect_images(r, default_profile())
    assert len(regions) == 1
    no_dilate = SegmentationProfile(image_dilation_enabled=False)
    regions, cleaned = detect_images(r, no_dilate)
    assert regions == []
    assert (cleaned == r).all()


def test_detect_images_removal_modes_on_diagonal_bar():
    r = np.zeros((300, 300), dtype=np.uint8)
    for i in range(200):                    # thick diagonal bar
        r[40 + i // 2, 40 + i:40 + i + 30] = FOREGROUND
    r[50, 250] = FOREGROUND                 # dot inside bbox, off the bar
    base = int(np.count_nonzero(r))
    for mode, spared in (("contour", True), ("rotated-rect", True), ("straight-rect", False)):
        prof = SegmentationProfile(image_removal_mode=mode)
        regions, cleaned = detect_images(r, prof)
        assert len(regions) == 1, mode
        left = int(np.count_nonzero(cleaned))
        if spared:
            assert left >= 1, mode          # the dot survives tighter shapes
        else:
            assert left == 0, mode
        assert left < base


def test_working_area_factor():
    p = default_profile()
    assert working_area_factor(p, (2000, 3200)) == pytest.approx(0.25)
    assert working_area_factor(p, (2000, 1600)) == 1.0
    assert working_area_factor(p, (500, 800)) == 1.0  # never upscales


# -------------------------------------------------------------- text pass ---

def test_grow_text_regions_merges_within_kernel_reach():
    p = default_profile()  # kernel 21x15 merges gaps <= 20 horizontally, 14 vertically
    r = np.zeros((200, 400), dtype=np.uint8)
    r[50:64, 50:100] = FOREGROUND
    r[50:64, 118:168] = FOREGROUND          # gap 18: merges
    r[50:64, 250:300] = FOREGROUND          # gap 82: separate
    regions = grow_text_regions(r, p)
    assert len(regions) == 2
    assert all(x.region_type is None for x in regions)
    assert [x.id for x in regions] == ["txt-0", "txt-1"]


def test_grow_text_regions_vertical_reach():
    p = default_profile()
    r = np.zeros((300, 200), dtype=np.uint8)
    r[50:64, 50:150] = FOREGROUND
    r[78:92, 50:150] = FOREGROUND           # gap 14: merges under kh=15
    r[140:154, 50:150] = FOREGROUND         # gap 48: separate
    assert len(grow_text_regions(r, p)) == 2
    shorter = SegmentationProfile(text_kernel=(21, 11))  # merges only gaps <= 10
    assert len(grow_text_regions(r, shorter)) == 3


# ---------------------------------------------------------- classification ---

def test_pick_by_priority():
    pr = (PAGE_NUMBER, MARGINALIA, PARAGRAPH)
    assert pick_by_priority((PARAGRAPH, PAGE_NUMBER), pr) == PAGE_NUMBER
    assert pick_by_priority((PARAGRAPH, MARGINALIA), pr) == MARGINALIA
    assert pick_by_priority((PARAGRAPH,), pr) == PARAGRAPH
    assert pick_by_priority((), pr) is None
    assert pick_by_priority(("bogus",), pr) is None


def test_resolve_priorities_drops_candidate_less():
    p = default_profile()
    regions = [region_stub("a", Rect(0, 0, 10, 10), candidates=(PARAGRAPH, PAGE_NUMBER)),
               region_stub("b", Rect(20, 0, 10, 10), candidates=())]
    typed = resolve_priorities(regions, p)
    assert [r.id for r in typed] == ["a"]
    assert typed[0].region_type == PAGE_NUMBER


def test_max_occurrence_keeps_topmost():
    p = default_profile()
    top = region_stub("t", Rect(100, 10, 50, 20), PAGE_NUMBER, (PAGE_NUMBER, PARAGRAPH))
    bottom = region_stub("b", Rect(100, 900, 50, 20), PAGE_NUMBER, (PAGE_NUMBER, PARAGRAPH))
    out = resolve_max_occurrence([bottom, top], p)
    got = {r.id: r.region_type for r in out}
    assert got == {"t": PAGE_NUMBER, "b": PARAGRAPH}


def test_max_occurrence_drops_loser_without_fallback():
    p = default_profile()
    a = region_stub("a", Rect(0, 0, 10, 10), PAGE_NUMBER, (PAGE_NUMBER,))
    b = region_stub("b", Rect(0, 50, 10, 10), PAGE_NUMBER, (PAGE_NUMBER,))
    out = resolve_max_occurrence([a, b], p)
    assert [(r.id, r.region_type) for r in out] == [("a", PAGE_NUMBER)]


def test_max_occurrence_positions():
    for position, winner in (("top", "n"), ("bottom", "s"), ("left", "w"), ("right", "e")):
        prof = occurrence_profile((PAGE_NUMBER, PARAGRAPH), PAGE_NUMBER, position)
        regions = [region_stub("n", Rect(400, 0, 50, 20), PAGE_NUMBER, (PAGE_NUMBER,)),
                   region_stub("s", Rect(400, 900, 50, 20), PAGE_NUMBER, (PAGE_NUMBER,)),
                   region_stub("w", Rect(0, 400, 50, 20), PAGE_NUMBER, (PAGE_NUMBER,)),
                   region_stub("e", Rect(900, 400, 50, 20), PAGE_NUMBER, (PAGE_NUMBER,))]
        out = resolve_max_occurrence(regions, prof)
        assert [r.id for r in out] == [winner], position


def test_max_occurrence_tie_breaks_on_area():
    prof = occurrence_profile((PAGE_NUMBER, PARAGRAPH), PAGE_NUMBER, "top")
    small = region_stub("small", Rect(500, 10, 20, 20), PAGE_NUMBER, (PAGE_NUMBER,))
    large = region_stub("large", Rect(100, 10, 80, 20), PAGE_NUMBER, (PAGE_NUMBER,))
    out = resolve_max_occurrence([small, large], prof)
    assert [r.id for r in out] == ["large"]


def test_max_occurrence_reassigned_loser_joins_lower_contest():
    """A page-number loser falling back to marginalia competes there too."""
    rules = [TypeRule(PAGE_NUMBER, min_area=0, max_occurrence=1, priority_position="top"),
             TypeRule(MARGINALIA, min_area=0, max_occurrence=1, priority_position="top"),
             TypeRule(PARAGRAPH, min_area=0)]
    prof = SegmentationProfile(rules=rules, priority=(PAGE_NUMBER, MARGINALIA, PARAGRAPH))
    a = region_stub("a", Rect(0, 0, 10, 10), PAGE_NUMBER, (PAGE_NUMBER, MARGINALIA))
    b = region_stub("b", Rect(0, 100, 10, 10), PAGE_NUMBER,
                    (PAGE_NUMBER, MARGINALIA, PARAGRAPH))
    c = region_stub("c", Rect(0, 50, 10, 10), MARGINALIA, (MARGINALIA, PARAGRAPH))
    out = resolve_max_occurrence([a, b, c], prof)
    got = {r.id: r.region_type for r in out}
    # b loses page-number to a, then the marginalia contest to c (c is higher)
    assert got == {"a": PAGE_NUMBER, "c": MARGINALIA, "b": PARAGRAPH}


def test_priority_and_occurrence_property_fuzz():
    """(a) multi-candidate regions take the highest-priority candidate;
    (b) at most one region of a capped type survives;
    (c) losers re-assign to their next candidate when one exists."""
    rng = np.random.default_rng(101)
    priority = (PAGE_NUMBER, MARGINALIA, PARAGRAPH)
    prof = occurrence_profile(priority, PAGE_NUMBER, "top")
    rank = {t: i for i, t in enumerate(priority)}
    for _ in range(150):
        regions = []
        for i in range(int(rng.integers(1, 12))):
            n = int(rng.integers(1, 4))
            cands = tuple(sorted(rng.choice(priority, size=n, replace=False),
                                 key=lambda t: rank[t]))
            rect = Rect(int(rng.integers(0, 900)), int(rng.integers(0, 900)),
                        int(rng.integers(10, 100)), int(rng.integers(10, 100)))
            regions.append(region_stub(f"r{i}", rect, candidates=cands))
        typed = resolve_priorities(regions, prof)
        for r in typed:
            assert r.region_type == min(r.candidates, key=lambda t: rank[t])   # (a)
        out = resolve_max_occurrence(typed, prof)
        survivors = [r for r in out if r.region_type == PAGE_NUMBER]
        assert len(survivors) <= 1                                             # (b)
        before = {r.id: r for r in typed}
        for r in out:
            if r.region_type != before[r.id].region_type:
                lower = [t for t in r.candidates if rank[t] > rank[before[r.id].region_type]]
                assert lower and r.region_type == min(lower, key=lambda t: rank[t])  # (c)
        # dropped regions had no candidate below the capped type
        dropped = set(before) - {r.id for r in out}
        for rid in dropped:
            r = before[rid]
            assert r.region_type == PAGE_NUMBER
            assert all(rank[t] <= rank[PAGE_NUMBER] for t in r.candidates)


def test_max_occurrence_input_order_invariant():
    rng = np.random.default_rng(7)
    prof = occurrence_profile((PAGE_NUMBER, PARAGRAPH), PAGE_NUMBER, "top")
    regions = [region_stub(f"r{i}", Rect(int(rng.integers(0, 500)), int(rng.integers(0, 500)), 30, 20),
                           PAGE_NUMBER, (PAGE_NUMBER, PARAGRAPH))
               for i in range(6)]
    want = sorted((r.id, r.region_type) for r in resolve_max_occurrence(regions, prof))
    for _ in range(10):
        shuffled = list(regions)
        rng.shuffle(shuffled)
        got = sorted((r.id, r.region_type) for r in resolve_max_occurrence(shuffled, prof))
        assert got == want


# ------------------------------------------------------------ reading order ---

def test_reading_order_two_columns_then_aux():
    regions = [
        region_stub("colB-1", Rect(500, 100, 300, 200), PARAGRAPH),
        region_stub("colA-2", Rect(100, 400, 300, 200), PARAGRAPH),
        region_stub("colA-1", Rect(120, 100, 280, 200), PARAGRAPH),
        region_stub("colB-2", Rect(520, 400, 280, 200), PARAGRAPH),
        region_stub("pn", Rect(400, 10, 50, 20), PAGE_NUMBER),
        region_stub("marg", Rect(850, 120, 60, 300), MARGINALIA),
        region_stub("img", Rect(300, 700, 200, 100), IMAGE),
    ]
    order = reading_order(regions)
    assert order == ["colA-1", "colA-2", "colB-1", "colB-2", "pn", "marg"]


def test_reading_order_overlapping_columns_merge():
    regions = [
        region_stub("b", Rect(100, 300, 300, 100), PARAGRAPH),
        region_stub("a", Rect(250, 100, 300, 100), PARAGRAPH),  # overlaps both spans
        region_stub("c", Rect(400, 500, 300, 100), PARAGRAPH),
    ]
    assert reading_order(regions) == ["a", "b", "c"]


def test_reading_order_is_permutation_of_text_ids():
    rng = np.random.default_rng(29)
    types = (PARAGRAPH, MARGINALIA, PAGE_NUMBER, SIGNATURE_MARK, IMAGE)
    for _ in range(50):
        regions = [region_stub(f"r{i}", Rect(int(rng.integers(0, 800)), int(rng.integers(0, 800)),
                                             int(rng.integers(20, 200)), int(rng.integers(20, 200))),
                               str(rng.choice(types)))
                   for i in range(int(rng.integers(0, 10)))]
        order = reading_order(regions)
        text_ids = {r.id for r in regions if r.region_type != IMAGE}
        assert sorted(order) == sorted(text_ids)


# --------------------------------------------------------------- full page ---

def test_segment_page_default_profile(page_plain):
    image, gt = page_plain
    seg = segment_page(image, default_profile(), page_id="page-01")
    types = sorted(r.region_type for r in seg.regions)
    assert types == [PAGE_NUMBER] + [PARAGRAPH] * 5
    pn = next(r for r in seg.regions if r.region_type == PAGE_NUMBER)
    assert pn.rect.y < 300
    assert seg.original_size == (synth.PAGE_W, synth.PAGE_H)
    assert sorted(seg.reading_order) == sorted(r.id for r in seg.regions)


def test_segment_page_tuned_profile_matches_ground_truth(page_plain):
    image, gt = page_plain
    seg = segment_page(image, synth.tuned_profile(), page_id="page-01")
    synth.match_regions(seg.regions, gt)
    assert len(seg.regions) == len(gt)
    assert not seg.unclassified


def test_segment_page_image_block(page_with_image):
    image, gt = page_with_image
    seg = segment_page(image, synth.tuned_profile(), page_id="page-00")
    assert sum(1 for r in seg.regions if r.region_type == IMAGE) == 1
    img = next(r for r in seg.regions if r.region_type == IMAGE)
    assert img.id not in seg.reading_order
    synth.match_regions(seg.regions, gt)


def test_segment_page_region_coordinates_inside_page(page_plain):
    image, _ = page_plain
    for height in (800, 1600, 2400):
        prof = synth.tuned_profile()
        prof.target_height = height
        seg = segment_page(image, prof)
        w, h = seg.original_size
        for r in seg.regions:
            pts = np.asarray(r.contour)
            assert pts[:, 0].min() >= 0 and pts[:, 0].max() <= w - 1
            assert pts[:, 1].min() >= 0 and pts[:, 1].max() <= h - 1
            assert 0 <= r.rect.x and r.rect.x2 <= w
            assert 0 <= r.rect.y and r.rect.y2 <= h


def test_segment_page_deterministic(page_plain):
    image, _ = page_plain
    a = segment_page(image, synth.tuned_profile()).to_dict()
    b = segment_page(image, synth.tuned_profile()).to_dict()
    assert a == b


def test_segment_blank_and_solid_pages():
    blank = np.full((1000, 800), 255, dtype=np.uint8)
    seg = segment_page(blank, default_profile())
    assert seg.regions == [] and seg.reading_order == []
    solid = np.zeros((1000, 800), dtype=np.uint8)
    seg = segment_page(solid, default_profile())
    assert [r.region_type for r in seg.regions] == [IMAGE]


def test_segment_page_roi_limits_analysis(page_plain):
    image, gt = page_plain
    prof = synth.tuned_profile()
    # keep only the body column: margins, page number and signature drop out
    prof.roi = Rect(0.30, 0.10, 0.42, 0.75)
    seg = segment_page(image, prof)
    types = {r.region_type for r in seg.regions}
    assert types == {PARAGRAPH}
    assert all(0.25 * synth.PAGE_W < r.rect.x for r in seg.regions)


def test_segment_page_unclassified_diagnostics(page_plain):
    image, _ = page_plain
    prof = synth.tuned_profile()
    # starve the rules so the page number has no candidate anywhere
    prof.rules = [TypeRule(PARAGRAPH, min_area=2000)]
    prof.priority = (PARAGRAPH,)
    seg = segment_page(image, prof)
    assert all(r.region_type == PARAGRAPH for r in seg.regions)
    assert seg.unclassified, "small regions should surface as diagnostics"
    assert all(not r.candidates for r in seg.unclassified)


def test_segment_page_rejects_invalid_profile(page_plain):
    image, _ = page_plain
    prof = default_profile()
    prof.text_kernel = (20, 14)
    with pytest.raises(ProfileError):
        segment_page(image, prof)


def test_page_segmentation_dict_round_trip(page_plain):
    image, _ = page_plain
    seg = segment_page(image, synth.tuned_profile(), page_id="p", image_filename="p.png")
    d = seg.to_dict()
    back = PageSegmentation.from_dict(d)
    assert back.to_dict() == d
    with pytest.raises(NotFoundError):
        back.region_by_id("nope")

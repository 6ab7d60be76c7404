import math

import numpy as np
import pytest

from fgo.cues import (
    Candidate,
    SAParams,
    TJParams,
    build_tj_maps,
    classify_junction_angle,
    classify_junction_area,
    compute_sa_maps,
    detect_t_junctions,
    find_junction_candidates,
    format_junction,
    integer_shift,
    local_orientation_of_contours,
    quantize_orientation,
    sample_shifted,
    side_direction,
    trace_contour,
)


# ----------------------------------------------------------- fixtures

def t_junction_maps(size=40, mid=20):
    """Horizontal boundary with a stem below: a perfect T at (mid, mid).

    Contours: 1 = left arm, 2 = right arm, 3 = stem. Regions: 1 above
    (including the boundary row), 2 below-left (including the stem), 3
    below-right.
    """
    contours = np.zeros((size, size), dtype=np.int64)
    contours[mid, : mid + 1] = 1
    contours[mid, mid + 1 :] = 2
    contours[mid + 1 :, mid] = 3
    segments = np.zeros((size, size), dtype=np.int64)
    segments[: mid + 1, :] = 1
    segments[mid + 1 :, : mid + 1] = 2
    segments[mid + 1 :, mid + 1 :] = 3
    return contours, segments


def ray_maps(angles_deg, size=41, ray_len=14):
    """Rays from the center at the given angles, one contour id each.

    Regions are the angular sectors between consecutive rays.
    """
    center = size // 2
    contours = np.zeros((size, size), dtype=np.int64)
    for cid, deg in enumerate(angles_deg, start=1):
        phi = math.radians(deg)
        for t in range(1, ray_len + 1):
            r = center + int(round(t * math.sin(phi)))
            c = center + int(round(t * math.cos(phi)))
            if 0 <= r < size and 0 <= c < size:
                contours[r, c] = cid
    segments = np.zeros((size, size), dtype=np.int64)
    rr, cc = np.mgrid[0:size, 0:size]
    ang = np.degrees(np.arctan2(rr - center, cc - center)) % 360.0
    bounds = sorted(a % 360.0 for a in angles_deg)
    segments[:] = len(bounds)
    for rid in range(len(bounds) - 1):
        segments[(ang >= bounds[rid]) & (ang < bounds[rid + 1])] = rid + 1
    return contours, segments


# ------------------------------------------------------ shifted sampling

def test_integer_shift_moves_and_pads():
    arr = np.arange(9.0).reshape(3, 3)
    out = integer_shift(arr, 1, 0)
    assert np.array_equal(out[0], arr[1])
    assert np.array_equal(out[2], np.zeros(3))


def test_sample_shifted_zero_offset_identity():
    arr = np.random.default_rng(0).random((6, 6))
    assert np.allclose(sample_shifted(arr, 0.0, 0.0), arr)


def test_sample_shifted_fractional_frozen():
    arr = np.array([[0.0, 1.0], [10.0, 11.0]])
    out = sample_shifted(arr, 0.5, 0.5)
    assert out[0, 0] == pytest.approx(5.5)  # mean of all four
    assert out[0, 1] == 0.0  # sample column out of range
    assert out[1, 0] == 0.0


def test_sample_shifted_out_of_bounds_zero():
    arr = np.ones((4, 4))
    assert np.allclose(sample_shifted(arr, 10.0, 0.0), 0.0)


# ---------------------------------------------------- spectral anisotropy

def test_sa_constant_image_silent():
    sa = compute_sa_maps(np.full((40, 40), 0.6))
    assert np.abs(sa).max() < 1e-9


def test_sa_smallest_even_frequency_value():
    assert SAParams().frequencies(9)[0] == pytest.approx(math.pi * 4 / 9)
    assert SAParams().frequencies(9)[0] == pytest.approx(1.3962634, abs=1e-6)


def test_sa_sizes_and_validation():
    assert SAParams().sizes == (9, 11, 13, 15, 17, 19, 21, 23, 25)
    with pytest.raises(ValueError):
        SAParams(min_size=8)
    with pytest.raises(ValueError):
        SAParams(size_step=3)


def test_sa_symmetric_stimulus_no_side_preference():
    # mirror-symmetric about row 30: both sides of theta=0 must agree there
    img = np.zeros((61, 61))
    img[28:33, :] = 0.8
    sa = compute_sa_maps(img, SAParams(max_size=13))
    assert np.abs(sa[0, 0, 30, 10:-10] - sa[0, 1, 30, 10:-10]).max() < 1e-6


def test_sa_prefers_the_shaded_side():
    # luminance ramp above a horizontal edge, flat below
    size = 64
    edge = 32
    img = np.full((size, size), 0.2)
    for r in range(edge):
        img[r, :] = 0.2 + 0.5 * max(0.0, 1 - (edge - r) / 16)
    sa = compute_sa_maps(img)
    into_ramp = sa[0, 1, edge, 16:-16]  # side 1 points up (theta - pi/2)
    away = sa[0, 0, edge, 16:-16]
    assert (into_ramp > away).mean() > 0.95


def test_sa_shifts_with_the_image():
    rng = np.random.default_rng(1)
    img = rng.random((56, 56))
    shifted = np.roll(img, (2, 3), axis=(0, 1))
    a = compute_sa_maps(img, SAParams(max_size=11))
    b = compute_sa_maps(shifted, SAParams(max_size=11))
    m = 24
    assert np.abs(
        np.roll(a, (2, 3), axis=(2, 3))[:, :, m:-m, m:-m] - b[:, :, m:-m, m:-m]
    ).max() < 1e-9


def test_side_direction_frame():
    dx, dy = side_direction(0.0, 0)  # theta + pi/2 points down the rows
    assert (dx, dy) == (pytest.approx(0.0, abs=1e-12), pytest.approx(1.0))
    dx, dy = side_direction(0.0, 1)
    assert (dx, dy) == (pytest.approx(0.0, abs=1e-12), pytest.approx(-1.0))


# ------------------------------------------------------------- candidates

def test_candidates_blank_maps_empty():
    contours = np.zeros((20, 20), dtype=np.int64)
    segments = np.ones((20, 20), dtype=np.int64)
    assert find_junction_candidates(contours, segments) == []


def test_candidates_perfect_t_single():
    contours, segments = t_junction_maps()
    cands = find_junction_candidates(contours, segments)
    assert len(cands) == 1
    cand = cands[0]
    assert cand.contour_ids == (1, 2, 3)
    assert cand.region_ids == (1, 2, 3)
    assert abs(cand.row - 20) <= 1 and abs(cand.col - 20) <= 1


def test_candidates_plus_junction_excluded():
    contours, segments = ray_maps([0, 90, 180, 270])
    assert find_junction_candidates(contours, segments) == []


def test_candidates_reject_mismatched_shapes():
    with pytest.raises(ValueError):
        find_junction_candidates(np.zeros((4, 4), dtype=np.int64),
                                 np.zeros((5, 4), dtype=np.int64))
    with pytest.raises(ValueError):
        find_junction_candidates(np.zeros((4, 4)), np.zeros((4, 4), dtype=np.int64))


# -------------------------------------------------------- area classifier

def test_area_painted_counts_pick_largest():
    # paint a disk's pixels explicitly: 60 / 30 / 23 of regions 1 / 2 / 3
    segments = np.full((30, 30), 9, dtype=np.int64)
    dr = np.arange(-6, 7)
    offs = [(a, b) for a in dr for b in dr if a * a + b * b <= 36]
    for i, (a, b) in enumerate(offs):
        rid = 1 if i < 60 else (2 if i < 90 else 3)
        segments[15 + a, 15 + b] = rid
    contours = np.zeros((30, 30), dtype=np.int64)
    contours[segments == 1] = 0
    # lay three contours through the disk so two abut region 1
    contours[15, 9:22] = 0
    cand = Candidate(row=15, col=15, contour_ids=(1, 2, 3), region_ids=(1, 2, 3))
    # contours: ids 1 and 2 adjacent to region-1 pixels, id 3 far away
    ys, xs = np.where(segments == 1)
    contours[ys[0], xs[0] + 0] = 1
    contours[ys[1], xs[1]] = 2
    contours[28, 28] = 3
    res = classify_junction_area(segments, contours, cand)
    assert res.figure_region == 1
    assert res.counts == (60, 30, 23)
    assert res.hat == (1, 2)


def test_area_exact_tie_flagged():
    segments = np.full((30, 30), 3, dtype=np.int64)
    dr = np.arange(-6, 7)
    offs = [(a, b) for a in dr for b in dr if a * a + b * b <= 36]
    assert len(offs) == 113
    for i, (a, b) in enumerate(offs):
        rid = 1 if i < 38 else (2 if i < 76 else 3)
        segments[15 + a, 15 + b] = rid
    contours = np.zeros((30, 30), dtype=np.int64)
    cand = Candidate(row=15, col=15, contour_ids=(1, 2, 3), region_ids=(1, 2, 3))
    res = classify_junction_area(segments, contours, cand)
    assert res.tie
    assert res.figure_region is None


def test_area_missing_region_is_malformed():
    segments = np.ones((30, 30), dtype=np.int64)
    contours = np.zeros((30, 30), dtype=np.int64)
    cand = Candidate(row=15, col=15, contour_ids=(1, 2, 3), region_ids=(1, 2, 3))
    with pytest.raises(ValueError):
        classify_junction_area(segments, contours, cand)


def test_area_perfect_t_hat_and_figure():
    contours, segments = t_junction_maps()
    cand = find_junction_candidates(contours, segments)[0]
    res = classify_junction_area(segments, contours, cand)
    assert res.figure_region == 1  # the region above covers most of the disk
    assert res.hat == (1, 2)  # the two collinear arms


# ------------------------------------------------------- angle classifier

def test_trace_contour_straight_line():
    contours, _ = t_junction_maps()
    end = trace_contour(contours, 2, 20, 20)
    assert end == (20, 27)
    end = trace_contour(contours, 3, 20, 20)
    assert end == (27, 20)


def test_trace_contour_too_short_is_malformed():
    contours = np.zeros((20, 20), dtype=np.int64)
    contours[10, 10] = 1
    contours[10, 11] = 1
    with pytest.raises(ValueError):
        trace_contour(contours, 1, 10, 10)
    with pytest.raises(ValueError):
        trace_contour(contours, 7, 10, 10)


def test_angle_perfect_t_hat_is_collinear_pair():
    contours, segments = t_junction_maps()
    cand = find_junction_candidates(contours, segments)[0]
    res = classify_junction_angle(contours, cand)
    assert res.rejected is None
    assert res.hat == (1, 2)
    assert max(res.sectors) == pytest.approx(180.0, abs=2.0)


def test_angle_perfect_y_rejected():
    contours, segments = ray_maps([90, 210, 330])
    cand = Candidate(row=20, col=20, contour_ids=(1, 2, 3), region_ids=(1, 2, 3))
    res = classify_junction_angle(contours, cand)
    assert res.rejected == "yJunction"
    assert res.hat is None


def test_angle_arrow_rejected():
    contours, segments = ray_maps([0, 80, 160])
    cand = Candidate(row=20, col=20, contour_ids=(1, 2, 3), region_ids=(1, 2, 3))
    res = classify_junction_angle(contours, cand)
    assert res.rejected == "arrowJunction"
    assert res.hat is None


# --------------------------------------------------------------- pipeline

def test_detect_perfect_t_matched():
    contours, segments = t_junction_maps()
    junctions = detect_t_junctions(contours, segments)
    assert len(junctions) == 1
    j = junctions[0]
    assert j.matched
    assert j.rejected == "none"
    assert j.hat_by_area == j.hat_by_angle == (1, 2)
    assert j.figure_region == 1


def test_detect_y_junction_record_rejected():
    contours, segments = ray_maps([90, 210, 330])
    junctions = detect_t_junctions(contours, segments)
    assert len(junctions) == 1
    assert not junctions[0].matched
    assert junctions[0].rejected == "yJunction"


def test_format_junction_line():
    contours, segments = t_junction_maps()
    line = format_junction(detect_t_junctions(contours, segments)[0])
    fields = line.split()
    assert len(fields) == 10
    assert fields[-1] == "none"
    assert fields[-2] == "1"


# ---------------------------------------------------- contour orientation

def test_orientation_horizontal_and_diagonal():
    contours = np.zeros((20, 20), dtype=np.int64)
    contours[10, 2:18] = 1
    orient = local_orientation_of_contours(contours)
    assert orient[10, 10] == pytest.approx(0.0, abs=1e-9)
    contours = np.zeros((20, 20), dtype=np.int64)
    for i in range(2, 18):
        contours[i, i] = 1
    orient = local_orientation_of_contours(contours)
    assert orient[10, 10] == pytest.approx(math.pi / 4, abs=1e-9)


def test_orientation_vertical_and_nan_off_contour():
    contours = np.zeros((20, 20), dtype=np.int64)
    contours[2:18, 7] = 2
    orient = local_orientation_of_contours(contours)
    assert orient[10, 7] == pytest.approx(math.pi / 2, abs=1e-9)
    assert np.isnan(orient[0, 0])


def test_quantize_orientation_bins_and_wrap():
    assert quantize_orientation(0.0) == 0
    assert quantize_orientation(math.pi / 2) == 4
    assert quantize_orientation(0.99 * math.pi) == 0  # wraps to the 0 bin
    assert quantize_orientation(3 * math.pi / 8 + 0.01) == 3


# ----------------------------------------------------------------- TJ map

def test_tj_maps_no_matched_junctions_zero():
    contours, segments = ray_maps([90, 210, 330])
    junctions = detect_t_junctions(contours, segments)
    maps = build_tj_maps(contours, segments, junctions)
    assert np.abs(maps).max() == 0.0


def test_tj_maps_perfect_t_paints_one_directed_bin():
    contours, segments = t_junction_maps()
    junctions = detect_t_junctions(contours, segments)
    maps = build_tj_maps(contours, segments, junctions)
    # figure is above the horizontal hat: theta = 0, side 1 (theta - pi/2)
    assert maps[0, 1].sum() > 10
    others = maps.copy()
    others[0, 1] = 0.0
    assert np.abs(others).max() == 0.0
    # never both sides at one pixel
    assert np.abs(maps[0, 0] * maps[0, 1]).max() == 0.0
    # painted pixels stay within the influence radius of the junction
    ys, xs = np.nonzero(maps[0, 1])
    assert ((ys - 20) ** 2 + (xs - 20) ** 2 <= 15**2).all()


def test_tj_params_validation():
    with pytest.raises(ValueError):
        TJParams(angle_track_length=2)
    with pytest.raises(ValueError):
        TJParams(probe_min=0)

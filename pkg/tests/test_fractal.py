import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specwalk import fractal
from specwalk.fractal import (
    RasterGrid,
    box_count,
    dyadic_epsilons,
    extract_frontier,
    fit_dimension,
    generate_calibration,
    rasterize_polyline,
    rasterize_segments,
    rasterize_shape,
    supercover_cells,
)
from specwalk.spectra import WeightedSpectrum
from specwalk.walker import walk_path


def clip_hits(x0, y0, x1, y1, c, r):
    """Liang-Barsky: does the segment meet the closed unit square at (c, r)?"""
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - c), (dx, c + 1 - x0), (-dy, y0 - r), (dy, r + 1 - y0)):
        if p == 0:
            if q < 0:
                return False
        else:
            t = q / p
            if p < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
    return t0 <= t1


def brute_cells(x0, y0, x1, y1):
    cells = set()
    for c in range(int(math.floor(min(x0, x1))) - 1, int(math.floor(max(x0, x1))) + 2):
        for r in range(int(math.floor(min(y0, y1))) - 1, int(math.floor(max(y0, y1))) + 2):
            if clip_hits(x0, y0, x1, y1, c, r):
                cells.add((r, c))
    return cells


def test_supercover_matches_clipping_oracle():
    rng = np.random.default_rng(0)
    seg = rng.uniform(0, 40, (300, 4))
    rows, cols = supercover_cells(seg[:, 0], seg[:, 1], seg[:, 2], seg[:, 3])
    got = set(zip(rows.tolist(), cols.tolist()))
    want = set().union(*(brute_cells(*s) for s in seg))
    assert got == want


def test_supercover_exact_diagonal_marks_both_corner_neighbours():
    rows, cols = supercover_cells([0.5], [0.5], [2.5], [2.5])
    assert set(zip(rows.tolist(), cols.tolist())) == {(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)}


def test_supercover_is_direction_independent():
    a = supercover_cells([1.3], [7.9], [12.6], [2.2])
    b = supercover_cells([12.6], [2.2], [1.3], [7.9])
    assert set(zip(*map(np.ndarray.tolist, a))) == set(zip(*map(np.ndarray.tolist, b)))


def test_two_point_path_is_single_row():
    g = rasterize_polyline([0, 1], resolution=256)
    rows = np.flatnonzero(g.bits.any(axis=1))
    assert rows.size == 1
    cols = np.flatnonzero(g.bits[rows[0]])
    assert np.all(np.diff(cols) == 1)


def test_unit_square_path_is_thin_ring():
    g = rasterize_polyline([0, 1, 1 + 1j, 1j, 0], resolution=1024)
    rows = np.flatnonzero(g.bits.any(axis=1))
    inner = g.bits[rows[1:-1]]
    assert np.all(inner.sum(axis=1) == 2)
    top = g.bits[rows[0]]
    assert np.all(np.diff(np.flatnonzero(top)) == 1)


def test_rasterize_errors():
    with pytest.raises(ValueError):
        rasterize_polyline([1 + 1j, 1 + 1j], resolution=256)
    with pytest.raises(ValueError):
        rasterize_polyline([0, 1], resolution=128)


def test_isotropic_transform():
    g = rasterize_polyline([0, 4, 4 + 1j], resolution=512)
    x, y = g.to_pixels(np.array([0, 4 + 1j]))
    assert (x[1] - x[0]) / 4 == pytest.approx(y[1] - y[0])


# --- frontier ---------------------------------------------------------------------


def bfs_frontier(bits):
    h, w = bits.shape
    ext = np.zeros_like(bits)
    dq = deque((r, c) for r in range(h) for c in range(w) if (r in (0, h - 1) or c in (0, w - 1)) and not bits[r, c])
    for r, c in dq:
        ext[r, c] = True
    while dq:
        r, c = dq.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and not bits[rr, cc] and not ext[rr, cc]:
                ext[rr, cc] = True
                dq.append((rr, cc))
    out = np.zeros_like(bits)
    for r in range(h):
        for c in range(w):
            if bits[r, c]:
                out[r, c] = any(
                    0 <= r + dr < h and 0 <= c + dc < w and ext[r + dr, c + dc]
                    for dr in (-1, 0, 1)
                    for dc in (-1, 0, 1)
                    if dr or dc
                )
    return out


def disk(n, radius, hole=0.0):
    y, x = np.mgrid[:n, :n] - (n - 1) / 2
    rr = np.hypot(x, y)
    return (rr <= radius) & (rr >= hole)


def test_filled_disk_frontier_is_ring():
    bits = disk(64, 20)
    f = extract_frontier(RasterGrid(bits)).bits
    assert not f[32, 32]
    inner = disk(64, 20) & ~disk(64, 18.5)
    assert np.all(f <= inner)
    assert f.sum() < 0.3 * bits.sum()


def test_annulus_frontier_excludes_hole():
    bits = disk(80, 30, hole=12)
    f = extract_frontier(RasterGrid(bits)).bits
    near_hole = bits & disk(80, 16)
    assert not np.any(f & near_hole)
    outer = bits & ~disk(80, 28)
    assert f.sum() > 0 and np.all(f <= outer)


def test_diagonal_wall_does_not_leak():
    # a closed diamond of 8-connected pixels encloses its interior for a 4-connected fill
    bits = np.zeros((11, 11), bool)
    for k in range(5):
        bits[5 - k, k] = bits[5 + k, k] = bits[5 - k, 10 - k] = bits[5 + k, 10 - k] = True
    bits[0, 5] = bits[10, 5] = True
    inner = fractal.exterior_mask(bits)
    assert not inner[5, 5]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.7))
def test_frontier_matches_bfs_oracle(seed, p):
    bits = np.random.default_rng(seed).random((17, 23)) < p
    if not bits.any():
        bits[3, 3] = True
    got = extract_frontier(RasterGrid(bits)).bits
    np.testing.assert_array_equal(got, bfs_frontier(bits))
    assert np.all(got <= bits)


@pytest.mark.parametrize("kind,depth", [("line", 0), ("koch", 5), ("square", 0)])
def test_frontier_idempotent_on_thin_shapes(kind, depth):
    g = rasterize_shape(*generate_calibration(kind, depth), resolution=512)
    f1 = extract_frontier(g)
    f2 = extract_frontier(f1)
    np.testing.assert_array_equal(f1.bits, f2.bits)


def test_frontier_of_empty_grid_errors():
    with pytest.raises(ValueError):
        extract_frontier(RasterGrid(np.zeros((8, 8), bool)))


# --- box counting -----------------------------------------------------------------


def test_box_count_examples():
    full = RasterGrid(np.ones((64, 64), bool))
    assert box_count(full, [32]).tolist() == [4]
    single = np.zeros((64, 64), bool)
    single[17, 40] = True
    g = RasterGrid(single)
    assert box_count(g).tolist() == [1] * len(dyadic_epsilons(g))
    line = np.zeros((256, 256), bool)
    line[100, :] = True
    assert box_count(RasterGrid(line), [1, 4, 16]).tolist() == [256, 64, 16]
    with pytest.raises(ValueError):
        box_count(full, [128])


def test_dyadic_grid():
    assert dyadic_epsilons(RasterGrid(np.zeros((256, 300), bool))) == [1, 2, 4, 8, 16, 32, 64, 128]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.3))
def test_box_count_monotone_and_bounded(seed, p):
    bits = np.random.default_rng(seed).random((64, 64)) < p
    bits[0, 0] = True
    eps = [1, 2, 4, 8, 16, 32]
    N = box_count(RasterGrid(bits), eps)
    for k in range(len(eps) - 1):
        assert N[k] >= N[k + 1]
        assert N[k] <= N[k + 1] * (eps[k + 1] // eps[k]) ** 2


# --- fitting ----------------------------------------------------------------------


def test_fit_exact_power_law():
    eps = 2.0 ** np.arange(10)
    N = 7.0 * eps**-1.5
    fit = fit_dimension(N, eps)
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.epsilons[0] > fit.epsilons[-1]


def test_fit_window_policy():
    eps = 2.0 ** np.arange(12)
    N = np.where(eps < 16, eps**-1.0 * 1e4, eps**-1.3 * 2e4)
    auto = fit_dimension(N, eps)
    lo, hi = auto.window
    assert lo >= 2 and hi <= 9 and hi - lo + 1 >= 5
    manual = fit_dimension(N, eps, window=(0, 3))
    assert manual.window == (0, 3)
    with pytest.raises(ValueError):
        fit_dimension(N[:7], eps[:7])
    with pytest.raises(ValueError):
        fit_dimension(N, eps, window=(5, 20))


def test_fit_report_dict():
    eps = 2.0 ** np.arange(10)
    d = fit_dimension(3 * eps**-1.2, eps).to_dict()
    assert set(d) == {"epsilons", "counts", "window", "d_F", "stderr", "r2"}


# --- calibration shapes -----------------------------------------------------------


@pytest.mark.parametrize("depth", [0, 1, 3, 5])
def test_koch_segment_count(depth):
    s, e = generate_calibration("koch", depth)
    assert s.size == 4**depth
    np.testing.assert_allclose(np.abs(e - s), 3.0**-depth)


@pytest.mark.parametrize("depth", [0, 1, 4])
def test_sierpinski_triangle_count(depth):
    s, e = generate_calibration("sierpinski", depth)
    assert s.size == 3 * 3**depth
    np.testing.assert_allclose(np.abs(e - s), 2.0**-depth)


def test_calibration_errors():
    with pytest.raises(ValueError):
        generate_calibration("cantor", 3)
    with pytest.raises(ValueError):
        generate_calibration("koch", 12)


# --- walk invariances -------------------------------------------------------------


def synthetic_walk(n=3000, seed=0):
    rng = np.random.default_rng(seed)
    E = np.sort(rng.uniform(-40, 40, n))
    return walk_path(WeightedSpectrum(E, np.ones(n)), 123456.7)


def test_translation_by_whole_pixels_keeps_slope():
    path = synthetic_walk()
    g = rasterize_polyline(path.points, resolution=1024, padding_frac=0.05)
    z = path.points
    slopes = []
    for shift in (0, 3, 17):
        moved = rasterize_segments(z[:-1], z[1:], g.bits.shape, g.scale, (g.offset[0] + shift, g.offset[1] - shift))
        f = extract_frontier(moved)
        eps = dyadic_epsilons(f)
        fit = fit_dimension(box_count(f, eps), eps, window=(2, 7))
        slopes.append((fit.slope, fit.stderr))
    s0, se0 = slopes[0]
    for s, se in slopes[1:]:
        assert abs(s - s0) < 3 * max(se, se0) + 0.02


def test_isotropic_rescaling_keeps_dimension():
    path = synthetic_walk(seed=1)
    a = fractal.frontier_fit(path, resolution=1024)
    scaled = type(path)(path.t, path.points * 37.5, path.norm * 37.5)
    b = fractal.frontier_fit(scaled, resolution=1024)
    assert b.slope == pytest.approx(a.slope, abs=max(a.stderr, 1e-6))


def test_estimate_reports_settings():
    rng = np.random.default_rng(2)
    spec = WeightedSpectrum(np.sort(rng.uniform(-40, 40, 800)), np.ones(800))
    est = fractal.estimate_frontier_dimension(spec, n_walks=3, resolution=512, seed=4)
    assert len(est.fits) == 3 and 0 < est.mean < 2
    d = est.to_dict()
    assert d["settings"]["resolution"] == 512 and d["n_walks"] == 3
    with pytest.raises(ValueError):
        fractal.estimate_frontier_dimension(spec, n_walks=0)

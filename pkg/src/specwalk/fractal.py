"""Rasterization, frontier extraction and box-counting dimension.

Pixel ``(row, col)`` covers the half-open square [col, col+1) x [row, row+1)
in pixel coordinates; world x maps to columns and world y to rows.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, stats

from .spectra import WeightedSpectrum
from .walker import DEFAULT_WALK_WINDOW, WalkPath, sample_times, threads_from_env, walk_path

DEFAULT_RESOLUTION = 4096
# Walk rasters: at L = 12 a step spans ~55 px at 2048, which centres the
# fit window on the step scale; at 4096 most candidate windows sit below
# one step, where the raster is a union of straight segments.
DEFAULT_WALK_RESOLUTION = 2048
DEFAULT_PADDING = 0.02
MIN_RESOLUTION = 256
CALIBRATION_DEPTH_LIMIT = {"line": 0, "square": 0, "koch": 9, "sierpinski": 10}
CALIBRATION_DIMENSION = {
    "line": 1.0,
    "square": 1.0,
    "koch": math.log(4) / math.log(3),
    "sierpinski": math.log(3) / math.log(2),
}

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """Binary occupancy image plus the isotropic world -> pixel map.

    pixel = world * scale + (offset_x, offset_y)
    """

    bits: np.ndarray
    scale: float = 1.0
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool)
        if b.ndim != 2:
            raise ValueError("bits must be 2-D")
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def n_occupied(self) -> int:
        return int(np.count_nonzero(self.bits))

    def with_bits(self, bits) -> "RasterGrid":
        return RasterGrid(bits, self.scale, self.offset)

    def to_pixels(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=complex)
        return z.real * self.scale + self.offset[0], z.imag * self.scale + self.offset[1]


def fit_transform(points, resolution: int, padding_frac: float = DEFAULT_PADDING):
    """Isotropic map of the bounding box of ``points`` into the padded grid."""
    z = np.asarray(points, dtype=complex).ravel()
    xmin, xmax = z.real.min(), z.real.max()
    ymin, ymax = z.imag.min(), z.imag.max()
    span = max(xmax - xmin, ymax - ymin)
    if not span > 0:
        raise ValueError("degenerate path: all points coincide")
    if not 0 <= padding_frac < 0.5:
        raise ValueError("padding_frac must lie in [0, 0.5)")
    usable = resolution * (1.0 - 2.0 * padding_frac)
    # keep the far edge strictly inside the last pixel
    scale = usable * (1.0 - 1e-9) / span
    ox = resolution / 2.0 - 0.5 * (xmin + xmax) * scale
    oy = resolution / 2.0 - 0.5 * (ymin + ymax) * scale
    return scale, (ox, oy)


def _crossings(a0, a1, seg_ids):
    """Grid-line crossings along one axis: (segment id, tau, step sign)."""
    f0, f1 = np.floor(a0), np.floor(a1)
    n = np.abs(f1 - f0).astype(np.int64)
    total = int(n.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0), np.empty(0, np.int64)
    rep = np.repeat(np.arange(a0.size), n)
    first = np.cumsum(n) - n
    j = np.arange(total) - np.repeat(first, n)  # 0..n-1 within a segment
    sign = np.sign(a1 - a0)[rep]
    # crossing lines: f0+1, f0+2, ... going up; f0, f0-1, ... going down
    line = np.where(sign > 0, f0[rep] + 1 + j, f0[rep] - j)
    tau = (line - a0[rep]) / (a1 - a0)[rep]
    return seg_ids[rep], tau, sign.astype(np.int64)


def supercover_cells(x0, y0, x1, y1) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of every pixel the segments (x0,y0)->(x1,y1) pass through.

    Cells are visited by walking grid-line crossings in order; where a
    segment passes exactly through a pixel corner both side cells are
    marked, so the traced set is 4-connected and has no diagonal gaps.
    """
    x0, y0, x1, y1 = (np.asarray(a, dtype=float).ravel() for a in (x0, y0, x1, y1))
    nseg = x0.size
    ids = np.arange(nseg)
    sx, tx, dx = _crossings(x0, x1, ids)
    sy, ty, dy = _crossings(y0, y1, ids)

    seg = np.concatenate((ids, sx, sy))
    tau = np.concatenate((np.full(nseg, -1.0), tx, ty))
    kind = np.concatenate((np.zeros(nseg, np.int64), np.ones(sx.size, np.int64), np.full(sy.size, 2)))
    stepx = np.concatenate((np.floor(x0).astype(np.int64), dx, np.zeros(sy.size, np.int64)))
    stepy = np.concatenate((np.floor(y0).astype(np.int64), np.zeros(sx.size, np.int64), dy))

    order = np.lexsort((kind, tau, seg))
    seg, tau, kind = seg[order], tau[order], kind[order]
    stepx, stepy = stepx[order], stepy[order]
    # start events (kind 0) carry absolute cells; cumulative sums reset per segment
    cx = np.cumsum(stepx)
    cy = np.cumsum(stepy)
    starts = np.flatnonzero(kind == 0)
    base_x = np.repeat(cx[starts] - stepx[starts], np.diff(np.append(starts, seg.size)))
    base_y = np.repeat(cy[starts] - stepy[starts], np.diff(np.append(starts, seg.size)))
    cx = cx - base_x
    cy = cy - base_y

    cols, rows = [cx], [cy]
    # exact corner passes: an x crossing immediately followed by a y crossing at the same tau
    tie = np.flatnonzero((kind[:-1] == 1) & (kind[1:] == 2) & (tau[:-1] == tau[1:]) & (seg[:-1] == seg[1:]))
    if tie.size:
        cols.append(cx[tie] - stepx[tie])
        rows.append(cy[tie] + stepy[tie + 1])
    return np.concatenate(rows), np.concatenate(cols)


def rasterize_segments(starts, ends, shape, scale=1.0, offset=(0.0, 0.0)) -> RasterGrid:
    """Supercover raster of world-coordinate segments ``starts[i] -> ends[i]``."""
    starts = np.asarray(starts, dtype=complex).ravel()
    ends = np.asarray(ends, dtype=complex).ravel()
    height, width = shape
    ox, oy = offset
    rows, cols = supercover_cells(
        starts.real * scale + ox, starts.imag * scale + oy, ends.real * scale + ox, ends.imag * scale + oy
    )
    ok = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    bits = np.zeros((height, width), dtype=bool)
    bits[rows[ok], cols[ok]] = True
    return RasterGrid(bits, scale, (ox, oy))


def rasterize_polyline(points, resolution: int = DEFAULT_RESOLUTION, padding_frac: float = DEFAULT_PADDING) -> RasterGrid:
    z = np.asarray(points, dtype=complex).ravel()
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    scale, offset = fit_transform(z, resolution, padding_frac)
    if z.size == 1:
        z = np.repeat(z, 2)
    return rasterize_segments(z[:-1], z[1:], (resolution, resolution), scale, offset)


def rasterize_walk(path: WalkPath, resolution: int = DEFAULT_WALK_RESOLUTION, padding_frac: float = DEFAULT_PADDING) -> RasterGrid:
    """Draw every step Z_{n-1} -> Z_n of the walk."""
    return rasterize_polyline(path.points, resolution, padding_frac)


def exterior_mask(bits: np.ndarray) -> np.ndarray:
    """Empty pixels 4-connected to the grid border."""
    bits = np.asarray(bits, dtype=bool)
    labels, _ = ndimage.label(~bits, structure=_FOUR)
    border = np.unique(np.concatenate((labels[0], labels[-1], labels[:, 0], labels[:, -1])))
    border = border[border > 0]
    return np.isin(labels, border)


def extract_frontier(grid: RasterGrid) -> RasterGrid:
    """Occupied pixels with an 8-neighbour in the unbounded empty component."""
    if grid.n_occupied == 0:
        raise ValueError("empty grid")
    ext = exterior_mask(grid.bits)
    touches = ndimage.binary_dilation(ext, structure=_EIGHT)
    return grid.with_bits(grid.bits & touches)


def dyadic_epsilons(grid: RasterGrid) -> list[int]:
    kmax = int(math.floor(math.log2(min(grid.width, grid.height))))
    return [1 << k for k in range(kmax)]


def box_count(grid: RasterGrid, epsilons=None) -> np.ndarray:
    """Number of occupied eps x eps tiles anchored at the origin, per eps."""
    if epsilons is None:
        epsilons = dyadic_epsilons(grid)
    bits = grid.bits
    h, w = bits.shape
    counts = []
    for eps in epsilons:
        eps = int(eps)
        if eps < 1 or eps > min(h, w):
            raise ValueError(f"box size {eps} outside [1, {min(h, w)}]")
        H, W = -(-h // eps) * eps, -(-w // eps) * eps
        padded = bits if (H, W) == (h, w) else np.pad(bits, ((0, H - h), (0, W - w)))
        tiles = padded.reshape(H // eps, eps, W // eps, eps).any(axis=(1, 3))
        counts.append(int(np.count_nonzero(tiles)))
    return np.asarray(counts, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class BoxCountFit:
    epsilons: np.ndarray
    counts: np.ndarray
    window: tuple[int, int]  # inclusive index range used in the fit
    slope: float
    stderr: float
    r2: float
    intercept: float = 0.0

    @property
    def d_F(self) -> float:
        return self.slope

    def to_dict(self) -> dict:
        return {
            "epsilons": [float(e) for e in self.epsilons],
            "counts": [int(c) for c in self.counts],
            "window": [int(self.window[0]), int(self.window[1])],
            "d_F": float(self.slope),
            "stderr": float(self.stderr),
            "r2": float(self.r2),
        }


def _linfit(x, y):
    res = stats.linregress(x, y)
    r2 = res.rvalue**2 if np.isfinite(res.rvalue) else 1.0
    return float(res.slope), float(res.stderr), float(r2), float(res.intercept)


def fit_dimension(counts, epsilons, window="auto", *, min_len: int = 5, skip_fine: int = 2, skip_coarse: int = 2) -> BoxCountFit:
    """Least-squares slope of log N(eps) against log(1/eps).

    ``window="auto"`` picks the contiguous run of at least ``min_len`` scales
    with the largest R^2, after dropping the ``skip_fine`` finest and
    ``skip_coarse`` coarsest scales; ties go to the longer run.  A
    ``(i, j)`` tuple fixes the inclusive index range instead.
    """
    eps = np.asarray(epsilons, dtype=float)
    N = np.asarray(counts, dtype=float)
    if eps.size != N.size:
        raise ValueError("counts and epsilons differ in length")
    if np.any(N <= 0) or np.any(eps <= 0):
        raise ValueError("counts and epsilons must be positive")
    order = np.argsort(-eps)  # descending box size: coarse to fine
    eps, N = eps[order], N[order]
    x, y = np.log(1.0 / eps), np.log(N)
    n = eps.size
    if window == "auto":
        lo, hi = skip_coarse, n - 1 - skip_fine
        if hi - lo + 1 < min_len:
            raise ValueError(f"need at least {min_len + skip_fine + skip_coarse} scales, got {n}")
        best = None
        for i in range(lo, hi + 1):
            for j in range(i + min_len - 1, hi + 1):
                slope, se, r2, icpt = _linfit(x[i : j + 1], y[i : j + 1])
                key = (round(r2, 12), j - i)
                if best is None or key > best[0]:
                    best = (key, (i, j), slope, se, r2, icpt)
        _, win, slope, se, r2, icpt = best
    else:
        i, j = map(int, window)
        if not (0 <= i < j < n) or j - i + 1 < 2:
            raise ValueError(f"invalid window {window!r} for {n} scales")
        win = (i, j)
        slope, se, r2, icpt = _linfit(x[i : j + 1], y[i : j + 1])
    return BoxCountFit(eps, N.astype(np.int64), win, slope, se, r2, icpt)


# --- calibration shapes ----------------------------------------------------------------


def _koch(depth):
    pts = np.array([0.0 + 0j, 1.0 + 0j])
    rot = np.exp(1j * np.pi / 3)
    for _ in range(depth):
        a, b = pts[:-1], pts[1:]
        d = (b - a) / 3
        p1, p2 = a + d, a + 2 * d
        peak = p1 + d * rot
        new = np.empty(4 * a.size + 1, dtype=complex)
        new[0:-1:4], new[1::4], new[2::4], new[3::4] = a, p1, peak, p2
        new[-1] = pts[-1]
        pts = new
    return pts[:-1], pts[1:]


def _sierpinski(depth):
    tri = np.array([[0.0 + 0j, 1.0 + 0j, 0.5 + 1j * math.sqrt(3) / 2]])
    for _ in range(depth):
        a, b, c = tri[:, 0:1], tri[:, 1:2], tri[:, 2:3]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tri = np.concatenate(
            (np.hstack((a, ab, ca)), np.hstack((ab, b, bc)), np.hstack((ca, bc, c))), axis=0
        )
    starts = tri.ravel()
    ends = np.roll(tri, -1, axis=1).ravel()
    return starts, ends


def generate_calibration(kind: str, depth: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Segments (starts, ends) of a known fractal or smooth reference shape.

    line: one segment; square: the unit square outline; koch: the Koch
    curve with 4**depth segments; sierpinski: edges of the 3**depth
    triangles of the Sierpinski gasket.
    """
    if kind not in CALIBRATION_DEPTH_LIMIT:
        raise ValueError(f"unknown calibration kind {kind!r}")
    if depth < 0 or (kind in ("koch", "sierpinski") and depth > CALIBRATION_DEPTH_LIMIT[kind]):
        raise ValueError(f"depth {depth} outside [0, {CALIBRATION_DEPTH_LIMIT[kind]}] for {kind}")
    if kind == "line":
        return np.array([0j]), np.array([1 + 0j])
    if kind == "square":
        corners = np.array([0, 1, 1 + 1j, 1j])
        return corners, np.roll(corners, -1)
    if kind == "koch":
        return _koch(depth)
    return _sierpinski(depth)


def rasterize_shape(starts, ends, resolution=DEFAULT_RESOLUTION, padding_frac=DEFAULT_PADDING) -> RasterGrid:
    pts = np.concatenate((np.asarray(starts), np.asarray(ends)))
    scale, offset = fit_transform(pts, resolution, padding_frac)
    return rasterize_segments(starts, ends, (resolution, resolution), scale, offset)


def calibrate(kind: str, depth: int = 0, resolution: int = DEFAULT_RESOLUTION, window="auto") -> BoxCountFit:
    """Box-counting fit of a calibration shape drawn at ``resolution``."""
    grid = rasterize_shape(*generate_calibration(kind, depth), resolution=resolution)
    eps = dyadic_epsilons(grid)
    return fit_dimension(box_count(grid, eps), eps, window)


# --- walks -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrontierEstimate:
    mean: float
    stderr: float
    fits: list[BoxCountFit]
    times: np.ndarray
    settings: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([f.slope for f in self.fits])

    def to_dict(self) -> dict:
        return {
            "d_F": self.mean,
            "stderr": self.stderr,
            "n_walks": len(self.fits),
            "values": [float(v) for v in self.values],
            "times": [float(t) for t in self.times],
            "fits": [f.to_dict() for f in self.fits],
            "settings": dict(self.settings),
        }


def frontier_fit(path: WalkPath, resolution=DEFAULT_WALK_RESOLUTION, padding_frac=DEFAULT_PADDING, window="auto") -> BoxCountFit:
    """walk -> raster -> frontier -> box counts -> slope."""
    front = extract_frontier(rasterize_walk(path, resolution, padding_frac))
    eps = dyadic_epsilons(front)
    return fit_dimension(box_count(front, eps), eps, window)


def estimate_frontier_dimension(
    spec: WeightedSpectrum,
    n_walks: int = 20,
    time_window=DEFAULT_WALK_WINDOW,
    resolution: int = DEFAULT_WALK_RESOLUTION,
    seed: int = 0,
    padding_frac: float = DEFAULT_PADDING,
    window="auto",
    threads: int | None = None,
) -> FrontierEstimate:
    """Mean frontier dimension over walks at independent uniform times.

    The error bar is the standard error of the mean over walks.
    """
    if n_walks < 1:
        raise ValueError("n_walks must be >= 1")
    times = sample_times(time_window, n_walks, seed)

    def one(t):
        return frontier_fit(walk_path(spec, t), resolution, padding_frac, window)

    workers = threads_from_env(threads)
    if workers == 1:
        fits = [one(t) for t in times]
    else:
        with ThreadPoolExecutor(workers) as pool:
            fits = list(pool.map(one, times))
    vals = np.array([f.slope for f in fits])
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    settings = {
        "n_walks": int(n_walks),
        "time_window": [float(time_window[0]), float(time_window[1])],
        "resolution": int(resolution),
        "padding_frac": float(padding_frac),
        "seed": int(seed),
        "window": window if window == "auto" else list(window),
    }
    return FrontierEstimate(float(vals.mean()), se, fits, times, settings)

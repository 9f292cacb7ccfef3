import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from specwalk.lyapunov import (
    lyapunov_scan,
    r_prefix,
    r_ratio,
    r_windowed,
    s_ratio,
    wiener_deviation,
    wiener_grid,
)
from specwalk.spectra import WeightedSpectrum

weights_st = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=50)


@pytest.mark.parametrize("n", [1, 2, 10, 1000])
@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 3.0])
def test_flat_weights(n, q):
    assert r_ratio(np.ones(n), q) == pytest.approx(n ** (1 - q), rel=1e-13)


def test_prefix_argument():
    w = [3.0, 1.0, 1.0]
    assert r_ratio(w, 2.0, 1) == 1.0
    assert r_ratio(w, 2.0, 2) == pytest.approx(82 / 100)
    np.testing.assert_allclose(r_prefix(w, 2.0), [r_ratio(w, 2.0, n) for n in (1, 2, 3)])
    with pytest.raises(IndexError):
        r_ratio(w, 2.0, 4)
    with pytest.raises(ValueError):
        r_ratio(w, 0.5)


def test_power_law_limit_alpha_one():
    n = 10**6
    w = (np.arange(1, n + 1) / n) ** -1.0
    assert r_ratio(w, 2.0) == pytest.approx(zeta(4) / zeta(2) ** 2, rel=1e-4)
    assert zeta(4) / zeta(2) ** 2 == pytest.approx(0.4)


def test_windowed_flat():
    N = 37
    for s, h in [(0.0, 0.3), (0.2, 0.5), (0.5, 0.5)]:
        want = (int(np.floor(N * (s + h))) - int(np.floor(N * s))) / N
        assert r_windowed(np.ones(N), 1.0, N, h, s) == pytest.approx(want)
    assert r_windowed(np.ones(N), 1.0, N, 0.0, 0.4) == 0.0
    with pytest.raises(IndexError):
        r_windowed(np.ones(N), 1.0, N, 0.6, 0.6)


def test_windowed_additivity_on_aligned_grid():
    rng = np.random.default_rng(0)
    w = rng.uniform(0.5, 2.0, 100)
    a = r_windowed(w, 1.0, 100, 0.2, 0.1)
    b = r_windowed(w, 1.0, 100, 0.3, 0.3)
    assert a + b == pytest.approx(r_windowed(w, 1.0, 100, 0.5, 0.1))


def test_s_ratio():
    assert s_ratio(np.ones(50), 3.0) == pytest.approx(50 ** (1 - 1.5))
    assert s_ratio([4.0], 2.5) == pytest.approx(1.0)
    assert s_ratio(2 * np.ones(50), 4.0) == pytest.approx(50 ** (1 - 2.0))
    with pytest.raises(ValueError):
        s_ratio([1.0, 2.0], 2.0)


def test_scan_report_and_rows():
    specs = [WeightedSpectrum(np.arange(n, dtype=float), np.ones(n), model_meta={"L": n}) for n in (4, 8, 16)]
    rep = lyapunov_scan(specs, qs=(2.0, 3.0))
    rows = list(rep.rows())
    assert rows[0] == (4, 2.0, pytest.approx(0.25))
    assert len(rows) == 6
    assert rep.by_n[2.0].size == 16
    assert wiener_deviation(rep.windowed) < 0.05
    d = rep.to_dict()
    assert {"qs", "by_L", "windowed"} <= set(d)


def test_single_surviving_weight_gives_one():
    assert r_ratio([1.0, 1e-300, 1e-300], 2.0) == pytest.approx(1.0)


def test_wiener_grid_flat_weights_exact():
    grid = wiener_grid(np.ones(1000))
    assert wiener_deviation(grid) < 1e-12


@settings(max_examples=60, deadline=None)
@given(weights_st, st.floats(1.0, 4.0))
def test_ratio_bounds_and_monotone_in_q(w, q):
    r = r_ratio(w, q)
    assert 0 < r <= 1 + 1e-12
    assert r_ratio(w, 1.0) == pytest.approx(1.0)
    assert r_ratio(w, q + 0.5) <= r * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(weights_st, st.floats(1e-3, 1e3), st.floats(1.0, 4.0))
def test_scale_invariance(w, c, q):
    assert r_ratio([c * x for x in w], q) == pytest.approx(r_ratio(w, q), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(weights_st, st.floats(0, 0.5), st.floats(0, 0.5), st.floats(1.0, 3.0))
def test_windowed_bounded_by_full_prefix(w, s, h, q):
    N = len(w)
    assert r_windowed(w, q, N, h, s) <= r_ratio(w, q, N) * (1 + 1e-12)

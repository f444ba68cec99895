from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
import numpy as np
import pytest

from tvtrpca.metrics import cnr, diff_overlay, local_band, prf, prf_from_counts


def test_band_empty_mask():
    assert not local_band(np.zeros((8, 8), bool)).any()


def test_band_single_pixel():
    m = np.zeros((7, 7), bool)
    m[3, 3] = True
    expected = np.zeros((7, 7), bool)
    expected[2:5, 2:5] = True
    expected[3, 3] = False
    np.testing.assert_array_equal(local_band(m, 1), expected)


def test_band_square_area():
    m = np.zeros((64, 64), bool)
    m[20:30, 20:30] = True
    # count pixels within chessboard distance 4 of the square, minus the square
    rr, cc = np.indices(m.shape)
    dist = np.maximum(np.maximum(20 - rr, rr - 29).clip(0), np.maximum(20 - cc, cc - 29).clip(0))
    oracle = (dist <= 4) & ~m
    assert oracle.sum() == 18 ** 2 - 10 ** 2 == 224
    np.testing.assert_array_equal(local_band(m, 4), oracle)


def test_band_rejects_zero_width():
    with pytest.raises(ValueError):
        local_band(np.ones((3, 3), bool), 0)


def test_cnr_identical_means():
    frame = np.tile([0.2, 0.4], (6, 3))
    mask = np.zeros_like(frame, bool)
    mask[2:4, 2:4] = True
    rep = cnr(frame, mask, band_width=1)
    assert rep.global_cnr == pytest.approx(0.0, abs=1e-12)
    assert rep.local_cnr == pytest.approx(0.0, abs=1e-12)


def test_cnr_worked_example():
    frame = np.where(np.indices((20, 20)).sum(axis=0) % 2, 0.1, -0.1)
    mask = np.zeros((20, 20), bool)
    mask[8:12, 8:12] = True
    frame[mask] = 1.0
    rep = cnr(frame, mask)
    # background mean 0 and population sigma 0.1 in both regions
    assert rep.sigma_b_global == pytest.approx(0.1)
    assert rep.global_cnr == pytest.approx(10.0)
    assert rep.local_cnr == pytest.approx(10.0)


def test_cnr_errors():
    frame = np.random.default_rng(0).normal(size=(10, 10))
    with pytest.raises(ValueError):
        cnr(frame, np.zeros((10, 10), bool))
    with pytest.raises(ValueError):
        cnr(frame, np.ones((10, 10), bool))
    with pytest.raises(ValueError):
        cnr(np.ones((10, 10)), np.eye(10, dtype=bool))


def test_prf_examples():
    t = np.zeros((5, 5), bool)
    t[1:3, 1:4] = True
    r = prf(t, t)
    assert (r.recall, r.precision, r.f_measure) == (1.0, 1.0, 1.0)
    r = prf_from_counts(50, 50, 50)
    assert (r.recall, r.precision, r.f_measure) == (0.5, 0.5, 0.5)


def test_prf_degenerate():
    z = np.zeros((4, 4), bool)
    assert prf(z, z).f_measure == 0.0
    assert prf(~z, z).precision == 0.0


@given(arrays(bool, (6, 7)), arrays(bool, (6, 7)))
def test_prf_properties(p, t):
    r = prf(p, t)
    assert r.tp + r.fp == p.sum() and r.tp + r.fn == t.sum()
    assert 0 <= r.f_measure <= 1
    assert min(r.recall, r.precision) - 1e-12 <= r.f_measure <= max(r.recall, r.precision) + 1e-12
    s = prf(t, p)
    assert s.recall == r.precision and s.precision == r.recall


def test_overlay_colours():
    p = np.array([[1, 1, 0, 0]], bool)
    t = np.array([[1, 0, 1, 0]], bool)
    out = diff_overlay(p, t)
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out[0], [[255, 255, 255], [255, 0, 0], [0, 255, 0], [0, 0, 0]])

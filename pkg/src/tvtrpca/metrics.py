"""Contrast-to-noise ratio and recall / precision / F-measure."""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["CnrReport", "PrfReport", "local_band", "cnr", "prf", "prf_from_counts", "diff_overlay"]

DEFAULT_BAND = 4


@dataclass(frozen=True)
class CnrReport:
    global_cnr: float
    local_cnr: float
    mu_v: float
    mu_b_global: float
    mu_b_local: float
    sigma_b_global: float
    sigma_b_local: float


@dataclass(frozen=True)
class PrfReport:
    tp: int
    fp: int
    fn: int
    recall: float
    precision: float
    f_measure: float


def local_band(mask, width_px=DEFAULT_BAND):
    """Ring of pixels within chessboard distance ``width_px`` of ``mask``."""
    if width_px < 1:
        raise ValueError("band width must be at least 1 pixel")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros_like(mask)
    square = np.ones((2 * width_px + 1,) * 2, dtype=bool)
    return ndimage.binary_dilation(mask, structure=square) & ~mask


def _contrast(frame, vessel, background, label):
    values = frame[background]
    if values.size == 0:
        raise ValueError(f"{label} background region is empty")
    mu_b, sigma_b = float(values.mean()), float(values.std())
    if sigma_b == 0:
        raise ValueError(f"{label} background is constant; CNR is undefined")
    mu_v = float(frame[vessel].mean())
    return abs(mu_v - mu_b) / sigma_b, mu_b, sigma_b


def cnr(frame, vessel_mask, band_width=DEFAULT_BAND):
    """Global and local CNR ``|mu_v - mu_b| / sigma_b`` of one frame.

    The global background is everything outside the vessel mask, the local
    background a ``band_width`` ring around it.  ``sigma_b`` is the
    population standard deviation.
    """
    frame = np.asarray(frame, dtype=float)
    vessel = np.asarray(vessel_mask, dtype=bool)
    if frame.shape != vessel.shape:
        raise ValueError("frame and mask shapes differ")
    if not vessel.any():
        raise ValueError("vessel mask is empty")
    g, mu_g, sd_g = _contrast(frame, vessel, ~vessel, "global")
    loc, mu_l, sd_l = _contrast(frame, vessel, local_band(vessel, band_width), "local")
    return CnrReport(global_cnr=g, local_cnr=loc, mu_v=float(frame[vessel].mean()),
                     mu_b_global=mu_g, mu_b_local=mu_l,
                     sigma_b_global=sd_g, sigma_b_local=sd_l)


def prf(pred, truth):
    """Pixel counts and recall, precision, F-measure of ``pred`` vs ``truth``.

    Undefined ratios (nothing predicted, or nothing to find) are reported
    as 0, and so is F when recall and precision are both 0.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth shapes differ")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    return prf_from_counts(tp, fp, fn)


def prf_from_counts(tp, fp, fn):
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    denom = recall + precision
    f = 2 * recall * precision / denom if denom else 0.0
    return PrfReport(tp=tp, fp=fp, fn=fn, recall=recall, precision=precision, f_measure=f)


def diff_overlay(pred, truth):
    """RGB uint8 image: white TP, red FP, green FN, black elsewhere."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth shapes differ")
    out = np.zeros(pred.shape + (3,), dtype=np.uint8)
    out[pred & truth] = (255, 255, 255)
    out[pred & ~truth] = (255, 0, 0)
    out[~pred & truth] = (0, 255, 0)
    return out

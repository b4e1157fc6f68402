"""Acceleration estimation and aggregation of scattered force observations.

The acceleration estimator is the noise bottleneck of the whole
identification chain: forces are recovered as ``m_eq * a`` plus curve
lookups, so phase lag or bias here lands directly on the force curves.
The estimator is therefore centered (no phase shift by construction) and
runs off-line over a whole log segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import DriveLog, MAX_SAMPLE_GAP_S
from .errors import EmptySeriesError

DEFAULT_WINDOW = 21
DEFAULT_CUTOFF_HZ = 5.0


@dataclass(frozen=True)
class AccelSeries:
    """Acceleration estimates aligned index-for-index with a DriveLog.

    Samples too close to a segment boundary for the centered window to fit
    are marked invalid (``valid`` False, ``accel`` NaN) and must be excluded
    downstream.
    """

    t: np.ndarray
    accel: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        for col in (self.t, self.accel, self.valid):
            np.asarray(col).setflags(write=False)

    def __len__(self) -> int:
        return len(self.t)


def _window_slopes(t: np.ndarray, v: np.ndarray, window: int) -> np.ndarray:
    """Least-squares line slope over each full centered window.

    Time is re-centered per window before forming the normal equations, so
    the conditioning does not degrade with the absolute time stamp.
    Returns an array of length ``len(t) - window + 1``.
    """
    tw = sliding_window_view(t, window)
    vw = sliding_window_view(v, window)
    tc = tw - tw.mean(axis=1, keepdims=True)
    vc = vw - vw.mean(axis=1, keepdims=True)
    return np.einsum("ij,ij->i", tc, vc) / np.einsum("ij,ij->i", tc, tc)


def _lowpass_zero_phase(x: np.ndarray, dt: float, cutoff_hz: float) -> np.ndarray:
    """Zero-phase first-order low-pass.

    Runs the causal first-order filter forward then backward, and averages
    the two pass orders. The averaging makes the smoother exactly symmetric
    under time reversal (not just asymptotically, as plain filtfilt is),
    which the extraction round-trip tests rely on. Constants pass through
    unchanged; linear trends are preserved away from the segment ends.
    """
    rc = 1.0 / (2.0 * math.pi * cutoff_hz)
    alpha = dt / (rc + dt)

    def forward(sig: np.ndarray) -> np.ndarray:
        out = np.empty_like(sig)
        acc = sig[0]
        out[0] = acc
        for i in range(1, len(sig)):
            acc = acc + alpha * (sig[i] - acc)
            out[i] = acc
        return out

    def backward(sig: np.ndarray) -> np.ndarray:
        return forward(sig[::-1])[::-1]

    return 0.5 * (backward(forward(x)) + forward(backward(x)))


def estimate_acceleration(log: DriveLog, window: int = DEFAULT_WINDOW,
                          cutoff_hz: float = DEFAULT_CUTOFF_HZ,
                          max_gap_s: float = MAX_SAMPLE_GAP_S) -> AccelSeries:
    """Smooth, zero-phase acceleration estimate for every log sample.

    Per segment, the acceleration at sample i is the slope of a
    least-squares line over the speed samples in the centered window
    ``[i-(w-1)/2, i+(w-1)/2]``, followed by the zero-phase low-pass at
    ``cutoff_hz``. Segments shorter than the window yield only invalid
    samples; if the whole log yields none, raises
    :class:`~longforce.errors.EmptySeriesError`.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    n = len(log)
    accel = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    half = (window - 1) // 2
    for seg in log.segments(max_gap_s):
        t = log.t[seg]
        v = log.speed[seg]
        if len(t) < window:
            continue
        slopes = _window_slopes(t, v, window)
        dt = float(np.median(np.diff(t)))
        smooth = _lowpass_zero_phase(slopes, dt, cutoff_hz)
        lo = seg.start + half
        hi = seg.stop - half
        accel[lo:hi] = smooth
        valid[lo:hi] = True
    if not valid.any():
        raise EmptySeriesError(
            f"no segment of the log holds >= {window} samples; cannot estimate acceleration")
    return AccelSeries(t=log.t.copy(), accel=accel, valid=valid)


@dataclass(frozen=True)
class BinnedPoints:
    """Median-aggregated (speed, value) observations, one entry per non-empty bin."""

    bin_centers: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        for col in (self.bin_centers, self.values, self.counts):
            np.asarray(col).setflags(write=False)

    def __len__(self) -> int:
        return len(self.bin_centers)


def log_spaced_edges(lo: float = 0.05, hi: float = 40.0, count: int = 40) -> np.ndarray:
    """``count`` log-spaced speed bins between ``lo`` and ``hi`` m/s."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi for log-spaced bin edges")
    return np.geomspace(lo, hi, count + 1)


def bin_by_speed(points, edges) -> BinnedPoints:
    """Aggregate scattered (speed, value) points into per-bin medians.

    Each bin reports the median value of its members and the median member
    speed as its center; this is robust to the bump/pothole outliers that
    contaminate force observations. Points outside the edge span are
    dropped; empty bins are omitted.
    """
    edges = np.asarray(edges, dtype=float)
    if len(edges) < 2 or not np.all(np.diff(edges) > 0):
        raise ValueError("edges must be strictly increasing with >= 2 entries")
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        empty = np.array([])
        return BinnedPoints(empty, empty.copy(), np.array([], dtype=np.int64))
    speeds, values = pts[:, 0], pts[:, 1]
    idx = np.digitize(speeds, edges)  # 1..nbins inside; the top edge is inclusive
    idx[speeds == edges[-1]] = len(edges) - 1
    centers, medians, counts = [], [], []
    for b in range(1, len(edges)):
        members = idx == b
        if not members.any():
            continue
        centers.append(float(np.median(speeds[members])))
        medians.append(float(np.median(values[members])))
        counts.append(int(members.sum()))
    return BinnedPoints(np.array(centers), np.array(medians),
                        np.array(counts, dtype=np.int64))

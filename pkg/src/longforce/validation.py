"""Model validation against recorded drives.

Compares the measured acceleration of a drive log with what the direct
model predicts from the recorded commands and slope, and aggregates the
error into summary statistics and a histogram centered on zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DriveLog
from .dynamics import ModelSet, direct_acceleration
from .errors import EmptyReportError
from .estimation import AccelSeries

DEFAULT_HIST_BIN = 0.1


@dataclass(frozen=True)
class ErrorReport:
    """Acceleration error statistics (measured minus model) over a drive."""

    mean: float
    std_dev: float
    min: float
    max: float
    count: int
    total_distance_m: float
    hist_bin_width: float
    histogram: tuple[tuple[float, int], ...]


def validate(models: ModelSet, log: DriveLog, accel: AccelSeries,
             hist_bin: float = DEFAULT_HIST_BIN,
             include: np.ndarray | None = None) -> ErrorReport:
    """Compare measured against model-estimated acceleration sample by sample.

    Only samples with a valid acceleration estimate are compared; ``include``
    optionally masks out further samples (e.g. bumps or sharp turns where
    the decoupled-dynamics assumption breaks). The standard deviation is the
    population one. Total distance integrates speed over the whole log with
    the trapezoidal rule.
    """
    if len(accel) != len(log):
        raise EmptyReportError("acceleration series is not aligned with the log")
    keep = accel.valid.copy()
    if include is not None:
        keep &= np.asarray(include, dtype=bool)
    idx = np.flatnonzero(keep)
    if len(idx) == 0:
        raise EmptyReportError("no valid samples to compare")
    errors = np.empty(len(idx))
    for row, i in enumerate(idx):
        model_a, _ = direct_acceleration(models, float(log.speed[i]),
                                         float(log.throttle[i]), float(log.brake[i]),
                                         float(log.slope[i]))
        errors[row] = accel.accel[i] - model_a
    distance = float(np.trapezoid(log.speed, log.t)) if len(log) > 1 else 0.0
    return ErrorReport(
        mean=float(errors.mean()),
        std_dev=float(errors.std()),
        min=float(errors.min()),
        max=float(errors.max()),
        count=len(errors),
        total_distance_m=distance,
        hist_bin_width=hist_bin,
        histogram=_histogram(errors, hist_bin),
    )


def _histogram(errors: np.ndarray, bin_width: float) -> tuple[tuple[float, int], ...]:
    """Contiguous histogram with bins of the given width centered on zero."""
    if not bin_width > 0:
        raise ValueError(f"histogram bin width must be > 0, got {bin_width}")
    k = np.floor(errors / bin_width + 0.5).astype(int)
    lo, hi = int(k.min()), int(k.max())
    counts = np.bincount(k - lo, minlength=hi - lo + 1)
    return tuple((round(j * bin_width, 12), int(c))
                 for j, c in zip(range(lo, hi + 1), counts))


def report_to_dict(report: ErrorReport) -> dict:
    return {
        "mean_mps2": report.mean,
        "std_dev_mps2": report.std_dev,
        "min_mps2": report.min,
        "max_mps2": report.max,
        "count": report.count,
        "total_distance_m": report.total_distance_m,
        "hist_bin_width_mps2": report.hist_bin_width,
        "histogram": [{"center_mps2": c, "count": n} for c, n in report.histogram],
    }


def render_table(report: ErrorReport) -> str:
    """Plain-text summary table (measured acc. minus model acc.)."""
    rows = [
        ("Average [m/s^2]", f"{report.mean:.2f}"),
        ("Std. dev [m/s^2]", f"{report.std_dev:.2f}"),
        ("Min [m/s^2]", f"{report.min:.2f}"),
        ("Max [m/s^2]", f"{report.max:.2f}"),
        ("Number of measurements", str(report.count)),
        ("Total distance [km]", f"{report.total_distance_m / 1000.0:.2f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)

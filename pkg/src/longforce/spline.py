"""Constrained spline curves and force surfaces.

Force models are piecewise-cubic Hermite curves over speed. Tangents are
limited with the Fritsch-Carlson criterion wherever the knot values are
locally monotone, which makes overshoot below the lower clamp structurally
impossible: between two knots the curve stays inside the knot value range.
That matters because propulsion and braking forces can never be negative,
and the hand-shaped low-speed regions must not grow spurious wiggles.

A force surface is a family of such curves indexed by an integer command
signal (throttle or brake). Evaluation between defining levels interpolates
the per-level values with the same monotone-limited Hermite scheme along
the signal axis, so the surface passes exactly through its defining curves
and cross-sections in the signal axis stay monotone whenever the level
values are.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FitError, InversionError, SchemaError

#: Default knot layout (m/s): log-spaced, dense at low speed where the
#: shapes carry the creep/Stribeck/regen-cutoff features.
DEFAULT_KNOTS_MPS = (0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 15.0, 25.0, 36.0)

SIGNAL_TOL = 1e-3


def _hermite(t: float, y0: float, y1: float, m0: float, m1: float, h: float) -> float:
    # grouped as y0 + (y1-y0)*h01 so flat segments evaluate exactly flat
    t2 = t * t
    t3 = t2 * t
    return (y0 + (y1 - y0) * (-2.0 * t3 + 3.0 * t2)
            + m0 * h * (t3 - 2.0 * t2 + t)
            + m1 * h * (t3 - t2))


def limited_tangents(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, ...]:
    """Hermite tangents from neighbor secants, Fritsch-Carlson limited.

    Interior tangents start as the secant over the two neighboring knots,
    end tangents as the one-sided secant. Wherever the knot values are
    locally monotone the tangents are shrunk to satisfy the Fritsch-Carlson
    monotonicity region (alpha^2 + beta^2 <= 9); at local extrema and across
    flat spans they are zeroed. Shrinking never grows a tangent, so one pass
    suffices.
    """
    n = len(xs)
    if n == 1:
        return (0.0,)
    delta = [(ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(n - 1)]
    m = [0.0] * n
    m[0] = delta[0]
    m[-1] = delta[-1]
    for i in range(1, n - 1):
        if delta[i - 1] * delta[i] <= 0.0:
            m[i] = 0.0  # local extremum or flat neighbor
        else:
            m[i] = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1])
    for i in range(n - 1):
        if delta[i] == 0.0:
            m[i] = 0.0
            m[i + 1] = 0.0
            continue
        a = m[i] / delta[i]
        b = m[i + 1] / delta[i]
        if a < 0.0:
            m[i] = 0.0
            a = 0.0
        if b < 0.0:
            m[i + 1] = 0.0
            b = 0.0
        r2 = a * a + b * b
        if r2 > 9.0:
            tau = 3.0 / math.sqrt(r2)
            m[i] = tau * a * delta[i]
            m[i + 1] = tau * b * delta[i]
    return tuple(m)


@dataclass(frozen=True)
class Spline1D:
    """Piecewise-cubic Hermite force curve over speed.

    Evaluation reproduces the knot values exactly, is C1 inside the knot
    span, holds the end values constant outside it, and never returns less
    than ``lower_clamp``.
    """

    knots_x: tuple[float, ...]
    knots_y: tuple[float, ...]
    tangents: tuple[float, ...]
    lower_clamp: float = 0.0

    def __post_init__(self):
        xs = tuple(float(x) for x in self.knots_x)
        ys = tuple(float(y) for y in self.knots_y)
        ms = tuple(float(m) for m in self.tangents)
        if len(xs) < 2:
            raise FitError("a curve needs at least 2 knots")
        if not all(a < b for a, b in zip(xs, xs[1:])):
            raise FitError("knot positions must be strictly increasing")
        if len(ys) != len(xs) or len(ms) != len(xs):
            raise FitError("knots_x, knots_y and tangents must have equal length")
        if any(y < self.lower_clamp for y in ys):
            raise FitError(f"knot values must not fall below the lower clamp {self.lower_clamp}")
        object.__setattr__(self, "knots_x", xs)
        object.__setattr__(self, "knots_y", ys)
        object.__setattr__(self, "tangents", ms)

    @classmethod
    def interpolate(cls, xs: Sequence[float], ys: Sequence[float],
                    lower_clamp: float = 0.0) -> "Spline1D":
        """Monotone-limited Hermite interpolant through the given points."""
        ys = [max(float(y), lower_clamp) for y in ys]
        return cls(tuple(float(x) for x in xs), tuple(ys),
                   limited_tangents(xs, ys), lower_clamp)

    @property
    def domain(self) -> tuple[float, float]:
        return self.knots_x[0], self.knots_x[-1]

    def eval(self, x: float) -> float:
        """Curve value at speed ``x`` (held-end extrapolation outside the span)."""
        xs = self.knots_x
        if x <= xs[0]:
            return self.knots_y[0]
        if x >= xs[-1]:
            return self.knots_y[-1]
        i = bisect_right(xs, x) - 1
        h = xs[i + 1] - xs[i]
        t = (x - xs[i]) / h
        y = _hermite(t, self.knots_y[i], self.knots_y[i + 1],
                     self.tangents[i], self.tangents[i + 1], h)
        return y if y > self.lower_clamp else self.lower_clamp

    def eval_many(self, xs) -> np.ndarray:
        return np.array([self.eval(float(x)) for x in np.asarray(xs, dtype=float).ravel()])


def unsupported_knots(knots: Sequence[float], xs: Sequence[float]) -> list[bool]:
    """Flag knots whose value no data point can pin down.

    A knot's basis function lives on the open interval between its
    neighbors; a knot with no point there is determined only through the
    weak tangent coupling, which makes the normal equations nearly singular
    and the solution oscillate wildly. Such knots must be dropped (or
    anchored) before fitting.
    """
    flags = []
    arr = np.asarray(xs, dtype=float)
    for i, k in enumerate(knots):
        lo = knots[i - 1] if i > 0 else -math.inf
        hi = knots[i + 1] if i < len(knots) - 1 else math.inf
        flags.append(not bool(np.any((arr > lo) & (arr < hi))))
    return flags


def prune_unsupported_knots(knots: Sequence[float], xs: Sequence[float]) -> tuple[float, ...]:
    """Drop knots until every survivor has a point within its support.

    Dropping a knot widens its neighbors' support, so the check iterates to
    a fixed point. Knots outside the data span are dropped first, keeping
    one bracketing knot on each side when available.
    """
    kept = [float(k) for k in knots]
    arr = np.asarray(xs, dtype=float)
    if len(arr) == 0:
        return tuple(kept)
    lo, hi = float(arr.min()), float(arr.max())
    below = [k for k in kept if k <= lo]
    above = [k for k in kept if k >= hi]
    first = max(below) if below else kept[0]
    last = min(above) if above else kept[-1]
    kept = [k for k in kept if first <= k <= last]
    while len(kept) > 2:
        flags = unsupported_knots(kept, arr)
        drop = [i for i in range(1, len(kept) - 1) if flags[i]]
        if not drop:
            break
        del kept[drop[0]]
    return tuple(kept)


def fit_curve(binned, anchors: Sequence["Anchor"], knots_x: Sequence[float],
              lower_clamp: float = 0.0) -> Spline1D:
    """Weighted least-squares Hermite fit to binned points plus anchors.

    Binned points weigh in with their sample counts, anchors with their
    configured weights. A first pass ties the tangents to the knot values
    through the neighbor-secant rule, which keeps the model linear in the
    knot values. Because evaluation uses Fritsch-Carlson-limited tangents,
    the knot values are then re-solved with the limited tangents frozen,
    alternating until the shape settles; without this the fit is biased by
    several newtons wherever limiting bends a plateau transition. Fitted
    values are clamped at ``lower_clamp`` before deriving tangents, so the
    returned curve cannot overshoot below the clamp.
    """
    knots = [float(k) for k in knots_x]
    n = len(knots)
    if n < 2 or not all(a < b for a, b in zip(knots, knots[1:])):
        raise FitError("knots must be strictly increasing with >= 2 entries")

    xs = list(np.asarray(binned.bin_centers, dtype=float)) if len(binned) else []
    ys = list(np.asarray(binned.values, dtype=float)) if len(binned) else []
    ws = list(np.asarray(binned.counts, dtype=float)) if len(binned) else []
    for a in anchors:
        xs.append(float(a.speed_mps))
        ys.append(float(a.force_n))
        ws.append(float(a.weight))
    if not xs:
        raise FitError("nothing to fit: no binned points and no anchors")
    if min(xs) < knots[0] or max(xs) > knots[-1]:
        raise FitError(
            f"knot span [{knots[0]}, {knots[-1]}] does not cover the data span "
            f"[{min(xs)}, {max(xs)}]")
    if len(xs) < n:
        raise FitError(
            f"underdetermined fit: {len(xs)} data points for {n} knots; use fewer knots")
    for i, unsupported in enumerate(unsupported_knots(knots, xs)):
        if unsupported:
            lo = knots[i - 1] if i > 0 else knots[0]
            hi = knots[i + 1] if i < n - 1 else knots[-1]
            raise FitError(
                f"underdetermined fit: no data or anchor supports the knot at "
                f"{knots[i]} m/s (support ({lo}, {hi})); use fewer knots")

    # Per-point Hermite basis: value hats on the bracketing knots plus the
    # two tangent weights (h10, h11 scaled by the segment width).
    value_basis = np.zeros((len(xs), n))
    tan_left = np.zeros(len(xs))
    tan_right = np.zeros(len(xs))
    seg = np.zeros(len(xs), dtype=int)
    for row, x in enumerate(xs):
        i = n - 2 if x >= knots[-1] else max(bisect_right(knots, x) - 1, 0)
        h = knots[i + 1] - knots[i]
        t = (x - knots[i]) / h
        t2, t3 = t * t, t * t * t
        seg[row] = i
        value_basis[row, i] = 2.0 * t3 - 3.0 * t2 + 1.0
        value_basis[row, i + 1] = -2.0 * t3 + 3.0 * t2
        tan_left[row] = (t3 - 2.0 * t2 + t) * h
        tan_right[row] = (t3 - t2) * h

    # Tangents as a linear map of knot values: m = C @ y (neighbor secants).
    c = np.zeros((n, n))
    c[0, 0] = -1.0 / (knots[1] - knots[0])
    c[0, 1] = 1.0 / (knots[1] - knots[0])
    c[-1, -2] = -1.0 / (knots[-1] - knots[-2])
    c[-1, -1] = 1.0 / (knots[-1] - knots[-2])
    for j in range(1, n - 1):
        span = knots[j + 1] - knots[j - 1]
        c[j, j - 1] = -1.0 / span
        c[j, j + 1] = 1.0 / span
    design = value_basis + tan_left[:, None] * c[seg] + tan_right[:, None] * c[seg + 1]

    sw = np.sqrt(np.asarray(ws, dtype=float))
    targets = np.asarray(ys, dtype=float)
    solution, _, rank, _ = np.linalg.lstsq(design * sw[:, None], targets * sw,
                                           rcond=None)
    if rank < n:
        raise FitError(
            f"underdetermined fit: data supports rank {rank} of {n} knots; use fewer knots")

    # Re-solve the knot values under the limited tangents (frozen per pass).
    for _ in range(10):
        clamped = np.maximum(solution, lower_clamp)
        tangents = np.asarray(limited_tangents(knots, clamped))
        offsets = tan_left * tangents[seg] + tan_right * tangents[seg + 1]
        refined, _, rank2, _ = np.linalg.lstsq(value_basis * sw[:, None],
                                               (targets - offsets) * sw, rcond=None)
        if rank2 < n:
            break
        done = np.max(np.abs(refined - solution)) <= 1e-9 * max(1.0, np.max(np.abs(refined)))
        solution = refined
        if done:
            break
    return Spline1D.interpolate(knots, solution, lower_clamp)


@dataclass(frozen=True)
class Anchor:
    """A hand-specified (speed, force) point with a fit weight."""

    speed_mps: float
    force_n: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise FitError(f"anchor weight must be > 0, got {self.weight}")


class AnchorSet:
    """Anchors grouped by command-signal level (``None`` for friction)."""

    def __init__(self, by_level: Mapping[int | None, Sequence[Anchor]]):
        self._by_level = {level: tuple(anchors) for level, anchors in by_level.items()}

    @property
    def levels(self) -> list[int | None]:
        return sorted(self._by_level, key=lambda v: (-1 if v is None else v))

    def for_level(self, level: int | None) -> tuple[Anchor, ...]:
        return self._by_level.get(level, ())


@dataclass(frozen=True)
class InversionResult:
    """Signal returned by a surface inversion, with saturation bookkeeping."""

    signal: float
    saturated: bool = False
    underflow: bool = False


@dataclass(frozen=True)
class ForceSurface:
    """Force as a function of (speed, command signal).

    Built from one curve per defining signal level. Cross-sections along the
    signal axis pass exactly through the defining curves and are interpolated
    with monotone-limited Hermite in between, so they are monotone whenever
    the defining values are.
    """

    levels: tuple[int, ...]
    curves: tuple[Spline1D, ...]

    def __post_init__(self):
        levels = tuple(int(v) for v in self.levels)
        if len(levels) < 1:
            raise FitError("a surface needs at least one level")
        if len(levels) != len(self.curves):
            raise FitError("levels and curves must have equal length")
        if not all(a < b for a, b in zip(levels, levels[1:])):
            raise FitError("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "curves", tuple(self.curves))

    def curve_at(self, level: int) -> Spline1D:
        try:
            return self.curves[self.levels.index(level)]
        except ValueError:
            raise KeyError(f"level {level} is not a defining level of this surface") from None

    def cross_section(self, v: float) -> list[float]:
        """Values of every defining curve at speed ``v``, in level order."""
        return [curve.eval(v) for curve in self.curves]

    def eval_clamped(self, v: float, signal: float) -> tuple[float, bool]:
        """Surface value at (v, signal); flags when the signal was clamped."""
        levels = self.levels
        clamped = signal < levels[0] or signal > levels[-1]
        if signal <= levels[0]:
            return self.curves[0].eval(v), clamped
        if signal >= levels[-1]:
            return self.curves[-1].eval(v), clamped
        values = self.cross_section(v)
        tangents = limited_tangents(levels, values)
        i = bisect_right(levels, signal) - 1
        h = levels[i + 1] - levels[i]
        t = (signal - levels[i]) / h
        y = _hermite(t, values[i], values[i + 1], tangents[i], tangents[i + 1], h)
        return max(y, 0.0), clamped

    def eval(self, v: float, signal: float) -> float:
        return self.eval_clamped(v, signal)[0]

    def invert(self, v: float, force: float, tol: float = SIGNAL_TOL) -> InversionResult:
        """Smallest signal whose force at speed ``v`` reaches ``force``.

        Bisection to ``tol`` signal units. Forces above the cross-section's
        maximum return the top level with ``saturated`` set; forces below
        the minimum return the bottom level with ``underflow`` set. Raises
        :class:`~longforce.errors.InversionError` when the cross-section is
        not monotone non-decreasing in the signal.
        """
        values = self.cross_section(v)
        slack = 1e-9 * max(1.0, max(abs(f) for f in values))
        for i in range(len(values) - 1):
            if values[i + 1] < values[i] - slack:
                raise InversionError(
                    f"cross-section at v={v:.3f} m/s decreases between levels "
                    f"{self.levels[i]} and {self.levels[i + 1]}; inversion unsupported")
        lo, hi = float(self.levels[0]), float(self.levels[-1])
        f_lo, f_hi = values[0], values[-1]
        if force <= f_lo:
            return InversionResult(lo, underflow=force < f_lo)
        if force > f_hi:
            return InversionResult(hi, saturated=True)
        # Invariant: eval(lo) < force <= eval(hi).
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.eval(v, mid) >= force:
                hi = mid
            else:
                lo = mid
        return InversionResult(hi)


def check_signal_monotone(surface: ForceSurface, speeds=None, tol_n: float = 1e-6) -> None:
    """Verify cross-sections never decrease with the signal; raise FitError if they do.

    Checked on a dense speed grid over the union of the curve domains. The
    check runs at fit time so that inversion later is well posed everywhere.
    """
    if speeds is None:
        lo = min(c.domain[0] for c in surface.curves)
        hi = max(c.domain[1] for c in surface.curves)
        speeds = np.geomspace(max(lo, 1e-3), hi, 200)
    for v in speeds:
        values = surface.cross_section(float(v))
        for i in range(len(values) - 1):
            if values[i + 1] < values[i] - tol_n:
                raise FitError(
                    f"level {surface.levels[i + 1]} falls below level {surface.levels[i]} "
                    f"by {values[i] - values[i + 1]:.1f} N at {float(v):.2f} m/s; "
                    "surface would not be monotone in the signal")


# --- model file serialization -------------------------------------------------

MODEL_KINDS = ("friction", "propulsion", "braking")


def _curve_to_dict(curve: Spline1D) -> dict:
    return {
        "knots_x_mps": list(curve.knots_x),
        "knots_y_N": list(curve.knots_y),
        "tangents": list(curve.tangents),
    }


def _curve_from_dict(obj: dict, lower_clamp: float) -> Spline1D:
    try:
        return Spline1D(tuple(obj["knots_x_mps"]), tuple(obj["knots_y_N"]),
                        tuple(obj["tangents"]), lower_clamp)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed curve entry: {exc}") from exc


def model_to_dict(kind: str, model: Spline1D | ForceSurface,
                  provenance: dict | None = None) -> dict:
    if kind not in MODEL_KINDS:
        raise SchemaError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    out: dict = {"kind": kind}
    if isinstance(model, Spline1D):
        out["curves"] = [_curve_to_dict(model)]
        out["lower_clamp_N"] = model.lower_clamp
    else:
        out["levels"] = list(model.levels)
        out["curves"] = [_curve_to_dict(c) for c in model.curves]
        out["lower_clamp_N"] = model.curves[0].lower_clamp
    out["provenance"] = dict(provenance or {"source_logs": []})
    return out


def model_from_dict(obj: dict) -> tuple[str, Spline1D | ForceSurface, dict]:
    try:
        kind = obj["kind"]
        curves = obj["curves"]
        clamp = float(obj.get("lower_clamp_N", 0.0))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from exc
    if kind not in MODEL_KINDS:
        raise SchemaError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    provenance = dict(obj.get("provenance", {}))
    if kind == "friction":
        if len(curves) != 1:
            raise SchemaError("a friction model holds exactly one curve")
        return kind, _curve_from_dict(curves[0], clamp), provenance
    levels = obj.get("levels")
    if not levels or len(levels) != len(curves):
        raise SchemaError(f"a {kind} model needs matching 'levels' and 'curves' lists")
    surface = ForceSurface(tuple(int(v) for v in levels),
                           tuple(_curve_from_dict(c, clamp) for c in curves))
    return kind, surface, provenance


def save_model(path: str | Path, kind: str, model: Spline1D | ForceSurface,
               provenance: dict | None = None) -> None:
    obj = model_to_dict(kind, model, provenance)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[str, Spline1D | ForceSurface, dict]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(obj)

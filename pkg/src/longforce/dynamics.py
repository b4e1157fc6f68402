"""Direct and inverse longitudinal dynamics assembled from fitted models.

The direct model turns (speed, throttle, brake, slope) into an acceleration
through the five-force balance; the simulator integrates it with fixed-step
RK4. The inverse model turns a desired acceleration into a throttle or
brake command by inverting the force surfaces, and is meant as the
feedforward block of a speed controller.

Regenerative braking (the braking surface's level-0 curve) is only active
at exactly zero throttle: applying any throttle deactivates it. The
throttle/brake selector never emits both commands at once.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import VehicleParams, equivalent_mass, total_mass
from .errors import SchemaError
from .spline import ForceSurface, Spline1D

#: (throttle, brake, slope_rad) at a given time.
Schedule = Callable[[float], tuple[float, float, float]]


@dataclass(frozen=True)
class ModelSet:
    """The three fitted force models plus the vehicle they belong to."""

    friction: Spline1D
    propulsion: ForceSurface
    braking: ForceSurface
    params: VehicleParams

    def __post_init__(self):
        if 0 not in self.propulsion.levels:
            raise ValueError("propulsion surface must include level 0 (the creep curve)")
        if 0 not in self.braking.levels:
            raise ValueError("braking surface must include level 0 (the regenerative curve)")


@dataclass(frozen=True)
class ForceBreakdown:
    propulsion: float
    friction: float
    braking: float


@dataclass(frozen=True)
class ActuationCommand:
    """A feedforward command: exactly one of throttle/brake may be nonzero.

    Signals are kept real-valued at the inversion tolerance; quantizing to
    the integer wire format is the consumer's last step.
    """

    throttle: float
    brake: float
    saturated: bool = False
    underflow: bool = False

    def __post_init__(self):
        if self.throttle != 0.0 and self.brake != 0.0:
            raise ValueError("throttle and brake must never both be nonzero")

    @property
    def flags(self) -> frozenset[str]:
        out = set()
        if self.saturated:
            out.add("saturated")
        if self.underflow:
            out.add("underflow")
        return frozenset(out)


def direct_acceleration(models: ModelSet, v: float, throttle: float, brake: float,
                        slope: float) -> tuple[float, ForceBreakdown]:
    """Acceleration and force breakdown for one operating point.

    Braking force: at zero throttle the braking surface applies as-is (its
    level 0 is the regenerative curve); with throttle applied regen is
    deactivated, so only an explicit brake command produces braking force.
    """
    f_f = models.friction.eval(v)
    f_p = models.propulsion.eval(v, throttle)
    if throttle == 0.0:
        f_b = models.braking.eval(v, brake)
    elif brake > 0.0:
        f_b = models.braking.eval(v, brake)
    else:
        f_b = 0.0
    grade = total_mass(models.params) * models.params.gravity_mps2 * math.sin(slope)
    accel = (f_p - grade - f_f - f_b) / equivalent_mass(models.params)
    return accel, ForceBreakdown(f_p, f_f, f_b)


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step simulation output, one row per time step."""

    t: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    f_p: np.ndarray
    f_f: np.ndarray
    f_b: np.ndarray

    def __post_init__(self):
        for col in (self.t, self.speed, self.accel, self.f_p, self.f_f, self.f_b):
            np.asarray(col).setflags(write=False)

    def __len__(self) -> int:
        return len(self.t)


def simulate(models: ModelSet, schedule: Schedule, v0: float, dt: float,
             duration: float) -> Trajectory:
    """Integrate dv/dt with fixed-step RK4 under a command schedule.

    Speed is clamped at zero: when the vehicle is at rest and the net force
    would push it backward, it stays at rest (static friction implicit);
    the model covers forward motion only.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1] s, got {dt}")
    if v0 < 0:
        raise ValueError(f"v0 must be >= 0, got {v0}")

    def accel_at(t: float, v: float) -> float:
        throttle, brake, slope = schedule(t)
        a, _ = direct_acceleration(models, max(v, 0.0), throttle, brake, slope)
        return a

    steps = max(int(round(duration / dt)), 0)
    t_out = np.empty(steps + 1)
    v_out = np.empty(steps + 1)
    a_out = np.empty(steps + 1)
    fp_out = np.empty(steps + 1)
    ff_out = np.empty(steps + 1)
    fb_out = np.empty(steps + 1)

    v = float(v0)
    for k in range(steps + 1):
        t = k * dt
        throttle, brake, slope = schedule(t)
        a, forces = direct_acceleration(models, v, throttle, brake, slope)
        at_rest = v == 0.0 and a <= 0.0
        t_out[k] = t
        v_out[k] = v
        a_out[k] = 0.0 if at_rest else a
        fp_out[k] = forces.propulsion
        ff_out[k] = forces.friction
        fb_out[k] = forces.braking
        if k == steps:
            break
        if at_rest:
            continue
        k1 = a
        k2 = accel_at(t + 0.5 * dt, v + 0.5 * dt * k1)
        k3 = accel_at(t + 0.5 * dt, v + 0.5 * dt * k2)
        k4 = accel_at(t + dt, v + dt * k3)
        v = max(v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)

    return Trajectory(t_out, v_out, a_out, fp_out, ff_out, fb_out)


def inverse_actuation(models: ModelSet, v: float, slope: float,
                      desired_accel: float) -> ActuationCommand:
    """Feedforward throttle/brake command for a desired acceleration.

    The required tractive force is compared to the zero-throttle propulsion
    (creep): at or above it the propulsion surface is inverted for a
    throttle; below it the shortfall ``F_p0 - F_req`` must come from the
    braking surface (whose level 0 is pure regen), which correctly fights
    the creep force with brakes at very low speed. Saturation and underflow
    flags propagate from the surface inversions.
    """
    m_eq = equivalent_mass(models.params)
    grade = total_mass(models.params) * models.params.gravity_mps2 * math.sin(slope)
    f_req = m_eq * desired_accel + grade + models.friction.eval(v)
    f_p0 = models.propulsion.eval(v, 0.0)
    if f_req >= f_p0:
        inv = models.propulsion.invert(v, f_req)
        return ActuationCommand(throttle=inv.signal, brake=0.0,
                                saturated=inv.saturated, underflow=inv.underflow)
    inv = models.braking.invert(v, f_p0 - f_req)
    return ActuationCommand(throttle=0.0, brake=inv.signal,
                            saturated=inv.saturated, underflow=inv.underflow)


def step_hold_schedule(rows: list[tuple[float, float, float, float]]) -> Schedule:
    """Schedule from (t, throttle, brake, slope) rows, holding between rows."""
    if not rows:
        raise SchemaError("a schedule needs at least one row")
    rows = sorted(rows, key=lambda r: r[0])
    times = [r[0] for r in rows]

    def schedule(t: float) -> tuple[float, float, float]:
        i = bisect_right(times, t) - 1
        if i < 0:
            i = 0
        _, throttle, brake, slope = rows[i]
        return throttle, brake, slope

    return schedule


def load_schedule_csv(path: str | Path) -> Schedule:
    """Schedule from a CSV with columns t_s, throttle, brake, slope_rad."""
    required = ("t_s", "throttle", "brake", "slope_rad")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: schedule is missing column(s) {', '.join(missing)}")
        for i, row in enumerate(reader):
            try:
                rows.append((float(row["t_s"]), float(row["throttle"]),
                             float(row["brake"]), float(row["slope_rad"])))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: bad schedule row {i + 1}: {exc}") from exc
    return step_hold_schedule(rows)

"""Force observation extraction from protocol test logs.

The three-step identification rests on a five-force balance along the
road direction:

    F_p - m*g*sin(slope) - F_f - F_b = m_eq * a

Each protocol zeroes out enough terms to solve for one force:

  * coast-down in neutral with pedals released isolates friction,
  * constant-throttle runs in drive with no brake isolate propulsion
    (friction already known),
  * constant-brake runs in drive with no throttle isolate braking
    (friction and zero-throttle propulsion already known).

Logs that violate a protocol's preconditions are rejected with hard
errors: a run with a brake touch in the middle would silently corrupt
the propulsion model if tolerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import DriveLog, Gear, VehicleParams, equivalent_mass, total_mass
from .errors import ProtocolViolationError, SegmentSplitRequired
from .estimation import AccelSeries
from .spline import Spline1D

#: Below this speed (m/s) the acceleration estimate is dominated by speed
#: quantization and samples are excluded; anchors supply the low-speed shape.
MIN_EXTRACTION_SPEED = 0.05


class ForceKind(Enum):
    FRICTION = "friction"
    PROPULSION = "propulsion"
    BRAKING = "braking"


@dataclass(frozen=True)
class ForceObservationSet:
    """(speed, force) observations attributed to one force and command level.

    ``level`` is the constant throttle (propulsion) or brake (braking)
    signal of the source run; friction sets carry no level.
    """

    kind: ForceKind
    level: int | None
    speeds: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        if self.kind is ForceKind.FRICTION and self.level is not None:
            raise ValueError("friction observations carry no signal level")
        if self.kind is not ForceKind.FRICTION and self.level is None:
            raise ValueError(f"{self.kind.value} observations need a signal level")
        speeds = np.asarray(self.speeds, dtype=float)
        forces = np.asarray(self.forces, dtype=float)
        if len(speeds) and float(speeds.min()) < 0:
            raise ValueError("observation speeds must be >= 0")
        for col in (speeds, forces):
            col.setflags(write=False)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "forces", forces)

    def __len__(self) -> int:
        return len(self.speeds)

    def points(self) -> np.ndarray:
        return np.column_stack([self.speeds, self.forces])


def _require_gear(log: DriveLog, gear: Gear, protocol: str) -> None:
    if log.gear is not gear:
        raise ProtocolViolationError(
            f"{protocol} requires gear {gear.value}, log is in {log.gear.value}")


def _require_zero(log: DriveLog, signal: str, protocol: str) -> None:
    values = getattr(log, signal)
    bad = np.flatnonzero(values != 0)
    if len(bad):
        raise ProtocolViolationError(
            f"{protocol} requires {signal} = 0 throughout; nonzero at "
            f"{len(bad)} samples (first indices {bad[:10].tolist()})",
            indices=bad.tolist())


def _require_constant(log: DriveLog, signal: str, protocol: str) -> int:
    values = getattr(log, signal)
    level = int(values[0])
    if np.any(values != level):
        raise SegmentSplitRequired(
            f"{protocol} requires a constant {signal}; split the log into "
            f"constant-{signal} segments first", signal=signal)
    return level


def _valid_mask(log: DriveLog, accel: AccelSeries) -> np.ndarray:
    if len(accel) != len(log):
        raise ValueError("acceleration series is not aligned with the log")
    return accel.valid & (log.speed >= MIN_EXTRACTION_SPEED)


def extract_friction(log: DriveLog, accel: AccelSeries,
                     params: VehicleParams) -> ForceObservationSet:
    """Friction observations from a neutral coast-down log.

    With propulsion and braking zero the balance gives
    ``F_f = -m*g*sin(slope) - m_eq*a`` per sample.
    """
    _require_gear(log, Gear.NEUTRAL, "friction extraction")
    _require_zero(log, "throttle", "friction extraction")
    _require_zero(log, "brake", "friction extraction")
    keep = _valid_mask(log, accel)
    m = total_mass(params)
    m_eq = equivalent_mass(params)
    g = params.gravity_mps2
    forces = -m * g * np.sin(log.slope[keep]) - m_eq * accel.accel[keep]
    return ForceObservationSet(ForceKind.FRICTION, None, log.speed[keep], forces)


def extract_propulsion(log: DriveLog, accel: AccelSeries, friction: Spline1D,
                       params: VehicleParams) -> ForceObservationSet:
    """Propulsion observations from a constant-throttle run in drive.

    With braking zero the balance gives
    ``F_p = F_f(v) + m*g*sin(slope) + m_eq*a``.
    """
    _require_gear(log, Gear.DRIVE, "propulsion extraction")
    _require_zero(log, "brake", "propulsion extraction")
    level = _require_constant(log, "throttle", "propulsion extraction")
    keep = _valid_mask(log, accel)
    m = total_mass(params)
    m_eq = equivalent_mass(params)
    g = params.gravity_mps2
    speeds = log.speed[keep]
    forces = (friction.eval_many(speeds)
              + m * g * np.sin(log.slope[keep])
              + m_eq * accel.accel[keep])
    return ForceObservationSet(ForceKind.PROPULSION, level, speeds, forces)


def extract_braking(log: DriveLog, accel: AccelSeries, friction: Spline1D,
                    propulsion_at_zero_throttle: Spline1D,
                    params: VehicleParams) -> ForceObservationSet:
    """Braking observations from a constant-brake run in drive at zero throttle.

    The zero-throttle propulsion curve (creep force) enters the balance:
    ``F_b = F_p0(v) - F_f(v) - m*g*sin(slope) - m_eq*a``.
    """
    _require_gear(log, Gear.DRIVE, "braking extraction")
    _require_zero(log, "throttle", "braking extraction")
    level = _require_constant(log, "brake", "braking extraction")
    keep = _valid_mask(log, accel)
    m = total_mass(params)
    m_eq = equivalent_mass(params)
    g = params.gravity_mps2
    speeds = log.speed[keep]
    forces = (propulsion_at_zero_throttle.eval_many(speeds)
              - friction.eval_many(speeds)
              - m * g * np.sin(log.slope[keep])
              - m_eq * accel.accel[keep])
    return ForceObservationSet(ForceKind.BRAKING, level, speeds, forces)


def split_constant_signal(log: DriveLog, signal: str) -> list[DriveLog]:
    """Split a log into maximal runs where ``signal`` is constant.

    Convenience for callers hitting :class:`SegmentSplitRequired`: each
    returned log satisfies the constant-signal precondition.
    """
    if signal not in ("throttle", "brake"):
        raise ValueError(f"signal must be 'throttle' or 'brake', got {signal!r}")
    values = getattr(log, signal)
    if len(log) == 0:
        return []
    breaks = np.flatnonzero(np.diff(values) != 0) + 1
    starts = [0, *breaks.tolist()]
    ends = [*breaks.tolist(), len(log)]
    return [log.slice(slice(a, b)) for a, b in zip(starts, ends)]

"""Shared fixtures: reference models and synthetic protocol-log builders."""

from __future__ import annotations

import math

import numpy as np
import pytest

from longforce.core import DriveLog, Gear, VehicleParams
from longforce.dynamics import ModelSet, simulate
from longforce.reference import neutral_model_set, reference_model_set


@pytest.fixture(scope="session")
def gt_models() -> ModelSet:
    """Ground-truth model set interpolated from the shipped anchors."""
    return reference_model_set()


@pytest.fixture(scope="session")
def zoe_params(gt_models) -> VehicleParams:
    return gt_models.params


@pytest.fixture()
def flat_params() -> VehicleParams:
    """No rotating bodies: equivalent mass equals total mass (1720 kg)."""
    return VehicleParams(base_mass_kg=1720.0, payload_mass_kg=0.0)


def protocol_log(models: ModelSet, throttle: int, brake: int, v0: float,
                 duration: float, gear: Gear, noise_sigma: float = 0.0,
                 rng: np.random.Generator | None = None,
                 cut_below: float | None = None) -> DriveLog:
    """Simulate a constant-command protocol run and package it as a log.

    ``cut_below`` trims the log at the first sample under the given true
    speed (operators stop recording once the car has stopped); applies to
    decelerating runs only.
    """
    traj = simulate(models, lambda t: (throttle, brake, 0.0), v0, 0.01, duration)
    n = len(traj)
    if cut_below is not None:
        below = np.flatnonzero(traj.speed < cut_below)
        if len(below):
            n = int(below[0])
    speed = traj.speed[:n]
    if noise_sigma > 0.0:
        assert rng is not None
        speed = np.clip(speed + rng.normal(0.0, noise_sigma, n), 0.0, None)
    return DriveLog(traj.t[:n], speed, np.full(n, throttle, dtype=np.int64),
                    np.full(n, brake, dtype=np.int64), np.zeros(n), gear=gear)


def coast_down_log(models: ModelSet, noise_sigma: float = 0.0,
                   rng: np.random.Generator | None = None,
                   duration: float = 230.0) -> DriveLog:
    """Neutral coast-down from 125 km/h until the car stops."""
    return protocol_log(neutral_model_set(models), 0, 0, 125.0 / 3.6, duration,
                        Gear.NEUTRAL, noise_sigma, rng, cut_below=0.02)


def mixed_drive(models: ModelSet, cycles: int = 2):
    """A varied urban/highway drive: commands, slope profile and trajectory.

    Returns (log, trajectory, schedule). Speeds stay well above zero so the
    standstill rule never engages and recorded accelerations match the
    direct model exactly.
    """
    pattern = [(150, 0, 25.0), (80, 0, 35.0), (50, 0, 30.0), (0, 40, 12.0),
               (100, 0, 30.0), (0, 0, 8.0), (120, 0, 25.0), (60, 0, 35.0),
               (0, 60, 10.0), (90, 0, 30.0)]
    phases = []
    t = 0.0
    for _ in range(cycles):
        for throttle, brake, dur in pattern:
            phases.append((t, throttle, brake))
            t += dur
    duration = t

    def schedule(tt: float):
        throttle, brake = 0, 0
        for start, th, br in phases:
            if tt >= start:
                throttle, brake = th, br
            else:
                break
        return throttle, brake, 0.02 * math.sin(2.0 * math.pi * tt / 120.0)

    traj = simulate(models, schedule, 8.0, 0.01, duration)
    n = len(traj)
    throttle = np.array([schedule(tt)[0] for tt in traj.t], dtype=np.int64)
    brake = np.array([schedule(tt)[1] for tt in traj.t], dtype=np.int64)
    slope = np.array([schedule(tt)[2] for tt in traj.t])
    log = DriveLog(traj.t, traj.speed, throttle, brake, slope, gear=Gear.DRIVE)
    return log, traj, schedule

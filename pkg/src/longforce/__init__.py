"""Longitudinal force-model identification from vehicle drive logs.

Identifies a vehicle's friction, propulsion and braking forces from
recorded telemetry via a force balance along the road direction, models
them as constrained spline curves and surfaces, and assembles the direct
(simulation) and inverse (feedforward control) dynamic models, plus a
validation pipeline comparing model-estimated against measured
acceleration.
"""

from .core import (DriveLog, DriveSample, Gear, VehicleParams, Wheel,
                   equivalent_mass, kmh_to_mps, load_vehicle_params, mps_to_kmh,
                   total_mass)
from .dynamics import (ActuationCommand, ForceBreakdown, ModelSet, Trajectory,
                       direct_acceleration, inverse_actuation, simulate)
from .errors import (EmptyReportError, EmptySeriesError, FitError, InversionError,
                     InvalidParameterError, LongforceError, ProtocolViolationError,
                     SchemaError, SegmentSplitRequired)
from .estimation import (AccelSeries, BinnedPoints, bin_by_speed,
                         estimate_acceleration, log_spaced_edges)
from .extraction import (ForceKind, ForceObservationSet, extract_braking,
                         extract_friction, extract_propulsion,
                         split_constant_signal)
from .reference import neutral_model_set, reference_model_set, reference_vehicle_params
from .spline import (Anchor, AnchorSet, ForceSurface, InversionResult, Spline1D,
                     check_signal_monotone, fit_curve, load_model, save_model)
from .validation import ErrorReport, render_table, report_to_dict, validate

__version__ = "0.1.0"

__all__ = [
    "AccelSeries", "ActuationCommand", "Anchor", "AnchorSet", "BinnedPoints",
    "DriveLog", "DriveSample", "EmptyReportError", "EmptySeriesError",
    "ErrorReport", "FitError", "ForceBreakdown", "ForceKind",
    "ForceObservationSet", "ForceSurface", "Gear", "InvalidParameterError",
    "InversionError", "InversionResult", "LongforceError", "ModelSet",
    "ProtocolViolationError", "SchemaError", "SegmentSplitRequired", "Spline1D",
    "Trajectory", "VehicleParams", "Wheel", "bin_by_speed", "check_signal_monotone",
    "direct_acceleration", "equivalent_mass", "estimate_acceleration",
    "extract_braking", "extract_friction", "extract_propulsion", "fit_curve",
    "inverse_actuation", "kmh_to_mps", "load_model", "load_vehicle_params",
    "log_spaced_edges", "mps_to_kmh", "neutral_model_set", "reference_model_set",
    "reference_vehicle_params", "render_table", "report_to_dict", "save_model",
    "simulate", "split_constant_signal", "total_mass", "validate",
]

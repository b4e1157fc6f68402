"""Command-line pipeline: ingest, fit, export, simulate, validate.

Each stage reads and writes files rather than passing objects in memory:
the identification method is inherently staged (friction feeds the
propulsion and brake fits) and practitioners re-run later stages after
editing anchors. All outputs are deterministic for identical inputs; the
model provenance timestamp honors ``SOURCE_DATE_EPOCH``.

Exit codes: 0 on success, 2 for schema or protocol errors, 3 for
numerical or fit errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DriveLog, Gear, VehicleParams, kmh_to_mps, load_vehicle_params
from .dynamics import ModelSet, load_schedule_csv, simulate
from .errors import (EmptyReportError, EmptySeriesError, FitError, InversionError,
                     InvalidParameterError, LongforceError, ProtocolViolationError,
                     SchemaError, SegmentSplitRequired)
from .estimation import (BinnedPoints, bin_by_speed, estimate_acceleration,
                         log_spaced_edges)
from .extraction import (extract_braking, extract_friction, extract_propulsion,
                         split_constant_signal)
from .reference import load_anchor_file, reference_model_set
from .spline import (DEFAULT_KNOTS_MPS, AnchorSet, ForceSurface, Spline1D,
                     check_signal_monotone, fit_curve, load_model,
                     prune_unsupported_knots, save_model)
from .validation import render_table, report_to_dict, validate

DRIVELOG_FORMAT = "longforce-drivelog-v1"


# --- drive log files ----------------------------------------------------------

def save_drive_log(path: str | Path, log: DriveLog, extra_meta: dict | None = None) -> None:
    obj = {
        "format": DRIVELOG_FORMAT,
        "metadata": {
            "gear": log.gear.value,
            "description": log.description,
            **(extra_meta or {}),
        },
        "t_s": log.t.tolist(),
        "speed_mps": log.speed.tolist(),
        "throttle": log.throttle.tolist(),
        "brake": log.brake.tolist(),
        "slope_rad": log.slope.tolist(),
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_drive_log(path: str | Path) -> DriveLog:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if obj.get("format") != DRIVELOG_FORMAT:
        raise SchemaError(f"{path}: not a {DRIVELOG_FORMAT} file")
    meta = obj.get("metadata", {})
    try:
        return DriveLog(
            t=np.array(obj["t_s"], dtype=float),
            speed=np.array(obj["speed_mps"], dtype=float),
            throttle=np.array(obj["throttle"], dtype=np.int64),
            brake=np.array(obj["brake"], dtype=np.int64),
            slope=np.array(obj["slope_rad"], dtype=float),
            gear=Gear(meta.get("gear", "drive")),
            description=meta.get("description", ""),
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed drive log: {exc}") from exc


# --- CSV ingestion ------------------------------------------------------------

INGEST_COLUMNS = ("t", "speed", "throttle", "brake", "slope")
UNIT_SPECS = ("speed_kmh", "speed_mps")


def ingest_csv(csv_path: str | Path, units: str, gear: Gear = Gear.DRIVE,
               description: str = "") -> tuple[DriveLog, dict]:
    """Parse a telemetry CSV into a normalized SI DriveLog.

    Rows with non-finite values, negative speeds or non-integer command
    signals are rejected (counted, not fatal); non-monotone time stamps are
    a hard error naming the offending row.
    """
    if units not in UNIT_SPECS:
        raise SchemaError(f"unknown unit spec {units!r}; expected one of {UNIT_SPECS}")
    rows: list[tuple[float, float, int, int, float]] = []
    rejected: list[tuple[int, str]] = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in INGEST_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{csv_path}: missing column(s) {', '.join(missing)}")
        for i, row in enumerate(reader, start=1):
            try:
                t = float(row["t"])
                speed = float(row["speed"])
                throttle = float(row["throttle"])
                brake = float(row["brake"])
                slope = float(row["slope"])
            except (TypeError, ValueError):
                rejected.append((i, "unparseable number"))
                continue
            if not all(math.isfinite(x) for x in (t, speed, throttle, brake, slope)):
                rejected.append((i, "non-finite value"))
                continue
            if units == "speed_kmh":
                speed = kmh_to_mps(speed)
            if speed < 0:
                rejected.append((i, "negative speed"))
                continue
            if throttle != int(throttle) or brake != int(brake):
                rejected.append((i, "non-integer command signal"))
                continue
            rows.append((t, speed, int(throttle), int(brake), slope))
    for k in range(1, len(rows)):
        if rows[k][0] <= rows[k - 1][0]:
            raise SchemaError(
                f"{csv_path}: time not strictly increasing at data row {k + 1} "
                f"(t={rows[k][0]} after t={rows[k - 1][0]})")
    cols = list(zip(*rows)) if rows else [[], [], [], [], []]
    log = DriveLog(
        t=np.array(cols[0], dtype=float),
        speed=np.array(cols[1], dtype=float),
        throttle=np.array(cols[2], dtype=np.int64),
        brake=np.array(cols[3], dtype=np.int64),
        slope=np.array(cols[4], dtype=float),
        gear=gear,
        description=description,
    )
    report = {
        "rows": len(rows),
        "rejected": len(rejected),
        "rejected_rows": rejected[:20],
        "segments": len(log.segments()),
    }
    return log, report


# --- pipeline configuration ----------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    """Everything the fit stages need: vehicle, anchors, estimator, bins, knots.

    Knot layouts may differ per model kind; a single list in the config
    applies to all three.
    """

    params: VehicleParams
    anchors: dict[str, AnchorSet]
    window: int
    cutoff_hz: float
    bin_edges: np.ndarray
    knots_mps: dict[str, tuple[float, ...]]

    def knots_for(self, kind: str) -> tuple[float, ...]:
        try:
            return self.knots_mps[kind]
        except KeyError:
            raise SchemaError(f"no knot layout configured for {kind!r}") from None


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    try:
        params = load_vehicle_params(path.parent / obj["params"])
        anchors = load_anchor_file(path.parent / obj["anchors"])
        est = obj.get("estimator", {})
        window = int(est.get("window", 21))
        cutoff = float(est.get("cutoff_hz", 5.0))
        bins = obj.get("bins", {})
        edges = log_spaced_edges(float(bins.get("lo_mps", 0.05)),
                                 float(bins.get("hi_mps", 40.0)),
                                 int(bins.get("count", 40)))
        layout = obj.get("knots_mps", DEFAULT_KNOTS_MPS)
        if isinstance(layout, dict):
            knots = {kind: tuple(float(k) for k in ks) for kind, ks in layout.items()}
        else:
            shared = tuple(float(k) for k in layout)
            knots = {kind: shared for kind in ("friction", "propulsion", "braking")}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: invalid pipeline config: {exc}") from exc
    return PipelineConfig(params, anchors, window, cutoff, edges, knots)


def _provenance(source_logs: list[str]) -> dict:
    stamp = os.environ.get("SOURCE_DATE_EPOCH", "")
    try:
        timestamp = int(stamp)
    except ValueError:
        timestamp = int(time.time())
    return {
        "source_logs": [str(p) for p in source_logs],
        "fit_timestamp": timestamp,
    }


def _binned_within_knots(points, knots: tuple[float, ...], bin_edges, label: str):
    binned = bin_by_speed(points, bin_edges)
    lo, hi = knots[0], knots[-1]
    inside = (binned.bin_centers >= lo) & (binned.bin_centers <= hi)
    dropped = int((~inside).sum())
    if dropped:
        print(f"{label}: dropped {dropped} bin(s) outside the knot span [{lo}, {hi}] m/s")
    return BinnedPoints(binned.bin_centers[inside], binned.values[inside],
                        binned.counts[inside])


def _fit_level_curve(points, anchors, knots, bin_edges, label: str) -> tuple[Spline1D, BinnedPoints]:
    """Bin the points, prune knots the data cannot support, fit the curve."""
    binned = _binned_within_knots(points, knots, bin_edges, label)
    xs = list(binned.bin_centers) + [a.speed_mps for a in anchors]
    kept = prune_unsupported_knots(knots, xs)
    if len(kept) < len(knots):
        print(f"{label}: pruned {len(knots) - len(kept)} unsupported knot(s)")
    curve = fit_curve(binned, anchors, kept)
    rms = _fit_rms(curve, binned)
    print(f"{label}: {len(points)} points in {len(binned)} bins, "
          f"fit residual RMS {rms:.1f} N")
    return curve, binned


def _fit_rms(curve: Spline1D, binned) -> float:
    if len(binned) == 0:
        return 0.0
    resid = binned.values - curve.eval_many(binned.bin_centers)
    return float(np.sqrt(np.mean(resid**2)))


def run_fit_friction(log_paths: list[str], config: PipelineConfig,
                     out_path: str | Path) -> Spline1D:
    """Chain estimation, friction extraction and curve fitting; write the model."""
    points = []
    for path in log_paths:
        log = load_drive_log(path)
        accel = estimate_acceleration(log, config.window, config.cutoff_hz)
        try:
            obs = extract_friction(log, accel, config.params)
        except ProtocolViolationError as exc:
            raise ProtocolViolationError(f"{path}: {exc}", exc.indices) from exc
        points.extend(obs.points().tolist())
    anchors = config.anchors.get("friction", AnchorSet({})).for_level(None)
    curve, _ = _fit_level_curve(points, anchors, config.knots_for("friction"),
                                config.bin_edges, "friction")
    save_model(out_path, "friction", curve, _provenance(log_paths))
    return curve


def _fit_surface(kind: str, points_by_level: dict[int, list], config: PipelineConfig,
                 out_path: str | Path, source_logs: list[str]) -> ForceSurface:
    anchor_set = config.anchors.get(kind, AnchorSet({}))
    knots = config.knots_for(kind)
    levels = sorted(points_by_level)
    curves = []
    for level in levels:
        try:
            curve, _ = _fit_level_curve(points_by_level[level], anchor_set.for_level(level),
                                        knots, config.bin_edges, f"{kind} level {level}")
        except FitError as exc:
            raise FitError(f"{kind} level {level}: {exc}") from exc
        curves.append(curve)
    surface = ForceSurface(tuple(levels), tuple(curves))
    check_signal_monotone(surface)
    save_model(out_path, kind, surface, _provenance(source_logs))
    return surface


def run_fit_propulsion(log_paths: list[str], friction_path: str | Path,
                       config: PipelineConfig, out_path: str | Path) -> ForceSurface:
    """Fit one propulsion curve per constant throttle level and assemble the surface."""
    kind, friction, _ = load_model(friction_path)
    if kind != "friction":
        raise SchemaError(f"{friction_path}: expected a friction model, got {kind}")
    points_by_level: dict[int, list] = {}
    for path in log_paths:
        log = load_drive_log(path)
        for part in split_constant_signal(log, "throttle"):
            if len(part) < config.window:
                continue
            accel = estimate_acceleration(part, config.window, config.cutoff_hz)
            try:
                obs = extract_propulsion(part, accel, friction, config.params)
            except ProtocolViolationError as exc:
                raise ProtocolViolationError(f"{path}: {exc}", exc.indices) from exc
            points_by_level.setdefault(obs.level, []).extend(obs.points().tolist())
    if not points_by_level:
        raise EmptySeriesError("no usable constant-throttle segments in the given logs")
    return _fit_surface("propulsion", points_by_level, config, out_path, log_paths)


def run_fit_brake(log_paths: list[str], friction_path: str | Path,
                  propulsion_path: str | Path, config: PipelineConfig,
                  out_path: str | Path) -> ForceSurface:
    """Fit one braking curve per constant brake level and assemble the surface."""
    kind, friction, _ = load_model(friction_path)
    if kind != "friction":
        raise SchemaError(f"{friction_path}: expected a friction model, got {kind}")
    kind, propulsion, _ = load_model(propulsion_path)
    if kind != "propulsion":
        raise SchemaError(f"{propulsion_path}: expected a propulsion model, got {kind}")
    creep = propulsion.curve_at(0)
    points_by_level: dict[int, list] = {}
    for path in log_paths:
        log = load_drive_log(path)
        for part in split_constant_signal(log, "brake"):
            if len(part) < config.window:
                continue
            accel = estimate_acceleration(part, config.window, config.cutoff_hz)
            try:
                obs = extract_braking(part, accel, friction, creep, config.params)
            except ProtocolViolationError as exc:
                raise ProtocolViolationError(f"{path}: {exc}", exc.indices) from exc
            points_by_level.setdefault(obs.level, []).extend(obs.points().tolist())
    if not points_by_level:
        raise EmptySeriesError("no usable constant-brake segments in the given logs")
    return _fit_surface("braking", points_by_level, config, out_path, log_paths)


# --- plot data export ----------------------------------------------------------

def run_export(model_path: str | Path, out_path: str | Path,
               levels: list[int] | None = None, log_axes: bool = False,
               points: int = 500, lo_kmh: float = 0.1, hi_kmh: float = 130.0) -> None:
    """Dense per-level evaluation grid as CSV (speed_kmh, force_N, level)."""
    kind, model, _ = load_model(model_path)
    if log_axes:
        grid_kmh = np.geomspace(max(lo_kmh, 1e-3), hi_kmh, points)
    else:
        grid_kmh = np.linspace(lo_kmh, hi_kmh, points)
    if kind == "friction":
        if levels:
            raise SchemaError("a friction model has no levels")
        level_list: list[int | None] = [None]
    else:
        available = list(model.levels)
        level_list = levels if levels else available
        unknown = [lv for lv in level_list if lv not in available]
        if unknown:
            raise SchemaError(
                f"unknown level(s) {unknown}; available levels: {available}")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speed_kmh", "force_N", "level"])
        for level in level_list:
            for v_kmh in grid_kmh:
                v = kmh_to_mps(float(v_kmh))
                force = model.eval(v) if level is None else model.eval(v, level)
                writer.writerow([repr(float(v_kmh)), repr(float(force)),
                                 "" if level is None else level])
    print(f"wrote {points * len(level_list)} rows to {out_path}")


# --- simulation & validation ---------------------------------------------------

def load_model_set(friction_path, propulsion_path, braking_path, params_path) -> ModelSet:
    kind, friction, _ = load_model(friction_path)
    if kind != "friction":
        raise SchemaError(f"{friction_path}: expected a friction model, got {kind}")
    kind, propulsion, _ = load_model(propulsion_path)
    if kind != "propulsion":
        raise SchemaError(f"{propulsion_path}: expected a propulsion model, got {kind}")
    kind, braking, _ = load_model(braking_path)
    if kind != "braking":
        raise SchemaError(f"{braking_path}: expected a braking model, got {kind}")
    params = load_vehicle_params(params_path)
    try:
        return ModelSet(friction, propulsion, braking, params)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def run_simulate(models: ModelSet, schedule_path: str | Path, v0: float, dt: float,
                 duration: float, out_path: str | Path) -> None:
    schedule = load_schedule_csv(schedule_path)
    traj = simulate(models, schedule, v0, dt, duration)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "speed_mps", "accel_mps2", "F_p_N", "F_f_N", "F_b_N"])
        for k in range(len(traj)):
            writer.writerow([repr(float(traj.t[k])), repr(float(traj.speed[k])),
                             repr(float(traj.accel[k])), repr(float(traj.f_p[k])),
                             repr(float(traj.f_f[k])), repr(float(traj.f_b[k]))])
    print(f"wrote {len(traj)} trajectory rows to {out_path}")


def run_validate(models: ModelSet, log_path: str | Path, window: int, cutoff_hz: float,
                 hist_bin: float, out_path: str | Path | None) -> None:
    log = load_drive_log(log_path)
    accel = estimate_acceleration(log, window, cutoff_hz)
    report = validate(models, log, accel, hist_bin)
    print(render_table(report))
    if out_path is not None:
        Path(out_path).write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        print(f"wrote report to {out_path}")


def run_reference(out_dir: str | Path) -> None:
    """Write model files interpolated from the packaged reference anchors."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    models = reference_model_set()
    provenance = {"source_logs": [], "fit_timestamp": 0,
                  "note": "interpolated from packaged reference anchors"}
    save_model(out / "friction.json", "friction", models.friction, provenance)
    save_model(out / "propulsion.json", "propulsion", models.propulsion, provenance)
    save_model(out / "braking.json", "braking", models.braking, provenance)
    print(f"wrote friction.json, propulsion.json, braking.json to {out}")


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longforce",
        description="Identify longitudinal force models from drive logs and "
                    "assemble direct/inverse dynamic models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a telemetry CSV into a drive log file")
    p.add_argument("csv_path")
    p.add_argument("--units", choices=UNIT_SPECS, required=True)
    p.add_argument("--gear", choices=[g.value for g in Gear], default=Gear.DRIVE.value)
    p.add_argument("--description", default="")
    p.add_argument("--out", required=True)

    for name, help_text in (("fit-friction", "fit the friction curve from coast-down logs"),
                            ("fit-propulsion", "fit the propulsion surface"),
                            ("fit-brake", "fit the braking surface")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("logs", nargs="+")
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        if name in ("fit-propulsion", "fit-brake"):
            p.add_argument("--friction", required=True)
        if name == "fit-brake":
            p.add_argument("--propulsion", required=True)

    p = sub.add_parser("export-plot-data", help="densely evaluate a model into CSV")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--level", type=int, action="append")
    p.add_argument("--log-axes", action="store_true")
    p.add_argument("--points", type=int, default=500)

    p = sub.add_parser("simulate", help="integrate the direct model under a schedule")
    p.add_argument("--friction", required=True)
    p.add_argument("--propulsion", required=True)
    p.add_argument("--braking", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="compare model-estimated vs measured acceleration")
    p.add_argument("--friction", required=True)
    p.add_argument("--propulsion", required=True)
    p.add_argument("--braking", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--window", type=int, default=21)
    p.add_argument("--cutoff", type=float, default=5.0)
    p.add_argument("--hist-bin", type=float, default=0.1)
    p.add_argument("--out")

    p = sub.add_parser("reference", help="write reference models from packaged anchors")
    p.add_argument("--out-dir", required=True)

    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "ingest":
        log, report = ingest_csv(args.csv_path, args.units, Gear(args.gear),
                                 args.description)
        save_drive_log(args.out, log, {"source_csv": str(args.csv_path),
                                       "speed_unit_in": args.units})
        print(f"ingested {report['rows']} rows ({report['rejected']} rejected), "
              f"{report['segments']} segment(s) -> {args.out}")
        for idx, reason in report["rejected_rows"]:
            print(f"  rejected row {idx}: {reason}")
    elif args.command == "fit-friction":
        run_fit_friction(args.logs, load_pipeline_config(args.config), args.out)
    elif args.command == "fit-propulsion":
        run_fit_propulsion(args.logs, args.friction, load_pipeline_config(args.config),
                           args.out)
    elif args.command == "fit-brake":
        run_fit_brake(args.logs, args.friction, args.propulsion,
                      load_pipeline_config(args.config), args.out)
    elif args.command == "export-plot-data":
        run_export(args.model, args.out, args.level, args.log_axes, args.points)
    elif args.command == "simulate":
        models = load_model_set(args.friction, args.propulsion, args.braking, args.params)
        run_simulate(models, args.schedule, args.v0, args.dt, args.duration, args.out)
    elif args.command == "validate":
        models = load_model_set(args.friction, args.propulsion, args.braking, args.params)
        run_validate(models, args.log, args.window, args.cutoff, args.hist_bin, args.out)
    elif args.command == "reference":
        run_reference(args.out_dir)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except (SchemaError, ProtocolViolationError, InvalidParameterError,
            SegmentSplitRequired) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, InversionError, EmptySeriesError, EmptyReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LongforceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

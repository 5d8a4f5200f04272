"""One-dimensional parameter sweeps of the weighted visibility beta.

Each swept value rebuilds the geometry and runs the full
map -> angle integration -> visibility -> beta pipeline. Points are independent
and may run on a thread pool; results are assembled in value order, so the
output does not depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NoFringeError, QsupError, SweepError, WindowError
from .interferometer import (
    GeometryConfig,
    build_map,
    extract_visibility,
    integrate_angles,
    weighted_visibility,
)

log = logging.getLogger(__name__)

PARAMETERS = {"crystal_L": "mm", "sample_L_m": "um", "gap_L_a": "mm"}

DEFAULT_RANGES = {
    "crystal_L": (1.0, 10.0, 19),
    "sample_L_m": (1.0, 20.0, 20),
    "gap_L_a": (-12.0, -4.0, 33),
}

STATUSES = ("ok", "no_fringes", "error")


def sweep_values(start, stop, count):
    if int(count) != count or count < 2:
        raise ConfigError("sweep count must be an integer >= 2")
    return np.linspace(float(start), float(stop), int(count))


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    base: GeometryConfig
    sample: object  # SampleTransmissivity or AbsorbanceSample
    signal_nm: np.ndarray
    theta_deg: np.ndarray
    window_A: tuple  # signal nm
    window_B: tuple
    smoothing: int = 0

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; expected one of {sorted(PARAMETERS)}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        d = np.diff(vals)
        if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("sweep values must be strictly monotone")
        object.__setattr__(self, "values", vals)

    @property
    def unit(self):
        return PARAMETERS[self.parameter]


def apply_parameter(geometry: GeometryConfig, parameter, value) -> GeometryConfig:
    if parameter == "crystal_L":
        return geometry.with_crystal_length(value)
    if parameter == "sample_L_m":
        return geometry.replace(L_m_um=value)
    if parameter == "gap_L_a":
        return geometry.replace(L_a_mm=value)
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


@dataclass(frozen=True)
class SweepPoint:
    value: float
    status: str
    beta: float | None = None
    V_A: float | None = None
    V_B: float | None = None
    V_mean: float | None = None
    n_fringes: int = 0
    message: str = ""


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    unit: str
    points: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def ok_points(self):
        return [p for p in self.points if p.status == "ok"]

    @property
    def argmax(self):
        ok = self.ok_points
        if not ok:
            return None
        return max(ok, key=lambda p: p.beta).value

    @property
    def null_points(self):
        return [p.value for p in self.points if p.status == "no_fringes"]

    def values(self):
        return np.array([p.value for p in self.points])

    def betas(self):
        return np.array([np.nan if p.beta is None else p.beta for p in self.points])


def evaluate_point(spec: SweepSpec, value, backend=None) -> SweepPoint:
    """Run the pipeline at one swept value; missing fringes become a status, not an exception."""
    try:
        geom = apply_parameter(spec.base, spec.parameter, value)
        m = build_map(geom, spec.sample, spec.signal_nm, spec.theta_deg, backend=backend)
        curve = extract_visibility(integrate_angles(m), smoothing=spec.smoothing)
        b = weighted_visibility(curve, spec.window_A, spec.window_B)
    except (NoFringeError, WindowError) as exc:
        return SweepPoint(float(value), "no_fringes", message=str(exc))
    except QsupError as exc:
        return SweepPoint(float(value), "error", message=f"{type(exc).__name__}: {exc}")
    return SweepPoint(float(value), "ok", b.beta, b.V_A, b.V_B, float(np.mean(curve.visibility)), len(curve))


def run_sweep(spec: SweepSpec, threads=1, backend=None) -> SweepResult:
    values = spec.values
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            points = list(pool.map(lambda v: evaluate_point(spec, v, backend), values))
    else:
        points = [evaluate_point(spec, v, backend) for v in values]
    for p in points:
        log.debug("%s=%g status=%s beta=%s", spec.parameter, p.value, p.status, p.beta)
    errors = [p for p in points if p.status == "error"]
    if len(errors) == len(points):
        raise SweepError(f"every sweep point failed; first error: {errors[0].message}")
    order = np.argsort(values, kind="stable")
    points = tuple(points[i] for i in order)
    meta = {
        "parameter": spec.parameter,
        "unit": spec.unit,
        "window_A_nm": list(spec.window_A),
        "window_B_nm": list(spec.window_B),
        "smoothing": spec.smoothing,
    }
    return SweepResult(spec.parameter, spec.unit, points, meta)


def locate_collapse(result: SweepResult):
    """Where the fringes collapse along the sweep.

    Returns the swept values at which a run of no_fringes points begins next
    to a point with fringes. With no such run, the value of minimal mean
    visibility among ok points is returned instead (single-element list).
    """
    pts = result.points
    onsets = []
    for i, p in enumerate(pts):
        if p.status != "no_fringes":
            continue
        for j in (i - 1, i + 1):
            if 0 <= j < len(pts) and pts[j].status == "ok":
                onsets.append(p.value)
                break
    if onsets:
        return onsets
    ok = result.ok_points
    if not ok:
        return []
    return [min(ok, key=lambda p: p.V_mean).value]


def summarize(result: SweepResult) -> dict:
    if not result.points:
        raise ConfigError("cannot summarise an empty sweep")
    best = result.argmax
    beta_best = None
    if best is not None:
        beta_best = next(p.beta for p in result.points if p.value == best and p.status == "ok")
    return {
        "parameter": result.parameter,
        "unit": result.unit,
        "argmax": best,
        "beta_at_argmax": beta_best,
        "null_points": result.null_points,
        "collapse": locate_collapse(result),
        "points": [asdict(p) for p in result.points],
        "metadata": dict(result.metadata),
    }


def _cell(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else v


CSV_FIELDS = ("value", "beta", "V_A", "V_B", "V_mean", "n_fringes", "status")


def write_sweep(result: SweepResult, out_dir, stem="sweep", echo=None):
    """CSV (value, beta, V_A, V_B, V_mean, n_fringes, status) and JSON summary with config echo."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_FIELDS)
        for p in result.points:
            wr.writerow([_cell(getattr(p, f)) for f in CSV_FIELDS])
    summary = summarize(result)
    if echo is not None:
        summary["config"] = echo
    json_path.write_text(json.dumps(summary, indent=1))
    return csv_path, json_path


def read_sweep_csv(path, parameter="", unit="") -> SweepResult:
    pts = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            num = {k: (None if row[k] == "" else float(row[k])) for k in ("beta", "V_A", "V_B", "V_mean")}
            pts.append(SweepPoint(float(row["value"]), row["status"], n_fringes=int(row["n_fringes"]), **num))
    return SweepResult(parameter, unit, tuple(pts))

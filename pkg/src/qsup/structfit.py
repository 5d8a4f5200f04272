"""Secondary-structure analysis of the Amide I band.

Baseline correction, Savitzky-Golay second derivative, peak seeding from the
negative normalised second derivative, constrained Gaussian fitting and
assignment of the fitted components to secondary-structure classes.
Axes are wavenumbers in cm-1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, savgol_coeffs

from .errors import (
    ConfigError,
    CoverageError,
    DataError,
    FitError,
    RangeError,
    ResampleError,
    SeedError,
)
from .spectra import Spectrum, convert_axis

STRUCTURES = ("alpha_helix", "beta_sheet", "beta_turn", "random_coil", "unassigned")
SQRT_2PI = math.sqrt(2.0 * math.pi)

DEFAULT_BAND_WINDOW = (1600.0, 1700.0)


@dataclass
class PeakComponent:
    center: float
    amplitude: float
    sigma: float
    assignment: str = "unassigned"
    area: float = 0.0
    area_percent: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise DataError("component sigma must be positive")
        if self.amplitude < 0:
            raise DataError("component amplitude must be nonnegative")
        if self.assignment not in STRUCTURES:
            raise ConfigError(f"unknown structure label {self.assignment!r}")
        self.area = self.amplitude * self.sigma * SQRT_2PI

    def curve(self, x):
        return gaussian(np.asarray(x, dtype=float), self.amplitude, self.center, self.sigma)


@dataclass
class StructureReport:
    components: list
    fit_residual_rms: float
    band_window: tuple
    provenance: dict = field(default_factory=dict)
    n_iterations: int = 0

    def percentages(self):
        """{assignment: summed area percent}."""
        out = {}
        for c in self.components:
            out[c.assignment] = out.get(c.assignment, 0.0) + c.area_percent
        return out

    def model(self, x):
        x = np.asarray(x, dtype=float)
        return sum((c.curve(x) for c in self.components), np.zeros_like(x))

    def to_dict(self):
        return {
            "components": [asdict(c) for c in self.components],
            "fit_residual_rms": self.fit_residual_rms,
            "band_window_cm1": list(self.band_window),
            "provenance": dict(self.provenance),
            "n_iterations": self.n_iterations,
        }


def gaussian(x, amplitude, center, sigma):
    return amplitude * np.exp(-0.5 * ((x - center) / sigma) ** 2)


def _as_cm1(s: Spectrum):
    return (convert_axis(s, "cm-1") if s.unit != "cm-1" else s).sorted()


# --------------------------------------------------------- preprocessing


def subtract_reference(s: Spectrum, reference: Spectrum, scale=1.0) -> Spectrum:
    """Subtract ``scale`` times a reference spectrum (water vapour, CO2, solvent)."""
    s = _as_cm1(s)
    ref = _as_cm1(reference)
    if s.axis[0] < ref.axis[0] or s.axis[-1] > ref.axis[-1]:
        raise CoverageError(
            f"reference spectrum [{ref.axis[0]:g}, {ref.axis[-1]:g}] cm-1 does not cover "
            f"[{s.axis[0]:g}, {s.axis[-1]:g}] cm-1"
        )
    meta = dict(s.metadata, reference_scale=scale)
    return Spectrum(s.axis, s.values - scale * np.interp(s.axis, ref.axis, ref.values), "cm-1", s.kind, meta)


def baseline_correct(s: Spectrum, window=DEFAULT_BAND_WINDOW) -> Spectrum:
    """Subtract the straight line through the spectrum values at the window endpoints."""
    s = _as_cm1(s)
    lo, hi = sorted(window)
    if lo < s.axis[0] or hi > s.axis[-1]:
        raise RangeError(f"baseline window [{lo:g}, {hi:g}] cm-1 outside spectrum axis [{s.axis[0]:g}, {s.axis[-1]:g}]")
    y_lo, y_hi = np.interp([lo, hi], s.axis, s.values)
    line = y_lo + (y_hi - y_lo) * (s.axis - lo) / (hi - lo)
    return Spectrum(s.axis, s.values - line, "cm-1", s.kind, dict(s.metadata, baseline_window_cm1=[lo, hi]))


def second_derivative(s: Spectrum, sg_points=9, sg_order=3) -> Spectrum:
    """Savitzky-Golay second derivative; half a window is dropped at each edge."""
    if sg_points % 2 == 0 or sg_points < 5:
        raise ConfigError("sg_points must be odd and >= 5")
    if sg_order < 2 or sg_order >= sg_points:
        raise ConfigError("sg_order must be >= 2 and smaller than sg_points")
    s = s.sorted()
    if len(s) < sg_points:
        raise DataError(f"spectrum has {len(s)} points, fewer than the filter window {sg_points}")
    d = np.diff(s.axis)
    h = float(np.mean(d))
    if np.max(np.abs(d - h)) > 1e-6 * h:
        raise ResampleError("second derivative needs a uniformly spaced axis; resample first")
    coeffs = savgol_coeffs(sg_points, sg_order, deriv=2, delta=h, use="conv")
    d2 = np.convolve(s.values, coeffs, mode="valid")
    half = sg_points // 2
    meta = dict(s.metadata, sg_points=sg_points, sg_order=sg_order)
    return Spectrum(s.axis[half:-half], d2, s.unit, "second_derivative", meta)


def seed_peaks(d2: Spectrum, band_window=DEFAULT_BAND_WINDOW, min_prominence=0.05):
    """Band centres from local maxima of -d2 (max-normalised) inside the window.

    Returns a sorted list of centre positions; empty when nothing qualifies.
    """
    if d2.kind != "second_derivative":
        raise DataError(f"seed_peaks expects a second_derivative spectrum, got {d2.kind!r}")
    w = d2.sorted().window(*band_window)
    if len(w) < 3:
        return []
    y = -w.values
    top = y.max()
    if not top > 0:
        return []
    idx, _ = find_peaks(y / top, prominence=min_prominence)
    return [float(w.axis[i]) for i in idx]


# ----------------------------------------------------------------- fitting


def _model(p, x):
    out = np.zeros_like(x)
    for a, c, sg in p.reshape(-1, 3):
        out += gaussian(x, a, c, sg)
    return out


def _jac(p, x, y):
    J = np.empty((x.size, p.size))
    for k, (a, c, sg) in enumerate(p.reshape(-1, 3)):
        u = (x - c) / sg
        e = np.exp(-0.5 * u * u)
        J[:, 3 * k] = e
        J[:, 3 * k + 1] = a * e * u / sg
        J[:, 3 * k + 2] = a * e * u * u / sg
    return J


def fit_gaussians(
    s: Spectrum,
    seeds,
    band_window=DEFAULT_BAND_WINDOW,
    center_tolerance=4.0,
    sigma_bounds=(2.0, 30.0),
    sigma_init=8.0,
    max_nfev=2000,
) -> StructureReport:
    """Least-squares sum-of-Gaussians fit over the band window.

    Centres stay within ``center_tolerance`` of their seeds, amplitudes are
    nonnegative and sigmas lie in ``sigma_bounds``. Areas are analytic.
    """
    s = _as_cm1(s)
    lo, hi = sorted(band_window)
    seeds = sorted(float(c) for c in seeds)
    if not seeds:
        raise SeedError("at least one seed is required")
    for c in seeds:
        if not lo <= c <= hi:
            raise SeedError(f"seed {c:g} cm-1 outside fit window [{lo:g}, {hi:g}]")
    w = s.window(lo, hi)
    if len(w) < 3 * len(seeds):
        raise FitError(f"band window [{lo:g}, {hi:g}] cm-1 holds {len(w)} points, too few for {len(seeds)} bands")
    x, y = w.axis, w.values
    # fit on a unit-scaled copy so the solver path does not depend on absolute scale
    scale = float(np.max(np.abs(y)))
    if not scale > 0:
        raise FitError("spectrum is identically zero in the band window", best_residual=0.0)
    yn = y / scale
    s_lo, s_hi = sigma_bounds
    p0, lb, ub = [], [], []
    for c in seeds:
        a0 = max(float(np.interp(c, x, yn)), 1e-3)
        p0 += [a0, c, min(max(sigma_init, s_lo), s_hi)]
        lb += [0.0, max(c - center_tolerance, lo), s_lo]
        ub += [np.inf, min(c + center_tolerance, hi), s_hi]
    res = least_squares(
        lambda p: _model(p, x) - yn,
        np.array(p0),
        jac=lambda p: _jac(p, x, yn),
        bounds=(np.array(lb), np.array(ub)),
        method="trf",
        x_scale="jac",
        ftol=1e-14,
        xtol=1e-14,
        gtol=1e-14,
        max_nfev=max_nfev,
    )
    rms = float(np.sqrt(np.mean(res.fun**2))) * scale
    if res.status <= 0:
        raise FitError(f"Gaussian fit did not converge ({res.message}); best rms residual {rms:.3g}", best_residual=rms)
    comps = [PeakComponent(float(c), float(a) * scale, float(sg)) for a, c, sg in res.x.reshape(-1, 3)]
    total = sum(c.area for c in comps)
    if not total > 0:
        raise FitError("fitted components have zero total area", best_residual=rms)
    for c in comps:
        c.area_percent = 100.0 * (c.area / total)  # ratio first so a lone band is exactly 100
    return StructureReport(comps, rms, (lo, hi), dict(s.metadata), int(res.nfev))


# -------------------------------------------------------------- assignment


@dataclass(frozen=True)
class AssignmentTable:
    """Half-open wavenumber intervals [lo, hi) mapped to structure labels."""

    intervals: tuple

    def __post_init__(self):
        rows = tuple(sorted((float(lo), float(hi), str(lab)) for lo, hi, lab in self.intervals))
        for lo, hi, lab in rows:
            if not lo < hi:
                raise ConfigError(f"assignment interval [{lo}, {hi}) is empty")
            if lab not in STRUCTURES:
                raise ConfigError(f"unknown structure label {lab!r} in assignment table")
        for (lo1, hi1, _), (lo2, _, _) in zip(rows, rows[1:]):
            if lo2 < hi1:
                raise ConfigError(f"overlapping assignment intervals at [{lo2}, {hi1}) cm-1")
        object.__setattr__(self, "intervals", rows)

    def label(self, center):
        for lo, hi, lab in self.intervals:
            if lo <= center < hi:
                return lab
        return "unassigned"

    def to_list(self):
        return [{"lo_cm1": lo, "hi_cm1": hi, "structure": lab} for lo, hi, lab in self.intervals]


def load_assignment_table(path=None) -> AssignmentTable:
    if path is None:
        text = (resources.files("qsup") / "data" / "assignment_table.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        rows = json.loads(text)
        return AssignmentTable(tuple((r["lo_cm1"], r["hi_cm1"], r["structure"]) for r in rows))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid assignment table {path or '<default>'}: {exc}") from None


def assign_structures(components, table: AssignmentTable | None = None):
    table = table or load_assignment_table()
    for c in components:
        c.assignment = table.label(c.center)
    return components


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class FitConfig:
    band_window_cm1: tuple = DEFAULT_BAND_WINDOW
    # anchors in the Amide I/II valley and above the band; None uses the band window
    baseline_window_cm1: tuple | None = (1595.0, 1750.0)
    sg_points: int = 9
    sg_order: int = 3
    min_prominence: float = 0.05
    seeds_cm1: tuple | None = None
    center_tolerance_cm1: float = 4.0
    sigma_bounds_cm1: tuple = (2.0, 30.0)
    max_nfev: int = 2000
    assignment_table: str | None = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown fit config keys {sorted(unknown)}")
        for k in ("band_window_cm1", "baseline_window_cm1", "seeds_cm1", "sigma_bounds_cm1"):
            if d.get(k) is not None:
                d[k] = tuple(float(v) for v in d[k])
        return cls(**d)


def preprocess(absorbance: Spectrum, config: FitConfig | None = None, reference=None, reference_scale=1.0):
    """Reference subtraction (optional) and baseline correction, as used by the fit."""
    config = config or FitConfig()
    s = _as_cm1(absorbance)
    if reference is not None:
        s = subtract_reference(s, reference, reference_scale)
    return baseline_correct(s, config.baseline_window_cm1 or config.band_window_cm1)


def analyze(absorbance: Spectrum, config: FitConfig | None = None, reference=None, reference_scale=1.0):
    """Reference subtraction, baseline, second derivative, seeding, fit and assignment.

    Returns (report, second_derivative_spectrum, seeds).
    """
    config = config or FitConfig()
    s = preprocess(absorbance, config, reference, reference_scale)
    d2 = second_derivative(s, config.sg_points, config.sg_order)
    if config.seeds_cm1:
        seeds = list(config.seeds_cm1)
    else:
        seeds = seed_peaks(d2, config.band_window_cm1, config.min_prominence)
        if not seeds:
            raise FitError("no peaks found in the second derivative inside the band window")
    report = fit_gaussians(
        s,
        seeds,
        config.band_window_cm1,
        center_tolerance=config.center_tolerance_cm1,
        sigma_bounds=config.sigma_bounds_cm1,
        max_nfev=config.max_nfev,
    )
    assign_structures(report.components, load_assignment_table(config.assignment_table))
    report.provenance["seeds_cm1"] = list(seeds)
    return report, d2, seeds


def write_report(report: StructureReport, out_dir, stem="structure", spectrum: Spectrum | None = None):
    """JSON report, a position/assignment/percent table CSV and (with ``spectrum``) a diagnostics CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.json", out / f"{stem}_table.csv"]
    paths[0].write_text(json.dumps(report.to_dict(), indent=1))
    with open(paths[1], "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["position_cm1", "secondary_structure", "percent"])
        for c in report.components:
            wr.writerow([f"{c.center:.2f}", c.assignment, f"{c.area_percent:.2f}"])
    if spectrum is not None:
        s = _as_cm1(spectrum).window(*report.band_window)
        model = report.model(s.axis)
        p = out / f"{stem}_diagnostics.csv"
        with open(p, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["wavenumber_cm1", "data", "model", "residual"] + [f"component_{i}" for i in range(len(report.components))])
            for i, x in enumerate(s.axis):
                wr.writerow([repr(float(x)), repr(float(s.values[i])), repr(float(model[i])), repr(float(s.values[i] - model[i]))]
                            + [repr(float(c.curve(x))) for c in report.components])
        paths.append(p)
    return paths

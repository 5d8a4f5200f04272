"""Spectrum container, file formats, ATR conversion and axis conversions.

Axis units carry a role: ``cm-1`` and ``um`` describe the idler (mid-IR)
side, ``nm`` the signal side. Conversions between the two sides go through
energy conservation with the pump wavelength.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

UNITS = ("cm-1", "nm", "um")
KINDS = ("absorbance", "transmissivity_amplitude", "visibility", "second_derivative", "arbitrary")

_UNIT_ALIASES = {
    "cm-1": "cm-1",
    "cm^-1": "cm-1",
    "cm⁻¹": "cm-1",
    "1/cm": "cm-1",
    "wavenumber": "cm-1",
    "nm": "nm",
    "um": "um",
    "μm": "um",
    "µm": "um",
    "micron": "um",
}


def normalize_unit(unit):
    key = str(unit).strip()
    for k in (key, key.lower()):
        if k in _UNIT_ALIASES:
            return _UNIT_ALIASES[k]
    raise ConfigError(f"unknown axis unit {unit!r}; expected one of {UNITS}")


@dataclass(frozen=True)
class Spectrum:
    axis: np.ndarray
    values: np.ndarray
    unit: str
    kind: str = "arbitrary"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "unit", normalize_unit(self.unit))
        if self.kind not in KINDS:
            raise ConfigError(f"unknown spectrum kind {self.kind!r}")
        if axis.ndim != 1 or axis.shape != values.shape:
            raise DataError("axis and values must be 1-D arrays of equal length")
        if len(axis) > 1:
            d = np.diff(axis)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise DataError("spectrum axis must be strictly monotone")
        if self.kind == "transmissivity_amplitude" and np.any((values < 0) | (values > 1)):
            raise DataError("transmissivity amplitude must lie in [0, 1]")

    def __len__(self):
        return len(self.axis)

    def sorted(self):
        if len(self.axis) < 2 or self.axis[1] > self.axis[0]:
            return self
        return replace(self, axis=self.axis[::-1].copy(), values=self.values[::-1].copy())

    def with_values(self, values, kind=None):
        return replace(self, values=np.asarray(values, dtype=float), kind=kind or self.kind)

    def window(self, lo, hi):
        lo, hi = min(lo, hi), max(lo, hi)
        m = (self.axis >= lo) & (self.axis <= hi)
        return replace(self, axis=self.axis[m], values=self.values[m])

    def to_dict(self):
        return {
            "axis_unit": self.unit,
            "kind": self.kind,
            "axis": self.axis.tolist(),
            "values": self.values.tolist(),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class AtrConversionConfig:
    penetration_depth_nm: float = 100.0
    sample_path_um: float = 6.0
    pass_count: int = 1

    def __post_init__(self):
        if self.penetration_depth_nm <= 0 or self.sample_path_um <= 0:
            raise ConfigError("penetration depth and sample path must be positive")
        if int(self.pass_count) != self.pass_count or self.pass_count < 1:
            raise ConfigError("pass_count must be an integer >= 1")


# ---------------------------------------------------------------- file I/O


def _sort_checked(axis, values, lines, path):
    order = np.argsort(axis, kind="stable")
    a = axis[order]
    dup = np.nonzero(np.diff(a) == 0)[0]
    if dup.size:
        # report the later of the two lines in file order
        i, j = order[dup[0]], order[dup[0] + 1]
        bad = max(lines[i], lines[j])
        raise ParseError(f"duplicated axis value {float(a[dup[0]])!r}", line=bad, path=path)
    return a, values[order]


def read_spectrum(path, format=None) -> Spectrum:
    """Read a two-column CSV or JSON spectrum, returning it sorted ascending."""
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    if not path.exists():
        raise FileNotFoundError(f"spectrum file not found: {path}")
    if format == "json":
        return _read_json(path)
    if format == "csv":
        return _read_csv(path)
    raise ConfigError(f"unknown spectrum format {format!r}")


def _read_csv(path):
    metadata = {}
    header = None
    axis, values, lines = [], [], []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition(":")
                if sep:
                    try:
                        metadata[key.strip()] = json.loads(val)
                    except json.JSONDecodeError:
                        metadata[key.strip()] = val.strip()
                continue
            row = next(csv.reader([line]))
            if header is None:
                if len(row) != 2:
                    raise ParseError("header must be 'axis_unit,value_kind'", line=lineno, path=path)
                try:
                    unit = normalize_unit(row[0])
                except ConfigError as exc:
                    raise ParseError(str(exc), line=lineno, path=path) from None
                kind = row[1].strip()
                if kind not in KINDS:
                    raise ParseError(f"unknown value kind {kind!r}", line=lineno, path=path)
                header = (unit, kind)
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", line=lineno, path=path)
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError(f"non-numeric row {line!r}", line=lineno, path=path) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError(f"non-finite value in row {line!r}", line=lineno, path=path)
            axis.append(x)
            values.append(y)
            lines.append(lineno)
    if header is None:
        raise ParseError("missing header line", line=1, path=path)
    if not axis:
        raise ParseError("no data rows", path=path)
    a, v = _sort_checked(np.array(axis), np.array(values), lines, path)
    try:
        return Spectrum(a, v, header[0], header[1], metadata)
    except (DataError, ConfigError) as exc:
        raise ParseError(str(exc), path=path) from None


def _read_json(path):
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from None
    try:
        axis = np.asarray(raw["axis"], dtype=float)
        values = np.asarray(raw["values"], dtype=float)
        unit = normalize_unit(raw["axis_unit"])
        kind = raw.get("kind", "arbitrary")
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ParseError(f"invalid spectrum JSON: {exc}", path=path) from None
    if axis.shape != values.shape:
        raise ParseError("axis and values differ in length", path=path)
    # JSON has no line structure per sample; report 1-based array index instead
    a, v = _sort_checked(axis, values, list(range(1, len(axis) + 1)), path)
    try:
        return Spectrum(a, v, unit, kind, raw.get("metadata", {}))
    except (DataError, ConfigError) as exc:
        raise ParseError(str(exc), path=path) from None


def write_spectrum(spectrum: Spectrum, path, format=None):
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "json":
        path.write_text(json.dumps(spectrum.to_dict(), indent=1))
        return path
    with open(path, "w", newline="") as fh:
        fh.writelines(f"# {k}: {json.dumps(v)}\n" for k, v in spectrum.metadata.items())
        fh.write(f"{spectrum.unit},{spectrum.kind}\n")
        fh.writelines(f"{float(x)!r},{float(y)!r}\n" for x, y in zip(spectrum.axis, spectrum.values))
    return path


# ------------------------------------------------------------- conversions


def atr_to_transmissivity(absorbance: Spectrum, config: AtrConversionConfig, negative_tolerance=0.0) -> Spectrum:
    """ATR absorbance -> amplitude transmissivity over the sample path.

    alpha = A ln10 / d_p,  T = exp(-alpha L_m passes),  tau = sqrt(T).
    Values in ``[-negative_tolerance, 0)`` are treated as zero.
    """
    if absorbance.kind != "absorbance":
        raise DataError(f"expected an absorbance spectrum, got kind {absorbance.kind!r}")
    A = absorbance.values
    if np.any(A < -negative_tolerance):
        i = int(np.argmin(A))
        raise DataError(
            f"negative absorbance {A[i]:.4g} at {absorbance.axis[i]:g} {absorbance.unit}; baseline-correct first"
        )
    A = np.clip(A, 0.0, None)
    alpha = A * math.log(10.0) / config.penetration_depth_nm  # 1/nm
    T = np.exp(-alpha * config.sample_path_um * 1e3 * config.pass_count)
    tau = np.clip(np.sqrt(T), 0.0, 1.0)
    meta = dict(absorbance.metadata)
    meta.update(
        penetration_depth_nm=config.penetration_depth_nm,
        sample_path_um=config.sample_path_um,
        pass_count=config.pass_count,
    )
    return replace(absorbance, values=tau, kind="transmissivity_amplitude", metadata=meta)


def _to_idler_um(axis, unit, pump_nm):
    if unit == "um":
        return axis
    if unit == "cm-1":
        return 1e4 / axis
    if pump_nm is None:
        raise ConfigError("converting from a signal-wavelength axis requires the pump wavelength")
    return 1.0 / (1.0 / pump_nm - 1.0 / axis) * 1e-3


def _from_idler_um(idler_um, unit, pump_nm):
    if unit == "um":
        return idler_um
    if unit == "cm-1":
        return 1e4 / idler_um
    if pump_nm is None:
        raise ConfigError("converting to a signal-wavelength axis requires the pump wavelength")
    idler_nm = idler_um * 1e3
    return pump_nm * idler_nm / (idler_nm - pump_nm)


def convert_axis(s: Spectrum, target_unit, pump_nm=None) -> Spectrum:
    """Re-express the axis in ``target_unit``; values are carried over, axis sorted ascending."""
    target = normalize_unit(target_unit)
    if target == s.unit:
        return s.sorted()
    needs_pump = "nm" in (target, s.unit)
    if needs_pump and pump_nm is None:
        raise ConfigError("converting to or from a signal-wavelength (nm) axis requires the pump wavelength")
    axis = _from_idler_um(_to_idler_um(s.axis, s.unit, pump_nm), target, pump_nm)
    meta = dict(s.metadata)
    if needs_pump:
        meta["pump_nm"] = pump_nm
    return Spectrum(axis, s.values.copy(), target, s.kind, meta).sorted()


AMIDE_I_RANGE_CM1 = (1600.0, 1700.0)


def check_amide_band(absorbance: Spectrum, search=(1480.0, 1800.0)):
    """Warn unless the absorbance maximum near the amide bands lies in 1600-1700 cm-1.

    Returns the wavenumber of the maximum, or None when the axis misses the
    region or nothing in it absorbs.
    """
    s = convert_axis(absorbance, "cm-1") if absorbance.unit != "cm-1" else absorbance
    w = s.window(*search)
    if len(w) == 0:
        warnings.warn("spectrum does not cover the amide I/II region", stacklevel=2)
        return None
    if not np.any(w.values > 0):
        return None  # nothing absorbs; no band to locate
    peak = float(w.axis[int(np.argmax(w.values))])
    lo, hi = AMIDE_I_RANGE_CM1
    if not lo <= peak <= hi:
        warnings.warn(f"absorbance maximum at {peak:.1f} cm-1 lies outside the amide I band [{lo}, {hi}]", stacklevel=2)
    return peak

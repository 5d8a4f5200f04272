"""Run configuration: JSON file -> resolved, validated objects.

User files are deep-merged onto ``DEFAULTS``; unknown keys are rejected.
Relative paths resolve against the directory of the config file. Every
length carries its unit in the key name.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dispersion import UniaxialCrystal, load_dispersion, phase_matching_angle
from .errors import ConfigError, ParseError
from .interferometer import (
    AbsorbanceSample,
    GeometryConfig,
    SampleTransmissivity,
    idler_window_to_signal,
)
from .spdc import PumpConfig
from .spectra import AtrConversionConfig, read_spectrum
from .structfit import FitConfig, baseline_correct, subtract_reference
from .sweep import DEFAULT_RANGES, PARAMETERS, SweepSpec, sweep_values

DEFAULTS = {
    "dispersion_file": None,
    "geometry": {
        "crystal": {
            "label": "AgGaS2",
            "ordinary": "AgGaS2_o",
            "extraordinary": "AgGaS2_e",
            # an explicit cut angle wins; otherwise the cut phase-matches this signal collinearly
            "cut_angle_deg": None,
            "phase_match_signal_nm": 743.0,
            "d_eff_pm_per_V": 15.5,
            "length_mm": 5.0,
            "transparency_um": [0.53, 12.0],
        },
        "L_a_mm": -8.75,
        "L_b_mm": 10.0,
        "L_m_um": 6.0,
        "media": {"air": "air", "biocell": "biocell", "sample": "sample"},
        "pump": {"wavelength_nm": 660.0, "power_mw": 100.0, "effective_area_um2": 1.0e4},
    },
    "grid": {
        "signal_nm": {"start": 732.0, "stop": 743.0, "count": 2001},
        "theta_deg": {"start": -1.0, "stop": 1.0, "count": 401},
    },
    # windows may be given as idler_um, cm1 or signal_nm
    "windows": {"A": {"idler_um": [6.20, 6.30]}, "B": {"idler_um": [6.02, 6.12]}},
    "smoothing": 0,
    "sample": {"flat_tau": None, "transmissivity": None, "absorbance": None},
    "preprocess": {"reference": None, "reference_scale": 1.0, "baseline_window_cm1": None, "negative_tolerance": 0.0},
    "conversion": {"penetration_depth_nm": 100.0, "pass_count": 1},
    "sweep": None,
    "fit": {},
    "output_dir": "qsup_out",
    "threads": 1,
    "backend": None,
}

_OPEN_KEYS = {"fit", "sweep"}  # validated by their own parsers


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}.{k}" if path else k
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k not in _OPEN_KEYS and k not in ("windows", "A", "B"):
            out[k] = _merge(base[k], v, where)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _grid(spec, name):
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    try:
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["count"]))
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"grid {name!r} needs start, stop and count") from None


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def load(cls, path=None, overrides=None):
        data = {}
        base_dir = Path.cwd()
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, line=exc.lineno, path=path) from None
            if not isinstance(data, dict):
                raise ParseError("config must be a JSON object", path=path)
            base_dir = path.resolve().parent
        cfg = cls(_merge(DEFAULTS, data), base_dir)
        for k, v in (overrides or {}).items():
            if v is not None:
                cfg.raw[k] = v
        return cfg

    @classmethod
    def from_dict(cls, data, base_dir="."):
        return cls(_merge(DEFAULTS, data), Path(base_dir))

    def path(self, value):
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    # ----------------------------------------------------------- builders

    def registry(self):
        return load_dispersion(self.path(self.raw["dispersion_file"]))

    def pump(self):
        try:
            return PumpConfig(**self.raw["geometry"]["pump"])
        except TypeError as exc:
            raise ConfigError(f"invalid pump config: {exc}") from None

    def geometry(self, registry=None) -> GeometryConfig:
        reg = registry or self.registry()
        g = self.raw["geometry"]
        c = g["crystal"]
        pump = self.pump()
        crystal = UniaxialCrystal(
            reg[c["ordinary"]], reg[c["extraordinary"]], 90.0, float(c["d_eff_pm_per_V"]), float(c["length_mm"]),
            tuple(c["transparency_um"]), c["label"],
        )
        if c["cut_angle_deg"] is None and c["phase_match_signal_nm"] is None:
            raise ConfigError("set crystal.cut_angle_deg or crystal.phase_match_signal_nm")
        if c["cut_angle_deg"] is not None:
            cut = float(c["cut_angle_deg"])
        else:
            cut = phase_matching_angle(crystal, pump.wavelength_um, float(c["phase_match_signal_nm"]) * 1e-3)
        media = {name: reg.medium(label) for name, label in g["media"].items()}
        missing = {"air", "biocell", "sample"} - set(media)
        if missing:
            raise ConfigError(f"geometry.media lacks {sorted(missing)}")
        return GeometryConfig(
            crystal.with_cut(cut), float(g["L_a_mm"]), float(g["L_b_mm"]), float(g["L_m_um"]),
            media["air"], media["biocell"], media["sample"], pump,
        )

    def grid(self):
        g = self.raw["grid"]
        return _grid(g["signal_nm"], "signal_nm"), _grid(g["theta_deg"], "theta_deg")

    def window_nm(self, name):
        w = self.raw["windows"].get(name)
        if not isinstance(w, dict) or len(w) != 1:
            raise ConfigError(f"window {name} needs exactly one of idler_um, cm1, signal_nm")
        (unit, (lo, hi)), = w.items()
        pump_nm = self.pump().wavelength_nm
        if unit == "signal_nm":
            return (min(lo, hi), max(lo, hi))
        if unit == "idler_um":
            return idler_window_to_signal((lo, hi), pump_nm)
        if unit == "cm1":
            return idler_window_to_signal((1e4 / lo, 1e4 / hi), pump_nm)
        raise ConfigError(f"window {name}: unknown unit key {unit!r}")

    def windows_nm(self):
        return self.window_nm("A"), self.window_nm("B")

    def conversion(self, L_m_um=None):
        c = self.raw["conversion"]
        L_m = self.raw["geometry"]["L_m_um"] if L_m_um is None else L_m_um
        return AtrConversionConfig(float(c["penetration_depth_nm"]), float(L_m), int(c["pass_count"]))

    def sample(self):
        """SampleTransmissivity or AbsorbanceSample, from exactly one sample source."""
        s = self.raw["sample"]
        given = [k for k in ("flat_tau", "transmissivity", "absorbance") if s.get(k) is not None]
        if len(given) != 1:
            raise ConfigError("sample needs exactly one of flat_tau, transmissivity, absorbance")
        kind = given[0]
        pump_nm = self.pump().wavelength_nm
        if kind == "flat_tau":
            return SampleTransmissivity.flat(float(s["flat_tau"]))
        spec = read_spectrum(self.path(s[kind]))
        if kind == "transmissivity":
            return SampleTransmissivity.from_spectrum(spec, pump_nm)
        pre = self.raw["preprocess"]
        if pre["reference"] is not None:
            spec = subtract_reference(spec, read_spectrum(self.path(pre["reference"])), float(pre["reference_scale"]))
        if pre["baseline_window_cm1"] is not None:
            spec = baseline_correct(spec, pre["baseline_window_cm1"])
        return AbsorbanceSample(spec, self.conversion(), float(pre["negative_tolerance"]))

    def fit_config(self):
        return FitConfig.from_dict(self.raw["fit"])

    def sweep_spec(self, geometry=None, sample=None) -> SweepSpec:
        sw = self.raw["sweep"]
        if not isinstance(sw, dict) or "parameter" not in sw:
            raise ConfigError("sweep section with a 'parameter' field is required")
        unknown = set(sw) - {"parameter", "values", "start", "stop", "count"}
        if unknown:
            raise ConfigError(f"unknown sweep keys {sorted(unknown)}")
        param = sw["parameter"]
        if param not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {sorted(PARAMETERS)}")
        if "values" in sw:
            values = [float(v) for v in sw["values"]]
        else:
            start, stop, count = DEFAULT_RANGES[param]
            values = sweep_values(sw.get("start", start), sw.get("stop", stop), sw.get("count", count))
        ls, th = self.grid()
        wa, wb = self.windows_nm()
        return SweepSpec(
            param, tuple(values), geometry or self.geometry(), sample or self.sample(), ls, th, wa, wb,
            int(self.raw["smoothing"]),
        )

    def echo(self, geometry=None):
        """Resolved configuration for output metadata."""
        out = copy.deepcopy(self.raw)
        out["base_dir"] = str(self.base_dir)
        if geometry is not None:
            out["resolved_geometry"] = geometry.to_dict()
        try:
            wa, wb = self.windows_nm()
            out["resolved_windows_signal_nm"] = {"A": list(wa), "B": list(wb)}
        except ConfigError:
            pass
        return out

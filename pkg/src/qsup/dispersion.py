"""Refractive index models for the crystal, air gap, biocell and sample.

Wavelengths are in micrometres throughout. Sellmeier coefficients are read
from a JSON data file rather than hard coded; the file shipped in
``qsup/data/dispersion.json`` documents its sources.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, ParseError, RangeError

DISPERSION_ENV = "QSUP_DISPERSION_FILE"

KINDS = ("constant", "sellmeier")


@dataclass(frozen=True)
class RefractiveModel:
    """Index of refraction n(lambda) over a validity range.

    ``coefficients`` is ``[n]`` for a constant model and
    ``[A, B1, C1, B2, C2, ...]`` for the Sellmeier form
    ``n^2 = A + sum B_j lam^2 / (lam^2 - C_j)``.
    """

    kind: str
    coefficients: tuple
    valid_range: tuple
    label: str = ""
    source: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown refractive model kind {self.kind!r} for {self.label!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        lo, hi = (float(v) for v in self.valid_range)
        if not 0 < lo < hi:
            raise ConfigError(f"invalid valid_range {self.valid_range!r} for {self.label!r}")
        object.__setattr__(self, "valid_range", (lo, hi))
        if self.kind == "constant":
            if len(coeffs) != 1 or coeffs[0] < 1.0:
                raise ConfigError(f"constant model {self.label!r} needs a single index >= 1")
        elif len(coeffs) < 3 or len(coeffs) % 2 == 0:
            raise ConfigError(f"sellmeier model {self.label!r} needs [A, B1, C1, ...] coefficients")

    @classmethod
    def constant(cls, n, label="", valid_range=(0.2, 30.0)):
        return cls("constant", (n,), valid_range, label)

    def __call__(self, wavelength_um):
        return index_at(self, wavelength_um)

    def to_dict(self):
        d = {
            "label": self.label,
            "kind": self.kind,
            "coefficients": list(self.coefficients),
            "valid_range_um": list(self.valid_range),
        }
        if self.source:
            d["source"] = self.source
        return d


def _check_range(model, lam):
    lo, hi = model.valid_range
    lam_arr = np.asarray(lam, dtype=float)
    if lam_arr.size and (np.min(lam_arr) < lo or np.max(lam_arr) > hi or not np.all(np.isfinite(lam_arr))):
        bad = lam_arr[(lam_arr < lo) | (lam_arr > hi) | ~np.isfinite(lam_arr)]
        raise RangeError(
            f"wavelength {bad.flat[0]:.6g} um outside valid range [{lo}, {hi}] um "
            f"of medium {model.label or '<unnamed>'!r}"
        )


def index_at(model: RefractiveModel, wavelength_um):
    """Evaluate n at ``wavelength_um`` (scalar or array). Never extrapolates."""
    _check_range(model, wavelength_um)
    if model.kind == "constant":
        n = model.coefficients[0]
        if np.ndim(wavelength_um) == 0:
            return n
        return np.full(np.shape(wavelength_um), n)
    lam2 = np.asarray(wavelength_um, dtype=float) ** 2
    c = model.coefficients
    n2 = c[0]
    for b, res in zip(c[1::2], c[2::2]):
        n2 = n2 + b * lam2 / (lam2 - res)
    n = np.sqrt(n2)
    return float(n) if np.ndim(wavelength_um) == 0 else n


@dataclass(frozen=True)
class Medium:
    model: RefractiveModel
    label: str

    def index(self, wavelength_um):
        return index_at(self.model, wavelength_um)


@dataclass(frozen=True)
class UniaxialCrystal:
    """Uniaxial nonlinear crystal cut at ``cut_angle`` degrees from the optic axis.

    Type-I interaction with an extraordinary pump and ordinary signal/idler
    is assumed (negative uniaxial crystal).
    """

    ordinary: RefractiveModel
    extraordinary: RefractiveModel
    cut_angle: float
    d_eff: float  # pm/V
    length_mm: float
    transparency: tuple = (0.53, 12.0)
    label: str = "crystal"

    def __post_init__(self):
        if not 0.0 <= self.cut_angle <= 90.0:
            raise ConfigError(f"cut_angle {self.cut_angle} must lie in [0, 90] degrees")
        if self.d_eff <= 0 or self.length_mm <= 0:
            raise ConfigError("d_eff and crystal length must be positive")
        lo, hi = self.transparency
        if not 0 < lo < hi:
            raise ConfigError(f"invalid transparency window {self.transparency!r}")

    def check_transparent(self, *wavelengths_um):
        lo, hi = self.transparency
        for lam in wavelengths_um:
            arr = np.asarray(lam, dtype=float)
            if arr.size and (arr.min() < lo or arr.max() > hi):
                raise RangeError(
                    f"wavelength {float(arr.min() if arr.min() < lo else arr.max()):.6g} um outside "
                    f"transparency window [{lo}, {hi}] um of {self.label!r}"
                )

    def pump_index(self, wavelength_um):
        return extraordinary_index(self, wavelength_um, self.cut_angle)

    def ordinary_index(self, wavelength_um):
        return index_at(self.ordinary, wavelength_um)

    def with_length(self, length_mm):
        return UniaxialCrystal(
            self.ordinary, self.extraordinary, self.cut_angle, self.d_eff, length_mm, self.transparency, self.label
        )

    def with_cut(self, cut_angle):
        return UniaxialCrystal(
            self.ordinary, self.extraordinary, cut_angle, self.d_eff, self.length_mm, self.transparency, self.label
        )


def extraordinary_index(crystal: UniaxialCrystal, wavelength_um, theta_deg):
    """Index of the extraordinary wave propagating at ``theta_deg`` to the optic axis."""
    if not 0.0 <= theta_deg <= 90.0:
        raise DomainError(f"propagation angle {theta_deg} outside [0, 90] degrees")
    n_o = index_at(crystal.ordinary, wavelength_um)
    n_e = index_at(crystal.extraordinary, wavelength_um)
    if theta_deg == 0.0:
        return n_o
    if theta_deg == 90.0:
        return n_e
    t = math.radians(theta_deg)
    return 1.0 / np.sqrt(math.cos(t) ** 2 / n_o**2 + math.sin(t) ** 2 / n_e**2)


def wavevector(n, wavelength_um):
    """Wavenumber k = 2 pi n / lambda in rad/um."""
    if np.any(np.asarray(n) < 1.0):
        raise DomainError("refractive index must be >= 1")
    if np.any(np.asarray(wavelength_um) <= 0):
        raise DomainError("wavelength must be positive")
    return 2.0 * np.pi * n / wavelength_um


def phase_matching_angle(crystal: UniaxialCrystal, pump_um, signal_um):
    """Cut angle giving collinear type-I phase matching for (pump, signal).

    Solves ``n_e(theta, pump)/pump = n_o(signal)/signal + n_o(idler)/idler``
    in closed form from the index ellipse.
    """
    idler_um = 1.0 / (1.0 / pump_um - 1.0 / signal_um)
    target = pump_um * (index_at(crystal.ordinary, signal_um) / signal_um + index_at(crystal.ordinary, idler_um) / idler_um)
    n_o = index_at(crystal.ordinary, pump_um)
    n_e = index_at(crystal.extraordinary, pump_um)
    s2 = (1.0 / target**2 - 1.0 / n_o**2) / (1.0 / n_e**2 - 1.0 / n_o**2)
    if not 0.0 <= s2 <= 1.0:
        raise DomainError(
            f"no type-I phase matching angle for pump {pump_um} um, signal {signal_um} um "
            f"(required pump index {target:.5f} outside [{min(n_o, n_e):.5f}, {max(n_o, n_e):.5f}])"
        )
    return math.degrees(math.asin(math.sqrt(s2)))


@dataclass
class DispersionRegistry:
    """Named refractive models loaded from a dispersion data file."""

    models: dict = field(default_factory=dict)
    path: str | None = None

    def __getitem__(self, label) -> RefractiveModel:
        try:
            return self.models[label]
        except KeyError:
            raise ConfigError(f"medium {label!r} not found in dispersion data {self.path or ''}") from None

    def __contains__(self, label):
        return label in self.models

    def medium(self, label, as_label=None) -> Medium:
        return Medium(self[label], as_label or label)

    def add(self, model: RefractiveModel):
        self.models[model.label] = model


def default_dispersion_path():
    env = os.environ.get(DISPERSION_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("qsup") / "data" / "dispersion.json"))


def load_dispersion(path=None) -> DispersionRegistry:
    """Load a dispersion JSON file (schema documented in the README)."""
    path = Path(path) if path is not None else default_dispersion_path()
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"dispersion file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from None
    entries = raw["entries"] if isinstance(raw, dict) else raw
    reg = DispersionRegistry(path=str(path))
    for i, e in enumerate(entries):
        try:
            model = RefractiveModel(
                kind=e["kind"],
                coefficients=tuple(e["coefficients"]),
                valid_range=tuple(e["valid_range_um"]),
                label=e["label"],
                source=e.get("source", ""),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: dispersion entry {i} missing field {exc.args[0]!r}") from None
        if model.label in reg:
            raise ConfigError(f"{path}: duplicate dispersion label {model.label!r}")
        reg.add(model)
    return reg

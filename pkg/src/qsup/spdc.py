"""Non-collinear SPDC kinematics in the nonlinear crystal.

Pump and signal wavelengths are given in nm, idler wavelengths in um,
wavevectors in rad/um and crystal lengths in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .dispersion import UniaxialCrystal, wavevector
from .errors import ConfigError, DomainError, EvanescentError

SINC_SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class PumpConfig:
    wavelength_nm: float = 660.0
    power_mw: float = 100.0
    effective_area_um2: float = 1.0e4

    def __post_init__(self):
        if self.wavelength_nm <= 0 or self.power_mw <= 0 or self.effective_area_um2 <= 0:
            raise ConfigError("pump wavelength, power and effective area must be positive")

    @property
    def wavelength_um(self):
        return self.wavelength_nm * 1e-3


@dataclass(frozen=True)
class PhasePoint:
    """One (signal wavelength, signal angle) sample with its derived idler and mismatch."""

    signal_nm: float
    theta_s_deg: float
    idler_um: float
    theta_i_deg: float
    delta: float


def idler_wavelength(pump_nm, signal_nm):
    """Idler wavelength in um from energy conservation 1/lp = 1/ls + 1/li."""
    pump_nm = np.asarray(pump_nm, dtype=float)
    signal_nm = np.asarray(signal_nm, dtype=float)
    if np.any(signal_nm <= pump_nm):
        raise DomainError("signal wavelength must exceed the pump wavelength for a physical idler")
    li = pump_nm * signal_nm / (signal_nm - pump_nm) * 1e-3
    return float(li) if li.ndim == 0 else li


def signal_wavelength(pump_nm, idler_um):
    """Inverse of :func:`idler_wavelength`: signal wavelength in nm."""
    idler_nm = np.asarray(idler_um, dtype=float) * 1e3
    pump_nm = np.asarray(pump_nm, dtype=float)
    if np.any(idler_nm <= pump_nm):
        raise DomainError("idler wavelength must exceed the pump wavelength")
    ls = pump_nm * idler_nm / (idler_nm - pump_nm)
    return float(ls) if ls.ndim == 0 else ls


def idler_angle(k_s, k_i, theta_s_deg):
    """Idler angle (deg) from transverse momentum conservation."""
    arg = np.asarray(k_s) / np.asarray(k_i) * np.sin(np.radians(theta_s_deg))
    if np.any(np.abs(arg) > 1.0):
        raise EvanescentError("transverse momentum exceeds the idler wavevector: no propagating idler")
    out = np.degrees(np.arcsin(arg))
    return float(out) if np.ndim(out) == 0 else out


def longitudinal_mismatch(k_p, k_s, k_i, theta_s_deg, theta_i_deg, length_mm):
    """Phase mismatch (k_p - k_s cos ts - k_i cos ti) L in rad; k in rad/um, L in mm."""
    if np.any(np.asarray(length_mm) < 0):
        raise DomainError("crystal length must be non-negative")
    dk = k_p - k_s * np.cos(np.radians(theta_s_deg)) - k_i * np.cos(np.radians(theta_i_deg))
    return dk * (length_mm * 1e3)


def efficiency_C0(pump: PumpConfig, crystal: UniaxialCrystal, n_p, n_s, n_i, signal_nm, idler_um):
    """SPDC efficiency prefactor in SI units (watts).

    C0 = 16/3 * c pi^3 hbar L^2 P d_eff^2 / (eps0 n_p n_s n_i ls^3 li S_eff)
    """
    for name, v in (("n_p", n_p), ("n_s", n_s), ("n_i", n_i), ("signal", signal_nm), ("idler", idler_um)):
        if np.any(np.asarray(v) <= 0):
            raise DomainError(f"{name} must be positive")
    L = crystal.length_mm * 1e-3
    P = pump.power_mw * 1e-3
    d = crystal.d_eff * 1e-12
    S = pump.effective_area_um2 * 1e-12
    ls = np.asarray(signal_nm) * 1e-9
    li = np.asarray(idler_um) * 1e-6
    num = constants.c * math.pi**3 * constants.hbar * L**2 * P * d**2
    den = constants.epsilon_0 * n_p * n_s * n_i * ls**3 * li * S
    out = 16.0 / 3.0 * num / den
    return float(out) if np.ndim(out) == 0 else out


def sinc(x):
    """Unnormalised sinc, sin(x)/x, with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return float(out) if out.ndim == 0 else out


def single_pass_intensity(point, C0):
    """C0 sinc^2(delta/2). ``point`` is a PhasePoint or a mismatch value in rad."""
    delta = point.delta if isinstance(point, PhasePoint) else point
    s = sinc(np.asarray(delta) / 2.0)
    return C0 * (s * s)


def crystal_wavevectors(crystal: UniaxialCrystal, pump: PumpConfig, signal_nm):
    """Return (k_p, k_s, k_i, idler_um) inside the crystal for the given signal wavelengths."""
    signal_nm = np.asarray(signal_nm, dtype=float)
    idler_um = idler_wavelength(pump.wavelength_nm, signal_nm)
    crystal.check_transparent(pump.wavelength_um, signal_nm * 1e-3, idler_um)
    k_p = wavevector(crystal.pump_index(pump.wavelength_um), pump.wavelength_um)
    k_s = wavevector(crystal.ordinary_index(signal_nm * 1e-3), signal_nm * 1e-3)
    k_i = wavevector(crystal.ordinary_index(idler_um), idler_um)
    return k_p, k_s, k_i, idler_um


def phase_point(crystal: UniaxialCrystal, pump: PumpConfig, signal_nm, theta_s_deg):
    """Build a PhasePoint with idler wavelength, idler angle and crystal mismatch."""
    k_p, k_s, k_i, idler_um = crystal_wavevectors(crystal, pump, signal_nm)
    theta_i = idler_angle(k_s, k_i, theta_s_deg)
    delta = longitudinal_mismatch(k_p, k_s, k_i, theta_s_deg, theta_i, crystal.length_mm)
    return PhasePoint(float(signal_nm), float(theta_s_deg), float(idler_um), float(theta_i), float(delta))

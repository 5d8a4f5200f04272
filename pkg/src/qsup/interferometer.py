"""Double-pass interferometer model.

The idler leaves the crystal, crosses the air gap, the biocell windows and the
sample, and returns for a second pass. Each section adds a longitudinal phase
mismatch computed with the transverse wavenumber ``q = k_s sin(theta_s)``
conserved from the crystal. The signal spectrum is modulated as

    I = C0 sinc^2(delta/2) [1 + tau cos(delta + delta_s)]

Lengths: crystal and air gap/biocell in mm, sample path in um; the numeric
core works in um and rad/um.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from . import kernels
from .dispersion import Medium, UniaxialCrystal, index_at, wavevector
from .errors import (
    ConfigError,
    CoverageError,
    DomainError,
    EvanescentError,
    NoFringeError,
    WindowError,
)
from .spdc import (
    PhasePoint,
    PumpConfig,
    crystal_wavevectors,
    efficiency_C0,
    idler_wavelength,
    sinc,
)
from .spectra import AtrConversionConfig, Spectrum, atr_to_transmissivity, convert_axis

SECTIONS = ("air", "biocell", "sample")


@dataclass(frozen=True)
class GeometryConfig:
    crystal: UniaxialCrystal
    L_a_mm: float
    L_b_mm: float
    L_m_um: float
    air: Medium
    biocell: Medium
    sample: Medium
    pump: PumpConfig = field(default_factory=PumpConfig)

    def __post_init__(self):
        if self.L_b_mm <= 0 or self.L_m_um <= 0:
            raise ConfigError("biocell path L_b and sample path L_m must be positive")
        labels = [self.air.label, self.biocell.label, self.sample.label]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"medium labels must be unique, got {labels}")

    def section_lengths_um(self):
        return {"air": self.L_a_mm * 1e3, "biocell": self.L_b_mm * 1e3, "sample": self.L_m_um}

    def medium(self, name) -> Medium:
        return getattr(self, name)

    def replace(self, **kw):
        return replace(self, **kw)

    def with_crystal_length(self, length_mm):
        return replace(self, crystal=self.crystal.with_length(length_mm))

    def to_dict(self):
        c = self.crystal
        return {
            "crystal": {
                "label": c.label,
                "ordinary": c.ordinary.label,
                "extraordinary": c.extraordinary.label,
                "cut_angle_deg": c.cut_angle,
                "d_eff_pm_per_V": c.d_eff,
                "length_mm": c.length_mm,
                "transparency_um": list(c.transparency),
            },
            "L_a_mm": self.L_a_mm,
            "L_b_mm": self.L_b_mm,
            "L_m_um": self.L_m_um,
            "media": {
                name: {"label": self.medium(name).label, "model": self.medium(name).model.to_dict()}
                for name in SECTIONS
            },
            "pump": {
                "wavelength_nm": self.pump.wavelength_nm,
                "power_mw": self.pump.power_mw,
                "effective_area_um2": self.pump.effective_area_um2,
            },
        }


@dataclass(frozen=True)
class SampleTransmissivity:
    """Amplitude transmissivity tabulated over idler wavelength (um, ascending)."""

    spectrum: Spectrum

    def __post_init__(self):
        s = self.spectrum
        if s.unit != "um":
            s = convert_axis(s, "um")
        s = s.sorted()
        if np.any((s.values < 0) | (s.values > 1)):
            raise DomainError("transmissivity must lie in [0, 1]")
        if s.kind != "transmissivity_amplitude":
            s = replace(s, kind="transmissivity_amplitude")
        object.__setattr__(self, "spectrum", s)

    @classmethod
    def flat(cls, value, lo_um=5.0, hi_um=7.5):
        return cls(Spectrum(np.array([lo_um, hi_um]), np.array([value, value]), "um", "transmissivity_amplitude"))

    @classmethod
    def from_spectrum(cls, s: Spectrum, pump_nm=None):
        if s.unit == "nm":
            s = convert_axis(s, "um", pump_nm)
        return cls(s)

    def for_path(self, L_m_um):
        """Tabulated transmissivity is already tied to its path; returned as is."""
        return self

    def at(self, idler_um):
        """Linear interpolation; raises CoverageError instead of extrapolating."""
        axis = self.spectrum.axis
        idler_um = np.asarray(idler_um, dtype=float)
        lo, hi = float(idler_um.min()), float(idler_um.max())
        if lo < axis[0] or hi > axis[-1]:
            gaps = []
            if lo < axis[0]:
                gaps.append(f"[{lo:.6g}, {axis[0]:.6g}] um")
            if hi > axis[-1]:
                gaps.append(f"[{axis[-1]:.6g}, {hi:.6g}] um")
            raise CoverageError(
                f"transmissivity axis [{axis[0]:.6g}, {axis[-1]:.6g}] um does not cover required idler "
                f"wavelengths; missing {', '.join(gaps)}"
            )
        return np.interp(idler_um, axis, self.spectrum.values)


@dataclass(frozen=True)
class AbsorbanceSample:
    """ATR absorbance converted to transmissivity at whatever sample path is asked for."""

    absorbance: Spectrum
    conversion: AtrConversionConfig = field(default_factory=AtrConversionConfig)
    negative_tolerance: float = 0.0

    def for_path(self, L_m_um) -> SampleTransmissivity:
        cfg = replace(self.conversion, sample_path_um=float(L_m_um))
        return SampleTransmissivity(atr_to_transmissivity(self.absorbance, cfg, self.negative_tolerance))


@dataclass(frozen=True)
class InterferenceMap:
    signal_nm: np.ndarray
    theta_deg: np.ndarray
    intensity: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FringeSpectrum:
    signal_nm: np.ndarray
    intensity: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.shape(self.signal_nm) != np.shape(self.intensity):
            raise DomainError("fringe spectrum axis and values differ in length")


@dataclass(frozen=True)
class VisibilityPoint:
    signal_nm: float
    visibility: float
    halfwidth_nm: float


@dataclass(frozen=True)
class VisibilityCurve:
    points: tuple
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def signal_nm(self):
        return np.array([p.signal_nm for p in self.points])

    @property
    def visibility(self):
        return np.array([p.visibility for p in self.points])

    @property
    def halfwidth_nm(self):
        return np.array([p.halfwidth_nm for p in self.points])

    def in_window(self, window):
        lo, hi = sorted(window)
        lam = self.signal_nm
        if lam.size == 0:
            return np.zeros(0, dtype=bool)
        return (lam >= lo) & (lam <= hi)


@dataclass(frozen=True)
class BetaResult:
    beta: float
    V_A: float
    V_B: float
    window_A: tuple
    window_B: tuple
    n_A: int = 0
    n_B: int = 0


# ---------------------------------------------------------------- phases


def _medium_wavevectors(medium: Medium, pump_um, signal_um, idler_um):
    k_p = wavevector(medium.index(pump_um), pump_um)
    k_s = wavevector(medium.index(signal_um), signal_um)
    k_i = wavevector(medium.index(idler_um), idler_um)
    return k_p, k_s, k_i


def sectional_mismatch(medium: Medium, signal_nm, theta_s_deg, length_um, pump_nm=660.0, q=None):
    """Longitudinal mismatch (k_p - sqrt(k_s^2 - q^2) - sqrt(k_i^2 - q^2)) * length in rad.

    ``q`` is the conserved transverse wavenumber (rad/um). When omitted,
    ``theta_s_deg`` is taken as the signal angle inside ``medium`` itself.
    """
    signal_nm = np.asarray(signal_nm, dtype=float)
    pump_um = pump_nm * 1e-3
    idler_um = idler_wavelength(pump_nm, signal_nm)
    k_p, k_s, k_i = _medium_wavevectors(medium, pump_um, signal_nm * 1e-3, idler_um)
    if q is None:
        q = k_s * np.sin(np.radians(theta_s_deg))
    q2 = np.asarray(q) ** 2
    if np.any(q2 > k_s**2) or np.any(q2 > k_i**2):
        raise EvanescentError(f"transverse wavenumber exceeds the wavevector in medium {medium.label!r}")
    out = (k_p - np.sqrt(k_s**2 - q2) - np.sqrt(k_i**2 - q2)) * length_um
    return float(out) if np.ndim(out) == 0 else out


def transverse_wavenumber(geometry: GeometryConfig, signal_nm, theta_s_deg):
    _, k_s, _, _ = crystal_wavevectors(geometry.crystal, geometry.pump, signal_nm)
    return k_s * np.sin(np.radians(theta_s_deg))


def sample_phases(geometry: GeometryConfig, signal_nm, theta_s_deg):
    """Return dict of sectional mismatches {air, biocell, sample} in rad."""
    q = transverse_wavenumber(geometry, signal_nm, theta_s_deg)
    lengths = geometry.section_lengths_um()
    return {
        name: sectional_mismatch(
            geometry.medium(name), signal_nm, theta_s_deg, lengths[name], geometry.pump.wavelength_nm, q=q
        )
        for name in SECTIONS
    }


def total_sample_phase(geometry: GeometryConfig, signal_nm, theta_s_deg):
    """delta_s = delta_a + delta_b + delta_m."""
    p = sample_phases(geometry, signal_nm, theta_s_deg)
    return p["air"] + p["biocell"] + p["sample"]


def crystal_mismatch(geometry: GeometryConfig, signal_nm, theta_s_deg):
    """delta in the crystal, written with the conserved q (same as k cos(theta) form)."""
    k_p, k_s, k_i, _ = crystal_wavevectors(geometry.crystal, geometry.pump, signal_nm)
    q2 = (k_s * np.sin(np.radians(theta_s_deg))) ** 2
    if np.any(q2 > k_i**2):
        raise EvanescentError("transverse wavenumber exceeds the idler wavevector in the crystal")
    return (k_p - np.sqrt(k_s**2 - q2) - np.sqrt(k_i**2 - q2)) * geometry.crystal.length_mm * 1e3


def total_phase(geometry: GeometryConfig, signal_nm, theta_s_deg):
    """Exact delta + delta_a + delta_b + delta_m."""
    return crystal_mismatch(geometry, signal_nm, theta_s_deg) + total_sample_phase(geometry, signal_nm, theta_s_deg)


def total_phase_quadratic(geometry: GeometryConfig, signal_nm, theta_s_deg, sections=("crystal",) + SECTIONS):
    """Small-angle expansion of the total phase to second order in q.

    Each section contributes [k_p - k_s - k_i + q^2/2 (1/k_s + 1/k_i)] * length.
    """
    signal_nm = np.asarray(signal_nm, dtype=float)
    pump_um = geometry.pump.wavelength_um
    k_p, k_s, k_i, idler_um = crystal_wavevectors(geometry.crystal, geometry.pump, signal_nm)
    q2 = (k_s * np.sin(np.radians(theta_s_deg))) ** 2
    total = 0.0
    if "crystal" in sections:
        total = total + (k_p - k_s - k_i + 0.5 * q2 * (1 / k_s + 1 / k_i)) * geometry.crystal.length_mm * 1e3
    lengths = geometry.section_lengths_um()
    for name in SECTIONS:
        if name not in sections:
            continue
        kp, ks, ki = _medium_wavevectors(geometry.medium(name), pump_um, signal_nm * 1e-3, idler_um)
        total = total + (kp - ks - ki + 0.5 * q2 * (1 / ks + 1 / ki)) * lengths[name]
    return total


def double_pass_intensity(point, C0, delta_s, tau):
    """C0 sinc^2(delta/2) [1 + tau cos(delta + delta_s)]."""
    tau_arr = np.asarray(tau)
    if np.any((tau_arr < 0) | (tau_arr > 1)):
        raise DomainError(f"transmissivity {tau} outside [0, 1]")
    delta = point.delta if isinstance(point, PhasePoint) else np.asarray(point)
    s = sinc(np.asarray(delta) / 2.0)
    single = C0 * (s * s)
    return single * (1.0 + tau * np.cos(delta + delta_s))


def null_gap_predictor(geometry: GeometryConfig, reference_um=6.0):
    """Air gap (mm) at which the fringes vanish: -(n_a / n_b) L_b."""
    n_a = index_at(geometry.air.model, reference_um)
    n_b = index_at(geometry.biocell.model, reference_um)
    if n_b <= 0:
        raise DomainError("biocell index must be positive")
    return -(n_a / n_b) * geometry.L_b_mm


# ------------------------------------------------------------------ maps


def _kernel_inputs(geometry: GeometryConfig, signal_nm):
    signal_nm = np.ascontiguousarray(signal_nm, dtype=float)
    pump = geometry.pump
    crystal = geometry.crystal
    k_p, k_s, k_i, idler_um = crystal_wavevectors(crystal, pump, signal_nm)
    n_p = crystal.pump_index(pump.wavelength_um)
    n_s = crystal.ordinary_index(signal_nm * 1e-3)
    n_i = crystal.ordinary_index(idler_um)
    c0 = np.ascontiguousarray(efficiency_C0(pump, crystal, n_p, n_s, n_i, signal_nm, idler_um), dtype=float)
    lengths = geometry.section_lengths_um()
    sec_kp, sec_ks, sec_ki, sec_len = [], [], [], []
    for name in SECTIONS:
        kp, ks, ki = _medium_wavevectors(geometry.medium(name), pump.wavelength_um, signal_nm * 1e-3, idler_um)
        sec_kp.append(float(kp))
        sec_ks.append(np.broadcast_to(ks, signal_nm.shape))
        sec_ki.append(np.broadcast_to(ki, signal_nm.shape))
        sec_len.append(lengths[name])
    return dict(
        k_p=float(k_p),
        k_s=np.ascontiguousarray(k_s, dtype=float),
        k_i=np.ascontiguousarray(k_i, dtype=float),
        idler_um=idler_um,
        c0=c0,
        sec_kp=np.array(sec_kp),
        sec_ks=np.ascontiguousarray(sec_ks, dtype=float),
        sec_ki=np.ascontiguousarray(sec_ki, dtype=float),
        sec_len=np.array(sec_len, dtype=float),
    )


def _check_axis(name, axis):
    axis = np.ascontiguousarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 1:
        raise ConfigError(f"{name} grid must be a non-empty 1-D array")
    if axis.size > 1 and not np.all(np.diff(axis) > 0):
        raise ConfigError(f"{name} grid must be strictly increasing")
    return axis


def _run_kernel(geometry, signal_nm, theta_deg, tau, modulated, backend):
    signal_nm = _check_axis("signal wavelength", signal_nm)
    theta_deg = _check_axis("emission angle", theta_deg)
    k = _kernel_inputs(geometry, signal_nm)
    if tau is None:
        tau = np.zeros_like(signal_nm)
    out = np.empty((signal_nm.size, theta_deg.size))
    err = kernels.interference_map(
        np.ascontiguousarray(np.radians(theta_deg)),
        k["k_s"],
        k["k_i"],
        k["k_p"],
        geometry.crystal.length_mm * 1e3,
        k["sec_kp"],
        k["sec_ks"],
        k["sec_ki"],
        k["sec_len"],
        k["c0"],
        np.ascontiguousarray(tau, dtype=float),
        out,
        modulated,
        backend=backend,
    )
    if err:
        idx = -err - 1
        where = "crystal (idler)" if idx == len(SECTIONS) else repr(geometry.medium(SECTIONS[idx]).label)
        raise EvanescentError(f"transverse wavenumber exceeds a wavevector in medium {where}")
    return signal_nm, theta_deg, out, k


def build_map(geometry: GeometryConfig, sample, signal_nm, theta_deg, backend=None) -> InterferenceMap:
    """Signal intensity over (signal wavelength, emission angle) with the sample in the idler arm.

    ``sample`` is a SampleTransmissivity or an AbsorbanceSample (converted at L_m).
    """
    sample = sample.for_path(geometry.L_m_um)
    signal_nm = _check_axis("signal wavelength", signal_nm)
    idler_um = idler_wavelength(geometry.pump.wavelength_nm, signal_nm)
    tau = sample.at(idler_um)
    ls, th, out, _ = _run_kernel(geometry, signal_nm, theta_deg, tau, True, backend)
    return InterferenceMap(ls, th, out, {"kind": "double_pass"})


def single_pass_map(geometry: GeometryConfig, signal_nm, theta_deg, backend=None) -> InterferenceMap:
    """Unmodulated C0 sinc^2(delta/2) map."""
    ls, th, out, _ = _run_kernel(geometry, signal_nm, theta_deg, None, False, backend)
    return InterferenceMap(ls, th, out, {"kind": "single_pass"})


def phase_map(geometry: GeometryConfig, signal_nm, theta_deg):
    """cos(delta + delta_s) over the grid, for fringe-orientation plots."""
    ls = np.asarray(signal_nm, dtype=float)[:, None]
    th = np.asarray(theta_deg, dtype=float)[None, :]
    return np.cos(total_phase(geometry, ls, th))


def integrate_angles(m: InterferenceMap) -> FringeSpectrum:
    """Trapezoidal integral over the emission angle (degrees) at each wavelength."""
    if m.theta_deg.size < 2:
        vals = m.intensity[:, 0].copy() * 0.0
    else:
        vals = trapezoid(m.intensity, x=m.theta_deg, axis=1)
    return FringeSpectrum(m.signal_nm.copy(), vals, dict(m.metadata))


# ------------------------------------------------------------ visibility


def local_extrema(values):
    """Indices and types (+1 max, -1 min) of interior local extrema.

    Plateaus are collapsed and reported at their first sample.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    d = np.sign(np.diff(v))
    idx = np.nonzero(d)[0]
    if idx.size < 2:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    s = d[idx]
    change = np.nonzero(s[1:] != s[:-1])[0]
    # the extremum sits after the last step of the previous run
    pos = idx[change] + 1
    kinds = np.where(s[change] > 0, 1, -1)
    return pos, kinds


def extract_visibility(spectrum: FringeSpectrum, smoothing=0) -> VisibilityCurve:
    """Visibility from each adjacent peak-dip pair of the fringe spectrum.

    V = (I_max - I_min) / (I_max + I_min) is assigned to the midpoint
    wavelength; the half-width is half the peak-dip separation.
    ``smoothing`` is an optional moving-average width in samples (0 = off).
    """
    lam = np.asarray(spectrum.signal_nm, dtype=float)
    I = np.asarray(spectrum.intensity, dtype=float)
    if smoothing and smoothing > 1:
        w = int(smoothing)
        I = np.convolve(I, np.ones(w) / w, mode="same")
    pos, kinds = local_extrema(I)
    if pos.size < 2 or not (np.any(kinds > 0) and np.any(kinds < 0)):
        raise NoFringeError("fringe spectrum has no interior peak-dip pair; visibility cannot be computed")
    points = []
    for a, b in zip(pos[:-1], pos[1:]):
        hi, lo = (I[a], I[b]) if I[a] >= I[b] else (I[b], I[a])
        denom = hi + lo
        V = (hi - lo) / denom if denom > 0 else 0.0
        points.append(VisibilityPoint(0.5 * (lam[a] + lam[b]), float(min(max(V, 0.0), 1.0)), 0.5 * abs(lam[b] - lam[a])))
    return VisibilityCurve(tuple(points), {"smoothing": int(smoothing or 0)})


def weighted_visibility(curve: VisibilityCurve, window_A, window_B) -> BetaResult:
    """beta = V_A (V_A - V_B) with V_A, V_B the mean visibilities inside each window."""
    V = curve.visibility
    means = []
    for name, w in (("A", window_A), ("B", window_B)):
        m = curve.in_window(w)
        if not np.any(m):
            raise WindowError(f"visibility window {name} [{min(w):.3f}, {max(w):.3f}] nm contains no points")
        means.append((float(np.mean(V[m])), int(m.sum())))
    (VA, nA), (VB, nB) = means
    return BetaResult(VA * (VA - VB), VA, VB, tuple(sorted(window_A)), tuple(sorted(window_B)), nA, nB)


def idler_window_to_signal(window_um, pump_nm):
    """Map an idler wavelength window (um) to the signal window (nm), ascending."""
    lo, hi = (idler_to_signal_nm(w, pump_nm) for w in window_um)
    return (min(lo, hi), max(lo, hi))


def idler_to_signal_nm(idler_um, pump_nm):
    idler_nm = idler_um * 1e3
    return pump_nm * idler_nm / (idler_nm - pump_nm)


def simulate(geometry, sample, signal_nm, theta_deg, smoothing=0, backend=None):
    """build_map -> integrate_angles -> extract_visibility. Returns (map, spectrum, curve)."""
    m = build_map(geometry, sample, signal_nm, theta_deg, backend=backend)
    fs = integrate_angles(m)
    return m, fs, extract_visibility(fs, smoothing=smoothing)


def default_grid():
    return np.linspace(732.0, 743.0, 2001), np.linspace(-1.0, 1.0, 401)


__all__ = [
    "AbsorbanceSample",
    "BetaResult",
    "FringeSpectrum",
    "GeometryConfig",
    "InterferenceMap",
    "SampleTransmissivity",
    "VisibilityCurve",
    "VisibilityPoint",
    "build_map",
    "double_pass_intensity",
    "extract_visibility",
    "integrate_angles",
    "null_gap_predictor",
    "sectional_mismatch",
    "single_pass_map",
    "total_phase",
    "total_phase_quadratic",
    "total_sample_phase",
    "weighted_visibility",
]


@dataclass(frozen=True)
class Comparison:
    idler_um: np.ndarray
    signal_nm: np.ndarray
    visibility: np.ndarray
    tau: np.ndarray

    @property
    def deviation(self):
        return self.visibility - self.tau

    def stats(self):
        d = np.abs(self.deviation)
        return {
            "n_points": int(d.size),
            "mean_abs_deviation": float(d.mean()),
            "max_abs_deviation": float(d.max()),
            "rms_deviation": float(np.sqrt(np.mean(d * d))),
        }


def compare_visibility(curve: VisibilityCurve, tau: Spectrum, pump_nm, idler_window_um=None) -> Comparison:
    """Pair each visibility midpoint with tau interpolated at its idler wavelength.

    Points outside the tau axis (or outside ``idler_window_um``) are dropped;
    no overlap at all is a coverage error.
    """
    t = SampleTransmissivity.from_spectrum(tau, pump_nm).spectrum
    lam = curve.signal_nm
    if lam.size == 0:
        raise CoverageError("visibility curve is empty")
    idler = idler_wavelength(pump_nm, lam)
    keep = (idler >= t.axis[0]) & (idler <= t.axis[-1])
    if idler_window_um is not None:
        lo, hi = sorted(idler_window_um)
        keep &= (idler >= lo) & (idler <= hi)
    if not np.any(keep):
        raise CoverageError(
            f"visibility idler range [{idler.min():.4g}, {idler.max():.4g}] um does not overlap "
            f"transmissivity axis [{t.axis[0]:.4g}, {t.axis[-1]:.4g}] um"
            + ("" if idler_window_um is None else f" within window {list(idler_window_um)}")
        )
    order = np.argsort(idler[keep])
    idl = idler[keep][order]
    return Comparison(idl, lam[keep][order], curve.visibility[keep][order], np.interp(idl, t.axis, t.values))

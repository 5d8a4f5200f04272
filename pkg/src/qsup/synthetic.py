"""Synthetic absorbance spectra used by the tests, examples and shipped data.

None of these are measurements. The Amide I mixtures take their band
positions and area ratios from the published secondary-structure table;
widths, absolute scale and the Amide II band are invented so the spectra look
like an ATR-FTIR protein spectrum in PBS after solvent subtraction.
"""

from __future__ import annotations

import numpy as np

from .spectra import Spectrum
from .structfit import SQRT_2PI, gaussian

# (centre cm-1, area percent, sigma cm-1)
REFERENCE_MIXTURES = {
    "bsa_24C": ((1627.0, 8.6, 9.0), (1655.0, 78.7, 10.0), (1683.0, 12.7, 8.0)),
    "bsa_68C": ((1626.0, 26.4, 9.0), (1655.0, 64.5, 10.0), (1680.0, 9.1, 8.0)),
    "ntprobnp_24C": ((1638.0, 81.9, 10.0), (1662.0, 0.6, 8.0), (1687.0, 17.5, 9.0)),
}

DEFAULT_AXIS = np.arange(1400.0, 1800.0 + 0.5, 1.0)


def mixture(name, axis=None, amide_i_area=0.30, amide_ii=True, noise=0.0, seed=None):
    """Absorbance spectrum for one of the reference secondary-structure mixtures.

    ``amide_i_area`` is the summed Amide I area in absorbance*cm-1 (0.30 puts the
    band maximum near 0.012). ``noise`` is the standard deviation of additive
    Gaussian noise as a fraction of the Amide I maximum.
    """
    axis = DEFAULT_AXIS if axis is None else np.asarray(axis, dtype=float)
    y = np.zeros_like(axis)
    for centre, pct, sigma in REFERENCE_MIXTURES[name]:
        amp = amide_i_area * pct / 100.0 / (sigma * SQRT_2PI)
        y += gaussian(axis, amp, centre, sigma)
    peak = float(y.max())
    if amide_ii:
        y += gaussian(axis, 0.6 * peak, 1545.0, 12.0)
    if noise:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, noise * peak, axis.shape)
    meta = {"synthetic": True, "mixture": name, "noise_fraction": noise}
    return Spectrum(axis, y, "cm-1", "absorbance", meta)


def expected_percentages(name):
    return [pct for _, pct, _ in REFERENCE_MIXTURES[name]]


def single_band(centre=1650.0, sigma=40.0, peak=0.0126, axis=None):
    """One broad Gaussian absorption band; used for the sample-path sweep."""
    axis = DEFAULT_AXIS if axis is None else np.asarray(axis, dtype=float)
    meta = {"synthetic": True, "band_centre_cm1": centre, "band_sigma_cm1": sigma}
    return Spectrum(axis, gaussian(axis, peak, centre, sigma), "cm-1", "absorbance", meta)


def write_shipped(out_dir=None):
    """Regenerate the synthetic CSV files shipped in the package data directory."""
    from pathlib import Path

    from .spectra import write_spectrum

    out = Path(out_dir) if out_dir is not None else Path(__file__).parent / "data"
    paths = [write_spectrum(mixture(name), out / f"synthetic_{name}_absorbance.csv") for name in REFERENCE_MIXTURES]
    paths.append(write_spectrum(single_band(), out / "synthetic_single_band_absorbance.csv"))
    return paths


if __name__ == "__main__":
    for p in write_shipped():
        print(p)

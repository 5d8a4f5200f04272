"""Pure-numpy implementation of the interference-map kernel.

Mirrors ``_kernels.pyx``; used when the compiled extension is unavailable or
``QSUP_PURE_PYTHON=1`` is set.
"""

import numpy as np

SINC_SERIES_CUTOFF = 1e-8


def interference_map(theta_rad, k_s, k_i, k_p, crystal_um, sec_kp, sec_ks, sec_ki, sec_len_um, c0, tau, out, modulated):
    """Fill ``out[nl, nt]`` with C0 sinc^2(d/2) [1 + tau cos(d + ds)].

    Returns 0 on success or ``-(1 + s)`` when the transverse wavenumber is
    evanescent in section ``s`` (``s == nsec`` denotes the crystal idler).
    """
    sin_t = np.sin(theta_rad)
    q2 = (k_s[:, None] * sin_t[None, :]) ** 2
    ks2 = (k_s * k_s)[:, None]
    ki2 = (k_i * k_i)[:, None]
    nsec = len(sec_len_um)
    if np.any(q2 > ki2):
        return -(1 + nsec)
    delta = (k_p - np.sqrt(ks2 - q2) - np.sqrt(ki2 - q2)) * crystal_um
    x = delta / 2.0
    small = np.abs(x) < SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    s = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    single = c0[:, None] * (s * s)
    if not modulated:
        out[...] = single
        return 0
    phase = delta.copy()
    for m in range(nsec):
        ks_m = sec_ks[m][:, None]
        ki_m = sec_ki[m][:, None]
        if np.any(q2 > ks_m * ks_m) or np.any(q2 > ki_m * ki_m):
            return -(1 + m)
        phase += (sec_kp[m] - np.sqrt(ks_m * ks_m - q2) - np.sqrt(ki_m * ki_m - q2)) * sec_len_um[m]
    out[...] = single * (1.0 + tau[:, None] * np.cos(phase))
    return 0

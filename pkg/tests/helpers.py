"""Shared oracle computations for the test suite.

These deliberately avoid the library's own analysis paths: band energies
come from a single full-signal DFT with Parseval-consistent one-sided
scaling, so tests compare the implementation against independent math.
"""

from __future__ import annotations

import numpy as np


def dft_power_spectrum(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power per rfft bin, scaled so the sum equals sum(x**2)."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    power = np.abs(np.fft.rfft(x)) ** 2
    if n % 2 == 0:
        power[1:-1] *= 2.0
    else:
        power[1:] *= 2.0
    power /= n
    freqs = np.fft.rfftfreq(n, d=1.0)
    return freqs, power


def dft_band_energies(samples: np.ndarray, n_bands: int) -> np.ndarray:
    """Total power inside each of n_bands equal splits of the rfft bins."""
    _, power = dft_power_spectrum(samples)
    n_bins = power.size
    return np.array(
        [
            power[(k * n_bins) // n_bands : ((k + 1) * n_bins) // n_bands].sum()
            for k in range(n_bands)
        ]
    )


def energy_in_hz_range(samples: np.ndarray, sample_rate_hz: int, lo_hz: float, hi_hz: float) -> float:
    """Total power of the DFT bins whose frequency lies in [lo_hz, hi_hz]."""
    x = np.asarray(samples, dtype=np.float64)
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sample_rate_hz)
    _, power = dft_power_spectrum(x)
    sel = (freqs >= lo_hz) & (freqs <= hi_hz)
    return float(power[sel].sum())


def total_energy(samples: np.ndarray) -> float:
    x = np.asarray(samples, dtype=np.float64)
    return float(np.sum(x * x))


def snr_db(reference: np.ndarray, actual: np.ndarray) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    err = np.asarray(actual, dtype=np.float64) - ref
    err_energy = float(np.sum(err * err))
    if err_energy == 0.0:
        return np.inf
    return 10.0 * np.log10(float(np.sum(ref * ref)) / err_energy)

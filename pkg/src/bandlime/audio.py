"""Waveform I/O and deterministic synthesis of test signals.

Clips are mono float32 in [-1, 1]. WAV support covers PCM16 and IEEE
float32; anything else is rejected. No resampling happens anywhere: band
semantics downstream are always relative to the clip's own Nyquist.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

PCM16_FULL_SCALE = 32768.0
MIN_SAMPLE_RATE_HZ = 8000


class UnsupportedWavError(ValueError):
    """WAV container uses a codec other than PCM16 or IEEE float32."""


class EmptyAudioError(ValueError):
    """Audio decoded or constructed with zero samples."""


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform, immutable after construction.

    samples: float32 amplitudes, at least one, all finite.
    sample_rate_hz: at least 8000 so a band split of [0, Nyquist] is
    meaningful.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise ValueError("samples must be a 1-D sequence")
        if samples.size < 1:
            raise EmptyAudioError("samples must not be empty")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must all be finite")
        if int(self.sample_rate_hz) < MIN_SAMPLE_RATE_HZ:
            raise ValueError(
                f"sample_rate_hz must be >= {MIN_SAMPLE_RATE_HZ}, "
                f"got {self.sample_rate_hz}"
            )
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    def energy(self) -> float:
        """Total energy, sum of squared samples."""
        return float(np.sum(self.samples.astype(np.float64) ** 2))


def read_wav(path: str | Path) -> AudioClip:
    """Read a RIFF/WAVE file into an AudioClip.

    Multi-channel input is downmixed by arithmetic mean. PCM16 samples are
    normalized by 32768; float32 samples are taken as-is. Sample rate is
    preserved, never resampled.

    Raises FileNotFoundError for a missing file, UnsupportedWavError for a
    codec other than PCM16 / IEEE float32, EmptyAudioError for a file with
    no samples.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such audio file: {path}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # scipy warns on benign extra chunks
        try:
            rate, data = wavfile.read(str(path))
        except ValueError as exc:
            raise UnsupportedWavError(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        scale = 1.0 / PCM16_FULL_SCALE
    elif data.dtype == np.float32:
        scale = 1.0
    else:
        raise UnsupportedWavError(
            f"{path}: unsupported sample format {data.dtype}; "
            "only PCM16 and IEEE float32 are accepted"
        )
    if data.size == 0:
        raise EmptyAudioError(f"{path}: file contains no audio samples")
    mono = data.astype(np.float64)
    if mono.ndim == 2:
        mono = mono.mean(axis=1)
    return AudioClip(samples=(mono * scale).astype(np.float32), sample_rate_hz=int(rate))


def write_wav(clip: AudioClip, path: str | Path, encoding: str = "float32") -> None:
    """Write a clip as PCM16 or IEEE float32 WAV.

    float32 round-trips bit-exactly through read_wav; PCM16 round-trips
    within one quantization step (1/32768) per sample.
    """
    if encoding == "pcm16":
        q = np.round(clip.samples.astype(np.float64) * PCM16_FULL_SCALE)
        payload = np.clip(q, -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        payload = clip.samples
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")
    wavfile.write(str(path), clip.sample_rate_hz, payload)


def synth_tone(
    freq_hz: float,
    duration_s: float,
    sample_rate_hz: int,
    amplitude: float = 0.9,
) -> AudioClip:
    """Pure sine: amplitude * sin(2*pi*freq_hz*t/sample_rate_hz)."""
    if not 0.0 < freq_hz < sample_rate_hz / 2:
        raise ValueError(
            f"freq_hz must lie strictly between 0 and Nyquist "
            f"({sample_rate_hz / 2} Hz), got {freq_hz}"
        )
    if not 0.0 < amplitude <= 1.0:
        raise ValueError(f"amplitude must be in (0, 1], got {amplitude}")
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise ValueError(f"duration {duration_s}s yields no samples")
    t = np.arange(n, dtype=np.float64)
    x = amplitude * np.sin(2.0 * np.pi * freq_hz * t / sample_rate_hz)
    return AudioClip(samples=x.astype(np.float32), sample_rate_hz=sample_rate_hz)


def synth_band_noise(
    lo_hz: float,
    hi_hz: float,
    duration_s: float,
    sample_rate_hz: int,
    seed: int,
) -> AudioClip:
    """Band-limited Gaussian noise, deterministic for a fixed seed.

    White noise is filtered by zeroing DFT bins outside [lo_hz, hi_hz],
    then peak-normalized to 0.9.
    """
    nyquist = sample_rate_hz / 2.0
    if not (0.0 <= lo_hz < hi_hz <= nyquist):
        raise ValueError(
            f"need 0 <= lo_hz < hi_hz <= Nyquist ({nyquist} Hz), "
            f"got [{lo_hz}, {hi_hz}]"
        )
    n = int(round(duration_s * sample_rate_hz))
    if n < 2:
        raise ValueError(f"duration {duration_s}s yields fewer than 2 samples")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate_hz)
    keep = (freqs >= lo_hz) & (freqs <= hi_hz)
    spectrum[~keep] = 0.0
    shaped = np.fft.irfft(spectrum, n=n)
    peak = np.max(np.abs(shaped))
    if peak == 0.0:
        raise ValueError(f"band [{lo_hz}, {hi_hz}] Hz contains no DFT bins for n={n}")
    shaped *= 0.9 / peak
    return AudioClip(samples=shaped.astype(np.float32), sample_rate_hz=sample_rate_hz)


def synth_profile_noise(
    band_gains: "np.ndarray | list[float]",
    duration_s: float,
    sample_rate_hz: int,
    seed: int,
) -> AudioClip:
    """Gaussian noise spectrally shaped by per-band gains.

    The DFT bin axis is split into len(band_gains) equal frequency ranges
    and the bins of range k are scaled by band_gains[k]; the result is
    peak-normalized to 0.9. Deterministic for a fixed seed.
    """
    gains = np.asarray(band_gains, dtype=np.float64)
    if gains.ndim != 1 or gains.size < 1:
        raise ValueError("band_gains must be a non-empty 1-D sequence")
    if np.any(gains < 0) or not np.any(gains > 0):
        raise ValueError("band_gains must be non-negative with at least one positive")
    n = int(round(duration_s * sample_rate_hz))
    if n < 2:
        raise ValueError(f"duration {duration_s}s yields fewer than 2 samples")
    rng = np.random.default_rng(seed)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    n_bins = spectrum.size
    d = gains.size
    for k, gain in enumerate(gains):
        lo, hi = (k * n_bins) // d, ((k + 1) * n_bins) // d
        spectrum[lo:hi] *= gain
    shaped = np.fft.irfft(spectrum, n=n)
    peak = np.max(np.abs(shaped))
    if peak == 0.0:
        raise ValueError("band_gains zero out every DFT bin")
    shaped *= 0.9 / peak
    return AudioClip(samples=shaped.astype(np.float32), sample_rate_hz=sample_rate_hz)

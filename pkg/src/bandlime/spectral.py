"""STFT analysis/synthesis and frequency-band masking.

A waveform is analyzed into hann-windowed frames, the one-sided bin axis is
partitioned into equal-width bands, selected bands are zeroed, and the
result is resynthesized by weighted overlap-add with window-square
normalization. With an all-ones mask the round trip reproduces the input
to float32 precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bandlime.audio import AudioClip

DEFAULT_WINDOW_LEN = 1024
DEFAULT_HOP_LEN = 256

# Window-square coverage below this is treated as "no frame reached here".
_COVERAGE_EPS = 1e-12


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters: hann window, hop dividing the window length."""

    window_len: int = DEFAULT_WINDOW_LEN
    hop_len: int = DEFAULT_HOP_LEN
    window: str = "hann"

    def __post_init__(self) -> None:
        wl, hop = self.window_len, self.hop_len
        if wl < 4 or (wl & (wl - 1)) != 0:
            raise ValueError(f"window_len must be a power of two >= 4, got {wl}")
        if hop < 1 or wl % hop != 0 or wl // hop < 2:
            raise ValueError(
                f"hop_len must divide window_len with at least 2x overlap, "
                f"got window_len={wl} hop_len={hop}"
            )
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")

    @property
    def n_bins(self) -> int:
        return self.window_len // 2 + 1

    def window_values(self) -> np.ndarray:
        # periodic hann, exact zeros allowed: the synthesis normalizer
        # accumulates squared windows so coverage stays positive everywhere
        n = np.arange(self.window_len)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.window_len)


@dataclass(frozen=True)
class Spectrogram:
    """Complex one-sided STFT frames plus what is needed to invert them."""

    frames: np.ndarray  # (n_frames, n_bins) complex
    params: StftParams
    sample_rate_hz: int
    original_len: int

    def __post_init__(self) -> None:
        if self.frames.ndim != 2 or self.frames.shape[1] != self.params.n_bins:
            raise ValueError(
                f"frames must be (n_frames, {self.params.n_bins}), "
                f"got {self.frames.shape}"
            )
        if self.original_len < 1:
            raise ValueError("original_len must be positive")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.frames.shape[1])

    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)


@dataclass(frozen=True)
class BandLayout:
    """Partition of the bin axis [0, n_bins) into equal-width bands.

    Band k covers bins [floor(k*n_bins/d), floor((k+1)*n_bins/d)), so the
    bands are disjoint, exhaustive, and differ in width by at most one bin.
    """

    n_components: int
    bin_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        d = self.n_components
        if d < 1 or len(self.bin_ranges) != d:
            raise ValueError("bin_ranges must hold one interval per component")
        prev_hi = 0
        for lo, hi in self.bin_ranges:
            if lo != prev_hi or hi <= lo:
                raise ValueError(f"bin_ranges not a partition: {self.bin_ranges}")
            prev_hi = hi

    @classmethod
    def for_bins(cls, n_bins: int, n_components: int) -> "BandLayout":
        if n_components < 1 or n_components > n_bins:
            raise ValueError(
                f"need 1 <= n_components <= n_bins, got {n_components} vs {n_bins}"
            )
        edges = [(k * n_bins) // n_components for k in range(n_components + 1)]
        ranges = tuple((edges[k], edges[k + 1]) for k in range(n_components))
        return cls(n_components=n_components, bin_ranges=ranges)

    @property
    def n_bins(self) -> int:
        return self.bin_ranges[-1][1]


def _frame_offsets(params: StftParams, padded_len: int) -> int:
    """Number of hop-spaced frames covering a padded signal."""
    return (padded_len - params.window_len) // params.hop_len + 1


def _pad_layout(params: StftParams, original_len: int) -> tuple[int, int, int]:
    """(pad_left, n_frames, padded_len) giving full window-square coverage
    of every original sample."""
    wl, hop = params.window_len, params.hop_len
    pad_left = wl - hop
    n_frames = -(-(pad_left + original_len) // hop)  # ceil div
    padded_len = (n_frames - 1) * hop + wl
    return pad_left, n_frames, padded_len


def stft(clip: AudioClip, params: StftParams | None = None) -> Spectrogram:
    """Hann-windowed, hop-spaced, one-sided STFT.

    Clips shorter than one window are zero-padded up to window_len; the
    true input length is recorded so istft can restore it exactly.
    """
    params = params or StftParams()
    x = clip.samples.astype(np.float64)
    original_len = x.size
    if x.size < params.window_len:
        x = np.pad(x, (0, params.window_len - x.size))
    pad_left, n_frames, padded_len = _pad_layout(params, x.size)
    padded = np.pad(x, (pad_left, padded_len - pad_left - x.size))
    frames = np.lib.stride_tricks.sliding_window_view(padded, params.window_len)
    frames = frames[:: params.hop_len][:n_frames]
    windowed = frames * params.window_values()[None, :]
    return Spectrogram(
        frames=np.fft.rfft(windowed, axis=1),
        params=params,
        sample_rate_hz=clip.sample_rate_hz,
        original_len=original_len,
    )


def istft(spec: Spectrogram) -> AudioClip:
    """Weighted overlap-add inversion, truncated to the original length.

    Raises RuntimeError if some requested output sample has window-square
    coverage below 1e-12; the padding scheme used by stft prevents that
    for any spectrogram it produced.
    """
    params = spec.params
    wl, hop = params.window_len, params.hop_len
    win = params.window_values()
    analysis_len = max(spec.original_len, wl)
    pad_left, n_frames, padded_len = _pad_layout(params, analysis_len)
    if spec.n_frames != n_frames:
        # foreign or truncated frame matrix: honor it, coverage check below
        padded_len = (spec.n_frames - 1) * hop + wl
    segments = np.fft.irfft(spec.frames, n=wl, axis=1) * win[None, :]
    out = np.zeros(padded_len, dtype=np.float64)
    norm = np.zeros(padded_len, dtype=np.float64)
    win_sq = win * win
    for i in range(spec.n_frames):
        start = i * hop
        out[start : start + wl] += segments[i]
        norm[start : start + wl] += win_sq
    lo = pad_left
    hi = pad_left + spec.original_len
    if hi > padded_len or np.any(norm[lo:hi] < _COVERAGE_EPS):
        raise RuntimeError(
            "degenerate overlap-add normalization: some output sample is "
            "covered by no analysis window"
        )
    y = out[lo:hi] / norm[lo:hi]
    return AudioClip(samples=y.astype(np.float32), sample_rate_hz=spec.sample_rate_hz)


def apply_mask(spec: Spectrogram, mask: np.ndarray, layout: BandLayout) -> Spectrogram:
    """Zero every coefficient of the bands whose mask entry is 0.

    Bands with mask entry 1 are left untouched, so an all-ones mask returns
    a bit-identical spectrogram.
    """
    mask = np.asarray(mask)
    if mask.shape != (layout.n_components,):
        raise ValueError(
            f"mask length {mask.shape} does not match layout "
            f"({layout.n_components} components)"
        )
    if not np.all((mask == 0) | (mask == 1)):
        raise ValueError("mask entries must be 0 or 1")
    if layout.n_bins != spec.n_bins:
        raise ValueError(
            f"layout covers {layout.n_bins} bins but spectrogram has {spec.n_bins}"
        )
    frames = spec.frames.copy()
    for bit, (lo, hi) in zip(mask, layout.bin_ranges):
        if bit == 0:
            frames[:, lo:hi] = 0.0
    return Spectrogram(
        frames=frames,
        params=spec.params,
        sample_rate_hz=spec.sample_rate_hz,
        original_len=spec.original_len,
    )


def perturb_audio(
    clip: AudioClip,
    mask: np.ndarray,
    params: StftParams | None = None,
    layout: BandLayout | None = None,
) -> AudioClip:
    """Analyze, zero the masked bands, resynthesize. Output length equals
    the input length."""
    params = params or StftParams()
    spec = stft(clip, params)
    if layout is None:
        layout = BandLayout.for_bins(spec.n_bins, len(np.asarray(mask)))
    return istft(apply_mask(spec, mask, layout))

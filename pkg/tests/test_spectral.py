import numpy as np
import pytest

from bandlime import (
    AudioClip,
    BandLayout,
    Spectrogram,
    StftParams,
    apply_mask,
    istft,
    perturb_audio,
    stft,
    synth_band_noise,
    synth_tone,
)
from helpers import dft_band_energies, snr_db, total_energy


class TestStftParams:
    def test_defaults(self):
        p = StftParams()
        assert (p.window_len, p.hop_len) == (1024, 256)
        assert p.n_bins == 513

    def test_rejects_non_power_of_two_window(self):
        with pytest.raises(ValueError):
            StftParams(window_len=1000, hop_len=250)

    def test_rejects_hop_not_dividing_window(self):
        with pytest.raises(ValueError):
            StftParams(window_len=1024, hop_len=300)

    def test_rejects_insufficient_overlap(self):
        with pytest.raises(ValueError):
            StftParams(window_len=1024, hop_len=1024)

    def test_rejects_unknown_window(self):
        with pytest.raises(ValueError):
            StftParams(window="hamming")

    def test_window_values_are_periodic_hann(self):
        p = StftParams(window_len=8, hop_len=2)
        n = np.arange(8)
        expected = 0.5 - 0.5 * np.cos(2 * np.pi * n / 8)
        np.testing.assert_allclose(p.window_values(), expected, atol=1e-15)


class TestBandLayout:
    def test_partition_covers_all_bins(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n_bins = int(rng.integers(8, 600))
            d = int(rng.integers(1, min(n_bins, 16) + 1))
            layout = BandLayout.for_bins(n_bins, d)
            covered = []
            for lo, hi in layout.bin_ranges:
                covered.extend(range(lo, hi))
            assert covered == list(range(n_bins))

    def test_band_sizes_differ_by_at_most_one(self):
        layout = BandLayout.for_bins(513, 8)
        sizes = [hi - lo for lo, hi in layout.bin_ranges]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == 513

    def test_floor_rule_edges(self):
        layout = BandLayout.for_bins(513, 8)
        expected = [((k * 513) // 8, ((k + 1) * 513) // 8) for k in range(8)]
        assert list(layout.bin_ranges) == expected

    def test_rejects_more_components_than_bins(self):
        with pytest.raises(ValueError):
            BandLayout.for_bins(4, 5)

    def test_rejects_non_partition(self):
        with pytest.raises(ValueError):
            BandLayout(n_components=2, bin_ranges=((0, 3), (4, 8)))


class TestStft:
    def test_zero_clip_gives_zero_frames(self):
        clip = AudioClip(samples=np.zeros(5000, dtype=np.float32), sample_rate_hz=16000)
        spec = stft(clip)
        assert spec.frames.shape[1] == 513
        assert np.all(spec.frames == 0)

    def test_bin_center_tone_peaks_at_its_bin(self):
        # frequency k*sr/window_len sits exactly on DFT bin k of each frame
        k = 10
        clip = synth_tone(k * 16000 / 1024, 1.0, 16000)
        spec = stft(clip)
        mean_mag = np.abs(spec.frames).mean(axis=0)
        assert int(np.argmax(mean_mag)) == k

    def test_window_length_clip_has_frames(self):
        clip = AudioClip(samples=np.ones(1024, dtype=np.float32), sample_rate_hz=16000)
        spec = stft(clip)
        assert spec.n_frames >= 1
        assert spec.original_len == 1024

    def test_short_clip_is_padded_and_length_restored(self):
        clip = AudioClip(
            samples=np.full(100, 0.25, dtype=np.float32), sample_rate_hz=16000
        )
        back = istft(stft(clip))
        assert len(back) == 100
        assert np.max(np.abs(back.samples - clip.samples)) <= 1e-6


class TestIstft:
    def test_round_trip_error_below_1e6(self):
        rng = np.random.default_rng(3)
        for n in (1024, 4096, 5000, 16000):
            samples = rng.uniform(-1, 1, size=n).astype(np.float32)
            clip = AudioClip(samples=samples, sample_rate_hz=16000)
            back = istft(stft(clip))
            assert len(back) == n
            assert np.max(np.abs(back.samples.astype(np.float64) - samples)) <= 1e-6

    def test_zero_spectrogram_gives_zero_clip(self):
        clip = synth_tone(440.0, 0.3, 16000)
        spec = stft(clip)
        zeroed = Spectrogram(
            frames=np.zeros_like(spec.frames),
            params=spec.params,
            sample_rate_hz=spec.sample_rate_hz,
            original_len=spec.original_len,
        )
        back = istft(zeroed)
        assert len(back) == len(clip)
        assert np.all(back.samples == 0.0)

    def test_round_trip_snr_on_noise(self):
        for seed in range(3):
            clip = synth_band_noise(0, 8000, 0.8, 16000, seed=seed)
            back = istft(stft(clip))
            assert snr_db(clip.samples, back.samples) >= 60.0

    def test_uncovered_samples_raise(self):
        clip = synth_tone(440.0, 0.1, 16000)
        spec = stft(clip)
        impossible = Spectrogram(
            frames=spec.frames,
            params=spec.params,
            sample_rate_hz=spec.sample_rate_hz,
            original_len=10 * spec.original_len,
        )
        with pytest.raises(RuntimeError):
            istft(impossible)


class TestApplyMask:
    def setup_method(self):
        self.tone = synth_tone(2500.0, 1.0, 16000)
        self.spec = stft(self.tone)
        self.layout = BandLayout.for_bins(self.spec.n_bins, 8)

    def test_all_ones_mask_is_bit_identical(self):
        out = apply_mask(self.spec, np.ones(8, dtype=int), self.layout)
        assert np.array_equal(out.frames, self.spec.frames)

    def test_all_zeros_mask_zeroes_everything(self):
        out = apply_mask(self.spec, np.zeros(8, dtype=int), self.layout)
        assert np.all(out.frames == 0)

    def test_masking_tone_band_attenuates_40db(self):
        mask = np.ones(8, dtype=int)
        mask[2] = 0  # 2.5 kHz falls in the third of eight 1 kHz bands
        rec = istft(apply_mask(self.spec, mask, self.layout))
        ratio = total_energy(self.tone.samples) / max(total_energy(rec.samples), 1e-300)
        assert 10 * np.log10(ratio) >= 40.0

    def test_idempotent(self):
        mask = np.array([1, 0, 1, 1, 0, 1, 0, 1])
        once = apply_mask(self.spec, mask, self.layout)
        twice = apply_mask(once, mask, self.layout)
        assert np.array_equal(once.frames, twice.frames)

    def test_rejects_wrong_mask_length(self):
        with pytest.raises(ValueError):
            apply_mask(self.spec, np.ones(7, dtype=int), self.layout)

    def test_rejects_non_binary_mask(self):
        mask = np.ones(8)
        mask[3] = 0.5
        with pytest.raises(ValueError):
            apply_mask(self.spec, mask, self.layout)

    def test_rejects_mismatched_layout(self):
        wrong = BandLayout.for_bins(257, 8)
        with pytest.raises(ValueError):
            apply_mask(self.spec, np.ones(8, dtype=int), wrong)

    def test_does_not_mutate_input(self):
        before = self.spec.frames.copy()
        apply_mask(self.spec, np.zeros(8, dtype=int), self.layout)
        assert np.array_equal(self.spec.frames, before)


class TestPerturbAudio:
    def test_all_ones_mask_is_identity(self):
        clip = synth_band_noise(0, 8000, 0.5, 16000, seed=1)
        out = perturb_audio(clip, np.ones(8, dtype=int))
        assert len(out) == len(clip)
        assert np.max(np.abs(out.samples - clip.samples)) <= 1e-6

    def test_all_zeros_mask_silences(self):
        clip = synth_band_noise(0, 8000, 0.5, 16000, seed=2)
        out = perturb_audio(clip, np.zeros(8, dtype=int))
        assert total_energy(out.samples) <= 1e-10 * total_energy(clip.samples)

    def test_tone_band_masking_leaves_other_bands(self):
        tone = synth_tone(2500.0, 1.0, 16000)
        noise = synth_band_noise(5000, 6000, 1.0, 16000, seed=7)
        mixed = AudioClip(
            samples=(0.5 * tone.samples + 0.5 * noise.samples).astype(np.float32),
            sample_rate_hz=16000,
        )
        before = dft_band_energies(mixed.samples, 8)
        mask = np.ones(8, dtype=int)
        mask[2] = 0
        after = dft_band_energies(perturb_audio(mixed, mask).samples, 8)
        tone_drop_db = 10 * np.log10(before[2] / max(after[2], 1e-300))
        noise_drop_db = 10 * np.log10(before[5] / after[5])
        assert tone_drop_db >= 40.0
        assert abs(noise_drop_db) < 1.0

    def test_masked_spectrogram_bands_are_exactly_monotone(self):
        clip = synth_band_noise(0, 8000, 0.7, 16000, seed=1)
        spec = stft(clip)
        layout = BandLayout.for_bins(spec.n_bins, 8)
        mask = np.array([1, 1, 0, 1, 0, 1, 1, 0])
        flipped = mask.copy()
        flipped[6] = 0
        a = apply_mask(spec, mask, layout)
        b = apply_mask(spec, flipped, layout)
        for k, (lo, hi) in enumerate(layout.bin_ranges):
            if flipped[k] == 1:
                assert np.array_equal(b.frames[:, lo:hi], a.frames[:, lo:hi])
        lo, hi = layout.bin_ranges[6]
        assert np.all(b.frames[:, lo:hi] == 0)

    def test_reconstruction_band_energies_nearly_monotone(self):
        # Dropping one more band must not push energy into kept bands
        # beyond resynthesis leakage (measured well below 1e-3 of total).
        rng = np.random.default_rng(5)
        for trial in range(10):
            clip = synth_band_noise(0, 8000, 0.7, 16000, seed=trial)
            scale = total_energy(clip.samples)
            mask = rng.integers(0, 2, size=8)
            ones = np.flatnonzero(mask == 1)
            if len(ones) < 2:
                continue
            j = int(rng.choice(ones))
            before = dft_band_energies(perturb_audio(clip, mask).samples, 8)
            flipped = mask.copy()
            flipped[j] = 0
            after = dft_band_energies(perturb_audio(clip, flipped).samples, 8)
            for k in ones:
                if k != j:
                    assert after[k] - before[k] <= 1e-3 * scale

"""Shared builders for test objects."""

from bandlime import Explanation, band_edges_hz


def make_explanation(weights, target_class="angry", **overrides):
    kwargs = dict(
        weights=tuple(float(v) for v in weights),
        intercept=0.0,
        score=1.0,
        target_class=target_class,
        band_edges_hz=band_edges_hz(16000, len(weights)),
        n_samples=100,
        kernel_width=0.25,
        ridge_lambda=1.0,
        seed=0,
        window_len=1024,
        hop_len=256,
        sample_rate_hz=16000,
    )
    kwargs.update(overrides)
    return Explanation(**kwargs)

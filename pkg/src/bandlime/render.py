"""SVG rendering of explanations.

Single mode draws the clip's log-magnitude spectrogram as a grayscale
heatmap with one translucent horizontal stripe per frequency band,
tinted by weight sign, opacity proportional to |weight| relative to the
largest magnitude, and the numeric weight annotated in white. Aggregate
mode draws a bar chart of per-band mean weights with plus/minus one
standard deviation error bars.

All coordinates are emitted with two decimals, so tests can recompute
the expected geometry from the module-level layout constants and compare
exactly at that precision.
"""

from __future__ import annotations

import base64
import io
import re
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image

from bandlime.audio import AudioClip
from bandlime.explainer import Explanation
from bandlime.spectral import BandLayout, StftParams, stft
from bandlime.stats import EmotionAggregate

SVG_WIDTH = 800
SVG_HEIGHT = 480
MARGIN_LEFT = 70.0
MARGIN_RIGHT = 90.0
MARGIN_TOP = 30.0
MARGIN_BOTTOM = 50.0
PLOT_WIDTH = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
PLOT_HEIGHT = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

BAR_FRACTION = 0.6  # bar width as a fraction of one band's x slot
CAP_FRACTION = 0.5  # error-bar cap width as a fraction of bar width
PAD_FRACTION = 0.05  # value-axis headroom on each side

LOG_FLOOR = 1e-10

_HEX_COLOR = re.compile(r"^#[0-9a-fA-F]{6}$")


@dataclass(frozen=True)
class RenderSpec:
    mode: str  # "single" or "aggregate"
    positive_color: str = "#2ca02c"
    negative_color: str = "#d62728"
    annotate_weights: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("single", "aggregate"):
            raise ValueError(f"mode must be single or aggregate, got {self.mode!r}")
        for color in (self.positive_color, self.negative_color):
            if not _HEX_COLOR.match(color):
                raise ValueError(f"color must be 6-digit hex like #2ca02c, got {color!r}")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tag(name: str, self_close: bool = True, **attrs) -> str:
    parts = [f"<{name}"]
    for key, value in attrs.items():
        parts.append(f' {key.replace("_", "-")}="{value}"')
    parts.append("/>" if self_close else ">")
    return "".join(parts)


def _text(x: float, y: float, content: str, **attrs) -> str:
    opening = _tag("text", self_close=False, x=_fmt(x), y=_fmt(y), **attrs)
    return f"{opening}{escape(content)}</text>"


def _svg_document(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" '
        f'font-family="sans-serif">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _heatmap_png_base64(clip: AudioClip, params: StftParams) -> tuple[str, int]:
    """Log-magnitude spectrogram as a grayscale PNG, low bins at the
    bottom row. Returns (base64 payload, n_bins)."""
    spec = stft(clip, params)
    mag = np.log10(spec.magnitude().astype(np.float64) + LOG_FLOOR)
    lo, hi = float(mag.min()), float(mag.max())
    if hi - lo < 1e-12:
        pixels = np.zeros(mag.shape, dtype=np.uint8)
    else:
        pixels = np.round((mag - lo) / (hi - lo) * 255.0).astype(np.uint8)
    image = Image.fromarray(np.flipud(pixels.T), mode="L")
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    encoded = base64.b64encode(buffer.getvalue()).decode("ascii")
    return encoded, spec.n_bins


def band_stripe_edges_hz(
    sample_rate_hz: int, window_len: int, n_components: int
) -> list[tuple[float, float]]:
    """Stripe (lo_hz, hi_hz) per band, from STFT bin-range boundaries.

    Bin b sits at b * nyquist / (n_bins - 1), so stripe edges follow the
    exact bins each band masks rather than the nominal equal split.
    """
    n_bins = window_len // 2 + 1
    layout = BandLayout.for_bins(n_bins, n_components)
    nyquist = sample_rate_hz / 2.0
    step = nyquist / (n_bins - 1)
    # the top band's exclusive end is n_bins; its last real bin is Nyquist
    return [
        (lo * step, min(hi_bin, n_bins - 1) * step) for lo, hi_bin in layout.bin_ranges
    ]


def render_single_svg(
    explanation: Explanation, clip: AudioClip, spec: RenderSpec | None = None
) -> str:
    """Spectrogram heatmap with weight-tinted band stripes.

    Every band gets one stripe; a zero weight renders its stripe at zero
    opacity, so the element count is always the band count.
    """
    spec = spec or RenderSpec(mode="single")
    if spec.mode != "single":
        raise ValueError("render_single_svg requires mode='single'")
    params = StftParams(window_len=explanation.window_len, hop_len=explanation.hop_len)
    png, _ = _heatmap_png_base64(clip, params)
    nyquist = clip.sample_rate_hz / 2.0

    def y_of(freq_hz: float) -> float:
        return MARGIN_TOP + PLOT_HEIGHT * (1.0 - freq_hz / nyquist)

    body = [
        _text(
            MARGIN_LEFT,
            MARGIN_TOP - 10,
            f"target class: {explanation.target_class}",
            font_size="14",
        ),
        _tag(
            "image",
            x=_fmt(MARGIN_LEFT),
            y=_fmt(MARGIN_TOP),
            width=_fmt(PLOT_WIDTH),
            height=_fmt(PLOT_HEIGHT),
            preserveAspectRatio="none",
            href=f"data:image/png;base64,{png}",
        ),
    ]

    weights = np.asarray(explanation.weights, dtype=np.float64)
    max_abs = float(np.max(np.abs(weights)))
    stripes = band_stripe_edges_hz(
        clip.sample_rate_hz, explanation.window_len, explanation.n_components
    )
    for k, (lo_hz, hi_hz) in enumerate(stripes):
        weight = float(weights[k])
        y_top = y_of(hi_hz)
        height = y_of(lo_hz) - y_top
        opacity = abs(weight) / max_abs if max_abs > 0 else 0.0
        color = spec.negative_color if weight < 0 else spec.positive_color
        body.append(
            _tag(
                "rect",
                **{"class": "band-stripe"},
                x=_fmt(MARGIN_LEFT),
                y=_fmt(y_top),
                width=_fmt(PLOT_WIDTH),
                height=_fmt(height),
                fill=color,
                fill_opacity=f"{opacity:.3f}",
            )
        )
        if spec.annotate_weights:
            body.append(
                _text(
                    MARGIN_LEFT + PLOT_WIDTH - 8,
                    y_top + height / 2 + 4,
                    f"{weight:.2f}",
                    **{"class": "weight-label"},
                    text_anchor="end",
                    font_size="13",
                    fill="#ffffff",
                )
            )

    # Frequency ticks at the nominal equal band edges.
    for edge in explanation.band_edges_hz:
        y = y_of(edge)
        body.append(
            _tag(
                "line",
                x1=_fmt(MARGIN_LEFT - 5),
                y1=_fmt(y),
                x2=_fmt(MARGIN_LEFT),
                y2=_fmt(y),
                stroke="#000000",
            )
        )
        body.append(
            _text(
                MARGIN_LEFT - 9,
                y + 4,
                f"{edge / 1000:.1f}k",
                text_anchor="end",
                font_size="11",
            )
        )
    body.append(
        _text(
            MARGIN_LEFT + PLOT_WIDTH / 2,
            SVG_HEIGHT - 14,
            f"time 0 to {len(clip) / clip.sample_rate_hz:.2f} s",
            text_anchor="middle",
            font_size="12",
        )
    )
    body.append(
        _tag(
            "rect",
            x=_fmt(MARGIN_LEFT),
            y=_fmt(MARGIN_TOP),
            width=_fmt(PLOT_WIDTH),
            height=_fmt(PLOT_HEIGHT),
            fill="none",
            stroke="#000000",
        )
    )
    return _svg_document(body)


def aggregate_value_range(agg: EmotionAggregate) -> tuple[float, float]:
    """Padded value-axis range covering zero and every mean +/- std."""
    lo = min(0.0, float(np.min(agg.mean_weights - agg.std_weights)))
    hi = max(0.0, float(np.max(agg.mean_weights + agg.std_weights)))
    if hi - lo < 1e-12:
        lo, hi = -1.0, 1.0
    pad = PAD_FRACTION * (hi - lo)
    return lo - pad, hi + pad


def render_aggregate_svg(agg: EmotionAggregate, spec: RenderSpec | None = None) -> str:
    """Bar chart of mean weights with plus/minus one std error bars."""
    spec = spec or RenderSpec(mode="aggregate")
    if spec.mode != "aggregate":
        raise ValueError("render_aggregate_svg requires mode='aggregate'")
    d = agg.n_components
    lo, hi = aggregate_value_range(agg)

    def y_of(value: float) -> float:
        return MARGIN_TOP + PLOT_HEIGHT * (hi - value) / (hi - lo)

    slot = PLOT_WIDTH / d
    bar_w = slot * BAR_FRACTION
    cap_w = bar_w * CAP_FRACTION
    body = [
        _text(
            MARGIN_LEFT,
            MARGIN_TOP - 10,
            f"emotion: {agg.emotion} (n={agg.n_utterances})",
            font_size="14",
        ),
        _tag(
            "line",
            **{"class": "baseline"},
            x1=_fmt(MARGIN_LEFT),
            y1=_fmt(y_of(0.0)),
            x2=_fmt(MARGIN_LEFT + PLOT_WIDTH),
            y2=_fmt(y_of(0.0)),
            stroke="#888888",
        ),
    ]
    for k in range(d):
        mean = float(agg.mean_weights[k])
        std = float(agg.std_weights[k])
        x_left = MARGIN_LEFT + slot * k + (slot - bar_w) / 2
        x_mid = x_left + bar_w / 2
        y_zero = y_of(0.0)
        y_mean = y_of(mean)
        body.append(
            _tag(
                "rect",
                **{"class": "bar"},
                x=_fmt(x_left),
                y=_fmt(min(y_mean, y_zero)),
                width=_fmt(bar_w),
                height=_fmt(abs(y_mean - y_zero)),
                fill=spec.positive_color if mean >= 0 else spec.negative_color,
            )
        )
        y_hi = y_of(mean + std)
        y_lo = y_of(mean - std)
        body.append(
            _tag(
                "line",
                **{"class": "errorbar"},
                x1=_fmt(x_mid),
                y1=_fmt(y_hi),
                x2=_fmt(x_mid),
                y2=_fmt(y_lo),
                stroke="#000000",
            )
        )
        for y_cap in (y_hi, y_lo):
            body.append(
                _tag(
                    "line",
                    **{"class": "errorbar-cap"},
                    x1=_fmt(x_mid - cap_w / 2),
                    y1=_fmt(y_cap),
                    x2=_fmt(x_mid + cap_w / 2),
                    y2=_fmt(y_cap),
                    stroke="#000000",
                )
            )
        if spec.annotate_weights:
            body.append(
                _text(
                    x_mid,
                    min(y_hi, y_lo) - 6,
                    f"{mean:.2f}",
                    **{"class": "weight-label"},
                    text_anchor="middle",
                    font_size="12",
                )
            )
        body.append(
            _text(
                x_mid,
                SVG_HEIGHT - MARGIN_BOTTOM + 18,
                str(k),
                text_anchor="middle",
                font_size="12",
            )
        )
    body.append(
        _text(
            MARGIN_LEFT + PLOT_WIDTH / 2,
            SVG_HEIGHT - 14,
            "frequency band",
            text_anchor="middle",
            font_size="12",
        )
    )
    body.append(
        _tag(
            "rect",
            x=_fmt(MARGIN_LEFT),
            y=_fmt(MARGIN_TOP),
            width=_fmt(PLOT_WIDTH),
            height=_fmt(PLOT_HEIGHT),
            fill="none",
            stroke="#000000",
        )
    )
    return _svg_document(body)

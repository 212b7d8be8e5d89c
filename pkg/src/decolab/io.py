"""Delimited output, a dependency-free SVG line plot, and config rendering."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from decolab.analytic import IntensityProfile
from decolab.errors import InvalidParameterError
from decolab.model import ExperimentConfig

PATTERN_HEADER = ("x_m", "intensity_norm")
RAW_PATTERN_HEADER = ("x_m", "intensity_per_m")
SERIES_HEADER = ("t_over_taud", "C")

SVG_WIDTH, SVG_HEIGHT = 800, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 80, 20, 20, 60


def fmt(v: float) -> str:
    """17 significant digits: enough for a bit-exact float round trip."""
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# CSV


def _write_rows(header: Sequence[str], rows: Iterable[Sequence[float]], out: TextIO):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def _emit(header, rows, path):
    if path is None or path == "-":
        buf = io.StringIO()
        _write_rows(header, rows, buf)
        return buf.getvalue()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(header, rows, fh)
    return None


def emit_csv(profile: IntensityProfile, path=None) -> Optional[str]:
    """Write a pattern as ``x_m,intensity_norm`` (``x_m,intensity_per_m`` when
    raw). Returns the text instead when ``path`` is None or ``-``."""
    header = PATTERN_HEADER if profile.normalization == "peak-normalized" else RAW_PATTERN_HEADER
    return _emit(header, zip(profile.x, profile.intensity), path)


def emit_series(param: Sequence[float], values: Sequence[Sequence[float]] | Sequence[float], path=None,
                header: Sequence[str] = SERIES_HEADER) -> Optional[str]:
    """Write a parameter series; ``values`` is one column or a list of rows."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if len(vals) != len(param):
        raise InvalidParameterError("series columns have unequal length")
    if vals.shape[1] + 1 != len(header):
        raise InvalidParameterError("header does not match the column count")
    rows = ([p, *r] for p, r in zip(param, vals))
    return _emit(header, rows, path)


def read_csv(source: Union[str, TextIO]) -> tuple[list[str], np.ndarray]:
    """Parse a file written by this module into (header, float array)."""
    if isinstance(source, str):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_csv(fh)
    rows = list(csv.reader(source))
    if not rows:
        raise InvalidParameterError("empty CSV")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


# ---------------------------------------------------------------------------
# SVG


def _c(v: float) -> str:
    return f"{v:.3f}"


def _tick(v: float) -> str:
    return f"{v:.4g}"


def svg_text(x, y, *, xlabel: str = "x (m)", ylabel: str = "intensity (normalized)",
             title: Optional[str] = None) -> str:
    """A single-polyline line plot in a fixed 800x500 viewBox.

    Output depends only on the data and labels, so identical input gives
    byte-identical markup.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or x.size != y.size:
        raise InvalidParameterError("plot needs non-empty x and y of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidParameterError("plot data must be finite")
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(min(y.min(), 0.0)), float(y.max())
    pw = SVG_WIDTH - _MARGIN_L - _MARGIN_R
    ph = SVG_HEIGHT - _MARGIN_T - _MARGIN_B
    bottom = SVG_HEIGHT - _MARGIN_B

    def px(v):
        return _MARGIN_L + (pw * (v - x0) / (x1 - x0) if x1 > x0 else pw / 2)

    def py(v):
        return bottom - (ph * (v - y0) / (y1 - y0) if y1 > y0 else ph / 2)

    pts = " ".join(f"{_c(px(a))},{_c(py(b))}" for a, b in zip(x, y))
    right = _MARGIN_L + pw
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<path d="M{_MARGIN_L},{_MARGIN_T} V{bottom} H{right}" fill="none" stroke="black"/>',
        f'<text x="{_MARGIN_L}" y="{bottom + 18}" text-anchor="start">{_tick(x0)}</text>',
        f'<text x="{right}" y="{bottom + 18}" text-anchor="end">{_tick(x1)}</text>',
        f'<text x="{_MARGIN_L - 6}" y="{bottom}" text-anchor="end">{_tick(y0)}</text>',
        f'<text x="{_MARGIN_L - 6}" y="{_MARGIN_T + 10}" text-anchor="end">{_tick(y1)}</text>',
        f'<text x="{_MARGIN_L + pw / 2}" y="{SVG_HEIGHT - 15}" text-anchor="middle">{_escape(xlabel)}</text>',
        f'<text x="20" y="{_MARGIN_T + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + ph / 2})">{_escape(ylabel)}</text>',
    ]
    if title:
        lines.append(f'<text x="{_MARGIN_L + pw / 2}" y="14" text-anchor="middle">{_escape(title)}</text>')
    lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_svg(profile: IntensityProfile, path, *, title: Optional[str] = None) -> None:
    ylabel = "intensity (normalized)" if profile.normalization == "peak-normalized" else "intensity (1/m)"
    text = svg_text(profile.x, profile.intensity, ylabel=ylabel, title=title)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def svg_points(text: str) -> np.ndarray:
    """Polyline vertices of an SVG written by :func:`svg_text` (pixel units)."""
    start = text.index('points="') + len('points="')
    end = text.index('"', start)
    pts = [tuple(map(float, p.split(","))) for p in text[start:end].split()]
    return np.array(pts)


def svg_to_data(text: str, x_range: tuple[float, float]) -> np.ndarray:
    """Map polyline x pixel coordinates back to data units."""
    px = svg_points(text)[:, 0]
    pw = SVG_WIDTH - _MARGIN_L - _MARGIN_R
    return x_range[0] + (px - _MARGIN_L) * (x_range[1] - x_range[0]) / pw


# ---------------------------------------------------------------------------
# config text


def format_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` in the key=value format read by ``load_config``."""
    n = cfg.n
    lines = [
        f"quanton.mass_kg = {fmt(cfg.quanton.mass)}",
        f"quanton.lambda_m = {fmt(cfg.quanton.wavelength)}",
        f"slits.n = {n}",
        f"slits.spacing_m = {fmt(cfg.slits.spacing)}",
        f"slits.width_m = {fmt(cfg.slits.width)}",
        "amplitudes.c = " + ", ".join(fmt(v) for v in cfg.amplitudes.magnitudes),
        "amplitudes.theta = " + ", ".join(fmt(v) for v in cfg.amplitudes.phases),
    ]
    mode = cfg.detector.mode
    lines.append(f"detector.mode = {mode}")
    if mode == "matrix":
        lines.append("detector.matrix = " + ", ".join(fmt(v) for v in cfg.detector.matrix.ravel()))
    env = cfg.environment
    lines += [
        f"env.gamma_per_s = {fmt(env.gamma)}",
        f"env.T_K = {fmt(env.temperature)}",
        f"screen.L_m = {fmt(cfg.screen.L)}",
        f"screen.xmin_m = {fmt(cfg.screen.x_min)}",
        f"screen.xmax_m = {fmt(cfg.screen.x_max)}",
        f"screen.points = {cfg.screen.points}",
    ]
    return "\n".join(lines) + "\n"

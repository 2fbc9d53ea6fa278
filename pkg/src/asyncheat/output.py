"""CSV and SVG writers.

All floats go out with 17 significant digits, enough to round-trip any
double. Files are UTF-8 with LF line endings and carry no timestamps, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .analysis import EnsembleResult
from .executor import BenchTable
from .sync import Trajectory


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def emit_trajectory_csv(traj: Trajectory, path) -> None:
    """Columns ``k,i,u``: one row per recorded (step, grid point)."""
    def rows():
        yield "k,i,u"
        for k, snap in zip(traj.steps, traj.snapshots):
            for i, u in enumerate(snap):
                yield f"{k},{i},{fmt(u)}"
    _write_lines(path, rows())


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`emit_trajectory_csv`: (steps, snapshots)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=str, ndmin=2)
    k = data[:, 0].astype(np.int64)
    i = data[:, 1].astype(np.int64)
    u = np.array([float(s) for s in data[:, 2]])
    N = int(i.max()) + 1
    steps = k[::N]
    return steps, u.reshape(len(steps), N)


def stats_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + "_stats" + p.suffix)


def emit_ensemble_csv(res: EnsembleResult, path, stats=None) -> Path:
    """Write ``k,run,norm2`` to ``path`` and ``k,mean,std`` to ``stats``.

    ``stats`` defaults to ``<stem>_stats.csv`` next to ``path``; the path
    used is returned.
    """
    stats = stats_path(path) if stats is None else Path(stats)

    def runs():
        yield "k,run,norm2"
        for m in range(res.M):
            for k, v in zip(res.steps, res.norms[m]):
                yield f"{k},{m},{fmt(v)}"

    def summary():
        yield "k,mean,std"
        for k, mu, sd in zip(res.steps, res.mean, res.std):
            yield f"{k},{fmt(mu)},{fmt(sd)}"

    _write_lines(path, runs())
    _write_lines(stats, summary())
    return stats


def emit_bench_csv(table: BenchTable, path) -> None:
    """Columns ``N,mode,reps,median_ns,min_ns``."""
    _write_lines(path, ["N,mode,reps,median_ns,min_ns"] + [
        f"{row.N},{row.mode},{row.reps},{row.median_ns},{row.min_ns}" for row in table.rows])


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    color: str = "#2ca02c"
    width: float = 0.8
    label: str | None = None


WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60


def _extent(lo: float, hi: float) -> tuple[float, float]:
    if hi > lo:
        return lo, hi
    pad = abs(lo) * 0.05 or 1.0
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * j / (count - 1) for j in range(count)]


def emit_svg_lines(series: list[Series], path, title: str = "", xlabel: str = "",
                   ylabel: str = "") -> None:
    """Standalone SVG line chart, one ``<polyline>`` per series.

    Axes are linear and fitted to the data extents. Series are drawn in the
    order given, so put highlighted ones (an ensemble mean) last.
    """
    if not series:
        raise ValueError("emit_svg_lines needs at least one series")
    xs = np.concatenate([np.asarray(s.x, dtype=np.float64) for s in series])
    ys = np.concatenate([np.asarray(s.y, dtype=np.float64) for s in series])
    x0, x1 = _extent(float(xs.min()), float(xs.max()))
    y0, y1 = _extent(float(ys.min()), float(ys.max()))
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g stroke="black" stroke-width="1">'
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>'
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/></g>',
        '<g font-family="sans-serif" font-size="11" fill="black">',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.3f}" y="{TOP + ph + 16}" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{LEFT - 6}" y="{py(t) + 4:.3f}" '
                   f'text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle" '
               f'font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
               f'font-size="14">{escape(title)}</text>')
    out.append('</g>')
    for s in series:
        pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(
            np.asarray(s.x, dtype=np.float64), np.asarray(s.y, dtype=np.float64)))
        label = f' data-label="{escape(s.label)}"' if s.label else ""
        out.append(f'<polyline fill="none" stroke="{s.color}" '
                   f'stroke-width="{s.width}"{label} points="{pts}"/>')
    out.append('</svg>')
    _write_lines(path, out)


def profile_series(traj: Trajectory, panels: int = 9) -> list[Series]:
    """Temperature profiles u(i) at up to ``panels`` evenly spaced recorded steps."""
    idx = np.unique(np.linspace(0, len(traj) - 1, min(panels, len(traj))).round().astype(int))
    shades = np.linspace(0.15, 0.85, len(idx))
    x = np.arange(traj.snapshots.shape[1])
    return [Series(x, traj.snapshots[j],
                   color=f"#{int(255 * s):02x}{int(80 * s):02x}{int(255 * (1 - s)):02x}",
                   width=1.2, label=f"k={traj.steps[j]}")
            for j, s in zip(idx, shades)]


def ensemble_series(res: EnsembleResult) -> list[Series]:
    """One thin green line per run and the ensemble mean in red on top."""
    runs = [Series(res.steps, res.norms[m], "#2ca02c", 0.6, f"run {res.seeds[m]}")
            for m in range(res.M)]
    return runs + [Series(res.steps, res.mean, "#d62728", 1.6, "mean")]


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p

"""CSV and SVG emitters.

Numbers are written with 17 significant digits so that a CSV round-trips
every double exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .integrators import Trajectory

__all__ = [
    "fmt",
    "write_csv",
    "trajectory_columns",
    "write_trajectory",
    "write_packet",
    "write_egorov",
    "write_energies",
    "svg_line_plot",
]


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _sym_labels(name: str, d: int) -> list[str]:
    if d == 1:
        return [name]
    return [f"{name}_{j + 1}{k + 1}" for j in range(d) for k in range(j, d)]


def _sym_values(M: np.ndarray) -> list[float]:
    d = M.shape[0]
    return [M[j, k] for j in range(d) for k in range(j, d)]


def _vec_labels(name: str, d: int) -> list[str]:
    return [name] if d == 1 else [f"{name}_{j + 1}" for j in range(d)]


def trajectory_columns(traj: Trajectory, d: int) -> tuple[list[str], list[list[float]]]:
    """Header and rows ``t, q.., p.., [A.., Bn..,] energy, norm``."""
    header = ["t"] + _vec_labels("q", d) + _vec_labels("p", d)
    matrices = traj.kind != "classical"
    if matrices:
        header += _sym_labels("A", d) + _sym_labels("Bn" if traj.kind == "reduced" else "B", d)
    header += ["energy", "norm"]
    rows = []
    for t, s, e, nrm in zip(traj.times, traj.states, traj.energy, traj.norm):
        if matrices:
            second = s.Bn if traj.kind == "reduced" else s.B
            row = [t, *s.q, *s.p, *_sym_values(s.A), *_sym_values(second)]
        else:
            row = [t, *s[0], *s[1]]
        rows.append(row + [e, nrm])
    return header, rows


def write_trajectory(path, traj: Trajectory, d: int) -> Path:
    return write_csv(path, *trajectory_columns(traj, d))


def write_packet(path, x: np.ndarray, values: np.ndarray) -> Path:
    """Grid dump ``x, re, im, abs2`` of a 1-D wave function."""
    rows = zip(x, values.real, values.imag, np.abs(values) ** 2)
    return write_csv(path, ["x", "re", "im", "abs2"], rows)


def write_egorov(path, series) -> Path:
    d = series.mean_x.shape[1]
    header = ["t"] + _vec_labels("mean_x", d) + _vec_labels("mean_p", d) + ["mean_energy", "ess"]
    rows = ([t, *mx, *mp, e, s] for t, mx, mp, e, s in
            zip(series.times, series.mean_x, series.mean_p, series.mean_energy, series.ess))
    return write_csv(path, header, rows)


def write_energies(path, times, columns: dict[str, np.ndarray]) -> Path:
    names = list(columns)
    rows = ([t, *(columns[k][i] for k in names)] for i, t in enumerate(times))
    return write_csv(path, ["t"] + names, rows)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    span = hi - lo
    raw = span / count
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def svg_line_plot(path, series: dict[str, tuple[np.ndarray, np.ndarray]], title: str,
                  xlabel: str, ylabel: str, width: int = 640, height: int = 480) -> Path:
    """Polyline plot of named ``(x, y)`` series with axes, ticks and a legend."""
    left, right, top, bottom = 70, 20, 40, 55
    finite = [(np.asarray(x, float), np.asarray(y, float)) for x, y in series.values()]
    xs = np.concatenate([x[np.isfinite(x) & np.isfinite(y)] for x, y in finite])
    ys = np.concatenate([y[np.isfinite(x) & np.isfinite(y)] for x, y in finite])
    x0, x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    y0, y1 = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2})">{ylabel}</text>')
    for k, (name, (x, y)) in enumerate(series.items()):
        color = _COLORS[k % len(_COLORS)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(np.asarray(x)[ok], np.asarray(y)[ok]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 15 + 16 * k
        out.append(f'<line x1="{left + pw - 150}" y1="{ly}" x2="{left + pw - 125}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 120}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path

"""CSV tables and a static SVG plot of a sweep."""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .errors import DomainError

SWEEP_HEADER = ("alpha", "lambda1", "lower", "upper", "fd_deriv", "F_m")
LYAPUNOV_HEADER = ("bounce", "obstacle", "d_j", "cos_phi_j", "ell_j", "log_factor", "partial_lambda1")


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def emit_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))


def sweep_rows(sweep):
    return list(sweep.rows())


def lyapunov_rows(series):
    for k in range(series.m):
        yield (k + 1, int(series.obstacles[k]) + 1, series.d[k], series.cos_phi[k], series.ell[k],
               series.log_factors[k], series.partial[k])


def svg_text(sweep, width=640, height=400) -> str:
    alphas = np.asarray(sweep.alphas, dtype=float)
    ok = np.isfinite(sweep.lambda1)
    if alphas.size == 0 or not ok.any():
        raise DomainError("cannot plot an empty sweep")
    a = alphas[ok]
    lam, lo, hi = sweep.lambda1[ok], sweep.lower[ok], sweep.upper[ok]
    margin = 60
    x0, x1 = float(a.min()), float(a.max())
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = float(np.min(lo)), float(np.max(hi))
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    line = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(a, lam))
    band = " ".join([f"{px(x):.3f},{py(y):.3f}" for x, y in zip(a, hi)]
                    + [f"{px(x):.3f},{py(y):.3f}" for x, y in zip(a[::-1], lo[::-1])])
    ticks = []
    for t in np.linspace(x0, x1, 5):
        ticks.append(f'<text x="{px(t):.3f}" y="{height - margin + 18}" font-size="11" '
                     f'text-anchor="middle">{t:.4g}</text>')
    for t in np.linspace(y0, y1, 5):
        ticks.append(f'<text x="{margin - 6}" y="{py(t) + 4:.3f}" font-size="11" '
                     f'text-anchor="end">{t:.4g}</text>')
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<polygon class="bracket" points="{band}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<polyline class="lambda1" points="{line}" fill="none" stroke="#08519c" stroke-width="2"/>',
        *ticks,
        f'<text x="{width / 2}" y="{height - 15}" font-size="13" text-anchor="middle">alpha</text>',
        f'<text x="18" y="{height / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {height / 2})">lambda_1 (m = {sweep.m})</text>',
        "</svg>",
    ]) + "\n"


def emit_svg(sweep, path) -> None:
    text = svg_text(sweep)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def is_finite_row(row) -> bool:
    return all(math.isfinite(x) for x in row)

"""CSV, JSON and SVG output for sweep results and tables."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

FORMATS = ("csv", "json", "svg")
# CSV carries 12 significant digits, well inside solver accuracy, so the
# text does not depend on last-bit BLAS differences between thread counts.
CSV_DIGITS = 12


def _csv_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    if v is None:
        return ""
    f = float(v)
    if math.isnan(f):
        return "nan"
    return f"{f:.{CSV_DIGITS}g}"


def _is_complex_column(rows, col) -> bool:
    return any(isinstance(r.get(col), complex) for r in rows)


def to_csv(result) -> str:
    """RFC-4180 text; complex columns split into ``_re``/``_im``.

    Wall time and other run metadata are left out so that the text depends
    only on the run description.
    """
    header, getters = [], []
    for c in result.columns:
        if _is_complex_column(result.rows, c):
            header += [f"{c}_re", f"{c}_im"]
            getters += [lambda r, c=c: complex(r[c]).real,
                        lambda r, c=c: complex(r[c]).imag]
        else:
            header.append(c)
            getters.append(lambda r, c=c: r.get(c, ""))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in result.rows:
        w.writerow([_csv_cell(g(r)) for g in getters])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "nan", "inf"
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def _from_json(v):
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return complex(v["re"], v["im"])
    if v in ("nan", "inf", "-inf"):
        return float(v)
    return v


def to_json(result) -> str:
    doc = {"axes": result.axes, "columns": result.columns,
           "metadata": result.metadata,
           "rows": [{k: _jsonable(v) for k, v in r.items()} for r in result.rows]}
    return json.dumps(doc, indent=1)


def from_json(text: str):
    """Inverse of :func:`to_json`, returning a :class:`SweepResult`."""
    from .sweep import SweepResult
    doc = json.loads(text)
    rows = [{k: _from_json(v) for k, v in r.items()} for r in doc["rows"]]
    return SweepResult(doc["axes"], doc["columns"], rows, doc["metadata"])


# ---------------------------------------------------------------------- SVG

W, H, PAD = 640, 420, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(v, lo, hi, a, b, log=False):
    if log:
        v, lo, hi = np.log10(v), np.log10(lo), np.log10(hi)
    return a + (b - a) * (v - lo) / ((hi - lo) or 1.0)


def _frame(xlabel, ylabel, xr, yr, xlog) -> list[str]:
    fmt = lambda v: f"{v:.3g}"
    out = [f'<rect x="{PAD}" y="{PAD // 2}" width="{W - 1.5 * PAD}" '
           f'height="{H - 1.5 * PAD}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle">{xlabel}</text>',
           f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" '
           f'text-anchor="middle">{ylabel}</text>']
    for k, v in enumerate((xr[0], xr[1])):
        out.append(f'<text x="{PAD if k == 0 else W - PAD // 2}" y="{H - PAD + 18}" '
                   f'text-anchor="middle" font-size="11">{fmt(v)}</text>')
    for k, v in enumerate((yr[0], yr[1])):
        out.append(f'<text x="{PAD - 5}" y="{H - PAD if k == 0 else PAD // 2 + 10}" '
                   f'text-anchor="end" font-size="11">{fmt(v)}</text>')
    return out


def _wrap(body: list[str]) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'font-family="sans-serif" font-size="13">\n' + "\n".join(body)
            + "\n</svg>\n")


def line_svg(x, series: dict[str, np.ndarray], xlabel: str, ylabel: str,
             xlog: bool = False) -> str:
    x = np.asarray(x, float)
    ys = {k: np.asarray(v, float) for k, v in series.items()}
    finite = np.concatenate([v[np.isfinite(v)] for v in ys.values()] or [np.zeros(1)])
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (0, 1)
    if yhi == ylo:
        yhi = ylo + 1
    body = _frame(xlabel, ylabel, (x.min(), x.max()), (ylo, yhi), xlog)
    for n, (name, y) in enumerate(ys.items()):
        pts = [f"{_scale(xi, x.min(), x.max(), PAD, W - PAD // 2, xlog):.1f},"
               f"{_scale(yi, ylo, yhi, H - PAD, PAD // 2):.1f}"
               for xi, yi in zip(x, y) if np.isfinite(yi)]
        c = COLORS[n % len(COLORS)]
        body.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" '
                    f'points="{" ".join(pts)}"/>')
        body.append(f'<text x="{W - PAD - 100}" y="{PAD // 2 + 18 * (n + 1)}" '
                    f'fill="{c}">{name}</text>')
    return _wrap(body)


def _colormap(t: float) -> str:
    if not np.isfinite(t):
        return "#cccccc"
    t = min(max(t, 0.0), 1.0)
    r, g, b = (int(255 * min(1, 1.5 * t)), int(255 * t ** 2), int(255 * (1 - t) ** 0.5))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(x, y, z: np.ndarray, xlabel: str, ylabel: str, title: str) -> str:
    z = np.asarray(z, float)
    zf = z[np.isfinite(z)]
    lo, hi = (float(zf.min()), float(zf.max())) if zf.size else (0.0, 1.0)
    body = _frame(xlabel, ylabel, (x[0], x[-1]), (y[0], y[-1]), False)
    nx, ny = len(x), len(y)
    cw, ch = (W - 1.5 * PAD) / nx, (H - 1.5 * PAD) / ny
    for i in range(nx):
        for j in range(ny):
            c = _colormap((z[i, j] - lo) / ((hi - lo) or 1.0))
            body.append(f'<rect x="{PAD + i * cw:.1f}" y="{H - PAD - (j + 1) * ch:.1f}" '
                        f'width="{cw + 0.5:.1f}" height="{ch + 0.5:.1f}" fill="{c}"/>')
    body.append(f'<text x="{W / 2}" y="18" text-anchor="middle">{title} '
                f'[{lo:.3g}, {hi:.3g}]</text>')
    return _wrap(body)


def _plot_column(result) -> str | None:
    for c in result.columns:
        if c.endswith(".concurrence"):
            return c
    for c in result.columns:
        if c not in result.axes and not c.endswith((".error", "mechanisms")) \
                and not _is_complex_column(result.rows, c):
            return c
    return None


def to_svg(result) -> str:
    """Line plot for one axis, heat map of the first observable for two."""
    axes = list(result.axes)
    log = [result.metadata.get("axes", {}).get(a, {}).get("scale") == "log"
           for a in axes]
    if len(axes) == 2:
        col = _plot_column(result)
        shape = tuple(result.metadata["shape"])
        xs = np.array([r[axes[0]] for r in result.rows]).reshape(shape)[:, 0]
        ys = np.array([r[axes[1]] for r in result.rows]).reshape(shape)[0, :]
        z = np.array([float(r.get(col, math.nan)) for r in result.rows]).reshape(shape)
        return heatmap_svg(xs, ys, z, axes[0], axes[1], col or "")
    xname = axes[0] if axes else result.columns[0]
    x = np.array([float(r.get(xname, 0.0)) for r in result.rows])
    series = {c: np.array([float(r.get(c, math.nan)) for r in result.rows])
              for c in result.columns
              if c != xname and not c.endswith((".error", "mechanisms"))
              and not _is_complex_column(result.rows, c)
              and not c.split(".")[-1].startswith("spectrum_")}
    if len(series) > 6:
        series = {k: v for k, v in series.items() if k.endswith(".concurrence")} \
            or dict(list(series.items())[:6])
    return line_svg(x, series, xname, "value", xlog=bool(log and log[0]))


def emit(result, out_dir: str | Path, stem: str = "result",
         formats=FORMATS) -> list[Path]:
    """Write the requested formats to ``out_dir`` and return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writers = {"csv": to_csv, "json": to_json, "svg": to_svg}
    paths = []
    for f in formats:
        if f not in writers:
            raise ValueError(f"unknown format {f!r}")
        path = out_dir / f"{stem}.{f}"
        path.write_text(writers[f](result), newline="")
        paths.append(path)
    return paths

"""Self-contained SVG renderings of traces, heatmaps and event timelines."""

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 360
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _doc(body, title, width=WIDTH, height=HEIGHT):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<title>{escape(title)}</title>\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
        f"{body}</svg>\n"
    )


def _scale(v, lo, hi, a, b):
    # halved operands keep the span finite near the float maximum
    return a + (b - a) * ((v / 2 - lo / 2) / (hi / 2 - lo / 2) if hi > lo else 0.5)


def line_plot(series, title="", xlabel="", ylabel=""):
    """One polyline per entry of ``series`` (``{name: (x, y)}``).

    Non-finite points are dropped.
    """
    pts = {}
    for name, (x, y) in series.items():
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        pts[name] = (x[keep], y[keep])
    allx = np.concatenate([p[0] for p in pts.values()] or [np.zeros(1)])
    ally = np.concatenate([p[1] for p in pts.values()] or [np.zeros(1)])
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1, y0, y1 = allx.min(), allx.max(), ally.min(), ally.max()
    left, right, top, bottom = MARGIN, WIDTH - 20, 35, HEIGHT - MARGIN
    parts = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        f'<text x="{(left + right) / 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-size="12">{escape(xlabel)}</text>',
        f'<text x="12" y="{(top + bottom) / 2}" font-size="12" '
        f'transform="rotate(-90 12 {(top + bottom) / 2})" text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{left - 4}" y="{bottom}" text-anchor="end" font-size="10">{y0:.3g}</text>',
        f'<text x="{left - 4}" y="{top + 8}" text-anchor="end" font-size="10">{y1:.3g}</text>',
        f'<text x="{left}" y="{bottom + 14}" font-size="10">{x0:.3g}</text>',
        f'<text x="{right}" y="{bottom + 14}" text-anchor="end" font-size="10">{x1:.3g}</text>',
    ]
    for i, (name, (x, y)) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_scale(a, x0, x1, left, right):.2f},{_scale(b, y0, y1, bottom, top):.2f}"
                          for a, b in zip(x, y))
        parts.append(f'<polyline class="series" data-name="{escape(name)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        parts.append(f'<text x="{right - 120}" y="{top + 14 * (i + 1)}" font-size="11" '
                     f'fill="{color}">{escape(name)}</text>')
    return _doc("\n".join(parts) + "\n", title)


def heatmap(matrix, title="", xlabel="", ylabel=""):
    """Grayscale heatmap; row 0 at the top. Non-finite cells are drawn red."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows, cols = m.shape
    finite = m[np.isfinite(m)]
    lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 0.0)
    left, top = MARGIN, 35
    w, h = (WIDTH - MARGIN - 20) / cols, (HEIGHT - MARGIN - 35) / rows
    parts = []
    for i in range(rows):
        for j in range(cols):
            if np.isfinite(m[i, j]):
                level = int(round(255 * (1 - _scale(m[i, j], lo, hi, 0, 1))))
                fill = f"rgb({level},{level},{level})"
            else:
                fill = "#d62728"
            parts.append(f'<rect class="cell" x="{left + j * w:.2f}" y="{top + i * h:.2f}" '
                         f'width="{w:.2f}" height="{h:.2f}" fill="{fill}"/>')
    parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" '
                 f'font-size="12">{escape(xlabel)}</text>')
    parts.append(f'<text x="12" y="{HEIGHT / 2}" font-size="12" '
                 f'transform="rotate(-90 12 {HEIGHT / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    return _doc("\n".join(parts) + "\n", title)


def silhouette_curve(report, title="Latent dimension selection"):
    """Min/mean silhouette and mean relative error against ``k``."""
    ks = [r.k for r in report.records]
    return line_plot({
        "min_silhouette": (ks, [r.min_silhouette for r in report.records]),
        "mean_silhouette": (ks, [r.mean_silhouette for r in report.records]),
        "relative_error": (ks, [r.mean_relative_error for r in report.records]),
    }, title=title, xlabel="k", ylabel="score / error")


def objective_trace(trace, title="Objective"):
    return line_plot({"objective": (np.arange(len(trace)), trace)}, title=title,
                     xlabel="evaluation", ylabel="objective")


def components(matrix, title, axis_label):
    """One series per column of ``matrix``."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    idx = np.arange(m.shape[0])
    return line_plot({f"component {s}": (idx, m[:, s]) for s in range(m.shape[1])},
                     title=title, xlabel=axis_label, ylabel="weight")


def event_timeline(report, n_steps, title="Events"):
    """One lane per source, a bar per event."""
    n_src = max(report.k_used, 1)
    left, right, top = MARGIN, WIDTH - 20, 35
    lane = (HEIGHT - MARGIN - top) / n_src
    parts = []
    for s in range(n_src):
        y = top + s * lane
        parts.append(f'<text x="{left - 4}" y="{y + lane / 2:.2f}" text-anchor="end" '
                     f'font-size="10">src {s}</text>')
        parts.append(f'<line x1="{left}" y1="{y + lane / 2:.2f}" x2="{right}" '
                     f'y2="{y + lane / 2:.2f}" stroke="#ccc"/>')
    for ev in report.events:
        x0 = _scale(ev.start, 0, max(n_steps, 1), left, right)
        x1 = _scale(ev.end + 1, 0, max(n_steps, 1), left, right)
        y = top + ev.source * lane + lane * 0.25
        parts.append(f'<rect class="event" x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 1):.2f}" '
                     f'height="{lane / 2:.2f}" fill="#d62728"/>')
    return _doc("\n".join(parts) + "\n", title)

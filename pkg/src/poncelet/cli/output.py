"""Deterministic writers: CSV with 17 significant digits, sorted JSON, SVG."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

# fixed stroke palette, cycled by set index
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def atomic_write(path, text: str):
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Svg:
    """Minimal SVG builder in world coordinates (y up)."""

    def __init__(self, xmin, xmax, ymin, ymax, margin=0.05, width=800):
        dx, dy = xmax - xmin, ymax - ymin
        self.xmin, self.xmax = xmin - margin * dx, xmax + margin * dx
        self.ymin, self.ymax = ymin - margin * dy, ymax + margin * dy
        self.width = width
        self.height = int(round(width * (self.ymax - self.ymin) / (self.xmax - self.xmin)))
        self.unit = (self.xmax - self.xmin) / width
        self.items = []

    @staticmethod
    def _n(v) -> str:
        return format(float(v), ".6f")

    def _pt(self, x, y) -> str:
        return f"{self._n(x)},{self._n(-y)}"

    def polyline(self, pts, stroke="#000000", width=1.0, closed=False):
        pts = np.asarray(pts, dtype=float)
        tag = "polygon" if closed else "polyline"
        coords = " ".join(self._pt(x, y) for x, y in pts if np.isfinite(x) and np.isfinite(y))
        self.items.append(
            f'<{tag} points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{self._n(width * self.unit)}"/>'
        )

    def circle(self, x, y, r_px=3.0, fill="#000000", stroke="none"):
        self.items.append(
            f'<circle cx="{self._n(x)}" cy="{self._n(-y)}" r="{self._n(r_px * self.unit)}" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="{self._n(1.5 * self.unit)}"/>'
        )

    def text(self) -> str:
        vb = f"{self._n(self.xmin)} {self._n(-self.ymax)} {self._n(self.xmax - self.xmin)} {self._n(self.ymax - self.ymin)}"
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" viewBox="{vb}">\n'
            '<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="#ffffff"/>\n'.format(
                x=self._n(self.xmin), y=self._n(-self.ymax),
                w=self._n(self.xmax - self.xmin), h=self._n(self.ymax - self.ymin))
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def ellipse_polyline(A, B, samples=360):
    t = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    return np.column_stack([math.sqrt(A) * np.cos(t), math.sqrt(B) * np.sin(t)])

"""Record formatting and file emission: CSV, JSON lines, SVG figures.

Output is byte-deterministic: floats are formatted with fixed significant
digits (9 for angles, 12 otherwise), files are written atomically, and SVG
rendering pins matplotlib's hash salt and strips the date stamp.  Figures
are rendered from the already-written records file, never from in-memory
results, so a figure is a pure view of the emitted data.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Mapping, Sequence

_ANGLE_DIGITS = 9
_VALUE_DIGITS = 12


@dataclass(frozen=True)
class Column:
    name: str
    angle: bool = False


def format_value(value: object, angle: bool = False) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        digits = _ANGLE_DIGITS if angle else _VALUE_DIGITS
        return f"{value:.{digits}g}"
    return str(value)


def render_table(columns: Sequence[Column], rows: Sequence[Mapping[str, object]],
                 fmt: str) -> str:
    """Render rows as CSV (with header) or JSON, one record per line."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([c.name for c in columns])
        for row in rows:
            writer.writerow([format_value(row[c.name], c.angle) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        lines = []
        for row in rows:
            obj: dict[str, object] = {}
            for c in columns:
                v = row[c.name]
                obj[c.name] = float(format_value(v, c.angle)) if isinstance(v, float) else v
            lines.append(json.dumps(obj))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary sibling and rename, so failures leave no file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_rows(path: str, fmt: str) -> list[dict[str, str]]:
    """Load emitted records; values come back as strings in both formats."""
    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    if fmt == "json":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append({k: str(v) for k, v in json.loads(line).items()})
        return rows
    raise ValueError(f"unknown output format {fmt!r}")


def _plot_curves(curves: dict[str, tuple[list[float], list[float]]],
                 ylabel: str, title: str, svg_path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "bellfield"}):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for b_text in sorted(curves, key=float):
            xs, ys = curves[b_text]
            order = sorted(range(len(xs)), key=xs.__getitem__)
            ax.plot([xs[i] for i in order], [ys[i] for i in order],
                    marker=".", markersize=3.5, linewidth=1.0,
                    label=f"b = {float(b_text):.4f} rad")
        ax.set_xlabel("analyzer angle a (rad)")
        ax.set_ylabel(ylabel)
        ax.set_ylim(-1.05, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right", fontsize=8)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)


def render_scan_svg(records_path: str, fmt: str, svg_path: str, title: str) -> None:
    """Correlation curves, one per fixed function-space angle, from a scan file."""
    curves: dict[str, tuple[list[float], list[float]]] = {}
    for row in read_rows(records_path, fmt):
        xs, ys = curves.setdefault(row["b_rad"], ([], []))
        xs.append(float(row["a_rad"]))
        ys.append(float(row["C"]))
    _plot_curves(curves, "correlation C(a, b)", title, svg_path)


def render_projection_svg(records_path: str, fmt: str, svg_path: str, title: str) -> None:
    """Reconstructed correlation curves from an experiment projections file.

    Rows carry per-(a, b, j, k) projections; the correlation at a setting is
    the signed sum over (j, k).
    """
    sign = {("1", "1"): 1.0, ("1", "2"): -1.0, ("2", "1"): -1.0, ("2", "2"): 1.0}
    acc: dict[tuple[str, str], float] = {}
    for row in read_rows(records_path, fmt):
        key = (row["b_rad"], row["a_rad"])
        acc[key] = acc.get(key, 0.0) + sign[(row["j"], row["k"])] * float(row["P"])
    curves: dict[str, tuple[list[float], list[float]]] = {}
    for (b_text, a_text), c in acc.items():
        xs, ys = curves.setdefault(b_text, ([], []))
        xs.append(float(a_text))
        ys.append(c)
    _plot_curves(curves, "reconstructed correlation C(a, b)", title, svg_path)

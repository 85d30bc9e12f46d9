"""Figure rendering for CLI outputs.

Figures are written with the non-interactive Agg backend.  Every figure can
also be emitted as a small standalone script that re-reads the CSV it was
drawn from, so plots can be restyled without rerunning a calculation.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (5**0.5 - 1.0) / 2.0
COLORS = ["#08589e", "#e6550d", "#31a354", "#756bb1", "#636363"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "lines.linewidth": 1.0,
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}

# (x column, y column, x label, y label, log y) per CSV schema
LAYOUTS = {
    "transmission": ("energy_ev", "transmission", "E (eV)", r"$\mathcal{T}$", True),
    "delay": ("x_value", "tau_fs", "x", r"$\tau_g$ (fs)", True),
    "iv": ("bias_v", "current_a_per_m2", "bias (V)", r"J (A/m$^2$)", False),
    "resonances": ("e_peak_ev", "fwhm_ev", r"$E_{peak}$ (eV)", r"$\Delta$ (eV)", True),
}


def figure(width: float = 4.5, aspect: float = GOLDEN):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, width * aspect))
    return fig, ax


def read_columns(path: str | Path, x: str, y: str, group: str | None = None) -> dict[str, tuple[list, list]]:
    """Numeric columns ``x`` and ``y`` from a CSV, split by the ``group`` column if given."""
    out: dict[str, tuple[list, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = row[group] if group else ""
            xs, ys = out.setdefault(key, ([], []))
            xs.append(float(row[x]))
            ys.append(float(row[y]))
    return out


def render(csv_paths: Sequence[str | Path], kind: str, png: str | Path, xlabel: str | None = None,
           title: str | None = None) -> Path:
    """Draw one or more CSVs of the same schema onto one set of axes and save a PNG."""
    x, y, xl, yl, logy = LAYOUTS[kind]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5 * GOLDEN))
        for path in csv_paths:
            group = "engine" if kind == "transmission" else None
            for key, (xs, ys) in read_columns(path, x, y, group).items():
                ax.plot(xs, ys, marker="o" if kind == "resonances" else None, ms=3,
                        label=key or Path(path).stem)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel or xl)
        ax.set_ylabel(yl)
        if title:
            ax.set_title(title)
        if len(ax.lines) > 1:
            ax.legend()
        fig.savefig(png)
        plt.close(fig)
    return Path(png)


_SCRIPT = '''"""Re-plot {kind} data written by tunnelkit."""
import csv

import matplotlib.pyplot as plt

PATHS = {paths!r}
X, Y = {x!r}, {y!r}

fig, ax = plt.subplots()
for path in PATHS:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    groups = sorted({{r.get("engine", "") for r in rows}})
    for g in groups:
        sel = [r for r in rows if r.get("engine", "") == g]
        ax.plot([float(r[X]) for r in sel], [float(r[Y]) for r in sel], label=g or path)
{logy}ax.set_xlabel({xl!r})
ax.set_ylabel({yl!r})
ax.legend()
fig.savefig({png!r}, bbox_inches="tight")
'''


def write_script(csv_paths: Sequence[str | Path], kind: str, script: str | Path, png: str | Path,
                 xlabel: str | None = None) -> Path:
    """Standalone matplotlib script that re-reads ``csv_paths`` (by file name, relative to itself)."""
    x, y, xl, yl, logy = LAYOUTS[kind]
    text = _SCRIPT.format(kind=kind, paths=[Path(p).name for p in csv_paths], x=x, y=y,
                          logy='ax.set_yscale("log")\n' if logy else "", xl=xlabel or xl, yl=yl,
                          png=Path(png).name)
    Path(script).write_text(text)
    return Path(script)

"""Figure rendering for command-line reports.

Matplotlib is imported lazily with the non-interactive Agg backend so the
library can be used without it.  Every figure shows exactly the numbers that
the accompanying table contains.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .simulate import LossReport, PathSet, SweepEntry

DEFAULT_IRF_VARIABLES = ("ygap", "pi", "i", "rn", "spread", "lev")

LABELS = {
    "ygap": "output gap (%)",
    "pi": "inflation (ann. p.p.)",
    "i": "policy rate (ann. p.p.)",
    "r": "real rate (ann. p.p.)",
    "rn": "natural rate (ann. p.p.)",
    "rn_pi": "credit-blind natural rate (ann. p.p.)",
    "rgap": "real-rate gap (ann. p.p.)",
    "spread": "credit spread (ann. p.p.)",
    "lev": "leverage gap (%)",
    "b": "household debt gap (%)",
    "cb": "borrower consumption gap (%)",
    "z": "real exchange rate gap (%)",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _grid(n: int):
    cols = min(3, n)
    rows = math.ceil(n / cols)
    plt = _pyplot()
    fig, axes = plt.subplots(rows, cols, figsize=(4.0 * cols, 2.8 * rows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    return plt, fig, axes.flat


def _finish(plt, fig, path: str | Path, title: str | None) -> Path:
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_paths(paths: PathSet, path: str | Path, variables: Sequence[str] | None = None, title: str | None = None) -> Path:
    """One panel per variable against the quarter index."""
    variables = [v for v in (variables or DEFAULT_IRF_VARIABLES) if v in paths] or list(paths.labels[:6])
    plt, fig, axes = _grid(len(variables))
    for ax, var in zip(axes, variables):
        ax.plot(paths.periods, paths[var], color="C0")
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_title(LABELS.get(var, var), fontsize=9)
        ax.set_xlabel("quarter", fontsize=8)
    return _finish(plt, fig, path, title)


def plot_sweep(
    entries: Sequence[SweepEntry],
    parameter: str,
    path: str | Path,
    variables: Sequence[str] | None = None,
    title: str | None = None,
) -> Path:
    """Overlay the impulse responses of a sweep, one line per parameter value."""
    ok = [e for e in entries if e.paths is not None]
    if not ok:
        raise ValueError("no successful sweep entries to plot")
    first = ok[0].paths
    variables = [v for v in (variables or DEFAULT_IRF_VARIABLES) if v in first] or list(first.labels[:6])
    plt, fig, axes = _grid(len(variables))
    for ax, var in zip(axes, variables):
        for j, e in enumerate(ok):
            ax.plot(e.paths.periods, e.paths[var], color=f"C{j}", label=f"{parameter}={e.value:g}")
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_title(LABELS.get(var, var), fontsize=9)
        ax.set_xlabel("quarter", fontsize=8)
    axes[0].legend(fontsize=7)
    return _finish(plt, fig, path, title)


def plot_losses(report: LossReport, path: str | Path, title: str | None = None) -> Path:
    """Grouped bars of the loss under each rule, ratio annotated per version."""
    plt = _pyplot()
    rows = report.rows()
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.bar(x - 0.2, [r[1] for r in rows], 0.4, label="FI")
    ax.bar(x + 0.2, [r[2] for r in rows], 0.4, label="PI")
    for xi, (_, f, p, ratio) in zip(x, rows):
        ax.annotate(f"{ratio:.2f}", (xi, max(f, p)), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(x, [f"V{r[0]}" for r in rows])
    ax.set_ylabel("loss")
    ax.legend()
    return _finish(plt, fig, path, title)

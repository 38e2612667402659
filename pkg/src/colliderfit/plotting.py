"""Figures of judgments against CBN predictions.

Three panels: a judgment-vs-prediction scatter with the identity line, the
Markov pair (IV, V) and the explaining-away pair (VI, VIII).  SVG output is
byte-stable for identical input.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tasks import TASK_IDS, TaskId  # noqa: E402

_RC = {
    "svg.hashsalt": "colliderfit",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _pair(ax, reports, first: TaskId, second: TaskId, title: str):
    x = [0, 1]
    for color, r in zip(_COLORS, reports):
        obs = [r.observed_means[first - 1], r.observed_means[second - 1]]
        pred = [r.fit.predictions[first - 1], r.fit.predictions[second - 1]]
        ax.plot(x, obs, "o-", color=color, label=f"{r.label} judgments", gid=f"{title}-obs-{r.label}")
        ax.plot(x, pred, "s--", color=color, alpha=0.6, label=f"{r.label} CBN", gid=f"{title}-cbn-{r.label}")
        if r.signature is not None and r.signature.ci:
            for xi, task, y in zip(x, (first, second), obs):
                lo, hi = r.signature.ci.get(task, (y, y))
                ax.plot([xi, xi], [lo, hi], "-", color=color, lw=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels([str(first), str(second)])
    ax.set_xlim(-0.3, 1.3)
    ax.set_ylim(0, 1)
    ax.set_title(title)


def plot_reports(reports):
    """Build the three-panel figure for one or more group reports."""
    reports = list(reports)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 3, figsize=(11, 3.6), gridspec_kw={"width_ratios": [1.6, 1, 1]})
        ax = axes[0]
        ax.plot([0, 1], [0, 1], color="0.6", lw=1, gid="diagonal")
        for color, r in zip(_COLORS, reports):
            ax.scatter(r.fit.predictions, r.observed_means, s=22, color=color,
                       label=r.label, gid=f"scatter-{r.label}", zorder=3)
            for t, px, oy in zip(TASK_IDS, r.fit.predictions, r.observed_means):
                ax.annotate(str(t), (px, oy), textcoords="offset points", xytext=(3, 3), fontsize=6)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_aspect("equal")
        ax.set_xlabel("CBN prediction")
        ax.set_ylabel("judgment")
        ax.set_title("judgments vs CBN")
        ax.legend(fontsize=7, loc="upper left", frameon=False)
        _pair(axes[1], reports, TaskId.IV, TaskId.V, "Markov pair")
        _pair(axes[2], reports, TaskId.VI, TaskId.VIII, "explaining away")
        fig.tight_layout()
    return fig


def render_svg(fig) -> bytes:
    buf = io.BytesIO()
    with plt.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def save_figure(reports, path) -> bytes:
    """Render and write the figure; returns the SVG bytes."""
    from .data_io import atomic_write

    fig = plot_reports(reports)
    try:
        data = render_svg(fig)
    finally:
        plt.close(fig)
    atomic_write(path, data)
    return data

"""SVG figures: metric bars, confusion heatmaps, cumulative explained variance.

Output is byte-stable across runs (fixed hash salt, no timestamp).
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "hitpredict", "svg.fonttype": "none", "font.size": 9}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def metric_bars(reports, path, title="Model metrics"):
    """Grouped bars: one group per model, one bar per metric."""
    with plt.rc_context(_RC):
        names = [r.model for r in reports]
        metrics = ("accuracy", "precision", "recall")
        x = np.arange(len(names))
        width = 0.8 / len(metrics)
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(names)), 3.2))
        for i, m in enumerate(metrics):
            vals = [getattr(r, m) or 0.0 for r in reports]
            ax.bar(x + (i - 1) * width, vals, width, label=m)
        ax.set_xticks(x, names, rotation=20, ha="right")
        ax.set_ylim(0, 1)
        ax.set_title(title)
        ax.legend(loc="lower right", fontsize=7)
        fig.tight_layout()
        _save(fig, path)


def confusion_heatmap(report, path):
    c = report.confusion
    grid = np.array([[c.tn, c.fp], [c.fn, c.tp]])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(3.0, 2.8))
        ax.imshow(grid, cmap="Blues")
        for (i, j), v in np.ndenumerate(grid):
            ax.text(j, i, str(v), ha="center", va="center",
                    color="white" if v > grid.max() / 2 else "black")
        ax.set_xticks([0, 1], ["non-hit", "hit"])
        ax.set_yticks([0, 1], ["non-hit", "hit"])
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(f"{report.model} ({report.split})")
        fig.tight_layout()
        _save(fig, path)


def cumulative_variance(ratios, path, threshold=None):
    cum = np.cumsum(ratios)
    ks = np.arange(1, len(cum) + 1)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ax.plot(ks, cum, marker="o")
        if threshold is not None:
            ax.axhline(threshold, linestyle="--", color="grey")
        ax.set_xlabel("number of components")
        ax.set_ylabel("cumulative explained variance")
        ax.set_xticks(ks)
        ax.set_ylim(0, 1.02)
        fig.tight_layout()
        _save(fig, path)

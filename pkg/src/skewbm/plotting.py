"""Static figures for CLI output files (Agg backend, no display needed)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_density(t, density, cdf, path, title=""):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(t, density, color="k")
    ax1.set_xlabel("t")
    ax1.set_ylabel("density")
    ax2.plot(t, cdf, color="k")
    ax2.set_xlabel("t")
    ax2.set_ylabel("P(T <= t)")
    ax2.set_ylim(0, 1.02)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_crossings(data, path):
    """One panel per alpha: -1 -> 1 solid, 1 -> -1 dashed.

    ``data`` maps alpha to ``(t, up, down)``.
    """
    n = len(data)
    fig, axes = plt.subplots(1, n, figsize=(3 * n, 3), sharey=True, squeeze=False)
    for ax, (a, (t, up, down)) in zip(axes[0], sorted(data.items())):
        ax.plot(t, up, "k-", label="-1 to 1")
        ax.plot(t, down, "k--", label="1 to -1")
        ax.set_title(f"alpha = {a:g}")
        ax.set_xlabel("t")
    axes[0][0].set_ylabel("density")
    axes[0][0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)

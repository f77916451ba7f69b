"""Optional figures for comparison and simulation reports (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .genome import link_label, links_of  # noqa: E402

STYLE = {"figure.figsize": (6.0, 4.0), "axes.grid": True, "grid.alpha": 0.3,
         "axes.spines.top": False, "axes.spines.right": False, "savefig.dpi": 150}


def _label(G: int) -> str:
    return "{" + ",".join(link_label(i) for i in links_of(G)) + "}" if G else "{}"


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def coefficient_curves(times, values: np.ndarray, path: str | Path) -> Path:
    """a_G(t) against t, one line per link set; ``values`` has shape (len(times), 2^n)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for G in range(values.shape[1]):
            ax.plot(times, values[:, G], marker=".", label=_label(G))
        ax.set_xlabel("t")
        ax.set_ylabel("$a_G(t)$")
        ax.set_ylim(-0.02, 1.02)
        if values.shape[1] <= 16:
            ax.legend(fontsize="small", ncol=2, frameon=False)
        return _save(fig, Path(path))


def method_gaps(times, gaps: dict, path: str | Path) -> Path:
    """Largest entrywise gap per method pair against t, on a log scale."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, series in gaps.items():
            # exact agreement would vanish from a log plot
            ax.semilogy(times, np.maximum(series, 1e-18), marker="o", label=name)
        ax.axhline(1e-10, color="0.5", ls="--", lw=1, label="tolerance")
        ax.set_xlabel("t")
        ax.set_ylabel("max |gap|")
        ax.legend(fontsize="small", frameon=False)
        return _save(fig, Path(path))


def mse_vs_n(rows: list, slope: float, path: str | Path) -> Path:
    """Log-log plot of mean-square deviation against population size with error bars."""
    N = np.array([r["N"] for r in rows], dtype=float)
    mse = np.array([r["mse"] for r in rows])
    se = np.array([r["stderr"] for r in rows])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.errorbar(N, mse, yerr=se, fmt="o", capsize=3, label="simulated")
        if len(N) > 1:
            ref = mse[0] * (N / N[0]) ** -1.0
            ax.plot(N, ref, "--", color="0.5", label="slope -1")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("mean square deviation")
        ax.set_title(f"fitted slope {slope:.3f}")
        ax.legend(frameon=False)
        return _save(fig, Path(path))

"""Figure rendering for outage sweeps and the alarm-sampler check."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import SiteConfig
from .traffic import AlarmEvent

SERIES_COLOR = {"centralized": "tab:red", "grid": "tab:blue", "linear": "tab:green"}
SERIES_STYLE = {"regular": "-", "alarm": "--"}
SERIES_MARKER = {"regular": "o", "alarm": "s"}

AXIS_LABEL = {
    "K": "Number of active devices $K$",
    "M": "Total antenna elements $M$",
    "l": "Hall side length $l$ (m)",
}

_FLOOR = 1e-12  # keeps zero estimates drawable on the log axis


def infer_axis(rows: list[dict]) -> str:
    """Which of K, M, l varies across the rows (first match wins)."""
    for axis, col in (("K", "K"), ("M", "M"), ("l", "l")):
        if len({r[col] for r in rows}) > 1:
            return axis
    return "K"


def render_outage_plot(rows: list[dict], axis: str, out_path: Path) -> Path:
    """One log-scale outage curve per deployment and traffic mode, with CI bands."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for dep in ("centralized", "grid", "linear"):
        for mode in ("regular", "alarm"):
            pts = [r for r in rows if r["deployment"] == dep and r["traffic"] == mode]
            if not pts:
                continue
            pts.sort(key=lambda r: float(r["axis_value"]))
            x = np.array([float(r["axis_value"]) for r in pts])
            y = np.array([float(r["p_out"]) for r in pts])
            ci = np.array([float(r["ci_halfwidth"]) for r in pts])
            y_plot = np.maximum(y, _FLOOR)
            ax.semilogy(
                x, y_plot,
                color=SERIES_COLOR[dep],
                linestyle=SERIES_STYLE[mode],
                marker=SERIES_MARKER[mode],
                label=f"{dep}, {mode}",
            )
            ax.fill_between(
                x, np.maximum(y - ci, _FLOOR), np.maximum(y + ci, _FLOOR),
                color=SERIES_COLOR[dep], alpha=0.15, linewidth=0,
            )
    ax.set_xlabel(AXIS_LABEL.get(axis, "axis value"))
    ax.set_ylabel("Outage probability")
    ax.grid(True, which="both", linestyle="--", linewidth=0.6, alpha=0.6)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def _draw_marginal_panels(axes, edges: np.ndarray, marginals) -> None:
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    for ax, axis in zip(axes, ("x", "y")):
        emp, theo = marginals[axis]
        ax.bar(centers, emp, width=width, alpha=0.5, label="empirical")
        ax.plot(centers, theo, "r-", lw=2, label="theoretical")
        ax.set_xlabel(f"{axis} (m)")
        ax.set_ylabel("density")
        ax.legend(fontsize=8)


def render_sampler_check(
    edges: np.ndarray,
    marginals: dict[str, tuple[np.ndarray, np.ndarray]],
    samples: np.ndarray,
    site: SiteConfig,
    event: AlarmEvent,
    out_path: Path,
) -> Path:
    """Empirical vs. theoretical coordinate marginals plus a location heat map."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    _draw_marginal_panels(axes[:2], edges, marginals)
    h = axes[2].hist2d(
        samples[:, 0], samples[:, 1],
        bins=50, range=[[0, site.side_length_m], [0, site.side_length_m]],
    )
    fig.colorbar(h[3], ax=axes[2])
    axes[2].plot(event.epicenter.x, event.epicenter.y, "r+", markersize=12)
    axes[2].set_xlabel("x (m)")
    axes[2].set_ylabel("y (m)")
    axes[2].set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_marginals(
    edges: np.ndarray,
    marginals: dict[str, tuple[np.ndarray, np.ndarray]],
    out_path: Path,
) -> Path:
    """Marginal comparison only, for re-plots from the binned CSV."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    _draw_marginal_panels(axes, edges, marginals)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path

"""Figures written next to the tabular outputs (PNG, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_densities",
    "plot_ges",
    "plot_rejection_table",
    "plot_risk_surface",
]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_densities(fit, path, title: str | None = None) -> Path:
    """Per-group kernel estimates ``f(y | x)`` from a fitted hybrid density."""
    hd = fit.hd
    fig, ax = plt.subplots(figsize=(6, 4))
    for x in (0, 1):
        ax.plot(hd.points, hd.joint[x].values / hd.fx[x], label=f"group {x}")
    ax.plot(hd.points, hd.fy.values, "k--", lw=1, label="pooled")
    ax.set_xlabel("y")
    ax.set_ylabel("density")
    ax.set_title(title or f"Kernel estimates (h = {fit.h:.3g})")
    ax.legend()
    return _save(fig, path)


def plot_ges(reports, path, log_scale: bool = True) -> Path:
    """IF2 curves against the contamination location, one line per report."""
    if not isinstance(reports, (list, tuple)):
        reports = [reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports:
        p = rep.params
        label = rep.region if p is None else f"({p.alpha:g}, {p.lam:g}, {p.beta:g}) {rep.region}"
        ax.plot(rep.y0, rep.if2, label=label)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("y0")
    ax.set_ylabel("IF2")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_rejection_table(table, path) -> Path:
    """Heat map of rejection proportions, lambda rows by alpha columns."""
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(table.alphas), 1.0 + 0.5 * len(table.lambdas)))
    im = ax.imshow(table.cells, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(table.alphas)), [f"{a:g}" for a in table.alphas])
    ax.set_yticks(range(len(table.lambdas)), [f"{v:g}" for v in table.lambdas])
    ax.set_xlabel("alpha")
    ax.set_ylabel("lambda")
    for i in range(len(table.lambdas)):
        for j in range(len(table.alphas)):
            v = table.cells[i, j]
            ax.text(j, i, f"{v:.3f}", ha="center", va="center", fontsize=7, color="w" if v < 0.6 else "k")
    ax.set_title(f"Rejection proportions (beta = {table.beta:g})")
    fig.colorbar(im, ax=ax)
    return _save(fig, path)


def plot_risk_surface(surface, path) -> Path:
    """Estimated risk of every scored candidate, best one highlighted."""
    risk = np.asarray(surface.risk)
    fig, ax = plt.subplots(figsize=(max(6, 0.15 * risk.size), 4))
    idx = np.arange(risk.size)
    colors = ["tab:red" if p.is_pd else "tab:blue" for p in surface.params]
    ax.bar(idx, risk, color=colors)
    ax.bar([surface.best], [risk[surface.best]], color="tab:green")
    ax.set_xlabel("candidate (evaluation order)")
    ax.set_ylabel("estimated risk")
    b = surface.best_params
    ax.set_title(f"best ({b.alpha:.3g}, {b.lam:.3g}, {b.beta:.3g}), risk {risk[surface.best]:.3f}")
    return _save(fig, path)

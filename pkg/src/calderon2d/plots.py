"""Figure rendering for the command-line report path.

Every CLI command that emits delimited output also renders a small
matplotlib summary figure next to it.  Figures are informational; the
CSV files remain the machine-readable artifacts.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def dtn_spectrum_figure(mat: np.ndarray, out_dir: str,
                        name: str = "dtn_spectrum.png",
                        reference: np.ndarray | None = None) -> str:
    diag = np.real(np.diag(mat))
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(diag, "o", ms=3.5, label="assembled")
    if reference is not None:
        ax.plot(reference, "k--", lw=0.8, label="reference")
    ax.set_xlabel("trace basis index")
    ax.set_ylabel("diagonal entry")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("DtN quadratic form diagonal", fontsize=10)
    return _save(fig, out_dir, name)


def deformation_figure(F: np.ndarray, grid, out_dir: str,
                       name: str = "deformation.png") -> str:
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    n = grid.n
    step = max(1, n // 32)
    sl = (slice(None, None, step), slice(None, None, step))
    disp = F - grid.points()
    ax.quiver(grid.points().real[sl], grid.points().imag[sl],
              disp.real[sl], disp.imag[sl], np.abs(disp)[sl],
              cmap="viridis", scale_units="xy", scale=1.0, width=0.003)
    th = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(th), np.sin(th), "r-", lw=0.7)
    ax.set_aspect("equal")
    ax.set_title("coordinate deformation", fontsize=10)
    return _save(fig, out_dir, name)


def field_figure(values: np.ndarray, grid, out_dir: str,
                 name: str, title: str) -> str:
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    im = ax.imshow(np.real(values).T, origin="lower",
                   extent=[-grid.L, grid.L, -grid.L, grid.L], cmap="magma")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title, fontsize=10)
    return _save(fig, out_dir, name)


def recovery_figure(k_values, errors, out_dir: str,
                    name: str = "recovery_error.png") -> str:
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.semilogy(k_values, errors, "o-")
    ax.set_xlabel("frequency |k|")
    ax.set_ylabel("max deformation error on ring")
    ax.set_title("exterior recovery error vs frequency", fontsize=10)
    ax.grid(alpha=0.3)
    return _save(fig, out_dir, name)


def verify_figure(names, passed, out_dir: str,
                  name: str = "verify_summary.png") -> str:
    fig, ax = plt.subplots(figsize=(5.6, 0.32 * len(names) + 1.0))
    y = np.arange(len(names))
    colors = ["#2a9d3f" if p else "#c1272d" for p in passed]
    ax.barh(y, [1.0] * len(names), color=colors, height=0.6)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xticks([])
    ax.invert_yaxis()
    ax.set_title("invariant suite", fontsize=10)
    for spine in ax.spines.values():
        spine.set_visible(False)
    return _save(fig, out_dir, name)

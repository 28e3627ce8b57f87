"""Figure rendering for the CLI report path."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimators import StepCurve


def save_step_curve_figure(path, curves, title: str, ylabel: str = "S(t)") -> None:
    """Render labelled step curves (drawn right-continuously from S(0) = 1)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, curve in curves:
        ts = np.concatenate(([0.0], curve.jump_times))
        vs = np.concatenate(([1.0], curve.values))
        ax.step(ts, vs, where="post", label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    if len(curves) > 1 or any(label for label, _ in curves):
        ax.legend(loc="best", frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_profile_figure(path, x, y, title: str, xlabel: str, ylabel: str) -> None:
    """Render a covariate profile, e.g. cure probability against age."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(x, y, marker="o")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

"""Smoothing kernels and covariate weight schemes for conditional estimation."""

from __future__ import annotations

import enum
import math

import numpy as np

# A bandwidth is a plain positive float; every consumer validates h > 0.
Bandwidth = float


class Kernel(enum.Enum):
    """Supported smoothing kernels."""

    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


class EmptyNeighborhoodError(ValueError):
    """No observation carries weight at the requested covariate value."""


def kernel_eval(kernel: Kernel, u):
    """Evaluate the kernel at scaled distance ``u`` (scalar or array).

    The Epanechnikov kernel 0.75 (1 - u^2) vanishes outside the open
    interval (-1, 1); the Gaussian kernel is the standard normal density.
    """
    u = np.asarray(u, dtype=float)
    if kernel is Kernel.EPANECHNIKOV:
        out = np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    elif kernel is Kernel.GAUSSIAN:
        out = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return out if out.ndim else float(out)


def nw_weights(kernel: Kernel, h: float, x: float, xs: np.ndarray) -> np.ndarray:
    """Nadaraya-Watson weights of the sample points ``xs`` at location ``x``.

    Weights are proportional to K((x - X_j) / h) and normalized to sum to
    one.  Raises :class:`EmptyNeighborhoodError` when every kernel value is
    zero, which for compactly supported kernels means no observation lies
    within ``h`` of ``x``.
    """
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    xs = np.asarray(xs, dtype=float)
    raw = kernel_eval(kernel, (x - xs) / h)
    total = raw.sum()
    if not total > 0:
        raise EmptyNeighborhoodError(
            f"no observations within bandwidth {h:g} of x={x:g}"
        )
    return raw / total


def binary_weights(x: float, xs: np.ndarray) -> np.ndarray:
    """Exact-match weights for a discrete covariate: 1/m on the m matches."""
    xs = np.asarray(xs, dtype=float)
    match = xs == x
    m = int(match.sum())
    if m == 0:
        raise EmptyNeighborhoodError(f"no observations with covariate value {x:g}")
    return match.astype(float) / m

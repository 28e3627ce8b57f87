"""Kaplan-Meier and Beran product-limit estimators of the survival function.

Both estimators run over the observations sorted by time with uncensored
observations placed first among ties, and multiply one factor per ordered
observation.  Only uncensored observations contribute a factor below one,
so the fitted curves jump exactly at the distinct uncensored times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import SurvivalSample
from .kernels import Kernel, binary_weights, nw_weights


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous step function starting at 1 before the first jump.

    ``values[j]`` is the value on ``[jump_times[j], jump_times[j+1])``.
    Empty arrays describe the constant function 1.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        jt = np.asarray(self.jump_times, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", vals)
        if jt.shape != vals.shape or jt.ndim != 1:
            raise ValueError("jump_times and values must be 1-d arrays of equal length")
        if jt.size and np.any(np.diff(jt) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValueError("curve values must lie in [0, 1]")
        if vals.size and np.any(np.diff(vals) > 0):
            raise ValueError("curve values must be non-increasing")


def curve_eval(curve: StepCurve, t):
    """Evaluate a step curve at ``t`` (scalar or array), right-continuously."""
    t = np.asarray(t, dtype=float)
    if curve.jump_times.size == 0:
        out = np.ones_like(t)
        return out if out.ndim else float(out)
    idx = np.searchsorted(curve.jump_times, t, side="right")
    padded = np.concatenate(([1.0], curve.values))
    out = padded[idx]
    return out if out.ndim else float(out)


def _time_order(times: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    # Ascending time; uncensored first among ties so a death at t leaves
    # the risk set before a censoring at the same t.
    return np.lexsort((1 - deltas, times))


def _jumps_from_products(
    t_sorted: np.ndarray, d_sorted: np.ndarray, surv: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    event_times = np.unique(t_sorted[d_sorted == 1])
    if event_times.size == 0:
        return event_times, event_times
    last_at = np.searchsorted(t_sorted, event_times, side="right") - 1
    values = surv[last_at]
    # an event time can carry zero weight (e.g. outside the kernel window);
    # it is then not a jump of the curve
    falls = values < np.concatenate(([1.0], values[:-1]))
    return event_times[falls], values[falls]


def km_fit(sample: SurvivalSample) -> StepCurve:
    """Kaplan-Meier product-limit estimator.

    At the i-th ordered observation the factor is 1 - delta_[i] / (n - i + 1);
    with no censoring the product telescopes to the empirical survivor
    function.  Returns a curve jumping at the distinct uncensored times.
    """
    order = _time_order(sample.times, sample.deltas)
    t_sorted = sample.times[order]
    d_sorted = sample.deltas[order]
    n = sample.n
    factors = 1.0 - d_sorted / (n - np.arange(n))
    surv = np.cumprod(factors)
    jt, vals = _jumps_from_products(t_sorted, d_sorted, surv)
    return StepCurve(jump_times=jt, values=vals)


def beran_fit(
    sample: SurvivalSample,
    covariate: str,
    x: float,
    kernel: Kernel = Kernel.EPANECHNIKOV,
    h: float | None = None,
) -> StepCurve:
    """Conditional survival estimator with covariate-local weights.

    Parameters
    ----------
    sample : SurvivalSample
        Censored observations with the named covariate column.
    covariate : str
        Column to condition on.  Columns whose values all lie in {0, 1}
        are treated as discrete and weighted by exact match, in which case
        ``kernel`` and ``h`` are ignored.
    x : float
        Covariate value at which the conditional curve is estimated.
    kernel, h
        Smoothing kernel and bandwidth for continuous covariates.

    The i-th ordered factor is 1 - delta_[i] B_i(x) / sum_{r >= i} B_r(x),
    where B are the normalized weights.  With every weight equal to 1/n
    this reduces to the Kaplan-Meier estimator.
    """
    xs = sample.covariate(covariate)
    if np.all((xs == 0) | (xs == 1)):
        weights = binary_weights(x, xs)
    else:
        if h is None:
            raise ValueError("a bandwidth is required for continuous covariates")
        weights = nw_weights(kernel, h, x, xs)
    order = _time_order(sample.times, sample.deltas)
    t_sorted = sample.times[order]
    d_sorted = sample.deltas[order]
    w_sorted = weights[order]
    tail = np.cumsum(w_sorted[::-1])[::-1]
    factors = np.ones(sample.n)
    active = (d_sorted == 1) & (w_sorted > 0)
    factors[active] = 1.0 - w_sorted[active] / tail[active]
    surv = np.cumprod(factors)
    jt, vals = _jumps_from_products(t_sorted, d_sorted, surv)
    return StepCurve(jump_times=jt, values=vals)

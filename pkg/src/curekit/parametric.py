"""Parametric mixture cure model: linked incidence, Weibull AFT latency, MLE.

The population survival decomposes as

    S_pop(t | x, z) = 1 - p(x) + p(x) S_u(t | z)

with incidence p(x) a link of a linear predictor and latency S_u a
Weibull whose scale is log-linear in the covariates (accelerated failure
time form).  The promotion-time alternative S(t) = exp(-theta F(t)) is
provided for comparison.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from .data_model import SurvivalSample
from .rng import substream

# Euler-Mascheroni constant, used by the moment-based Weibull start.
_EULER_GAMMA = 0.5772156649015329


class LikelihoodError(ValueError):
    """The log-likelihood could not be evaluated at the given parameters."""


class LinkFunction(enum.Enum):
    LOGIT = "logit"
    PROBIT = "probit"
    CLOGLOG = "cloglog"


def link_eval(link: LinkFunction, eta):
    """Map a linear predictor to a probability in (0, 1)."""
    eta = np.asarray(eta, dtype=float)
    if link is LinkFunction.LOGIT:
        out = special.expit(eta)
    elif link is LinkFunction.PROBIT:
        out = special.ndtr(eta)
    elif link is LinkFunction.CLOGLOG:
        out = -np.expm1(-np.exp(eta))
    else:
        raise ValueError(f"unknown link {link!r}")
    return out if out.ndim else float(out)


def link_inverse(link: LinkFunction, p: float) -> float:
    """Linear predictor producing probability ``p`` under the link."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be inside (0, 1), got {p}")
    if link is LinkFunction.LOGIT:
        return float(special.logit(p))
    if link is LinkFunction.PROBIT:
        return float(special.ndtri(p))
    if link is LinkFunction.CLOGLOG:
        return float(np.log(-np.log1p(-p)))
    raise ValueError(f"unknown link {link!r}")


def weibull_aft_survival(t, z: Sequence[float], gamma0: float, gamma: Sequence[float], k: float):
    """Weibull survival exp(-(t / lambda)^k) with scale log-linear in z.

    ``lambda = exp(gamma0 + gamma . z)``; the shape ``k`` is the inverse
    of the AFT error scale.
    """
    if not k > 0:
        raise ValueError(f"shape must be positive, got {k}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    lam = math.exp(gamma0 + float(np.dot(gamma, z)))
    out = np.exp(-((t / lam) ** k))
    return out if out.ndim else float(out)


def population_survival(
    t,
    x: Sequence[float],
    z: Sequence[float],
    link: LinkFunction,
    incidence_coefs: Sequence[float],
    latency_coefs: Sequence[float],
    shape_k: float,
):
    """Mixture survival 1 - p(x) + p(x) S_u(t | z).

    Coefficient vectors carry the intercept first, followed by one entry
    per covariate value in ``x`` (respectively ``z``).
    """
    inc = np.asarray(incidence_coefs, dtype=float)
    lat = np.asarray(latency_coefs, dtype=float)
    if inc.size != 1 + len(x):
        raise ValueError("incidence_coefs must hold an intercept plus one entry per x value")
    if lat.size != 1 + len(z):
        raise ValueError("latency_coefs must hold an intercept plus one entry per z value")
    p = link_eval(link, inc[0] + float(np.dot(inc[1:], x)))
    su = weibull_aft_survival(t, z, lat[0], lat[1:], shape_k)
    return 1.0 - p + p * su


@dataclass(frozen=True)
class ParametricCureFit:
    """Maximum likelihood fit of the mixture cure model."""

    link: LinkFunction
    incidence_covariates: tuple[str, ...]
    latency_covariates: tuple[str, ...]
    incidence_coefs: np.ndarray
    latency_coefs: np.ndarray
    shape_k: float
    log_likelihood: float
    converged: bool
    n_iterations: int


@dataclass(frozen=True)
class PromotionTimeModel:
    """Improper-survival model S(t) = exp(-theta F(t)) with cure rate e^-theta."""

    theta: float
    baseline_F: Callable[[float], float]

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError(f"theta must be non-negative, got {self.theta}")


def promotion_time_survival(model: PromotionTimeModel, t):
    t = np.asarray(t, dtype=float)
    f = np.vectorize(model.baseline_F, otypes=[float])(t)
    if np.any(f < 0) or np.any(f > 1):
        raise ValueError("baseline_F must map into [0, 1]")
    out = np.exp(-model.theta * f)
    return out if out.ndim else float(out)


def _design(sample: SurvivalSample, covariates: Sequence[str]) -> np.ndarray:
    cols = [np.ones(sample.n)]
    cols += [sample.covariate(name) for name in covariates]
    return np.column_stack(cols)


def mixture_log_likelihood(
    sample: SurvivalSample,
    link: LinkFunction,
    incidence_coefs: Sequence[float],
    latency_coefs: Sequence[float],
    shape_k: float,
    incidence_covariates: Sequence[str] = (),
    latency_covariates: Sequence[str] = (),
) -> float:
    """Log-likelihood of the mixture cure model on a censored sample.

    Uncensored subjects contribute log[p(x) f_u(t | z)]; censored subjects
    contribute log[1 - p(x) + p(x) S_u(t | z)].  Coefficient vectors carry
    the intercept first.  An empty ``incidence_coefs`` fixes p = 1
    (no cured fraction).  Raises :class:`LikelihoodError` when the result
    is not finite.
    """
    if not shape_k > 0:
        raise LikelihoodError(f"shape must be positive, got {shape_k}")
    lat = np.asarray(latency_coefs, dtype=float)
    if lat.size != 1 + len(latency_covariates):
        raise ValueError("latency_coefs must hold an intercept plus one entry per covariate")
    x_lat = _design(sample, latency_covariates)
    times = sample.times
    deltas = sample.deltas
    log_t = np.log(times)
    log_lam = x_lat @ lat
    w = shape_k * (log_t - log_lam)
    with np.errstate(over="ignore", under="ignore"):
        hz = np.exp(w)
        su = np.exp(-hz)
    log_f = math.log(shape_k) - log_lam + (shape_k - 1.0) * (log_t - log_lam) - hz
    events = deltas == 1
    inc = np.asarray(incidence_coefs, dtype=float)
    if inc.size == 0:
        event_terms = log_f[events]
        censor_terms = -hz[~events]
    else:
        if inc.size != 1 + len(incidence_covariates):
            raise ValueError("incidence_coefs must hold an intercept plus one entry per covariate")
        x_inc = _design(sample, incidence_covariates)
        p = link_eval(link, x_inc @ inc)
        with np.errstate(divide="ignore"):
            event_terms = np.log(p[events]) + log_f[events]
            pop = 1.0 - p[~events] + p[~events] * su[~events]
            censor_terms = np.log(np.clip(pop, 1e-300, None))
    ll = float(np.sum(event_terms) + np.sum(censor_terms))
    if not np.isfinite(ll):
        raise LikelihoodError("log-likelihood is not finite at these parameters")
    return ll


def log_likelihood_gradient_fd(
    sample: SurvivalSample,
    link: LinkFunction,
    incidence_coefs: Sequence[float],
    latency_coefs: Sequence[float],
    shape_k: float,
    incidence_covariates: Sequence[str] = (),
    latency_covariates: Sequence[str] = (),
    step: float = 1e-5,
) -> np.ndarray:
    """Central finite-difference gradient of the log-likelihood.

    Differentiates with respect to the stacked parameter vector
    (incidence coefs, latency coefs, shape) with a relative step.
    """
    theta = np.concatenate(
        [np.asarray(incidence_coefs, float), np.asarray(latency_coefs, float), [shape_k]]
    )
    n_inc = len(np.asarray(incidence_coefs, float))

    def value(vec: np.ndarray) -> float:
        return mixture_log_likelihood(
            sample,
            link,
            vec[:n_inc],
            vec[n_inc:-1],
            float(vec[-1]),
            incidence_covariates,
            latency_covariates,
        )

    grad = np.empty(theta.size)
    for i in range(theta.size):
        hi = step * max(1.0, abs(theta[i]))
        up = theta.copy()
        dn = theta.copy()
        up[i] += hi
        dn[i] -= hi
        grad[i] = (value(up) - value(dn)) / (2.0 * hi)
    return grad


def _moment_weibull_start(times: np.ndarray) -> tuple[float, float]:
    """Moment-matched Weibull start from uncensored log-times.

    For Weibull data, log T has variance (pi^2 / 6) / k^2 and mean
    log(lambda) - gamma_E / k.
    """
    logs = np.log(times)
    sd = float(np.std(logs, ddof=1)) if logs.size > 1 else 0.0
    k0 = math.pi / (math.sqrt(6.0) * sd) if sd > 0 else 1.0
    k0 = min(max(k0, 0.1), 50.0)
    gamma0 = float(np.mean(logs)) + _EULER_GAMMA / k0
    return gamma0, k0


def fit_mle(
    sample: SurvivalSample,
    link: LinkFunction,
    incidence_covariates: Sequence[str] = (),
    latency_covariates: Sequence[str] = (),
    *,
    max_iter: int = 500,
    tol: float = 1e-8,
    n_starts: int = 5,
    seed: int = 0,
    force_susceptible: bool = False,
) -> ParametricCureFit:
    """Maximize the mixture likelihood by multi-start quasi-Newton ascent.

    The optimizer works on the unconstrained vector (incidence coefs,
    latency coefs, log shape) with finite-difference gradients, declaring
    convergence when successive log-likelihood gains fall below ``tol``.
    The first start sets the incidence intercept to the link inverse of
    the observed uncensored fraction and takes the latency start from a
    Weibull moment fit on the uncensored subjects; the remaining
    ``n_starts - 1`` starts perturb it with substream (seed, start).
    The best final likelihood wins, earliest start on ties, so the result
    is deterministic given (seed, options).

    ``force_susceptible=True`` pins p = 1 and reduces the model to a plain
    Weibull AFT fit; otherwise a sample with no uncensored subjects is
    rejected as degenerate (the incidence is unidentifiable).

    Raises
    ------
    ValueError
        On a degenerate sample, unknown covariates, or bad options.
    """
    if max_iter < 1 or n_starts < 1:
        raise ValueError("max_iter and n_starts must be at least 1")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    events = sample.deltas == 1
    n_events = int(events.sum())
    if not force_susceptible and n_events == 0:
        raise ValueError(
            "sample has no uncensored observations; incidence is unidentifiable"
        )
    inc_names = tuple(incidence_covariates)
    lat_names = tuple(latency_covariates)
    n_inc = 0 if force_susceptible else 1 + len(inc_names)
    n_lat = 1 + len(lat_names)
    for name in {*inc_names, *lat_names}:
        sample.covariate(name)  # fail fast on unknown columns

    if n_events:
        gamma0, k0 = _moment_weibull_start(sample.times[events])
    else:
        gamma0, k0 = _moment_weibull_start(sample.times)
    base = np.zeros(n_inc + n_lat + 1)
    if not force_susceptible:
        frac = min(max(n_events / sample.n, 0.01), 0.99)
        base[0] = link_inverse(link, frac)
    base[n_inc] = gamma0
    base[-1] = math.log(k0)

    def objective(theta: np.ndarray) -> float:
        try:
            ll = mixture_log_likelihood(
                sample,
                link,
                theta[:n_inc],
                theta[n_inc:-1],
                math.exp(theta[-1]),
                inc_names,
                lat_names,
            )
        except LikelihoodError:
            return 1e15
        return -ll

    best = None
    for start in range(n_starts):
        theta0 = base.copy()
        if start > 0:
            rng = substream(seed, start)
            theta0 += rng.normal(0.0, 0.5, size=theta0.size)
        res = optimize.minimize(
            objective,
            theta0,
            method="L-BFGS-B",
            options={"maxiter": max_iter, "ftol": tol, "maxfun": 10 * max_iter * theta0.size},
        )
        if best is None or -res.fun > best[0]:
            best = (-res.fun, start, res)
    res = best[2]
    theta = res.x
    shape_k = math.exp(theta[-1])
    inc_coefs = theta[:n_inc].copy()
    lat_coefs = theta[n_inc:-1].copy()
    ll = mixture_log_likelihood(
        sample, link, inc_coefs, lat_coefs, shape_k, inc_names, lat_names
    )
    return ParametricCureFit(
        link=link,
        incidence_covariates=inc_names,
        latency_covariates=lat_names,
        incidence_coefs=inc_coefs,
        latency_coefs=lat_coefs,
        shape_k=shape_k,
        log_likelihood=ll,
        converged=bool(res.success),
        n_iterations=int(res.nit),
    )

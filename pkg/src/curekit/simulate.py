"""Mixture cure data generator that retains the latent ground truth.

Each subject draws covariates, a susceptibility indicator B, an event
time Y (infinite for the cured, who can never experience the event) and
a censoring time C; the observed data are T = min(Y, C) and
delta = 1{Y <= C}.  Cured subjects are therefore always censored.
Per-subject draws come from counter-based substreams of the seed, so the
generated cohort does not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_model import SurvivalSample
from .parametric import LinkFunction, link_eval
from .rng import substream


@dataclass(frozen=True)
class IncidenceSpec:
    """Susceptibility probability p(x) = link(intercept + age_coef*age + sex_coef*sex)."""

    link: LinkFunction
    intercept: float
    age_coef: float = 0.0
    sex_coef: float = 0.0


@dataclass(frozen=True)
class LatencySpec:
    """Weibull event-time law with scale exp(intercept + age_coef*age + sex_coef*sex)."""

    intercept: float
    age_coef: float = 0.0
    sex_coef: float = 0.0
    shape: float = 1.0

    def __post_init__(self) -> None:
        if not self.shape > 0:
            raise ValueError(f"Weibull shape must be positive, got {self.shape}")


@dataclass(frozen=True)
class CensoringSpec:
    """Censoring-time law: exponential with ``rate`` or uniform on (0, tau]."""

    law: str
    rate: float | None = None
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.law == "exponential":
            if self.rate is None or not self.rate > 0:
                raise ValueError("exponential censoring needs a positive rate")
        elif self.law == "uniform":
            if self.tau is None or not self.tau > 0:
                raise ValueError("uniform censoring needs a positive upper bound tau")
        else:
            raise ValueError(f"unknown censoring law {self.law!r}")


@dataclass(frozen=True)
class SimulationSpec:
    """Complete description of one synthetic cohort."""

    n: int
    age_range: tuple[float, float]
    sex_prob: float
    incidence: IncidenceSpec
    latency: LatencySpec
    censoring: CensoringSpec
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"cohort size must be at least 1, got {self.n}")
        lo, hi = self.age_range
        if not lo < hi:
            raise ValueError(f"age range must be increasing, got ({lo}, {hi})")
        if not 0.0 <= self.sex_prob <= 1.0:
            raise ValueError(f"sex probability must lie in [0, 1], got {self.sex_prob}")


@dataclass(frozen=True)
class SimulationTruth:
    """Latent quantities behind a simulated sample, aligned by subject."""

    susceptible: np.ndarray
    event_times: np.ndarray
    censor_times: np.ndarray
    susceptibility_prob: np.ndarray


def _susceptibility(spec: SimulationSpec, age: float, sex: float) -> float:
    inc = spec.incidence
    return float(
        link_eval(inc.link, inc.intercept + inc.age_coef * age + inc.sex_coef * sex)
    )


def _latency_scale(spec: SimulationSpec, age: float, sex: float) -> float:
    lat = spec.latency
    return math.exp(lat.intercept + lat.age_coef * age + lat.sex_coef * sex)


def simulate(spec: SimulationSpec) -> tuple[SurvivalSample, SimulationTruth]:
    """Generate one cohort and its latent truth.

    Subject i consumes only substream (seed, i), so the draw does not
    depend on cohort size or evaluation order.
    """
    n = spec.n
    age = np.empty(n)
    sex = np.empty(n)
    b = np.empty(n, dtype=int)
    y = np.empty(n)
    c = np.empty(n)
    p = np.empty(n)
    lo, hi = spec.age_range
    for i in range(n):
        rng = substream(spec.seed, i)
        age[i] = lo + (hi - lo) * rng.random()
        sex[i] = 1.0 if rng.random() < spec.sex_prob else 0.0
        p[i] = _susceptibility(spec, age[i], sex[i])
        b[i] = 1 if rng.random() < p[i] else 0
        lam = _latency_scale(spec, age[i], sex[i])
        if b[i]:
            u = rng.random()
            while u == 0.0:  # keep the event time strictly positive
                u = rng.random()
            y[i] = lam * (-math.log(u)) ** (1.0 / spec.latency.shape)
        else:
            rng.random()  # burn the slot so C draws align across specs
            y[i] = math.inf
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        if spec.censoring.law == "exponential":
            c[i] = -math.log(u) / spec.censoring.rate
        else:
            c[i] = spec.censoring.tau * u
    times = np.minimum(y, c)
    deltas = (y <= c).astype(int)
    sample = SurvivalSample(times=times, deltas=deltas, covariates={"age": age, "sex": sex})
    truth = SimulationTruth(
        susceptible=b, event_times=y, censor_times=c, susceptibility_prob=p
    )
    return sample, truth


def true_population_survival(spec: SimulationSpec, t: float, age: float, sex: float) -> float:
    """Exact population survival 1 - p(x) + p(x) S_u(t) under the spec."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    p = _susceptibility(spec, age, sex)
    lam = _latency_scale(spec, age, sex)
    su = math.exp(-((t / lam) ** spec.latency.shape))
    return 1.0 - p + p * su

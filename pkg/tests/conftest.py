import numpy as np
import pytest

from curekit import SurvivalSample


def make_censored_sample(rng, n, censor_scale=2.0, covariate=False):
    """Random right-censored sample: lognormal events against exponential censoring."""
    events = rng.lognormal(mean=0.5, sigma=0.6, size=n)
    censors = rng.exponential(scale=censor_scale, size=n)
    times = np.minimum(events, censors)
    deltas = (events <= censors).astype(int)
    cov = {"age": rng.uniform(20.0, 90.0, size=n)} if covariate else {}
    return SurvivalSample(times=times, deltas=deltas, covariates=cov)


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)

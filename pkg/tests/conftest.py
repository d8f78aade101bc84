import numpy as np
import pytest

from gabdiv import Measure


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def positive_probability(rng, n, weights=None):
    d = rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n
    if weights is None:
        return Measure(d)
    return Measure(d / weights, weights)


def positive_pair(rng, n, sub=True, weights=None):
    mp = float(rng.uniform(0.3, 1.0)) if sub else 1.0
    mq = float(rng.uniform(0.3, 1.0)) if sub else 1.0
    dp = (rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n) * mp
    dq = (rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n) * mq
    if weights is None:
        return Measure(dp), Measure(dq)
    return Measure(dp / weights, weights), Measure(dq / weights, weights)

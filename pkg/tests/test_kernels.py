"""Backend-agreement and zero-power-convention tests for the sum kernels."""

import math

import numpy as np
import pytest

from gabdiv import _kernels as K

BACKEND_NAMES = [name for name, impl in K.BACKENDS.items() if impl is not None]


def impl(backend, fn):
    return K.BACKENDS[backend][fn]


@pytest.mark.parametrize("backend", BACKEND_NAMES)
class TestConventions:
    def test_zero_power_positive_exponent(self, backend):
        p = np.array([0.0, 2.0])
        mu = np.ones(2)
        assert impl(backend, "power_sum")(p, mu, 3.0) == 8.0

    def test_zero_power_zero_exponent(self, backend):
        p = np.array([0.0, 2.0])
        mu = np.ones(2)
        assert impl(backend, "power_sum")(p, mu, 0.0) == 2.0

    def test_zero_power_negative_exponent_is_inf(self, backend):
        p = np.array([0.0, 2.0])
        mu = np.ones(2)
        assert impl(backend, "power_sum")(p, mu, -1.0) == math.inf

    def test_inner_zero_times_inf_is_nan(self, backend):
        # p = q = 0 at one atom with mixed signs: 0**a * 0**b = 0 * inf
        p = np.array([0.0, 0.5])
        q = np.array([0.0, 0.5])
        mu = np.ones(2)
        assert math.isnan(impl(backend, "inner_sum")(p, q, mu, 2.0, -1.0))

    def test_kl_support_mismatch_is_inf(self, backend):
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        mu = np.ones(2)
        assert impl(backend, "kl_sum")(p, q, mu) == math.inf

    def test_kl_zero_times_log_zero(self, backend):
        p = np.array([1.0, 0.0])
        q = np.array([0.5, 0.5])
        mu = np.ones(2)
        assert impl(backend, "kl_sum")(p, q, mu) == pytest.approx(math.log(2.0))


def test_backends_agree_on_random_inputs():
    if len(BACKEND_NAMES) < 2:
        pytest.skip("only one backend available")
    rng = np.random.default_rng(0)
    fns = ["power_sum", "inner_sum", "kl_sum", "xlogx_sum", "log_sum",
           "log_ratio_sum", "ratio_power_sum", "sq_log_diff_sum"]
    for _ in range(200):
        n = int(rng.integers(1, 20))
        p = rng.uniform(0.01, 2.0, n)
        q = rng.uniform(0.01, 2.0, n)
        mu = rng.uniform(0.1, 3.0, n)
        a = float(rng.uniform(-2.5, 2.5))
        b = float(rng.uniform(-2.5, 2.5))
        for fn in fns:
            if fn == "power_sum":
                args = (p, mu, a)
            elif fn == "inner_sum":
                args = (p, q, mu, a, b)
            elif fn == "xlogx_sum":
                args = (p, mu, a)
            elif fn == "ratio_power_sum":
                args = (p, q, mu, a)
            elif fn == "log_sum":
                args = (p, mu)
            else:
                args = (p, q, mu)
            vals = [impl(bk, fn)(*args) for bk in BACKEND_NAMES]
            assert vals[0] == pytest.approx(vals[1], rel=1e-13, abs=1e-13), fn

"""Weighted-sum kernels underlying every norm, inner product, and edge form.

All kernels take contiguous float64 arrays and scalar exponents and return a
plain float that may be +-inf.  Zero-power conventions are fixed package-wide:

    0 ** a = 0    for a > 0
    0 ** 0 = 1
    0 ** a = +inf for a < 0

A 0 * inf product inside a sum yields nan; callers translate nan into
NonFiniteResult.  numpy's float64 power already implements these conventions,
so the numpy backend only has to silence the corresponding warnings.

Two interchangeable backends exist: numba-jitted loops (default when numba is
importable) and pure numpy.  Set GABDIV_BACKEND=numpy or GABDIV_BACKEND=numba
to force one; `benchmarks/bench_kernels.py` compares them.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "ACTIVE_BACKEND",
    "BACKENDS",
    "power_sum",
    "inner_sum",
    "kl_sum",
    "xlogx_sum",
    "log_sum",
    "log_ratio_sum",
    "ratio_power_sum",
    "sq_log_diff_sum",
]


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _power_sum_np(p, mu, a):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return float(np.sum(np.power(p, a) * mu))


def _inner_sum_np(p, q, mu, a, b):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return float(np.sum(np.power(p, a) * np.power(q, b) * mu))


def _kl_sum_np(p, q, mu):
    # sum p*log(p/q)*mu with 0*log(0/q) = 0 and p>0, q=0 -> +inf
    out = np.zeros_like(p)
    pos = p > 0.0
    with np.errstate(divide="ignore"):
        out[pos] = p[pos] * np.log(p[pos] / q[pos]) * mu[pos]
    return float(np.sum(out))


def _xlogx_sum_np(p, mu, a):
    # sum p^a * log(p) * mu; the a > 0 convention sends zero atoms to 0
    pos = p > 0.0
    if not pos.all() and a <= 0.0:
        return math.nan
    out = np.zeros_like(p)
    with np.errstate(over="ignore"):
        out[pos] = np.power(p[pos], a) * np.log(p[pos]) * mu[pos]
    return float(np.sum(out))


def _log_sum_np(p, mu):
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(p) * mu))


def _log_ratio_sum_np(p, q, mu):
    # sum log(q/p)*mu, defined only for strictly positive inputs
    if np.any(p <= 0.0) or np.any(q <= 0.0):
        return math.nan
    return float(np.sum(np.log(q / p) * mu))


def _ratio_power_sum_np(p, q, mu, a):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return float(np.sum(np.power(p / q, a) * mu))


def _sq_log_diff_sum_np(p, q, mu):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.log(p) - np.log(q)
        return float(np.sum(d * d * mu))


_NUMPY_BACKEND = {
    "power_sum": _power_sum_np,
    "inner_sum": _inner_sum_np,
    "kl_sum": _kl_sum_np,
    "xlogx_sum": _xlogx_sum_np,
    "log_sum": _log_sum_np,
    "log_ratio_sum": _log_ratio_sum_np,
    "ratio_power_sum": _ratio_power_sum_np,
    "sq_log_diff_sum": _sq_log_diff_sum_np,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

def _build_numba_backend():
    from numba import njit

    jit = njit(cache=True, fastmath=False)

    @jit
    def _pow0(x, a):
        if x > 0.0:
            return x ** a
        if a > 0.0:
            return 0.0
        if a == 0.0:
            return 1.0
        return np.inf

    @jit
    def power_sum(p, mu, a):
        s = 0.0
        for i in range(p.shape[0]):
            s += _pow0(p[i], a) * mu[i]
        return s

    @jit
    def inner_sum(p, q, mu, a, b):
        s = 0.0
        for i in range(p.shape[0]):
            s += _pow0(p[i], a) * _pow0(q[i], b) * mu[i]
        return s

    @jit
    def kl_sum(p, q, mu):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0:
                if q[i] > 0.0:
                    s += p[i] * math.log(p[i] / q[i]) * mu[i]
                else:
                    return np.inf
        return s

    @jit
    def xlogx_sum(p, mu, a):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0:
                s += p[i] ** a * math.log(p[i]) * mu[i]
            elif a <= 0.0:
                return np.nan
        return s

    @jit
    def log_sum(p, mu):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0:
                s += math.log(p[i]) * mu[i]
            else:
                return -np.inf
        return s

    @jit
    def log_ratio_sum(p, q, mu):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0 and q[i] > 0.0:
                s += math.log(q[i] / p[i]) * mu[i]
            else:
                return np.nan
        return s

    @jit
    def ratio_power_sum(p, q, mu, a):
        s = 0.0
        for i in range(p.shape[0]):
            if q[i] > 0.0:
                s += _pow0(p[i] / q[i], a) * mu[i]
            elif p[i] > 0.0:
                # ratio is +inf: inf**a follows the same conventions mirrored
                if a > 0.0:
                    return np.inf
                elif a == 0.0:
                    s += mu[i]
            else:
                return np.nan
        return s

    @jit
    def sq_log_diff_sum(p, q, mu):
        s = 0.0
        for i in range(p.shape[0]):
            if p[i] > 0.0 and q[i] > 0.0:
                d = math.log(p[i]) - math.log(q[i])
                s += d * d * mu[i]
            elif p[i] > 0.0 or q[i] > 0.0:
                return np.inf
            else:
                return np.nan
        return s

    def as_float(fn):
        def wrapped(*args):
            return float(fn(*args))

        wrapped.__name__ = fn.py_func.__name__
        return wrapped

    return {
        "power_sum": as_float(power_sum),
        "inner_sum": as_float(inner_sum),
        "kl_sum": as_float(kl_sum),
        "xlogx_sum": as_float(xlogx_sum),
        "log_sum": as_float(log_sum),
        "log_ratio_sum": as_float(log_ratio_sum),
        "ratio_power_sum": as_float(ratio_power_sum),
        "sq_log_diff_sum": as_float(sq_log_diff_sum),
    }


def _select_backend():
    choice = os.environ.get("GABDIV_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise RuntimeError(f"GABDIV_BACKEND must be auto|numba|numpy, got {choice!r}")
    backends = {"numpy": _NUMPY_BACKEND, "numba": None}
    if choice == "numpy":
        return backends, "numpy"
    try:
        backends["numba"] = _build_numba_backend()
    except ImportError:
        if choice == "numba":
            raise RuntimeError("GABDIV_BACKEND=numba but numba is not importable")
        return backends, "numpy"
    return backends, "numba"


BACKENDS, ACTIVE_BACKEND = _select_backend()

_active = BACKENDS[ACTIVE_BACKEND]
power_sum = _active["power_sum"]
inner_sum = _active["inner_sum"]
kl_sum = _active["kl_sum"]
xlogx_sum = _active["xlogx_sum"]
log_sum = _active["log_sum"]
log_ratio_sum = _active["log_ratio_sum"]
ratio_power_sum = _active["ratio_power_sum"]
sq_log_diff_sum = _active["sq_log_diff_sum"]

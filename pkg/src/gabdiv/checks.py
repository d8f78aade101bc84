"""Randomized property suites behind `gabdiv check-properties`.

Each suite draws deterministic pseudo-random measure pairs per hyperparameter
regime (child seeds are derived as seed + suite index, so concurrent or
repeated runs agree bit-for-bit) and reports its worst violation against the
contract tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from . import divergence as dv
from .measures import Hyper, Measure
from .psi import parse_spec

__all__ = [
    "SuiteResult",
    "REGIME_SAMPLERS",
    "random_positive_probability",
    "random_positive_pair",
    "run_property_suites",
]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    trials: int
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def _uniform_away(rng, lo, hi, avoid=(), gap=0.05):
    while True:
        x = float(rng.uniform(lo, hi))
        if all(abs(x - a) > gap for a in avoid):
            return x


def _h_general_pp(rng):
    return Hyper.of(_uniform_away(rng, 0.2, 2.5), _uniform_away(rng, 0.2, 2.5))


def _h_general_nn(rng):
    return Hyper.of(_uniform_away(rng, -2.5, -0.2), _uniform_away(rng, -2.5, -0.2))


def _h_general_pn(rng):
    while True:
        a = _uniform_away(rng, 0.3, 2.5)
        b = _uniform_away(rng, -2.3, -0.1)
        if abs(a + b) > 0.05 and abs(a + b - 1.0) > 0.05:
            return Hyper.of(a, b)


def _h_general_np(rng):
    h = _h_general_pn(rng)
    return Hyper.of(h.beta, h.alpha)


def _h_sum_one_mid(rng):
    a = _uniform_away(rng, 0.05, 0.95)
    return Hyper.of(a, 1.0 - a)


def _h_sum_one_outer(rng):
    a = _uniform_away(rng, 1.1, 3.0) if rng.random() < 0.5 \
        else _uniform_away(rng, -2.0, -0.1)
    return Hyper.of(a, 1.0 - a)


def _h_kl_edge(rng):
    return Hyper.of(1.0, 0.0) if rng.random() < 0.5 else Hyper.of(0.0, 1.0)


def _h_beta_zero(rng):
    a = _uniform_away(rng, 0.2, 2.5, avoid=(1.0,)) if rng.random() < 0.7 \
        else _uniform_away(rng, -2.0, -0.2)
    return Hyper.of(a, 0.0)


def _h_alpha_zero(rng):
    h = _h_beta_zero(rng)
    return Hyper.of(0.0, h.alpha)


def _h_sum_zero(rng):
    a = _uniform_away(rng, 0.2, 2.5) * (1.0 if rng.random() < 0.5 else -1.0)
    return Hyper.of(a, -a)


def _h_both_zero(rng):
    return Hyper.of(0.0, 0.0)


REGIME_SAMPLERS: List[Tuple[str, Callable]] = [
    ("general++", _h_general_pp),
    ("general--", _h_general_nn),
    ("general+-", _h_general_pn),
    ("general-+", _h_general_np),
    ("sum1-mid", _h_sum_one_mid),
    ("sum1-outer", _h_sum_one_outer),
    ("kl-edge", _h_kl_edge),
    ("beta0", _h_beta_zero),
    ("alpha0", _h_alpha_zero),
    ("sum0", _h_sum_zero),
    ("both0", _h_both_zero),
]


def random_positive_probability(rng, n: int, weights=None) -> Measure:
    """A strictly positive probability measure on n atoms."""
    d = rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n
    if weights is None:
        return Measure(d)
    return Measure(d / weights, weights)


def random_positive_pair(rng, n_max: int = 50, sub: bool = True):
    """A strictly positive (sub-)probability pair on a shared alphabet."""
    n = int(rng.integers(2, n_max + 1))
    weights = None
    if rng.random() < 0.3:
        weights = rng.uniform(0.5, 2.0, size=n)
    mass_p = float(rng.uniform(0.3, 1.0)) if sub else 1.0
    mass_q = float(rng.uniform(0.3, 1.0)) if sub else 1.0
    dp = (rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n) * mass_p
    dq = (rng.dirichlet(np.ones(n)) * 0.95 + 0.05 / n) * mass_q
    if weights is None:
        return Measure(dp), Measure(dq)
    return Measure(dp / weights, weights), Measure(dq / weights, weights)


_SUITE_PSIS = ["identity", "log", "power:2", "bridge:1,2"]


def _nonneg_suite(spec: str, seed: int, trials: int) -> SuiteResult:
    f = parse_spec(spec)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    count = 0
    for _, sampler in REGIME_SAMPLERS:
        for _ in range(trials):
            h = sampler(rng)
            P, Q = random_positive_pair(rng, n_max=30)
            r = dv.gab(P, Q, h, f)
            count += 1
            if np.isfinite(r.value):
                worst = max(worst, -r.value / r.scale)
    return SuiteResult(f"nonneg[{spec}]", count, worst, 1e-9)


def _identity_suite(seed: int, trials: int) -> SuiteResult:
    f = parse_spec("log")
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    for _, sampler in REGIME_SAMPLERS:
        for _ in range(trials):
            h = sampler(rng)
            P = random_positive_probability(rng, int(rng.integers(2, 31)))
            r = dv.gab(P, P, h, f)
            count += 1
            worst = max(worst, abs(r.value))
    return SuiteResult("identity-at-equality", count, worst, 1e-12)


def _gap_suite(name, seed, trials, gap_fn, tol) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, gap_fn(rng))
    return SuiteResult(name, trials, worst, tol)


def _general_hyper(rng) -> Hyper:
    sampler = (_h_general_pp, _h_general_pn, _h_general_np)[int(rng.integers(3))]
    return sampler(rng)


def run_property_suites(seed: int = 42, trials: int = 1000):
    """Run all randomized suites; returns (results, all_passed)."""
    f_log = parse_spec("log")
    f_id = parse_spec("identity")

    def duality(rng):
        h = _general_hyper(rng)
        P, Q = random_positive_pair(rng, n_max=30)
        lhs = dv.gab(P, Q, h, f_log)
        rhs = dv.gab(Q, P, Hyper.of(h.beta, h.alpha), f_log)
        return abs(lhs.value - rhs.value) / max(lhs.scale, rhs.scale)

    def scaling(rng):
        h = _general_hyper(rng)
        P, Q = random_positive_pair(rng, n_max=30)
        gap = dv.scaling_identity_gap(P, Q, h, f_log, c=0.7)
        return abs(gap) / dv.gab(P, Q, h, f_log).scale

    def zooming(rng):
        h = _general_hyper(rng)
        P, Q = random_positive_pair(rng, n_max=30)
        w = (2.0, -1.0, 0.5)[int(rng.integers(3))]
        gap = dv.zooming_identity_gap(P, Q, h, f_log, w)
        return abs(gap) / dv.gab(P, Q, h, f_log).scale

    def reduction(rng):
        h = _general_hyper(rng)
        P, Q = random_positive_pair(rng, n_max=30)
        which = "beta" if rng.random() < 0.5 else "alpha"
        gap = dv.reduction_identity_gap(P, Q, h, f_log, which=which)
        return abs(gap) / dv.gab(P, Q, h, f_log).scale

    def dtilde(rng):
        h = _general_hyper(rng)
        P, Q = random_positive_pair(rng, n_max=30)
        direct = dv.gab(P, Q, h, f_id)
        via = -dv.d_tilde(P, P, h, f_id) + dv.d_tilde(P, Q, h, f_id)
        return abs(direct.value - via) / direct.scale

    results = []
    for i, spec in enumerate(_SUITE_PSIS):
        results.append(_nonneg_suite(spec, seed + i, trials))
    results.append(_identity_suite(seed + 10, trials))
    results.append(_gap_suite("duality", seed + 11, trials, duality, 1e-10))
    results.append(_gap_suite("scaling", seed + 12, trials, scaling, 1e-10))
    results.append(_gap_suite("zooming", seed + 13, trials, zooming, 1e-10))
    results.append(_gap_suite("reduction-to-1", seed + 14, trials, reduction, 1e-10))
    results.append(_gap_suite("dtilde-identity", seed + 15, trials, dtilde, 1e-12))
    return results, all(r.passed for r in results)

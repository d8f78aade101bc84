"""The entropy family induced by the divergence, with axioms and probes.

For alpha, beta, alpha+beta all nonzero the entropy of a distribution is

    -(1/beta) [ psi(||p||_{a+b}^{a+b})/(a+b) - psi(||p||_a^a)/a ],

the negative divergence to the uniform reference up to terms free of p.  The
value scaled by alpha*(alpha+beta) is comparable across hyperparameters: at
a degenerate distribution it equals psi(1) regardless of (alpha, beta).

Edge forms for the zero axes follow the displayed limits; they drop additive
constants that diverge with the total base weight, so they are entropies up
to a constant offset, which is all that maximization and the axioms need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import _kernels as K
from .errors import BadParams, FactorizationViolated, NonFiniteResult, NotConverged, UnsupportedSupport
from .measures import Hyper, Measure, Regime, norm_pow, product_measure
from .psi import GenFn

__all__ = [
    "EntropyValue",
    "gabe",
    "log_norm_entropy",
    "bernoulli_curve",
    "additivity_gap",
    "ConcavityReport",
    "concavity_probe",
    "MaxEntProbeReport",
    "max_entropy_probe",
]


@dataclass(frozen=True)
class EntropyValue:
    value: float
    scaled_value: float
    regime: Regime

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "scaled_value": self.scaled_value,
            "regime": self.regime.value,
        }


def _psi(f: GenFn, x: float) -> float:
    return float(f.eval(x))


def _require_c1(f: GenFn, where: str) -> None:
    if not f.at_least("C1") or f.deriv is None:
        raise BadParams(f"{where} needs a C1 generating function, got {f.name}")


def _require_positive(P: Measure, who: str) -> None:
    if np.any(P.density == 0.0):
        raise UnsupportedSupport(f"{who} requires strictly positive densities")


def gabe(P: Measure, h: Hyper, f: GenFn) -> EntropyValue:
    """Entropy of P under hyperparameters h and generating function f."""
    a, b = h.alpha, h.beta
    p, mu = P.density, P.base_weight
    if a == 0.0 and b == 0.0:
        _require_c1(f, "the alpha = beta = 0 entropy")
        _require_positive(P, "the alpha = beta = 0 entropy")
        lp = np.log(p)
        value = -0.5 * float(f.deriv(1.0)) * float(np.sum(lp * lp * mu))
    elif b == 0.0:
        _require_c1(f, "the beta = 0 entropy")
        if a < 0.0:
            _require_positive(P, "the beta = 0 entropy with alpha < 0")
        n_a = K.power_sum(p, mu, a)
        xlog = K.xlogx_sum(p, mu, a)
        if math.isnan(xlog):
            raise NonFiniteResult("p^a log p integral is indeterminate")
        value = _psi(f, n_a) / (a * a) - float(f.deriv(n_a)) * xlog / a
    elif a == 0.0:
        _require_c1(f, "the alpha = 0 entropy")
        _require_positive(P, "the alpha = 0 entropy")
        n_b = K.power_sum(p, mu, b)
        value = float(f.deriv(1.0)) * K.log_sum(p, mu) / b - _psi(f, n_b) / (b * b)
    elif a + b == 0.0:
        _require_c1(f, "the alpha + beta = 0 entropy")
        _require_positive(P, "the alpha + beta = 0 entropy")
        n_a = K.power_sum(p, mu, a)
        value = float(f.deriv(1.0)) * K.log_sum(p, mu) / a - _psi(f, n_a) / (a * a)
    else:
        if (a < 0.0 or a + b < 0.0) and np.any(p == 0.0):
            raise UnsupportedSupport("zero atom meets a negative norm exponent")
        n_ab = K.power_sum(p, mu, a + b)
        n_a = K.power_sum(p, mu, a)
        value = -(_psi(f, n_ab) / (a + b) - _psi(f, n_a) / a) / b
    if math.isnan(value):
        raise NonFiniteResult("entropy combination is indeterminate")
    return EntropyValue(value, a * (a + b) * value, h.regime)


def log_norm_entropy(P: Measure, a: float, b: float) -> float:
    """The two-index logarithmic norm entropy ab [ln||p||_a - ln||p||_b]/(b-a).

    At b -> 1 this reduces to the Renyi entropy of order a.  The psi = log
    entropy equals this value at (a, a+beta) divided by a*(a+b).
    """
    if a == 0.0 or b == 0.0 or a == b:
        raise BadParams("log-norm entropy needs a, b nonzero and distinct")
    la = math.log(norm_pow(P, a)) / a
    lb = math.log(norm_pow(P, b)) / b
    return a * b * (la - lb) / (b - a)


def bernoulli_curve(h: Hyper, f: GenFn, grid: Sequence[float]) -> np.ndarray:
    """Rows (p, scaled entropy) for two-atom distributions (p, 1-p)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid < 0.0) or np.any(grid > 1.0):
        raise BadParams("curve grid must lie in [0, 1]")
    rows = np.empty((grid.size, 2))
    for i, p in enumerate(grid):
        m = Measure([p, 1.0 - p])
        rows[i, 0] = p
        rows[i, 1] = gabe(m, h, f).scaled_value
    return rows


def additivity_gap(P: Measure, Q: Measure, h: Hyper, f: GenFn,
                   g: Callable[[float], float], hfun: Callable[[float], float]) -> float:
    """ent(P*Q; psi) - ent(P; g o psi) - ent(Q; h o psi).

    Requires the factorization psi(xy) = g(psi(x)) + h(psi(y)) to hold on
    the norm values actually encountered; checked on the fly to 1e-8.
    """
    a, b = h.alpha, h.beta
    if a == 0.0 or b == 0.0 or a + b == 0.0:
        raise BadParams("additivity is probed in the general regime")
    R = product_measure(P, Q)
    for expo in (a, a + b):
        x = norm_pow(P, expo)
        y = norm_pow(Q, expo)
        lhs = _psi(f, x * y)
        rhs = float(g(_psi(f, x))) + float(hfun(_psi(f, y)))
        if abs(lhs - rhs) > 1e-8 * (1.0 + abs(lhs)):
            raise FactorizationViolated(
                f"psi(xy) != g(psi(x)) + h(psi(y)) at norms for exponent {expo}"
            )
    g_of_psi = GenFn(name=f"g({f.name})", eval=lambda x: float(g(_psi(f, x))),
                     deriv=None, smoothness="C0")
    h_of_psi = GenFn(name=f"h({f.name})", eval=lambda x: float(hfun(_psi(f, x))),
                     deriv=None, smoothness="C0")
    return (
        gabe(R, h, f).value
        - gabe(P, h, g_of_psi).value
        - gabe(Q, h, h_of_psi).value
    )


# ---------------------------------------------------------------------------
# Concavity classification and probing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcavityReport:
    condition: Optional[int]       # 1..4, or None when no condition matched
    condition_note: str
    probe_passed: bool
    trials: int
    counterexample: Optional[Tuple[Measure, Measure, float]]


def _psi_convex_on_grid(f: GenFn) -> bool:
    xs = np.geomspace(1e-4, 1e4, 401)
    vals = np.asarray(f.eval(xs), dtype=float)
    if f.second is not None:
        sec = np.asarray(f.second(xs), dtype=float)
        return bool(np.all(sec >= -1e-9 * (1.0 + np.abs(vals))))
    # geometric grid: convexity of the chord at unequal spacing
    x0, x1, x2 = xs[:-2], xs[1:-1], xs[2:]
    lam = (x2 - x1) / (x2 - x0)
    chord = lam * np.asarray(f.eval(x0), dtype=float) \
        + (1.0 - lam) * np.asarray(f.eval(x2), dtype=float)
    return bool(np.all(chord - vals[1:-1] >= -1e-9 * (1.0 + np.abs(vals[1:-1]))))


def _log_norm_midpoint_convex(pairs, a: float) -> bool:
    for P, Q in pairs:
        mid = Measure(0.5 * (P.density + Q.density), P.base_weight, P.labels,
                      check_mass=False)
        lm = math.log(norm_pow(mid, a)) / a
        lp = math.log(norm_pow(P, a)) / a
        lq = math.log(norm_pow(Q, a)) / a
        if lm > 0.5 * (lp + lq) + 1e-10 * (1.0 + abs(lm)):
            return False
    return True


def match_concavity_condition(h: Hyper, f: GenFn, premise_pairs=()) -> Tuple[Optional[int], str]:
    """Match (h, f) against the four sufficient concavity condition sets.

    Sign constraints are exact; the 'psi convex' premise is checked on a
    grid and the 'log-norm convex' premise on the supplied probe pairs.
    """
    a, b = h.alpha, h.beta
    s = a + b
    psi_cvx = _psi_convex_on_grid(f)
    if a < 0.0 < b and s > 1.0 and psi_cvx:
        return 2, "alpha<0<beta, alpha+beta>1, psi convex"
    if a > 1.0 and b < 0.0 and s < 0.0 and psi_cvx:
        return 4, "alpha>1>0>beta, alpha+beta<0, psi convex"
    if a < 0.0 < b and s != 0.0 and s != 1.0 and premise_pairs \
            and _log_norm_midpoint_convex(premise_pairs, s):
        return 1, "alpha<0<beta, log-norm(alpha+beta) convex on probe pairs"
    if a > 0.0 > b and s < 0.0 and premise_pairs \
            and _log_norm_midpoint_convex(premise_pairs, a):
        return 3, "alpha>0>beta, alpha+beta<0, log-norm(alpha) convex on probe pairs"
    return None, "no sufficient concavity condition matched"


def concavity_probe(h: Hyper, f: GenFn, trials: int, n: int = 6,
                    seed: int = 0, tol: float = 1e-10) -> ConcavityReport:
    """Midpoint-concavity probe of the entropy on random positive pairs.

    Reports whether a sufficient condition matched and whether the probe
    found any violation; a pass outside all conditions is reported without
    being asserted as a guarantee.
    """
    if trials < 1:
        raise BadParams("trials must be >= 1")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(trials):
        p = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
        q = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
        pairs.append((Measure(p), Measure(q)))
    condition, note = match_concavity_condition(h, f, premise_pairs=pairs[:50])
    passed = True
    counterexample = None
    for P, Q in pairs:
        mid = Measure(0.5 * (P.density + Q.density), P.base_weight, P.labels)
        lhs = gabe(mid, h, f).value
        rhs = 0.5 * (gabe(P, h, f).value + gabe(Q, h, f).value)
        if lhs < rhs - tol:
            passed = False
            counterexample = (P, Q, lhs - rhs)
            break
    return ConcavityReport(condition, note, passed, trials, counterexample)


# ---------------------------------------------------------------------------
# Simplex maximization probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxEntProbeReport:
    argmax: np.ndarray
    max_value: float
    uniform_value: float
    claimed_value: float
    converged: bool


def max_entropy_probe(n: int, h: Hyper, f: GenFn, starts: int = 20,
                      seed: int = 0) -> MaxEntProbeReport:
    """Numerically maximize the entropy over the n-simplex.

    Multistart Nelder-Mead over a softmax reparameterization.  The report
    carries the numeric maximum, the value at the uniform distribution, and
    the claimed closed-form maximum psi(n^{a+b-1})/(a(a+b)) side by side;
    the two disagree for some generating functions, so neither is asserted.
    """
    if n < 2:
        raise BadParams("the probe needs an alphabet of size >= 2")
    rng = np.random.default_rng(seed)

    def neg_entropy(z):
        z = z - np.max(z)
        p = np.exp(z)
        p /= p.sum()
        try:
            return -gabe(Measure(p, check_mass=False), h, f).value
        except Exception:
            return math.inf

    best_x, best_v, converged = None, math.inf, False
    for k in range(starts):
        z0 = np.zeros(n) if k == 0 else rng.normal(size=n)
        res = minimize(neg_entropy, z0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        if res.fun < best_v:
            best_v = float(res.fun)
            best_x = np.asarray(res.x)
        converged = converged or bool(res.success)
    if not converged or best_x is None:
        raise NotConverged("no Nelder-Mead start reached tolerance")
    z = best_x - np.max(best_x)
    p = np.exp(z)
    p /= p.sum()
    uniform = Measure(np.full(n, 1.0 / n))
    a, b = h.alpha, h.beta
    claimed = _psi(f, float(n) ** (a + b - 1.0)) / (a * (a + b))
    return MaxEntProbeReport(
        argmax=p,
        max_value=-best_v,
        uniform_value=gabe(uniform, h, f).value,
        claimed_value=claimed,
        converged=converged,
    )

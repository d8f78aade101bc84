"""The generalized alpha-beta divergence, its edge regimes, and identities.

The general form combines three transformed terms,

    psi(||p||_{a+b}^{a+b}) / (b(a+b)) + psi(||q||_{a+b}^{a+b}) / (a(a+b))
        - psi(<p,q>_{a,b}) / (ab),

and the b = 0, a = 0, a+b = 0 and a = b = 0 axes carry the limit forms.
Regime dispatch compares a and b to zero exactly; values merely close to a
boundary are evaluated with the general formula and flagged with a
conditioning warning instead of being silently switched.

Tolerances throughout are stated against ``scale = 1 + sum |term|``, which
guards against cancellation blow-up when quadrature measures make individual
terms large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import _kernels as K
from .errors import (
    BadParams,
    DimensionMismatch,
    NonFiniteResult,
    UnsupportedSupport,
)
from .measures import (
    Hyper,
    Measure,
    Regime,
    inner,
    norm_pow,
    total_weight,
    zoom_unnorm,
)
from .psi import GenFn, scale_psi

__all__ = [
    "DivergenceValue",
    "gab",
    "gab_special",
    "SPECIAL_FAMILIES",
    "special_gab_equivalent",
    "duality_gap",
    "scaling_identity_gap",
    "zooming_identity_gap",
    "reduction_identity_gap",
    "alpha_convex_mix",
    "d_tilde",
    "pythagorean_gap",
    "contamination_weight",
]

_EDGE_WARN = 1e-6


@dataclass(frozen=True)
class DivergenceValue:
    """A divergence value with the regime used and conditioning warnings."""

    value: float
    regime: Regime
    warnings: Tuple[str, ...] = ()
    scale: float = 1.0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "regime": self.regime.value,
            "warnings": list(self.warnings),
            "scale": self.scale,
        }


def _require_same_alphabet(P: Measure, Q: Measure) -> None:
    if not P.same_alphabet(Q):
        raise DimensionMismatch("measures live on different alphabets")


def _finite_or_raise(value: float, context: str) -> float:
    if math.isnan(value):
        raise NonFiniteResult(f"indeterminate value in {context}")
    return value


def _scale(terms) -> float:
    s = 1.0
    for t in terms:
        if math.isfinite(t):
            s += abs(t)
    return s


def _psi(f: GenFn, x: float) -> float:
    return float(f.eval(x))


def _psi_d(f: GenFn, x: float) -> float:
    return float(f.deriv(x))


def _require_c1(f: GenFn, where: str) -> None:
    if not f.at_least("C1") or f.deriv is None:
        raise BadParams(f"{where} needs a C1 generating function, got {f.name}")


def _require_positive(M: Measure, who: str) -> None:
    if np.any(M.density == 0.0):
        raise UnsupportedSupport(f"{who} requires strictly positive densities")


def _gab_general(P: Measure, Q: Measure, a: float, b: float, f: GenFn):
    s = a + b
    if s < 0.0 and (np.any(P.density == 0.0) or np.any(Q.density == 0.0)):
        raise UnsupportedSupport("zero atom meets negative exponent a+b")
    if a < 0.0 and np.any(P.density == 0.0):
        raise UnsupportedSupport("zero atom in P meets negative exponent alpha")
    if b < 0.0 and np.any(Q.density == 0.0):
        raise UnsupportedSupport("zero atom in Q meets negative exponent beta")
    np_ = K.power_sum(P.density, P.base_weight, s)
    nq = K.power_sum(Q.density, Q.base_weight, s)
    ip = _finite_or_raise(
        K.inner_sum(P.density, Q.density, P.base_weight, a, b), "inner product"
    )
    t1 = _psi(f, np_) / (b * s)
    t2 = _psi(f, nq) / (a * s)
    t3 = -_psi(f, ip) / (a * b)
    value = _finite_or_raise(t1 + t2 + t3, "general-form combination")
    return value, (t1, t2, t3)


def _gab_beta_zero(P: Measure, Q: Measure, a: float, f: GenFn):
    _require_c1(f, "the beta = 0 edge form")
    if a < 0.0:
        _require_positive(P, "the beta = 0 edge with alpha < 0")
        _require_positive(Q, "the beta = 0 edge with alpha < 0")
    np_ = K.power_sum(P.density, P.base_weight, a)
    nq = K.power_sum(Q.density, Q.base_weight, a)
    pa = np.power(P.density, a)
    qa = np.power(Q.density, a)
    dstar = K.kl_sum(pa, qa, P.base_weight)
    t1 = _psi_d(f, np_) * dstar / (a * a)
    t2 = -_psi(f, np_) / (a * a)
    t3 = _psi(f, nq) / (a * a)
    value = _finite_or_raise(t1 + t2 + t3, "beta = 0 edge form")
    return value, (t1, t2, t3)


def _gab_sum_zero(P: Measure, Q: Measure, a: float, f: GenFn):
    # limit of the general form as beta -> -alpha; on a base measure of total
    # weight W the constant terms carry psi(W) and psi'(W), not psi(1)
    _require_c1(f, "the alpha + beta = 0 edge form")
    _require_positive(P, "the alpha + beta = 0 edge")
    _require_positive(Q, "the alpha + beta = 0 edge")
    w_total = total_weight(P)
    log_ratio = a * _finite_or_raise(
        K.log_ratio_sum(P.density, Q.density, P.base_weight), "log-ratio integral"
    )
    ratio = _finite_or_raise(
        K.ratio_power_sum(P.density, Q.density, P.base_weight, a), "ratio norm"
    )
    t1 = _psi_d(f, w_total) * log_ratio / (a * a)
    t2 = _psi(f, ratio) / (a * a)
    t3 = -_psi(f, w_total) / (a * a)
    value = _finite_or_raise(t1 + t2 + t3, "alpha + beta = 0 edge form")
    return value, (t1, t2, t3)


def _gab_both_zero(P: Measure, Q: Measure, f: GenFn):
    _require_c1(f, "the alpha = beta = 0 edge form")
    _require_positive(P, "the alpha = beta = 0 edge")
    _require_positive(Q, "the alpha = beta = 0 edge")
    sq = K.sq_log_diff_sum(P.density, Q.density, P.base_weight)
    t1 = 0.5 * _psi_d(f, 1.0) * sq
    value = _finite_or_raise(t1, "alpha = beta = 0 edge form")
    return value, (t1,)


def gab(P: Measure, Q: Measure, h: Hyper, f: GenFn) -> DivergenceValue:
    """Evaluate the divergence between P and Q for hyperparameters h.

    Dispatches on exact zero comparisons of alpha, beta, and alpha + beta.
    Values within 1e-6 of an axis are still computed with the general
    formula and reported with a conditioning warning.
    """
    _require_same_alphabet(P, Q)
    a, b = h.alpha, h.beta
    warnings = []
    if a == 0.0 and b == 0.0:
        value, terms = _gab_both_zero(P, Q, f)
    elif b == 0.0:
        value, terms = _gab_beta_zero(P, Q, a, f)
    elif a == 0.0:
        value, terms = _gab_beta_zero(Q, P, b, f)
    elif a + b == 0.0:
        value, terms = _gab_sum_zero(P, Q, a, f)
    else:
        for label, x in (("alpha", a), ("beta", b), ("alpha+beta", a + b),
                         ("alpha+beta-1", a + b - 1.0)):
            if x != 0.0 and abs(x) < _EDGE_WARN:
                warnings.append(
                    f"{label} = {x:.3e} is near a regime boundary; "
                    "the general formula is ill-conditioned there"
                )
        value, terms = _gab_general(P, Q, a, b, f)
    return DivergenceValue(value, h.regime, tuple(warnings), _scale(terms))


# ---------------------------------------------------------------------------
# Structural identities
# ---------------------------------------------------------------------------

def duality_gap(P: Measure, Q: Measure, h: Hyper, f: GenFn) -> float:
    """d^{(a,b)}(P,Q) - d^{(b,a)}(Q,P); identically zero in exact arithmetic."""
    swapped = Hyper.of(h.beta, h.alpha)
    return gab(P, Q, h, f).value - gab(Q, P, swapped, f).value


def scaling_identity_gap(P: Measure, Q: Measure, h: Hyper, f: GenFn, c: float) -> float:
    """d(cP, cQ; psi) - d(P, Q; psi_{c^{a+b}}) for 0 < c with cP, cQ in-bounds."""
    if c <= 0.0:
        raise BadParams("scaling constant must be > 0")
    cP = Measure(c * P.density, P.base_weight, P.labels, check_mass=False)
    cQ = Measure(c * Q.density, Q.base_weight, Q.labels, check_mass=False)
    lhs = gab(cP, cQ, h, f).value
    rhs = gab(P, Q, h, scale_psi(f, c ** h.sum)).value
    return lhs - rhs


def zooming_identity_gap(P: Measure, Q: Measure, h: Hyper, f: GenFn, w: float) -> float:
    """d(P^w, Q^w; a, b) - w^2 d(P, Q; wa, wb)."""
    if w == 0.0:
        raise BadParams("zoom exponent must be nonzero")
    lhs = gab(zoom_unnorm(P, w), zoom_unnorm(Q, w), h, f).value
    rhs = (w * w) * gab(P, Q, Hyper.of(w * h.alpha, w * h.beta), f).value
    return lhs - rhs


def reduction_identity_gap(P: Measure, Q: Measure, h: Hyper, f: GenFn,
                           which: str = "beta") -> float:
    """Gap of the make-one-hyperparameter-1 rewrite.

    which='beta':  d^{(a,b)}(P,Q) - (1/b^2) d^{(a/b,1)}(P^b,Q^b)
    which='alpha': d^{(a,b)}(P,Q) - (1/a^2) d^{(1,b/a)}(P^a,Q^a)
    """
    a, b = h.alpha, h.beta
    lhs = gab(P, Q, h, f).value
    if which == "beta":
        if b == 0.0:
            raise BadParams("beta-reduction needs beta != 0")
        rhs = gab(zoom_unnorm(P, b), zoom_unnorm(Q, b), Hyper.of(a / b, 1.0), f).value / (b * b)
    elif which == "alpha":
        if a == 0.0:
            raise BadParams("alpha-reduction needs alpha != 0")
        rhs = gab(zoom_unnorm(P, a), zoom_unnorm(Q, a), Hyper.of(1.0, b / a), f).value / (a * a)
    else:
        raise BadParams("which must be 'alpha' or 'beta'")
    return lhs - rhs


# ---------------------------------------------------------------------------
# Contamination and the approximate Pythagorean relation
# ---------------------------------------------------------------------------

def alpha_convex_mix(p0: Measure, delta: Measure, eps: float, alpha: float) -> Measure:
    """The (alpha, eps)-convex combination ((1-eps) p0^a + eps delta^a)^(1/a).

    For alpha > 1 the mix can leave the sub-probability set; the result
    carries its actual mass for the caller to inspect.
    """
    _require_same_alphabet(p0, delta)
    if not 0.0 <= eps <= 1.0:
        raise BadParams("eps must lie in [0, 1]")
    if alpha == 0.0:
        raise BadParams("alpha must be nonzero")
    both_zero = (p0.density == 0.0) & (delta.density == 0.0)
    if alpha < 0.0 and np.any((p0.density == 0.0) ^ (delta.density == 0.0)):
        raise UnsupportedSupport(
            "alpha < 0 mixes need zero atoms only where both inputs vanish"
        )
    with np.errstate(divide="ignore", over="ignore"):
        mixed = (1.0 - eps) * np.power(p0.density, alpha) \
            + eps * np.power(delta.density, alpha)
        density = np.power(mixed, 1.0 / alpha)
    density = np.where(both_zero, 0.0, density)
    if not np.all(np.isfinite(density)):
        raise NonFiniteResult("contamination mix overflowed")
    return Measure(density, p0.base_weight, p0.labels, check_mass=False)


def d_tilde(P: Measure, Q: Measure, h: Hyper, f: GenFn) -> float:
    """The inner-product part of the divergence, -(1/ab)[psi(<p,q>) - l_b psi(||q||)].

    With l_b = beta/(alpha+beta) this satisfies the exact decomposition
    gab(P,Q) = -d_tilde(P,P) + d_tilde(P,Q), which drives the Pythagorean
    bound.
    """
    a, b = h.alpha, h.beta
    if a == 0.0 or b == 0.0 or a + b == 0.0:
        raise BadParams("d_tilde is defined for the general regime only")
    _require_same_alphabet(P, Q)
    lam_b = b / (a + b)
    ip = _finite_or_raise(
        K.inner_sum(P.density, Q.density, P.base_weight, a, b), "inner product"
    )
    nq = K.power_sum(Q.density, Q.base_weight, a + b)
    return -(_psi(f, ip) - lam_b * _psi(f, nq)) / (a * b)


def pythagorean_gap(p_eps: Measure, p0: Measure, q: Measure, h: Hyper, f: GenFn) -> float:
    """Delta = d(p_eps, q) - d(p_eps, p0) - d(p0, q)."""
    if h.regime not in (Regime.GENERAL, Regime.SUM_ONE) or h.alpha * h.beta == 0.0:
        raise BadParams("the Pythagorean gap needs the general regime")
    return (
        gab(p_eps, q, h, f).value
        - gab(p_eps, p0, h, f).value
        - gab(p0, q, h, f).value
    )


def contamination_weight(delta: Measure, p0: Measure, q: Measure, h: Hyper) -> float:
    """v_delta = max{<delta, p0>_{a,b}, <delta, q>_{a,b}} from the error bound."""
    return max(inner(delta, p0, h), inner(delta, q, h))


# ---------------------------------------------------------------------------
# Classical special cases (direct closed-form summation, used as oracles)
# ---------------------------------------------------------------------------

def _sums(P: Measure, Q: Measure):
    return P.density, Q.density, P.base_weight


def _special_ab(P, Q, alpha, beta):
    p, q, mu = _sums(P, Q)
    if alpha != 0.0 and beta == 0.0:
        pa, qa = p ** alpha, q ** alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            core = np.where(pa > 0.0, pa * np.log(pa / qa), 0.0)
        return float(np.sum((core - pa + qa) * mu)) / alpha ** 2
    if alpha == 0.0 and beta != 0.0:
        return _special_ab(Q, P, beta, 0.0)
    if alpha != 0.0 and alpha + beta == 0.0:
        with np.errstate(divide="ignore"):
            core = np.log(q ** alpha / p ** alpha) + (p / q) ** alpha
        return float(np.sum(core * mu) - np.sum(mu)) / alpha ** 2
    if alpha == 0.0 and beta == 0.0:
        with np.errstate(divide="ignore"):
            d = np.log(p) - np.log(q)
        return 0.5 * float(np.sum(d * d * mu))
    s = alpha + beta
    return float(
        np.sum(p ** s * mu) / (beta * s)
        + np.sum(q ** s * mu) / (alpha * s)
        - np.sum(p ** alpha * q ** beta * mu) / (alpha * beta)
    )


def _special_dpd(P, Q, a):
    if a == 0.0 or a == -1.0:
        raise BadParams("density-power divergence needs a not in {0, -1}")
    p, q, mu = _sums(P, Q)
    return float(
        np.sum(p ** (1 + a) * mu)
        - (1.0 + 1.0 / a) * np.sum(p ** a * q * mu)
        + np.sum(q ** (1 + a) * mu) / a
    )


def _special_pd(P, Q, lam):
    if lam == 0.0 or lam == 1.0:
        raise BadParams("power divergence needs lambda not in {0, 1}")
    p, q, mu = _sums(P, Q)
    return float(
        np.sum(p ** lam * q ** (1 - lam) * mu)
        - lam * np.sum(p * mu)
        + (lam - 1.0) * np.sum(q * mu)
    ) / (lam * (lam - 1.0))


def _special_kl(P, Q):
    p, q, mu = _sums(P, Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        core = np.where(p > 0.0, p * np.log(p / q), 0.0)
    return float(np.sum(core * mu))


def _special_s(P, Q, a, B):
    A = 1.0 + a - B
    if A == 0.0 or B == 0.0:
        raise BadParams("S-divergence needs A = 1+a-B and B both nonzero")
    p, q, mu = _sums(P, Q)
    return float(
        np.sum(p ** (1 + a) * mu) / A
        - (1.0 + a) / (A * B) * np.sum(p ** B * q ** A * mu)
        + np.sum(q ** (1 + a) * mu) / B
    )


def _special_ac(P, Q, alpha, beta):
    s = alpha + beta
    if alpha == 0.0 or beta == 0.0 or s == 0.0:
        raise BadParams("the log alpha-beta form needs alpha*beta*(alpha+beta) != 0")
    p, q, mu = _sums(P, Q)
    return float(
        math.log(np.sum(p ** s * mu)) / (beta * s)
        + math.log(np.sum(q ** s * mu)) / (alpha * s)
        - math.log(np.sum(p ** alpha * q ** beta * mu)) / (alpha * beta)
    )


def _special_lsd(P, Q, a, B):
    A = 1.0 + a - B
    if A == 0.0 or B == 0.0:
        raise BadParams("log S-divergence needs A = 1+a-B and B both nonzero")
    p, q, mu = _sums(P, Q)
    np1 = float(np.sum(p ** (1 + a) * mu))
    nq1 = float(np.sum(q ** (1 + a) * mu))
    ipq = float(np.sum(p ** B * q ** A * mu))
    one = 1.0 + a
    return (math.log(np1) / A + math.log(nq1) / B - one * math.log(ipq) / (A * B))


def _special_gamma(P, Q, g):
    if g == 0.0 or g == 1.0:
        raise BadParams("gamma divergence needs gamma not in {0, 1}")
    p, q, mu = _sums(P, Q)
    ipq = float(np.sum(p ** g * q ** (1 - g) * mu))
    mp = float(np.sum(p * mu))
    mq = float(np.sum(q * mu))
    return math.log(ipq / (mp ** g * mq ** (1 - g))) / (g * (g - 1.0))


def _special_jones(P, Q, phi, gamma):
    if gamma == 0.0 or phi == 0.0:
        raise BadParams("the (phi, gamma) family needs phi != 0 and gamma != 0")
    p, q, mu = _sums(P, Q)
    np1 = float(np.sum(p ** (1 + gamma) * mu))
    ipq = float(np.sum(p ** gamma * q * mu))
    nq1 = float(np.sum(q ** (1 + gamma) * mu))
    return (np1 ** phi / phi
            - (1.0 + gamma) / (gamma * phi) * ipq ** phi
            + nq1 ** phi / (gamma * phi))


# family -> (closed form, n_params, psi spec, (alpha, beta), multiplicative constant)
SPECIAL_FAMILIES = {
    "AB": (_special_ab, 2,
           lambda a, b: ("identity", (a, b), 1.0)),
    "DPD": (_special_dpd, 1,
            lambda a: ("identity", (a, 1.0), 1.0 + a)),
    "PD": (_special_pd, 1,
           lambda lam: ("identity", (lam, 1.0 - lam), 1.0)),
    "KL": (_special_kl, 0,
           lambda: ("identity", (1.0, 0.0), 1.0)),
    "S": (_special_s, 2,
          lambda a, B: ("identity", (B, 1.0 + a - B), 1.0 + a)),
    "AC": (_special_ac, 2,
           lambda a, b: ("log", (a, b), 1.0)),
    "LSD": (_special_lsd, 2,
            lambda a, B: ("log", (B, 1.0 + a - B), 1.0 + a)),
    "gamma": (_special_gamma, 1,
              lambda g: ("log", (g, 1.0 - g), 1.0)),
    "Jones": (_special_jones, 2,
              lambda phi, g: (f"power:{phi!r}", (g, 1.0), 1.0 + g)),
}


def gab_special(name: str, P: Measure, Q: Measure, params: Sequence[float] = ()) -> float:
    """Evaluate a classical divergence family by its literal closed form.

    These are independent direct summations, kept separate from :func:`gab`
    so the two can cross-validate each other.  Each family equals the
    corresponding generalized form up to the stored multiplicative constant;
    see :func:`special_gab_equivalent`.
    """
    if name not in SPECIAL_FAMILIES:
        raise BadParams(f"unknown special family {name!r}; "
                        f"known: {sorted(SPECIAL_FAMILIES)}")
    _require_same_alphabet(P, Q)
    fn, nparams, _ = SPECIAL_FAMILIES[name]
    params = tuple(float(x) for x in params)
    if len(params) != nparams:
        raise BadParams(f"{name} takes {nparams} parameter(s), got {len(params)}")
    return fn(P, Q, *params)


def special_gab_equivalent(name: str, params: Sequence[float] = ()):
    """(psi spec string, (alpha, beta), constant c) with special = c * gab."""
    if name not in SPECIAL_FAMILIES:
        raise BadParams(f"unknown special family {name!r}")
    _, nparams, link = SPECIAL_FAMILIES[name]
    params = tuple(float(x) for x in params)
    if len(params) != nparams:
        raise BadParams(f"{name} takes {nparams} parameter(s), got {len(params)}")
    return link(*params)

"""Finitely-supported (sub-)probability measures and the norm primitives.

A measure is a finite list of atoms, each carrying a density value ``p_i``
and a strictly positive base weight ``mu_i`` (a quadrature or counting
weight).  Every integral in the package is the exact sum ``sum_i f(p_i,
q_i) * mu_i``; there is no adaptive integration anywhere.  Continuous
densities enter only through user-supplied grids of nodes and weights.

Infinities are values, not errors: a norm with a negative exponent over a
zero atom is +inf, and a KL divergence across mismatched supports is +inf.
Only genuinely indeterminate products (0 * inf) raise NonFiniteResult.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
import numpy as np

from . import _kernels as K
from .errors import (
    BadParams,
    DimensionMismatch,
    InvalidMeasure,
    NonFiniteResult,
    UnsupportedSupport,
)

__all__ = [
    "MASS_TOL",
    "Regime",
    "classify_regime",
    "Hyper",
    "Measure",
    "norm_pow",
    "inner",
    "zoom_unnorm",
    "zoom_norm",
    "kl",
    "total_weight",
    "product_measure",
]

MASS_TOL = 1e-9


class Regime(Enum):
    """Which hyperparameter case governs formulas and validity conditions."""

    GENERAL = "general"
    ALPHA_ZERO = "alpha_zero"
    BETA_ZERO = "beta_zero"
    SUM_ZERO = "sum_zero"
    BOTH_ZERO = "both_zero"
    SUM_ONE = "sum_one"


def classify_regime(alpha: float, beta: float) -> Regime:
    """Classify (alpha, beta) by exact floating comparison.

    alpha + beta == 1 takes priority over the single-zero cases, so (1, 0)
    and (0, 1) classify as SUM_ONE; divergence evaluation still dispatches
    on the raw values and uses the edge formulas there.
    """
    if alpha == 0.0 and beta == 0.0:
        return Regime.BOTH_ZERO
    if alpha + beta == 1.0:
        return Regime.SUM_ONE
    if alpha == 0.0:
        return Regime.ALPHA_ZERO
    if beta == 0.0:
        return Regime.BETA_ZERO
    if alpha + beta == 0.0:
        return Regime.SUM_ZERO
    return Regime.GENERAL


def _consistent_regimes(alpha: float, beta: float) -> set:
    out = {classify_regime(alpha, beta)}
    if alpha + beta == 1.0:
        if beta == 0.0 and alpha != 0.0:
            out.add(Regime.BETA_ZERO)
        if alpha == 0.0 and beta != 0.0:
            out.add(Regime.ALPHA_ZERO)
    return out


@dataclass(frozen=True)
class Hyper:
    """The (alpha, beta) pair together with its regime classification."""

    alpha: float
    beta: float
    regime: Regime

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise BadParams("alpha and beta must be finite")
        if self.regime not in _consistent_regimes(self.alpha, self.beta):
            raise BadParams(
                f"regime {self.regime} inconsistent with "
                f"(alpha={self.alpha}, beta={self.beta})"
            )

    @classmethod
    def of(cls, alpha: float, beta: float) -> "Hyper":
        alpha = float(alpha)
        beta = float(beta)
        return cls(alpha, beta, classify_regime(alpha, beta))

    @property
    def sum(self) -> float:
        return self.alpha + self.beta


class Measure:
    """A finitely-supported measure: densities against base weights.

    Parameters
    ----------
    density : sequence of float
        Nonnegative density values ``p_i`` with respect to the base measure.
    base_weight : sequence of float, optional
        Strictly positive weights ``mu_i``; defaults to all ones (counting
        measure).
    labels : sequence of str, optional
        Atom identifiers; defaults to ``a0, a1, ...``.
    check_mass : bool
        When True (default), enforce the sub-probability bound
        ``sum p_i mu_i <= 1 + 1e-9``.  Zoom and contamination constructions
        legitimately escape the bound and pass False; the resulting mass is
        always carried in :attr:`mass`.
    """

    __slots__ = ("labels", "density", "base_weight", "mass")

    def __init__(self, density, base_weight=None, labels=None, *, check_mass=True):
        p = np.asarray(density, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise InvalidMeasure("density must be a 1-d sequence with >= 1 atom")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise InvalidMeasure("density values must be finite and >= 0")
        if base_weight is None:
            mu = np.ones_like(p)
        else:
            mu = np.asarray(base_weight, dtype=np.float64)
            if mu.shape != p.shape:
                raise InvalidMeasure("base_weight length differs from density length")
            if not np.all(np.isfinite(mu)) or np.any(mu <= 0.0):
                raise InvalidMeasure("base weights must be finite and > 0")
        if labels is None:
            labels = tuple(f"a{i}" for i in range(p.size))
        else:
            labels = tuple(str(x) for x in labels)
            if len(labels) != p.size:
                raise InvalidMeasure("labels length differs from density length")
        mass = float(np.sum(p * mu))
        if check_mass and mass > 1.0 + MASS_TOL:
            raise InvalidMeasure(f"mass {mass} exceeds the sub-probability bound")
        p = p.copy()
        mu = mu.copy()
        p.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "density", p)
        object.__setattr__(self, "base_weight", mu)
        object.__setattr__(self, "mass", mass)

    def __setattr__(self, name, value):
        raise AttributeError("Measure is immutable")

    def __len__(self) -> int:
        return self.density.size

    def __repr__(self) -> str:
        return f"Measure(n={len(self)}, mass={self.mass:.6g})"

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= MASS_TOL

    @property
    def is_sub_probability(self) -> bool:
        return self.mass <= 1.0 + MASS_TOL

    def same_alphabet(self, other: "Measure") -> bool:
        return self.labels == other.labels and np.array_equal(
            self.base_weight, other.base_weight
        )

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "density": [float(x) for x in self.density],
            "base_weight": [float(x) for x in self.base_weight],
        }

    @classmethod
    def from_dict(cls, obj: dict, *, check_mass: bool = True) -> "Measure":
        if not isinstance(obj, dict) or "density" not in obj:
            raise InvalidMeasure("measure object needs at least a 'density' field")
        return cls(
            obj["density"],
            obj.get("base_weight"),
            obj.get("labels"),
            check_mass=check_mass,
        )


def _require_same_alphabet(P: Measure, Q: Measure) -> None:
    if not P.same_alphabet(Q):
        raise DimensionMismatch("measures live on different alphabets")


def total_weight(P: Measure) -> float:
    """mu(A): the total base-measure weight of the alphabet."""
    return float(np.sum(P.base_weight))


def norm_pow(P: Measure, a: float) -> float:
    """The a-th norm raised to the a: ``sum p_i**a mu_i`` (may be +inf)."""
    return K.power_sum(P.density, P.base_weight, float(a))


def inner(P: Measure, Q: Measure, h: Hyper) -> float:
    """The (alpha, beta)-inner product ``sum p_i**alpha q_i**beta mu_i``."""
    _require_same_alphabet(P, Q)
    v = K.inner_sum(P.density, Q.density, P.base_weight, h.alpha, h.beta)
    if math.isnan(v):
        raise NonFiniteResult("0 * inf product inside the inner product")
    return v


def zoom_unnorm(P: Measure, w: float) -> Measure:
    """Unnormalized w-zoom: density ``p_i**w`` over the same base weights.

    The result may leave the sub-probability set; its mass is carried in
    ``.mass`` for the caller to inspect.
    """
    w = float(w)
    if w < 0.0 and np.any(P.density == 0.0):
        raise UnsupportedSupport("negative zoom of a measure with zero atoms")
    with np.errstate(over="ignore"):
        density = np.power(P.density, w)
    if not np.all(np.isfinite(density)):
        raise NonFiniteResult("zoom overflowed")
    return Measure(density, P.base_weight, P.labels, check_mass=False)


def zoom_norm(P: Measure, a: float) -> Measure:
    """Normalized a-zoom (escort distribution): ``p**a / ||p||_a^a``."""
    a = float(a)
    if a < 0.0 and np.any(P.density == 0.0):
        raise UnsupportedSupport("negative zoom of a measure with zero atoms")
    norm = norm_pow(P, a)
    if not math.isfinite(norm) or norm <= 0.0:
        raise InvalidMeasure(f"cannot normalize: ||p||_a^a = {norm}")
    density = np.power(P.density, a) / norm
    return Measure(density, P.base_weight, P.labels)


def kl(P: Measure, Q: Measure) -> float:
    """Kullback-Leibler divergence ``sum p_i log(p_i/q_i) mu_i``.

    Uses 0*log 0 = 0; returns +inf when P puts mass where Q does not.
    """
    _require_same_alphabet(P, Q)
    return K.kl_sum(P.density, Q.density, P.base_weight)


def product_measure(P: Measure, Q: Measure) -> Measure:
    """Independent combination: densities p_i q_j on the product alphabet."""
    density = np.outer(P.density, Q.density).ravel()
    weight = np.outer(P.base_weight, Q.base_weight).ravel()
    labels = tuple(f"({a},{b})" for a in P.labels for b in Q.labels)
    return Measure(density, weight, labels, check_mass=False)

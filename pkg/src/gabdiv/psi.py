"""Generating functions, their constructors, and the numerical validity checker.

A generating function ``psi`` maps [0, inf) to the reals and is applied to
norm and inner-product terms to build a divergence.  All monotonicity and
convexity conditions act on the log-domain form ``Psi(x) = psi(e**x)``, so
every built-in also carries a numerically stable direct evaluation of Psi.

Grid checks can only refute or fail to refute; they cannot prove.  The
checker therefore returns a three-valued verdict: a clean grid pass is
reported as valid, a grid failure backed by an explicit counterexample pair
(divergence < -1e-8) is invalid, and a grid failure without a witness within
the search budget is inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfc

from .errors import BadParams, NonFiniteResult
from .measures import Hyper, Measure, Regime

__all__ = [
    "GenFn",
    "Verdict",
    "Witness",
    "ValidityReport",
    "CheckOptions",
    "builtin",
    "parse_spec",
    "big_psi",
    "big_psi_deriv",
    "big_psi_second",
    "scale_psi",
    "combine_linear",
    "compose",
    "check_validity",
    "witness_search",
    "geometric_convexity_check",
    "geometric_gaps",
    "log_convexity_gaps",
]

_BIG_CLIP = 700.0
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

_SMOOTH_ORDER = {"C0": 0, "C1": 1, "C2": 2}


def _norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def _norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def _vec(fn: Callable) -> Callable:
    """Let a numpy-vectorized callable also accept and return scalars."""

    def wrapped(x):
        arr = np.asarray(x, dtype=np.float64)
        out = fn(arr)
        if np.ndim(x) == 0:
            return float(out)
        return np.asarray(out, dtype=np.float64)

    return wrapped


@dataclass(frozen=True)
class GenFn:
    """A generating function with derivatives and log-domain evaluation.

    ``eval``/``deriv``/``second`` act on psi itself; ``big_eval`` and
    ``big_deriv``, when present, evaluate Psi(x) = psi(e**x) and Psi'(x)
    without going through exp, which keeps grid checks stable far from 0.
    """

    name: str
    eval: Callable
    deriv: Optional[Callable] = None
    second: Optional[Callable] = None
    smoothness: str = "C1"
    big_eval: Optional[Callable] = None
    big_deriv: Optional[Callable] = None

    def __post_init__(self):
        if self.smoothness not in _SMOOTH_ORDER:
            raise BadParams(f"smoothness must be C0/C1/C2, got {self.smoothness}")

    def __call__(self, x):
        return self.eval(x)

    def at_least(self, smoothness: str) -> bool:
        return _SMOOTH_ORDER[self.smoothness] >= _SMOOTH_ORDER[smoothness]

    def __repr__(self) -> str:
        return f"GenFn({self.name!r}, smoothness={self.smoothness})"


# ---------------------------------------------------------------------------
# Log-domain evaluation
# ---------------------------------------------------------------------------

def _clip_big(x):
    return np.clip(np.asarray(x, dtype=np.float64), -_BIG_CLIP, _BIG_CLIP)


def big_psi(f: GenFn, x):
    """Psi(x) = psi(e**x), with x clipped to [-700, 700]."""
    xc = _clip_big(x)
    v = f.big_eval(xc) if f.big_eval is not None else f.eval(np.exp(xc))
    if np.ndim(x) == 0:
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteResult(f"Psi overflowed at x={float(x)} for {f.name}")
    return v


def big_psi_deriv(f: GenFn, x):
    """Psi'(x) = psi'(e**x) * e**x."""
    if f.deriv is None and f.big_deriv is None:
        raise BadParams(f"{f.name} carries no first derivative")
    xc = _clip_big(x)
    if f.big_deriv is not None:
        v = f.big_deriv(xc)
    else:
        e = np.exp(xc)
        v = f.deriv(e) * e
    if np.ndim(x) == 0:
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteResult(f"Psi' overflowed at x={float(x)} for {f.name}")
    return v


def big_psi_second(f: GenFn, x):
    """Psi''(x) = (psi''(e**x) e**x + psi'(e**x)) e**x; needs a C2 psi."""
    if f.second is None:
        raise BadParams(f"{f.name} carries no second derivative")
    xc = _clip_big(x)
    e = np.exp(xc)
    v = (f.second(e) * e + f.deriv(e)) * e
    if np.ndim(x) == 0:
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteResult(f"Psi'' overflowed at x={float(x)} for {f.name}")
    return v


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def _make_identity() -> GenFn:
    return GenFn(
        name="identity",
        eval=_vec(lambda x: x.copy()),
        deriv=_vec(np.ones_like),
        second=_vec(np.zeros_like),
        smoothness="C2",
        big_eval=_vec(np.exp),
        big_deriv=_vec(np.exp),
    )


def _make_log() -> GenFn:
    def ev(x):
        with np.errstate(divide="ignore"):
            return np.log(x)

    def dv(x):
        with np.errstate(divide="ignore"):
            return 1.0 / x

    def d2(x):
        with np.errstate(divide="ignore"):
            return -1.0 / (x * x)

    return GenFn(
        name="log",
        eval=_vec(ev),
        deriv=_vec(dv),
        second=_vec(d2),
        smoothness="C2",
        big_eval=_vec(lambda x: x.copy()),
        big_deriv=_vec(np.ones_like),
    )


def _make_power(phi: float) -> GenFn:
    if phi == 0.0:
        raise BadParams("power family needs phi != 0; use log instead")

    def ev(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.power(x, phi) / phi

    def dv(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.power(x, phi - 1.0)

    def d2(x):
        with np.errstate(divide="ignore", over="ignore"):
            return (phi - 1.0) * np.power(x, phi - 2.0)

    def bev(x):
        with np.errstate(over="ignore"):
            return np.exp(phi * x) / phi

    def bdv(x):
        with np.errstate(over="ignore"):
            return np.exp(phi * x)

    return GenFn(
        name=f"power({phi:g})",
        eval=_vec(ev),
        deriv=_vec(dv),
        second=_vec(d2),
        smoothness="C2",
        big_eval=_vec(bev),
        big_deriv=_vec(bdv),
    )


def _make_bridge(c1: float, c2: float) -> GenFn:
    if c1 <= 0.0 or c2 <= 0.0:
        raise BadParams("bridge family needs c1 > 0 and c2 > 0")
    log_c1 = math.log(c1)

    def ev(x):
        with np.errstate(divide="ignore"):
            return np.logaddexp(log_c1, c2 * np.log(x))

    def _sig(x):
        # x**c2 / (c1 + x**c2), stable through the log domain
        with np.errstate(divide="ignore", over="ignore"):
            return 1.0 / (1.0 + np.exp(log_c1 - c2 * np.log(x)))

    def dv(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = c2 * _sig(x) / x
        if c2 > 1.0:
            out = np.where(x == 0.0, 0.0, out)
        elif c2 == 1.0:
            out = np.where(x == 0.0, 1.0 / c1, out)
        else:
            out = np.where(x == 0.0, np.inf, out)
        return out

    def d2(x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s = _sig(x)
            out = c2 * s * ((c2 - 1.0) * (1.0 - s) - s) / (x * x)
        return np.where(x == 0.0, np.nan, out)

    return GenFn(
        name=f"bridge({c1:g},{c2:g})",
        eval=_vec(ev),
        deriv=_vec(dv),
        second=_vec(d2),
        smoothness="C2",
        big_eval=_vec(lambda x: np.logaddexp(log_c1, c2 * x)),
        big_deriv=_vec(lambda x: c2 / (1.0 + np.exp(log_c1 - c2 * x))),
    )


def _make_cdf_exp() -> GenFn:
    def ev(x):
        with np.errstate(divide="ignore"):
            tail = 1.0 / x + np.log(x) - 1.0
        return np.where(x < 1.0, 0.0, tail)

    def dv(x):
        with np.errstate(divide="ignore"):
            tail = (x - 1.0) / (x * x)
        return np.where(x < 1.0, 0.0, tail)

    def bev(x):
        # expm1 keeps e**-x + x - 1 accurate near the kink at 0
        return np.where(x < 0.0, 0.0, np.expm1(-np.minimum(x, _BIG_CLIP)) + x)

    def bdv(x):
        return np.where(x < 0.0, 0.0, -np.expm1(-np.minimum(x, _BIG_CLIP)))

    return GenFn(
        name="cdf-exp",
        eval=_vec(ev),
        deriv=_vec(dv),
        smoothness="C1",
        big_eval=_vec(bev),
        big_deriv=_vec(bdv),
    )


def _make_cdf_normal() -> GenFn:
    def bev(x):
        return x * _norm_cdf(x) + _norm_pdf(x)

    def ev(x):
        with np.errstate(divide="ignore"):
            lx = np.log(x)
        return np.where(x == 0.0, 0.0, bev(np.where(x == 0.0, 1.0, lx)))

    def dv(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            out = _norm_cdf(lx) / x
        return np.where(x == 0.0, 0.0, out)

    def d2(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            out = (_norm_pdf(lx) - _norm_cdf(lx)) / (x * x)
        return np.where(x == 0.0, 0.0, out)

    return GenFn(
        name="cdf-normal",
        eval=_vec(ev),
        deriv=_vec(dv),
        second=_vec(d2),
        smoothness="C2",
        big_eval=_vec(bev),
        big_deriv=_vec(lambda x: _norm_cdf(x)),
    )


def _make_pwl(slopes: Sequence[float], intercepts: Sequence[float],
              breaks: Sequence[float]) -> GenFn:
    a = np.asarray(slopes, dtype=float)
    b = np.asarray(intercepts, dtype=float)
    c = np.asarray(breaks, dtype=float)
    if a.size != b.size or a.size != c.size + 1 or a.size < 1:
        raise BadParams("piecewise-linear needs k+1 (slope, intercept) pairs "
                        "and k breakpoints")
    if np.any(np.diff(a) <= 0.0):
        raise BadParams("piecewise-linear slopes must be strictly increasing")
    if c.size and np.any(np.diff(c) <= 0.0):
        raise BadParams("piecewise-linear breakpoints must be strictly increasing")
    left = a[:-1] * c + b[:-1]
    right = a[1:] * c + b[1:]
    if np.any(np.abs(left - right) > 1e-9 * (1.0 + np.abs(left))):
        raise BadParams("piecewise-linear segments are discontinuous")

    def bev(x):
        idx = np.searchsorted(c, x, side="left")
        out = a[idx] * x + b[idx]
        # a*(-inf) is nan for a == 0; resolve to the segment intercept
        return np.where(np.isnan(out) & np.isinf(x), b[idx], out)

    def bdv(x):
        idx = np.searchsorted(c, x, side="left")
        return a[idx] * np.ones_like(x)

    def ev(x):
        with np.errstate(divide="ignore"):
            return bev(np.log(x))

    def dv(x):
        with np.errstate(divide="ignore"):
            return bdv(np.log(x)) / x

    segs = ";".join(f"{ai:g},{bi:g}" for ai, bi in zip(a, b))
    return GenFn(
        name=f"pwl[{segs}|{','.join(f'{ci:g}' for ci in c)}]",
        eval=_vec(ev),
        deriv=_vec(dv),
        smoothness="C0" if c.size else "C1",
        big_eval=_vec(bev),
        big_deriv=_vec(bdv),
    )


_NO_PARAM_BUILTINS = {
    "identity": _make_identity,
    "log": _make_log,
    "cdf-exp": _make_cdf_exp,
    "cdf-normal": _make_cdf_normal,
}


def builtin(name: str, params: Sequence[float] = ()) -> GenFn:
    """Construct a built-in generating function by family name."""
    params = tuple(float(x) for x in params)
    if name in _NO_PARAM_BUILTINS:
        if params:
            raise BadParams(f"{name} takes no parameters")
        return _NO_PARAM_BUILTINS[name]()
    if name == "power":
        if len(params) != 1:
            raise BadParams("power takes exactly one parameter phi")
        return _make_power(params[0])
    if name == "bridge":
        if len(params) != 2:
            raise BadParams("bridge takes exactly two parameters c1, c2")
        return _make_bridge(params[0], params[1])
    if name == "pwl":
        if len(params) < 2 or len(params) % 3 != 2:
            raise BadParams("pwl takes a1,b1,c1,...,ak,bk,ck,a_{k+1},b_{k+1}")
        a = params[0::3]
        b = params[1::3]
        c = params[2::3]
        return _make_pwl(a, b, c)
    raise BadParams(f"unknown generating-function family {name!r}")


# ---------------------------------------------------------------------------
# Spec mini-language
# ---------------------------------------------------------------------------

def _split_top(s: str, sep: str) -> list:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise BadParams(f"unbalanced parentheses in {s!r}")
        elif ch == sep and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    if depth != 0:
        raise BadParams(f"unbalanced parentheses in {s!r}")
    parts.append(s[start:])
    return parts


def _strip_parens(s: str) -> str:
    s = s.strip()
    while s.startswith("(") and s.endswith(")"):
        depth = 0
        for i, ch in enumerate(s):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0 and i < len(s) - 1:
                    return s  # the leading paren closes early: not a wrapper
        s = s[1:-1].strip()
    return s


def _parse_floats(body: str, name: str) -> tuple:
    try:
        return tuple(float(x) for x in body.split(",") if x.strip() != "")
    except ValueError as exc:
        raise BadParams(f"bad numeric parameters for {name}: {body!r}") from exc


def parse_spec(spec: str) -> GenFn:
    """Parse the CLI mini-language into a GenFn.

    Grammar: ``identity``, ``log``, ``power:PHI``, ``bridge:C1,C2``,
    ``cdf-exp``, ``cdf-normal``, ``pwl:a1,b1,c1;a2,b2[,c2;...]`` (the final
    segment's breakpoint is omitted), ``lin:W1*SPEC1+W2*SPEC2+...`` and
    ``comp:SPEC1,SPEC2``.  Sub-specs containing ``,`` or ``+`` must be
    parenthesized, e.g. ``comp:(bridge:1,2),log``.
    """
    s = _strip_parens(spec)
    if s in _NO_PARAM_BUILTINS:
        return builtin(s)
    if s.startswith("power:"):
        return builtin("power", _parse_floats(s[6:], "power"))
    if s.startswith("bridge:"):
        return builtin("bridge", _parse_floats(s[7:], "bridge"))
    if s.startswith("pwl:"):
        groups = [g for g in s[4:].split(";") if g.strip() != ""]
        if not groups:
            raise BadParams("pwl needs at least one a,b segment")
        flat = []
        for i, g in enumerate(groups):
            vals = _parse_floats(g, "pwl")
            if i < len(groups) - 1:
                if len(vals) != 3:
                    raise BadParams("pwl segments before the last need a,b,c")
                flat.extend(vals)
            else:
                if len(vals) not in (2, 3):
                    raise BadParams("final pwl segment needs a,b (breakpoint ignored)")
                flat.extend(vals[:2])
        return builtin("pwl", flat)
    if s.startswith("lin:"):
        terms = _split_top(s[4:], "+")
        fns, coeffs = [], []
        for term in terms:
            try:
                w, sub = term.split("*", 1)
                coeffs.append(float(w))
            except ValueError as exc:
                raise BadParams(f"lin term must look like W*SPEC: {term!r}") from exc
            fns.append(parse_spec(sub))
        return combine_linear(fns, coeffs)
    if s.startswith("comp:"):
        parts = _split_top(s[5:], ",")
        if len(parts) != 2:
            raise BadParams("comp takes exactly two specs; parenthesize sub-specs "
                            "containing commas")
        return compose(parse_spec(parts[0]), parse_spec(parts[1]))
    raise BadParams(f"cannot parse generating-function spec {spec!r}")


# ---------------------------------------------------------------------------
# Combinators
# ---------------------------------------------------------------------------

def combine_linear(fs: Sequence[GenFn], coeffs: Sequence[float]) -> GenFn:
    """Positive linear combination ``sum c_i psi_i``; closed under validity."""
    if len(fs) != len(coeffs) or not fs:
        raise BadParams("need matching nonempty function and coefficient lists")
    coeffs = [float(c) for c in coeffs]
    if any(c <= 0.0 for c in coeffs):
        raise BadParams("linear-combination coefficients must be > 0")
    fs = list(fs)

    def _sum_over(attr):
        calls = [getattr(f, attr) for f in fs]
        if any(c is None for c in calls):
            return None

        def combined(x):
            acc = coeffs[0] * np.asarray(calls[0](x), dtype=float)
            for c, call in zip(coeffs[1:], calls[1:]):
                acc = acc + c * np.asarray(call(x), dtype=float)
            return acc

        return _vec(combined)

    smooth = min((f.smoothness for f in fs), key=_SMOOTH_ORDER.get)
    name = "+".join(f"{c:g}*{f.name}" for c, f in zip(coeffs, fs))
    return GenFn(
        name=f"lin({name})",
        eval=_sum_over("eval"),
        deriv=_sum_over("deriv"),
        second=_sum_over("second"),
        smoothness=smooth,
        big_eval=_sum_over("big_eval"),
        big_deriv=_sum_over("big_deriv"),
    )


def compose(outer: GenFn, inner: GenFn) -> GenFn:
    """Compose in the log domain: psi(x) = Psi_outer(psi_inner(x)).

    Composition of two valid generating functions stays valid because the
    increasing convex maps Psi_outer and Psi_inner compose.
    """

    def ev(x):
        return big_psi(outer, inner.eval(x))

    deriv = None
    if inner.deriv is not None and (outer.deriv is not None or outer.big_deriv is not None):
        def deriv(x):  # noqa: F811 - conditional definition
            return big_psi_deriv(outer, inner.eval(x)) * np.asarray(inner.deriv(x), dtype=float)

    big_eval = None
    big_deriv = None
    if inner.big_eval is not None:
        def big_eval(x):  # noqa: F811
            return big_psi(outer, inner.big_eval(x))

        if inner.big_deriv is not None and (outer.deriv is not None or outer.big_deriv is not None):
            def big_deriv(x):  # noqa: F811
                return big_psi_deriv(outer, inner.big_eval(x)) * np.asarray(
                    inner.big_deriv(x), dtype=float)

    smooth = "C0" if (outer.smoothness == "C0" or inner.smoothness == "C0") else "C1"
    return GenFn(
        name=f"comp({outer.name},{inner.name})",
        eval=_vec(ev),
        deriv=_vec(deriv) if deriv is not None else None,
        smoothness=smooth,
        big_eval=_vec(big_eval) if big_eval is not None else None,
        big_deriv=_vec(big_deriv) if big_deriv is not None else None,
    )


def scale_psi(f: GenFn, c: float) -> GenFn:
    """The scaled generating function ``psi_c(x) = psi(c x)`` for c > 0."""
    if c <= 0.0:
        raise BadParams("scaling constant must be > 0")
    log_c = math.log(c)

    def ev(x):
        return np.asarray(f.eval(c * np.asarray(x, dtype=float)), dtype=float)

    deriv = None
    if f.deriv is not None:
        def deriv(x):  # noqa: F811
            return c * np.asarray(f.deriv(c * np.asarray(x, dtype=float)), dtype=float)

    big_eval = None
    if f.big_eval is not None:
        def big_eval(x):  # noqa: F811
            return np.asarray(f.big_eval(np.asarray(x, dtype=float) + log_c), dtype=float)

    big_deriv = None
    if f.big_deriv is not None:
        def big_deriv(x):  # noqa: F811
            return np.asarray(f.big_deriv(np.asarray(x, dtype=float) + log_c), dtype=float)

    return GenFn(
        name=f"{f.name}@scale({c:g})",
        eval=_vec(ev),
        deriv=_vec(deriv) if deriv is not None else None,
        smoothness=f.smoothness,
        big_eval=_vec(big_eval) if big_eval is not None else None,
        big_deriv=_vec(big_deriv) if big_deriv is not None else None,
    )


# ---------------------------------------------------------------------------
# Geometric convexity (the log-domain convexity test)
# ---------------------------------------------------------------------------

def geometric_gaps(f: GenFn, x, y, lam):
    """lam psi(x) + (1-lam) psi(y) - psi(x**lam y**(1-lam)), vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    with np.errstate(over="ignore"):
        mid = np.exp(lam * np.log(x) + (1.0 - lam) * np.log(y))
    return lam * f.eval(x) + (1.0 - lam) * f.eval(y) - f.eval(mid)


def log_convexity_gaps(f: GenFn, x, y, lam):
    """The same inequality written directly on Psi at (log x, log y)."""
    u = np.log(np.asarray(x, dtype=float))
    v = np.log(np.asarray(y, dtype=float))
    lam = np.asarray(lam, dtype=float)
    pu = np.asarray(big_psi(f, u), dtype=float)
    pv = np.asarray(big_psi(f, v), dtype=float)
    pm = np.asarray(big_psi(f, lam * u + (1.0 - lam) * v), dtype=float)
    return lam * pu + (1.0 - lam) * pv - pm


def geometric_convexity_check(f: GenFn, triples, tol: float = 1e-10) -> bool:
    """True iff lam psi(x)+(1-lam) psi(y) >= psi(x**lam y**(1-lam)) on the sample."""
    arr = np.asarray(triples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise BadParams("triples must be an (n, 3) array of (x, y, lam)")
    x, y, lam = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(x <= 0.0) or np.any(y <= 0.0) or np.any((lam < 0.0) | (lam > 1.0)):
        raise BadParams("triples need x, y > 0 and lam in [0, 1]")
    gaps = geometric_gaps(f, x, y, lam)
    scale = 1.0 + np.abs(lam * f.eval(x)) + np.abs((1.0 - lam) * f.eval(y))
    return bool(np.all(gaps >= -tol * scale))


# ---------------------------------------------------------------------------
# Validity checking
# ---------------------------------------------------------------------------

class Verdict(Enum):
    VALID = "valid"
    INVALID = "invalid"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Witness:
    """A concrete pair with strictly negative divergence."""

    p: Measure
    q: Measure
    hyper: Hyper
    value: float


@dataclass(frozen=True)
class ValidityReport:
    verdict: Verdict
    failed_condition: Optional[str] = None
    witness: Optional[Witness] = None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "failed_condition": self.failed_condition}
        if self.witness is not None:
            out["witness"] = {
                "p": self.witness.p.to_dict(),
                "q": self.witness.q.to_dict(),
                "alpha": self.witness.hyper.alpha,
                "beta": self.witness.hyper.beta,
                "divergence": self.witness.value,
            }
        else:
            out["witness"] = None
        return out


@dataclass(frozen=True)
class CheckOptions:
    grid_lo: float = -30.0
    grid_hi: float = 30.0
    grid_points: int = 2001
    convex_tol: float = 1e-9
    witness_budget: int = 100_000
    seed: int = 0
    local_steps: tuple = (1e-3, 1e-4, 1e-5)


def _psi_values(f: GenFn, x):
    return np.asarray(f.eval(np.asarray(x, dtype=float)), dtype=float)


def _big_values(f: GenFn, xs):
    if f.big_eval is not None:
        return np.asarray(f.big_eval(xs), dtype=float)
    with np.errstate(over="ignore"):
        return np.asarray(f.eval(np.exp(xs)), dtype=float)


def _big_deriv_values(f: GenFn, xs):
    if f.big_deriv is not None:
        return np.asarray(f.big_deriv(xs), dtype=float)
    if f.deriv is None:
        return None
    with np.errstate(over="ignore"):
        e = np.exp(xs)
        return np.asarray(f.deriv(e), dtype=float) * e


def _check_sum_one(f: GenFn, h: Hyper, opts: CheckOptions) -> Optional[str]:
    """Local monotonicity of psi at 1, per the three alpha+beta=1 subcases."""
    alpha = h.alpha
    steps = opts.local_steps
    if alpha == 1.0 or alpha == 0.0:
        if f.deriv is not None:
            if float(f.deriv(1.0)) > 0.0:
                return None
            return "psi'(1) <= 0 (needs psi increasing at 1)"
        diffs = [float(f.eval(1.0 + t) - f.eval(1.0 - t)) for t in steps]
        if all(d > 0.0 for d in diffs):
            return None
        return "psi not increasing at 1 by central differences"
    if 0.0 < alpha < 1.0:
        diffs = [float(f.eval(1.0) - f.eval(1.0 - t)) for t in steps]
        if all(d > 0.0 for d in diffs):
            return None
        return "psi not strictly increasing on (1-eps, 1]"
    diffs = [float(f.eval(1.0 + t) - f.eval(1.0)) for t in steps]
    if all(d > 0.0 for d in diffs):
        return None
    return "psi not strictly increasing on [1, 1+eps)"


def _check_big_psi_grid(f: GenFn, opts: CheckOptions) -> Optional[str]:
    """Strict monotonicity and convexity of Psi on the log-domain grid."""
    xs = np.linspace(opts.grid_lo, opts.grid_hi, opts.grid_points)
    vals = _big_values(f, xs)
    if np.any(np.isnan(vals)):
        return "Psi is not finite on the grid"
    dvals = _big_deriv_values(f, xs)
    if dvals is not None:
        if not np.all(dvals > 0.0):
            x_bad = float(xs[np.argmin(dvals)])
            return f"Psi' <= 0 near x={x_bad:.3g}"
    else:
        if not np.all(np.diff(vals) > 0.0):
            return "Psi not strictly increasing on the grid"
    second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    scale = 1.0 + np.abs(vals[1:-1])
    bad = second < -opts.convex_tol * scale
    if np.any(bad):
        x_bad = float(xs[1:-1][np.argmax(bad)])
        return f"Psi has a negative second difference near x={x_bad:.3g}"
    return None


def check_validity(f: GenFn, h: Hyper, opts: Optional[CheckOptions] = None) -> ValidityReport:
    """Numerically check the divergence-validity conditions for (f, h).

    alpha+beta = 1 needs only local monotonicity of psi at 1; every other
    regime needs Psi strictly increasing and convex.  A failed grid check is
    escalated to a witness search; only an explicit counterexample justifies
    an invalid verdict.
    """
    opts = opts or CheckOptions()
    if h.regime is Regime.SUM_ONE:
        failure = _check_sum_one(f, h, opts)
    else:
        failure = _check_big_psi_grid(f, opts)
    if failure is None:
        return ValidityReport(Verdict.VALID)
    wit = witness_search(f, h, opts.witness_budget, seed=opts.seed)
    if wit is not None:
        return ValidityReport(Verdict.INVALID, failed_condition=failure, witness=wit)
    return ValidityReport(Verdict.INCONCLUSIVE, failed_condition=failure)


# ---------------------------------------------------------------------------
# Witness search
# ---------------------------------------------------------------------------

def _shifted_uniform_pair(rng) -> tuple:
    # densities 1/(theta+1) on [0, theta+1] and [1, theta+2]: three exact cells
    theta = math.exp(rng.uniform(math.log(1e-3), math.log(1e3)))
    d = 1.0 / (theta + 1.0)
    mu = np.array([1.0, theta, 1.0])
    p = Measure(np.array([d, d, 0.0]), mu, ("left", "mid", "right"))
    q = Measure(np.array([0.0, d, d]), mu, ("left", "mid", "right"))
    return p, q


def _power_pair(rng, restricted: bool) -> tuple:
    # restricted pairs share the support and are proportional, which probes
    # the lambda-convexity gap with lambda = alpha/(alpha+beta) directly;
    # full pairs reproduce the truncated-power construction with overhang
    gamma = rng.uniform(-0.9, 3.0)
    theta = math.exp(rng.uniform(math.log(1e-12), math.log(1e12)))
    eta = math.exp(rng.uniform(math.log(1e-12), math.log(1e12)))
    mass_p = math.exp(rng.uniform(math.log(1e-6), 0.0))
    mass_q = math.exp(rng.uniform(math.log(1e-6), 0.0))
    limit = min(theta, eta) if restricted else max(theta, eta)
    m = 160
    x = (np.arange(m) + 0.5) * (limit / m)
    mu = np.full(m, limit / m)
    with np.errstate(over="ignore"):
        pd = np.where(x <= theta, x ** gamma, 0.0)
        qd = np.where(x <= eta, x ** gamma, 0.0)
    pmass = float(np.sum(pd * mu))
    qmass = float(np.sum(qd * mu))
    if not (0.0 < pmass < math.inf and 0.0 < qmass < math.inf):
        return None
    p = Measure(pd * (mass_p / pmass), mu)
    q = Measure(qd * (mass_q / qmass), mu)
    return p, q


def _gaussian_pair(rng) -> tuple:
    sigma = math.exp(rng.uniform(math.log(0.05), math.log(5.0)))
    shift = rng.uniform(0.1, 6.0) * sigma
    lo, hi = -8.0 * sigma, shift + 8.0 * sigma
    m = 240
    x = lo + (np.arange(m) + 0.5) * ((hi - lo) / m)
    mu = np.full(m, (hi - lo) / m)
    pd = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    qd = np.exp(-0.5 * ((x - shift) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    pd = pd / max(1.0, float(np.sum(pd * mu)))
    qd = qd / max(1.0, float(np.sum(qd * mu)))
    return Measure(pd, mu), Measure(qd, mu)


def witness_search(f: GenFn, h: Hyper, budget: int, seed: int = 0) -> Optional[Witness]:
    """Search the counterexample constructions for a negative-divergence pair.

    Draws shifted-uniform, truncated-power, and mean-shifted Gaussian pairs
    on quadrature grids with randomized shape parameters, evaluates the
    divergence, and returns the first pair whose value is below -1e-8 (with
    a cancellation guard of -1e-10 * scale).  Deterministic for a fixed seed.
    """
    if budget < 1:
        raise BadParams("witness budget must be >= 1")
    from .divergence import gab  # deferred to avoid an import cycle

    rng = np.random.default_rng(seed)
    evals = 0
    while evals < budget:
        candidates = []
        if h.regime is Regime.SUM_ONE:
            candidates.append(_shifted_uniform_pair(rng))
            candidates.append(_gaussian_pair(rng))
            candidates.append(_power_pair(rng, restricted=True))
            # sub-probability masses expose the norm terms that probability
            # pairs cancel (they matter on the alpha+beta = 1 line too)
            if rng.random() < 0.5:
                cp = math.exp(rng.uniform(math.log(1e-3), 0.0))
                cq = math.exp(rng.uniform(math.log(1e-3), 0.0))
                scaled = []
                for pair in candidates:
                    if pair is None:
                        continue
                    p, q = pair
                    scaled.append((
                        Measure(cp * p.density, p.base_weight, p.labels),
                        Measure(cq * q.density, q.base_weight, q.labels),
                    ))
                candidates.extend(scaled)
        else:
            candidates.append(_power_pair(rng, restricted=False))
            candidates.append(_power_pair(rng, restricted=True))
            candidates.append(_gaussian_pair(rng))
        for pair in candidates:
            if pair is None or evals >= budget:
                continue
            p, q = pair
            evals += 1
            try:
                result = gab(p, q, h, f)
            except Exception:
                continue
            v = result.value
            if math.isfinite(v) and v < -1e-8 and v < -1e-10 * result.scale:
                return Witness(p, q, h, v)
    return None

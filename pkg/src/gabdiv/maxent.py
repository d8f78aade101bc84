"""Maximum-entropy solver under escort-expectation constraints.

Constraints fix escort expectations sum_i g_r(a_i) p_i^alpha / sum_i p_i^alpha
= G_r.  In the escort variable q_i proportional to p_i^alpha they become the
linear system g q = G on the simplex, and the entropy maximizer satisfies a
fixed-point proportionality relation whose shape depends on the regime:

 *  beta (alpha+beta) != 0: a power of a bracket combining Psi' at the two
    log-norm points c1(q), c2(q) with the multiplier term;
 *  beta = 0: an exponential form that also involves Psi'';
 *  alpha + beta = 0: a reciprocal form.

All three are implemented from the first-order conditions of the Lagrangian

    F(q) = entropy(p(q)) + sum_r lam_r (g_r . q - G_r) + lam0 (sum q - 1),

including the normalization multiplier lam0: without it the proportionality
relation cannot meet the constraint targets unless the constant function
happens to lie in the span of the g_r.  The solver alternates a damped Newton
solve for the multipliers (at frozen q) with damped fixed-point steps in q,
which is the practical reading of "iterate the fixed-point equation to
convergence".  Plain undamped iteration diverges whenever the exponent
alpha/(alpha+beta-1) leaves (-1, 1).

For psi = log both Psi' terms collapse and the fixed point has the closed
form q_i proportional to (lam0 + sum_r lam_r g_r(a_i))^(alpha/beta), exposed
separately as an independent cross-check of the iterative path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import BadParams, Infeasible, NotConverged, StepFailed, UnsupportedSupport
from .measures import Hyper
from .psi import GenFn, big_psi_deriv, big_psi_second, parse_spec

__all__ = [
    "MaxEntProblem",
    "MaxEntSolution",
    "SolveOptions",
    "c1",
    "c2",
    "escort_to_primal",
    "fixed_point_step",
    "solve",
    "closed_form_log",
]


@dataclass(frozen=True)
class MaxEntProblem:
    """Constraint data (g, targets), hyperparameters, and generating function."""

    n: int
    g: np.ndarray
    targets: np.ndarray
    h: Hyper
    f: GenFn

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if g.size == 0:
            g = np.zeros((0, self.n))
        t = np.asarray(self.targets, dtype=float).reshape(-1)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "targets", t)
        if self.n < 2:
            raise BadParams("alphabet size must be >= 2")
        if g.shape != (t.size, self.n):
            raise BadParams(f"g must be (m, n) = ({t.size}, {self.n}), got {g.shape}")
        if self.h.alpha == 0.0:
            raise BadParams("escort constraints need alpha != 0")
        if self.h.alpha + self.h.beta == 1.0:
            raise BadParams("alpha + beta = 1 is outside the maxent formulation")
        if t.size and np.linalg.matrix_rank(g) < t.size:
            raise BadParams("constraint rows must be linearly independent")

    @property
    def m(self) -> int:
        return int(self.targets.size)

    @classmethod
    def from_dict(cls, obj: dict) -> "MaxEntProblem":
        try:
            n = int(obj["n"])
            g = obj.get("g", [])
            targets = obj.get("G", [])
            h = Hyper.of(float(obj["alpha"]), float(obj["beta"]))
            f = parse_spec(obj["psi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BadParams(f"bad maxent problem object: {exc}") from exc
        return cls(n=n, g=g, targets=targets, h=h, f=f)


@dataclass
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 10_000
    omega0: float = 0.5
    initial: Optional[np.ndarray] = None
    keep_trace: bool = False


@dataclass
class MaxEntSolution:
    q: np.ndarray
    p: np.ndarray
    lam: np.ndarray
    lam0: float
    constraint_residual: float
    fixed_point_residual: float
    iterations: int
    trace: Optional[List[Tuple[float, float]]] = None

    def to_dict(self) -> dict:
        return {
            "p": [float(x) for x in self.p],
            "q": [float(x) for x in self.q],
            "lambda": [float(x) for x in self.lam],
            "lambda0": float(self.lam0),
            "residuals": {
                "constraint": float(self.constraint_residual),
                "fixed_point": float(self.fixed_point_residual),
            },
            "iterations": int(self.iterations),
        }


# ---------------------------------------------------------------------------
# Log-norm bookkeeping
# ---------------------------------------------------------------------------

def _check_positive_simplex(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0.0):
        raise UnsupportedSupport("the escort variable must be strictly positive")
    return q


def c1(q, h: Hyper) -> float:
    """c1(q) = ((a+b)/a) [ln ||q||_{(a+b)/a} - ln ||q||_{1/a}], counting weights."""
    q = _check_positive_simplex(q)
    a, s = h.alpha, h.sum
    t_ab = math.log(float(np.sum(q ** (s / a))))
    t_inv = math.log(float(np.sum(q ** (1.0 / a))))
    return t_ab - s * t_inv


def c2(q, h: Hyper) -> float:
    """c2(q) = -ln ||q||_{1/a} = -a ln sum q^{1/a}."""
    q = _check_positive_simplex(q)
    a = h.alpha
    return -a * math.log(float(np.sum(q ** (1.0 / a))))


def escort_to_primal(q: np.ndarray, alpha: float) -> np.ndarray:
    """p = q^{[1/alpha]}: the 1/alpha-zoomed (primal) distribution."""
    w = np.asarray(q, dtype=float) ** (1.0 / alpha)
    return w / np.sum(w)


# ---------------------------------------------------------------------------
# The fixed-point displays (first-order conditions solved for q)
# ---------------------------------------------------------------------------

def _regime(problem: MaxEntProblem) -> str:
    a, b = problem.h.alpha, problem.h.beta
    if b == 0.0:
        return "beta_zero"
    if a + b == 0.0:
        return "sum_zero"
    return "general"


def _phi_raw(q: np.ndarray, lam0: float, lam: np.ndarray, problem: MaxEntProblem):
    """Evaluate the display right side at (q, multipliers), unnormalized.

    Returns (q_hat, dq_hat/dw) where w_i = lam0 + sum_r lam_r g_r(a_i); the
    derivative feeds the multiplier Newton.  Raises StepFailed when a bracket
    that must be positive is not.
    """
    a, b = problem.h.alpha, problem.h.beta
    h = problem.h
    q = _check_positive_simplex(q)
    w = lam0 + (problem.g.T @ lam if problem.m else np.zeros_like(q))
    regime = _regime(problem)
    if regime == "general":
        if problem.m == 0 and lam0 == 0.0:
            # the multiplier term vanishes identically, the bracket is
            # constant across atoms, and one step lands on the uniform point
            return np.full(problem.n, 1.0 / problem.n), np.zeros(problem.n)
        s1a = float(np.sum(q ** (1.0 / a)))
        s_ab = float(np.sum(q ** ((a + b) / a)))
        p1 = big_psi_deriv(problem.f, c1(q, h))
        p2 = big_psi_deriv(problem.f, c2(q, h))
        if p1 <= 0.0:
            raise StepFailed("Psi'(c1) <= 0; generating function is not increasing")
        t = q ** (1.0 - 1.0 / a)
        bracket = (p1 - p2) / s1a + a * b * w * t
        base = (s_ab / p1) * bracket
        if np.any(base <= 0.0):
            raise StepFailed("nonpositive bracket under a real power")
        expo = a / (a + b - 1.0)
        q_hat = base ** expo
        dq_dw = expo * (base ** (expo - 1.0)) * (s_ab / p1) * a * b * t
        return q_hat, dq_dw
    if regime == "beta_zero":
        if not problem.f.at_least("C2") or problem.f.second is None:
            raise BadParams("the beta = 0 fixed point needs a C2 generating function")
        s1a = float(np.sum(q ** (1.0 / a)))
        c2v = c2(q, h)
        p2 = big_psi_deriv(problem.f, c2v)
        if p2 <= 0.0:
            raise StepFailed("Psi'(c2) <= 0; generating function is not increasing")
        p2dd = big_psi_second(problem.f, c2v)
        slog = float(np.sum(q * np.log(q)))
        t = q ** (1.0 / a - 1.0)
        arg = -1.0 + (a * a / p2) * w + (p2dd / (p2 * s1a)) * (slog + c2v) * t
        q_hat = np.exp(np.clip(arg, -700.0, 700.0))
        dq_dw = q_hat * (a * a / p2)
        return q_hat, dq_dw
    # alpha + beta = 0
    s1a = float(np.sum(q ** (1.0 / a)))
    p0 = big_psi_deriv(problem.f, 0.0)
    p2 = big_psi_deriv(problem.f, c2(q, h))
    if p0 <= 0.0:
        raise StepFailed("Psi'(0) <= 0; generating function is not increasing")
    t = q ** (1.0 / a - 1.0)
    denom = t * (problem.n * p0 - p2) / s1a - a * a * w
    if np.any(denom <= 0.0):
        raise StepFailed("nonpositive denominator in the reciprocal fixed point")
    q_hat = p0 / denom
    dq_dw = (q_hat * q_hat) * (a * a) / p0
    return q_hat, dq_dw


def fixed_point_step(q: np.ndarray, lam0: float, lam: np.ndarray,
                     problem: MaxEntProblem, omega: float = 1.0) -> np.ndarray:
    """One damped fixed-point update: blend q with the normalized display value."""
    if not 0.0 < omega <= 1.0:
        raise BadParams("omega must lie in (0, 1]")
    q_hat, _ = _phi_raw(q, lam0, lam, problem)
    phi = q_hat / np.sum(q_hat)
    q_next = (1.0 - omega) * np.asarray(q, dtype=float) + omega * phi
    return q_next / np.sum(q_next)


# ---------------------------------------------------------------------------
# Multiplier Newton at frozen q
# ---------------------------------------------------------------------------

def _residuals(q_hat: np.ndarray, problem: MaxEntProblem) -> np.ndarray:
    r = np.empty(problem.m + 1)
    r[0] = np.sum(q_hat) - 1.0
    if problem.m:
        r[1:] = problem.g @ q_hat - problem.targets
    return r


def _newton_multipliers(q, z, problem, tol, max_steps=60):
    """Solve for (lam0, lam) so the display value is normalized and on-target."""
    z = np.asarray(z, dtype=float).copy()

    def evaluate(zv):
        q_hat, dq_dw = _phi_raw(q, zv[0], zv[1:], problem)
        return q_hat, dq_dw, _residuals(q_hat, problem)

    q_hat, dq_dw, r = evaluate(z)
    best_norm = float(np.max(np.abs(r)))
    gaug = np.vstack([np.ones(problem.n), problem.g]) if problem.m \
        else np.ones((1, problem.n))
    for _ in range(max_steps):
        if best_norm < tol:
            return z, True
        jac = gaug @ (dq_dw[:, None] * gaug.T)
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            # rank-deficient multipliers (e.g. m >= n-1): minimum-norm step
            step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        scale = 1.0
        improved = False
        for _ in range(50):
            z_try = z - scale * step
            try:
                q_hat, dq_dw, r_try = evaluate(z_try)
            except StepFailed:
                scale *= 0.5
                continue
            norm_try = float(np.max(np.abs(r_try)))
            if norm_try < best_norm:
                z, r, best_norm, improved = z_try, r_try, norm_try, True
                break
            scale *= 0.5
        if not improved:
            return z, best_norm < tol
    return z, best_norm < tol


def _initial_multipliers(q, problem: MaxEntProblem) -> np.ndarray:
    """A multiplier point whose brackets are strictly positive at q."""
    a, b = problem.h.alpha, problem.h.beta
    z = np.zeros(problem.m + 1)
    regime = _regime(problem)
    if regime == "general":
        s1a = float(np.sum(q ** (1.0 / a)))
        p1 = big_psi_deriv(problem.f, c1(q, problem.h))
        p2 = big_psi_deriv(problem.f, c2(q, problem.h))
        const = (p1 - p2) / s1a
        t = q ** (1.0 - 1.0 / a)
        if const <= 0.0:
            # relative margin: an additive one underflows when const/t is huge
            s = (-const / float(np.min(t))) * (1.0 + 1e-9) + 1.0
            for _ in range(100):
                if np.all(const + s * t > 0.0):
                    break
                s = 2.0 * s + 1.0
            z[0] = s / (a * b)
    elif regime == "sum_zero":
        s1a = float(np.sum(q ** (1.0 / a)))
        p0 = big_psi_deriv(problem.f, 0.0)
        p2 = big_psi_deriv(problem.f, c2(q, problem.h))
        base = q ** (1.0 / a - 1.0) * (problem.n * p0 - p2) / s1a
        s = float(np.min(base))
        w0 = s - max(1.0, abs(s) * 1e-9)
        for _ in range(100):
            if np.all(base - w0 > 0.0):
                break
            w0 -= max(1.0, abs(w0))
        z[0] = w0 / (a * a)
    return z


# ---------------------------------------------------------------------------
# Feasibility and the outer loop
# ---------------------------------------------------------------------------

def _phase1_point(problem: MaxEntProblem) -> np.ndarray:
    """LP feasibility check; returns a feasible simplex point."""
    n = problem.n
    if problem.m == 0:
        return np.full(n, 1.0 / n)
    a_eq = np.vstack([problem.g, np.ones((1, n))])
    b_eq = np.append(problem.targets, 1.0)
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * n,
                  method="highs")
    if res.status != 0 or res.x is None:
        raise Infeasible("no probability vector satisfies the constraints")
    return np.asarray(res.x, dtype=float)


def solve(problem: MaxEntProblem, opts: Optional[SolveOptions] = None) -> MaxEntSolution:
    """Run the damped fixed-point iteration with nested multiplier Newton.

    Terminates when both the fixed-point residual ||phi(q) - q||_inf and the
    constraint residual ||g q - G||_inf fall below opts.tol.  The damping
    weight starts at 0.5, halves when a step fails or residuals stall, and
    creeps back up after consecutive good steps.
    """
    opts = opts or SolveOptions()
    if opts.initial is not None:
        q = np.asarray(opts.initial, dtype=float)
        if q.shape != (problem.n,) or np.any(q <= 0.0):
            raise BadParams("initial point must be strictly positive of length n")
        q = q / np.sum(q)
        _phase1_point(problem)  # still reject infeasible problems up front
    else:
        q = 0.5 * _phase1_point(problem) + 0.5 / problem.n
        q = q / np.sum(q)
    z = _initial_multipliers(q, problem)
    omega = opts.omega0
    newton_tol = max(1e-13, 0.01 * opts.tol)
    trace: Optional[List[Tuple[float, float]]] = [] if opts.keep_trace else None
    prev_fp = math.inf
    best_fp, best_q, best_z = math.inf, q.copy(), z.copy()
    for iteration in range(1, opts.max_iter + 1):
        try:
            try:
                z, _ = _newton_multipliers(q, z, problem, newton_tol)
            except StepFailed:
                # stale warm start after a q move; re-seed before giving up
                z = _initial_multipliers(q, problem)
                z, _ = _newton_multipliers(q, z, problem, newton_tol)
            q_hat, _ = _phi_raw(q, z[0], z[1:], problem)
        except StepFailed:
            if omega < 1e-6:
                raise
            omega *= 0.5
            z = _initial_multipliers(q, problem)
            prev_fp = math.inf
            continue
        phi = q_hat / np.sum(q_hat)
        fp_res = float(np.max(np.abs(phi - q)))
        con_res = float(np.max(np.abs(problem.g @ q - problem.targets))) \
            if problem.m else 0.0
        if trace is not None:
            trace.append((fp_res, con_res))
        if fp_res < opts.tol and con_res < opts.tol:
            return MaxEntSolution(
                q=q,
                p=escort_to_primal(q, problem.h.alpha),
                lam=_report_lam(z[1:], problem),
                lam0=float(_report_lam(np.array([z[0]]), problem)[0]),
                constraint_residual=con_res,
                fixed_point_residual=fp_res,
                iterations=iteration,
                trace=trace,
            )
        if fp_res < best_fp:
            best_fp, best_q, best_z = fp_res, q.copy(), z.copy()
        elif fp_res > 10.0 * best_fp:
            # slow divergence past the best point: restore it, damp harder
            q, z = best_q.copy(), best_z.copy()
            omega = max(omega * 0.25, 1e-6)
            prev_fp = math.inf
            continue
        if fp_res > prev_fp:
            omega = max(omega * 0.5, 1e-6)
        elif fp_res < prev_fp:
            # cap below 1 so a blend never collapses an atom outright
            omega = min(0.95, omega * 1.2)
        prev_fp = fp_res
        q = (1.0 - omega) * q + omega * phi
        q = q / np.sum(q)
        if float(np.min(q)) < 1e-15:
            raise NotConverged(
                "iterates approach the simplex boundary; the interior "
                "fixed-point form does not apply there"
            )
    raise NotConverged(f"no convergence within {opts.max_iter} iterations")


def kkt_residual(problem: MaxEntProblem, q: np.ndarray, h_fd: float = 1e-6) -> float:
    """Stationarity check at q: distance of grad entropy from span{1, g_r}.

    Uses central finite differences of the entropy as a function of the
    escort variable and fits the multipliers by least squares, so the value
    is independent of any multiplier normalization convention.
    """
    from .entropy import gabe
    from .measures import Measure

    q = np.asarray(q, dtype=float)

    def objective(qv):
        p = escort_to_primal(qv, problem.h.alpha)
        return gabe(Measure(p, check_mass=False), problem.h, problem.f).value

    grad = np.empty(problem.n)
    for i in range(problem.n):
        e = np.zeros(problem.n)
        e[i] = h_fd
        grad[i] = (objective(q + e) - objective(q - e)) / (2.0 * h_fd)
    basis = np.vstack([np.ones(problem.n), problem.g]).T if problem.m \
        else np.ones((problem.n, 1))
    coef, *_ = np.linalg.lstsq(basis, grad, rcond=None)
    return float(np.max(np.abs(grad - basis @ coef)))


def _report_lam(lam: np.ndarray, problem: MaxEntProblem) -> np.ndarray:
    # the alpha + beta = 0 statement rewrites lam -> -alpha^2 lam; report in
    # that convention so returned multipliers match the display as published
    if _regime(problem) == "sum_zero":
        a = problem.h.alpha
        return -(a * a) * np.asarray(lam, dtype=float)
    return np.asarray(lam, dtype=float)


# ---------------------------------------------------------------------------
# Closed form for psi = log
# ---------------------------------------------------------------------------

def _is_log_like(f: GenFn) -> bool:
    xs = np.array([-3.0, 0.0, 2.5])
    try:
        d = np.asarray(big_psi_deriv(f, xs), dtype=float)
    except BadParams:
        return False
    return bool(np.all(np.abs(d - 1.0) <= 1e-12))


def closed_form_log(problem: MaxEntProblem, tol: float = 1e-12,
                    max_steps: int = 200) -> MaxEntSolution:
    """Direct solution q_i ~ (lam0 + sum_r lam_r g_r(a_i))^(alpha/beta).

    Valid for psi = log (Psi' identically 1) with beta(alpha+beta) != 0.
    The multiplier direction is found by Newton on the m constraint
    equations plus a gauge fixing mean(w) = 1, then rescaled to the
    Lagrangian normalization.
    """
    a, b = problem.h.alpha, problem.h.beta
    if b == 0.0 or a + b == 0.0:
        raise BadParams("the closed form needs beta(alpha+beta) != 0")
    if not _is_log_like(problem.f):
        raise BadParams("the closed form applies to the log generating function")
    n, m = problem.n, problem.m
    _phase1_point(problem)

    def q_of_w(w):
        qv = w ** (a / b)
        return qv / np.sum(qv)

    if m == 0:
        q = np.full(n, 1.0 / n)
        w_tilde = np.ones(n)
        v = np.array([1.0])
        iterations = 0
    else:
        basis = np.vstack([np.ones(n), problem.g])  # (m+1, n); w = basis.T @ v
        c_pow = a / b

        def residual(vv, targets):
            w = basis.T @ vv
            if np.any(w <= 0.0):
                return None, None
            q = q_of_w(w)
            r = np.empty(m + 1)
            r[:m] = problem.g @ q - targets
            r[m] = np.mean(w) - 1.0
            return r, w

        def jacobian(w):
            u = w ** c_pow
            z_sum = float(np.sum(u))
            du = (c_pow * w ** (c_pow - 1.0))[:, None] * basis.T  # (n, m+1)
            q = u / z_sum
            dq = (du - q[:, None] * np.sum(du, axis=0)[None, :]) / z_sum
            jac = np.empty((m + 1, m + 1))
            jac[:m, :] = problem.g @ dq
            jac[m, :] = np.mean(basis.T, axis=0)
            return jac

        def newton(v, targets, steps):
            r, w = residual(v, targets)
            if r is None:
                return v, None, math.inf
            for _ in range(steps):
                norm = float(np.max(np.abs(r)))
                if norm < tol:
                    return v, w, norm
                try:
                    step = np.linalg.solve(jacobian(w), r)
                except np.linalg.LinAlgError:
                    step, *_ = np.linalg.lstsq(jacobian(w), r, rcond=None)
                scale, moved = 1.0, False
                for _ in range(60):
                    r_try, w_try = residual(v - scale * step, targets)
                    if r_try is not None and float(np.max(np.abs(r_try))) < norm:
                        v = v - scale * step
                        r, w = r_try, w_try
                        moved = True
                        break
                    scale *= 0.5
                if not moved:
                    return v, w, norm
            return v, w, float(np.max(np.abs(r)))

        # continuation from the uniform-consistent targets, which the gauge
        # start v = (1, 0) solves exactly; plain Newton stalls on warped cones
        g_uniform = problem.g @ np.full(n, 1.0 / n)
        v = np.zeros(m + 1)
        v[0] = 1.0
        iterations = 0
        t, dt = 0.0, 1.0
        while t < 1.0:
            t_next = min(1.0, t + dt)
            targets_t = (1.0 - t_next) * g_uniform + t_next * problem.targets
            v_try, w_try, norm = newton(v.copy(), targets_t, max_steps)
            iterations += 1
            if norm < tol:
                v, w = v_try, w_try
                t = t_next
                dt = min(1.0, dt * 2.0)
                if float(np.min(w)) <= 1e-7 * float(np.max(w)):
                    raise NotConverged(
                        "multiplier cone boundary reached: the entropy maximum "
                        "has a zero atom, outside the interior fixed-point form"
                    )
            else:
                dt *= 0.5
                if dt < 1e-4:
                    raise NotConverged(
                        "continuation stalled near the positive-cone boundary "
                        "(the maximizer appears to pin an atom at zero)"
                    )
        q = q_of_w(w)
        w_tilde = w

    # rescale the gauge multipliers to the Lagrangian normalization
    s_ab = float(np.sum(q ** ((a + b) / a)))
    w_lagr = (q ** (b / a)) / (s_ab * a * b)
    ratio = float(np.median(w_lagr / w_tilde))
    lam0 = ratio * v[0]
    lam = ratio * v[1:] if m else np.zeros(0)
    q_hat, _ = _phi_raw(q, lam0, lam, problem)
    phi = q_hat / np.sum(q_hat)
    return MaxEntSolution(
        q=q,
        p=escort_to_primal(q, a),
        lam=lam,
        lam0=lam0,
        constraint_residual=float(np.max(np.abs(problem.g @ q - problem.targets)))
        if m else 0.0,
        fixed_point_residual=float(np.max(np.abs(phi - q))),
        iterations=iterations,
    )

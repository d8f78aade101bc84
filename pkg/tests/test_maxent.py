"""Escort-constraint maximum entropy: displays, solver, closed form."""

import math

import numpy as np
import pytest

import gabdiv as g
from gabdiv import Hyper, MaxEntProblem, SolveOptions, parse_spec
from gabdiv.maxent import (
    _phi_raw,
    _regime,
    c1,
    c2,
    closed_form_log,
    escort_to_primal,
    fixed_point_step,
    kkt_residual,
    solve,
)

FLOG = parse_spec("log")
FID = parse_spec("identity")
FPOW2 = parse_spec("power:2")


def random_problem(rng, spec="log", n_lo=3, n_hi=21, m_hi=4, hyper=None):
    n = int(rng.integers(n_lo, n_hi))
    m = int(rng.integers(1, m_hi))
    while True:
        gmat = rng.normal(size=(m, n))
        if np.linalg.matrix_rank(gmat) == m:
            break
    if hyper is None:
        a = float(rng.uniform(0.4, 2.0))
        b = float(rng.uniform(0.4, 2.0))
        if abs(a + b - 1.0) < 0.2:
            b += 0.4
        hyper = Hyper.of(a, b)
    qstar = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
    return MaxEntProblem(n=n, g=gmat, targets=gmat @ qstar, h=hyper,
                         f=parse_spec(spec))


class TestProblemValidation:
    def test_alpha_zero_rejected(self):
        with pytest.raises(g.BadParams):
            MaxEntProblem(n=3, g=[[0.0, 1, 2]], targets=[1.0],
                          h=Hyper.of(0.0, 0.5), f=FLOG)

    def test_sum_one_rejected(self):
        with pytest.raises(g.BadParams):
            MaxEntProblem(n=3, g=[[0.0, 1, 2]], targets=[1.0],
                          h=Hyper.of(0.3, 0.7), f=FLOG)

    def test_dependent_rows_rejected(self):
        with pytest.raises(g.BadParams):
            MaxEntProblem(n=3, g=[[0.0, 1, 2], [0.0, 2, 4]], targets=[1.0, 2.0],
                          h=Hyper.of(1.0, 1.0), f=FLOG)

    def test_from_dict(self):
        prob = MaxEntProblem.from_dict({
            "n": 2, "g": [[0.0, 1.0]], "G": [0.7],
            "alpha": 1.0, "beta": 1.0, "psi": "log",
        })
        assert prob.m == 1 and prob.n == 2

    def test_beta_zero_needs_c2(self):
        # cdf-exp carries no second derivative, which the beta = 0 display uses
        prob = MaxEntProblem(n=3, g=[], targets=[], h=Hyper.of(0.7, 0.0),
                             f=parse_spec("cdf-exp"))
        with pytest.raises(g.BadParams):
            solve(prob)


class TestNorms:
    def test_c2_is_zero_for_alpha_one(self):
        assert c2(np.array([0.5, 0.5]), Hyper.of(1.0, 1.0)) == pytest.approx(0.0)

    def test_degenerate_limits(self):
        # all norms of a near-degenerate vector approach 1
        q = np.array([1.0 - 1e-12, 1e-12])
        h = Hyper.of(0.5, 0.5)
        assert abs(c1(q, h)) <= 1e-9
        assert abs(c2(q, h)) <= 1e-9

    def test_hand_values(self):
        q = np.array([0.25, 0.75])
        h = Hyper.of(0.5, 0.5)
        s_inv = 0.25 ** 2 + 0.75 ** 2
        s_ab = 0.25 ** 2 + 0.75 ** 2  # (a+b)/a = 2 = 1/a here
        assert c2(q, h) == pytest.approx(-0.5 * math.log(s_inv), abs=1e-15)
        assert c1(q, h) == pytest.approx(math.log(s_ab) - math.log(s_inv), abs=1e-15)

    def test_positivity_required(self):
        with pytest.raises(g.UnsupportedSupport):
            c2(np.array([0.0, 1.0]), Hyper.of(0.5, 0.5))


class TestFixedPointStep:
    def test_unconstrained_step_reaches_uniform(self):
        # with no multiplier terms the bracket is constant across atoms
        prob = MaxEntProblem(n=4, g=[], targets=[], h=Hyper.of(0.7, 0.9), f=FLOG)
        q = np.array([0.4, 0.3, 0.2, 0.1])
        stepped = fixed_point_step(q, 0.0, np.zeros(0), prob, omega=1.0)
        assert np.allclose(stepped, 0.25, atol=1e-12)

    def test_log_display_reduces_to_power_of_multipliers(self, rng):
        # with Psi' constant the bracket term vanishes and the fixed point
        # collapses to q_i ~ w_i^(alpha/beta)
        prob = random_problem(rng, "log", n_lo=5, n_hi=6, m_hi=2)
        sol = closed_form_log(prob)
        w = sol.lam0 + prob.g.T @ sol.lam
        predicted = w ** (prob.h.alpha / prob.h.beta)
        predicted /= predicted.sum()
        assert np.max(np.abs(predicted - sol.q)) <= 1e-10

    def test_converged_point_is_fixed(self, rng):
        prob = random_problem(rng, "log")
        sol = solve(prob, SolveOptions(tol=1e-12, max_iter=30000))
        q_hat, _ = _phi_raw(sol.q, sol.lam0, sol.lam, prob)
        assert np.max(np.abs(q_hat / q_hat.sum() - sol.q)) <= 1e-10

    def test_omega_validated(self):
        prob = MaxEntProblem(n=3, g=[], targets=[], h=Hyper.of(1.0, 1.0), f=FLOG)
        with pytest.raises(g.BadParams):
            fixed_point_step(np.full(3, 1 / 3), 0.0, np.zeros(0), prob, omega=0.0)


class TestSolve:
    def test_unconstrained_gives_uniform(self):
        for h, f in ((Hyper.of(0.7, 0.9), FLOG), (Hyper.of(0.8, 0.0), FPOW2),
                     (Hyper.of(0.9, -0.9), FID), (Hyper.of(-0.5, 2.0), FID)):
            prob = MaxEntProblem(n=5, g=[], targets=[], h=h, f=f)
            sol = solve(prob, SolveOptions(tol=1e-11))
            assert np.max(np.abs(sol.q - 0.2)) <= 1e-10
            assert np.max(np.abs(sol.p - 0.2)) <= 1e-10

    def test_two_atom_example(self):
        # one constraint pinning the escort mean at 0.7 forces q = (0.3, 0.7)
        prob = MaxEntProblem(n=2, g=[[0.0, 1.0]], targets=[0.7],
                             h=Hyper.of(1.0, 1.0), f=FLOG)
        sol = solve(prob, SolveOptions(tol=1e-11))
        assert np.allclose(sol.q, [0.3, 0.7], atol=1e-10)
        cf = closed_form_log(prob)
        assert np.allclose(cf.q, [0.3, 0.7], atol=1e-12)
        assert sol.lam0 == pytest.approx(cf.lam0, abs=1e-8)
        assert np.allclose(sol.lam, cf.lam, atol=1e-8)

    def test_residuals_reported(self, rng):
        prob = random_problem(rng, "log")
        sol = solve(prob, SolveOptions(tol=1e-9, keep_trace=True))
        assert sol.constraint_residual <= 1e-9
        assert sol.fixed_point_residual <= 1e-9
        assert len(sol.trace) == sol.iterations

    def test_infeasible_target(self):
        prob = MaxEntProblem(n=3, g=[[0.0, 1.0, 2.0]], targets=[5.0],
                             h=Hyper.of(1.0, 1.0), f=FLOG)
        with pytest.raises(g.Infeasible):
            solve(prob)

    def test_not_converged_when_starved(self, rng):
        prob = random_problem(rng, "log")
        with pytest.raises(g.NotConverged):
            solve(prob, SolveOptions(tol=1e-12, max_iter=1))

    def test_kkt_stationarity(self, rng):
        # boundary-pinned optima are legitimately NotConverged; the KKT
        # check applies to the interior solutions the solver does return
        cases = [("identity", Hyper.of(-0.5, 2.0)), ("log", Hyper.of(1.3, 0.9)),
                 ("power:2", Hyper.of(0.8, 0.0)), ("identity", Hyper.of(0.9, -0.9))]
        for spec, h in cases:
            for _ in range(8):
                prob = random_problem(rng, spec, n_lo=4, n_hi=7, m_hi=2, hyper=h)
                try:
                    sol = solve(prob, SolveOptions(tol=1e-11, max_iter=3000))
                except g.NotConverged:
                    continue
                assert kkt_residual(prob, sol.q) <= 1e-6, (spec, h)
                break
            else:
                pytest.fail(f"no interior instance found for {spec}, {h}")

    def test_agrees_with_closed_form(self, rng):
        done = 0
        while done < 10:
            prob = random_problem(rng, "log")
            try:
                cf = closed_form_log(prob)
            except g.NotConverged:
                continue  # boundary-pinned optimum: outside the interior form
            sol = solve(prob, SolveOptions(tol=1e-10, max_iter=30000))
            assert np.max(np.abs(sol.q - cf.q)) <= 1e-8
            done += 1

    def test_report_convention_for_sum_zero(self, rng):
        # returned multipliers carry the -alpha^2 rewrite in that regime
        prob = random_problem(rng, "identity", n_lo=4, n_hi=6, m_hi=2,
                              hyper=Hyper.of(0.9, -0.9))
        sol = solve(prob, SolveOptions(tol=1e-10, max_iter=30000))
        a = prob.h.alpha
        lam_lagr = sol.lam / (-(a * a))
        lam0_lagr = sol.lam0 / (-(a * a))
        q_hat, _ = _phi_raw(sol.q, lam0_lagr, lam_lagr, prob)
        assert np.max(np.abs(q_hat / q_hat.sum() - sol.q)) <= 1e-8


class TestClosedForm:
    def test_requires_log(self, rng):
        prob = random_problem(rng, "identity")
        with pytest.raises(g.BadParams):
            closed_form_log(prob)

    def test_requires_nonzero_beta(self):
        prob = MaxEntProblem(n=3, g=[], targets=[], h=Hyper.of(0.7, 0.0), f=FLOG)
        with pytest.raises(g.BadParams):
            closed_form_log(prob)

    def test_unconstrained_is_uniform(self):
        prob = MaxEntProblem(n=6, g=[], targets=[], h=Hyper.of(0.7, 0.9), f=FLOG)
        assert np.allclose(closed_form_log(prob).q, 1.0 / 6.0, atol=1e-14)

    def test_monotone_in_affine_scores(self):
        # one affine constraint with alpha/beta = 1: q is affine in the raw
        # scores, hence monotone in the atom index
        prob = MaxEntProblem(n=5, g=[[0.0, 1.0, 2.0, 3.0, 4.0]], targets=[2.5],
                             h=Hyper.of(1.0, 1.0), f=FLOG)
        cf = closed_form_log(prob)
        assert np.all(np.diff(cf.q) > 0)
        assert cf.constraint_residual <= 1e-10

    def test_constraints_met_tightly(self, rng):
        done = 0
        while done < 10:
            prob = random_problem(rng, "log")
            try:
                cf = closed_form_log(prob)
            except g.NotConverged:
                continue
            assert cf.constraint_residual <= 1e-10
            assert cf.fixed_point_residual <= 1e-9
            done += 1

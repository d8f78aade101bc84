"""Entropy values, axioms, curves, additivity, concavity, maximization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gabdiv as g
from gabdiv import Hyper, Measure, parse_spec
from conftest import positive_probability

FID = parse_spec("identity")
FLOG = parse_spec("log")


class TestGabeValues:
    def test_degenerate_log_entropy_is_zero(self):
        P = Measure([1.0, 0.0, 0.0])
        assert g.gabe(P, Hyper.of(0.7, 0.9), FLOG).value == pytest.approx(0.0, abs=1e-15)

    def test_uniform_log_closed_form(self):
        P = Measure([0.25] * 4)
        e = g.gabe(P, Hyper.of(0.5, 0.5), FLOG)
        assert e.value == pytest.approx(math.log(4.0) / (0.5 * 1.0), abs=1e-12)
        assert e.scaled_value == pytest.approx(math.log(4.0), abs=1e-12)

    @settings(max_examples=200, derandomize=True)
    @given(st.floats(0.01, 0.99), st.floats(0.2, 1.5), st.floats(0.2, 1.5))
    def test_bernoulli_closed_form(self, p, a, b):
        P = Measure([p, 1.0 - p])
        got = g.gabe(P, Hyper.of(a, b), FLOG).value
        want = math.log(p ** a + (1 - p) ** a) / (a * b) \
            - math.log(p ** (a + b) + (1 - p) ** (a + b)) / ((a + b) * b)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_bernoulli_half_scaled_is_ln2(self):
        e = g.gabe(Measure([0.5, 0.5]), Hyper.of(1.0, 1.0), FLOG)
        assert e.scaled_value == pytest.approx(math.log(2.0), abs=1e-14)

    def test_corner_value_is_psi_of_one(self):
        for spec in ("identity", "log", "cdf-normal"):
            f = parse_spec(spec)
            e = g.gabe(Measure([1.0, 0.0]), Hyper.of(0.5, 0.7), f)
            assert e.scaled_value == pytest.approx(float(f(1.0)), abs=1e-12)

    def test_edge_regimes_match_general_limits(self, rng):
        P = positive_probability(rng, 6)
        cases = [
            (lambda t: Hyper.of(0.8, t), Hyper.of(0.8, 0.0)),
        ]
        for near, at in cases:
            edge = g.gabe(P, at, FLOG).value
            gaps = [abs(g.gabe(P, near(10.0 ** -k), FLOG).value - edge)
                    for k in (3, 4, 5)]
            assert gaps[2] <= 0.02 * gaps[0]

    def test_zero_atom_with_negative_exponent(self):
        with pytest.raises(g.UnsupportedSupport):
            g.gabe(Measure([0.0, 1.0]), Hyper.of(-0.5, 2.0), FID)


class TestAxioms:
    def test_symmetry_under_permutation(self, rng):
        P = positive_probability(rng, 7)
        perm = rng.permutation(7)
        Pp = Measure(P.density[perm])
        for h in (Hyper.of(0.6, 0.9), Hyper.of(0.8, 0.0), Hyper.of(0.5, -0.5)):
            assert g.gabe(P, h, FLOG).value == pytest.approx(
                g.gabe(Pp, h, FLOG).value, abs=1e-13)

    def test_expandibility(self, rng):
        # appending a zero atom changes nothing when exponents are positive
        P = positive_probability(rng, 5)
        Pe = Measure(np.append(P.density, 0.0))
        for h in (Hyper.of(0.6, 0.9), Hyper.of(1.2, 0.0)):
            assert g.gabe(P, h, FLOG).value == pytest.approx(
                g.gabe(Pe, h, FLOG).value, abs=1e-14)

    def test_continuity_in_density(self, rng):
        P = positive_probability(rng, 6)
        h = Hyper.of(0.6, 0.9)
        base = g.gabe(P, h, FLOG).value
        d = P.density.copy()
        d[0] += 1e-6
        moved = g.gabe(Measure(d, check_mass=False), h, FLOG).value
        assert abs(moved - base) <= 1e-6 * 100.0

    def test_log_norm_entropy_link(self, rng):
        P = positive_probability(rng, 9)
        a, b = 0.7, 0.9
        lhs = g.gabe(P, Hyper.of(a, b), FLOG).value
        rhs = g.log_norm_entropy(P, a, a + b) / (a * (a + b))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_log_norm_entropy_reduces_to_renyi(self, rng):
        P = positive_probability(rng, 9)
        a = 0.5
        renyi = math.log(float(np.sum(P.density ** a))) / (1.0 - a)
        assert g.log_norm_entropy(P, a, 1.0) == pytest.approx(renyi, rel=1e-10)


class TestBernoulliCurve:
    def test_symmetry_about_half(self):
        grid = np.linspace(0.0, 1.0, 101)
        for spec in ("identity", "log", "power:2", "cdf-normal"):
            rows = g.bernoulli_curve(Hyper.of(0.7, 0.9), parse_spec(spec), grid)
            assert np.all(np.abs(rows[:, 1] - rows[::-1, 1]) <= 1e-12)

    def test_corners_carry_psi_one(self):
        rows = g.bernoulli_curve(Hyper.of(0.5, 0.7), FID, [0.0, 1.0])
        assert np.allclose(rows[:, 1], 1.0, atol=1e-12)

    def test_log_curve_concavity(self):
        # in the concavity regimes alpha*(alpha+beta) < 0, so the scaled
        # curve flips sign; the entropy itself must be concave in p
        h = Hyper.of(-0.5, 2.0)
        grid = np.arange(0.05, 0.951, 1e-3)
        rows = g.bernoulli_curve(h, FLOG, grid)
        v = rows[:, 1] / (h.alpha * (h.alpha + h.beta))
        assert np.all(v[2:] - 2 * v[1:-1] + v[:-2] <= 1e-8)

    def test_grid_validation(self):
        with pytest.raises(g.BadParams):
            g.bernoulli_curve(Hyper.of(1.0, 1.0), FLOG, [0.5, 1.5])


class TestAdditivity:
    def test_log_is_exactly_additive(self, rng):
        for _ in range(30):
            P = positive_probability(rng, int(rng.integers(2, 6)))
            Q = positive_probability(rng, int(rng.integers(2, 6)))
            h = Hyper.of(*rng.uniform(0.3, 1.4, 2))
            gap = g.additivity_gap(P, Q, h, FLOG, lambda v: v, lambda v: v)
            assert abs(gap) <= 1e-10

    def test_uniform_product_closed_form(self):
        n, m = 3, 4
        P = Measure(np.full(n, 1.0 / n))
        Q = Measure(np.full(m, 1.0 / m))
        h = Hyper.of(0.5, 0.5)
        R = g.product_measure(P, Q)
        coeff = h.alpha * (h.alpha + h.beta)
        assert g.gabe(R, h, FLOG).value == pytest.approx(math.log(n * m) / coeff, rel=1e-12)
        gap = g.additivity_gap(P, Q, h, FLOG, lambda v: v, lambda v: v)
        assert abs(gap) <= 1e-12

    def test_degenerate_factor_drops_out(self):
        P = Measure([1.0, 0.0])
        Q = Measure([0.3, 0.7])
        h = Hyper.of(0.6, 0.8)
        R = g.product_measure(P, Q)
        assert g.gabe(R, h, FLOG).value == pytest.approx(
            g.gabe(Q, h, FLOG).value, abs=1e-12)

    def test_factorization_violation_detected(self, rng):
        P = positive_probability(rng, 4)
        Q = positive_probability(rng, 4)
        with pytest.raises(g.FactorizationViolated):
            g.additivity_gap(P, Q, Hyper.of(0.5, 0.5), FID,
                             lambda v: v, lambda v: v)


class TestConcavityProbe:
    def test_condition_two_matches_and_passes(self):
        r = g.concavity_probe(Hyper.of(-0.5, 2.0), FID, trials=200, seed=1)
        assert r.condition == 2
        assert r.probe_passed
        assert r.counterexample is None

    def test_condition_four_matches_and_passes(self):
        r = g.concavity_probe(Hyper.of(1.5, -2.0), parse_spec("power:2"),
                              trials=200, seed=1)
        assert r.condition == 4
        assert r.probe_passed

    def test_no_condition_reported_without_assertion(self):
        r = g.concavity_probe(Hyper.of(1.0, 1.0), FID, trials=100, seed=1)
        assert r.condition is None
        assert "no sufficient" in r.condition_note

    def test_degenerate_pair_holds_with_equality(self):
        P = Measure([0.3, 0.7])
        h = Hyper.of(-0.5, 2.0)
        lhs = g.gabe(P, h, FID).value
        assert lhs >= lhs - 1e-10


class TestMaxEntropyProbe:
    def test_log_probe_finds_uniform(self):
        rep = g.max_entropy_probe(2, Hyper.of(0.5, 0.5), FLOG, starts=10, seed=0)
        assert np.all(np.abs(rep.argmax - 0.5) <= 1e-4)
        # the numeric maximum settles the uniform closed form ln(n)/(a(a+b)),
        # not the claimed n^(a+b-1) expression (0 here)
        assert rep.max_value == pytest.approx(2.0 * math.log(2.0), abs=1e-7)
        assert rep.uniform_value == pytest.approx(2.0 * math.log(2.0), abs=1e-12)
        assert abs(rep.claimed_value) <= 1e-15
        assert rep.max_value > rep.claimed_value + 1.0

    def test_needs_two_atoms(self):
        with pytest.raises(g.BadParams):
            g.max_entropy_probe(1, Hyper.of(0.5, 0.5), FLOG)

"""Generating functions: builtins, parsing, combinators, validity checking."""

import math

import numpy as np
import pytest

import gabdiv as g
from gabdiv import BadParams, GenFn, Hyper, Verdict, builtin, parse_spec
from gabdiv.psi import (
    CheckOptions,
    _vec,
    big_psi,
    big_psi_deriv,
    check_validity,
    geometric_gaps,
    log_convexity_gaps,
    witness_search,
)

ALL_SPECS = ["identity", "log", "power:0.5", "power:2", "bridge:1,2",
             "cdf-exp", "cdf-normal"]


def lnln_genfn():
    # increasing but with a concave log-domain form for larger arguments;
    # serves as the canonical invalid generating function in tests
    return GenFn(
        name="lnln",
        eval=_vec(lambda x: np.log(np.log(x + math.e))),
        deriv=_vec(lambda x: 1.0 / ((x + math.e) * np.log(x + math.e))),
        smoothness="C1",
    )


class TestBuiltins:
    def test_cdf_exp_values(self):
        f = builtin("cdf-exp")
        assert f(0.5) == 0.0
        assert f(math.e) == pytest.approx(1.0 / math.e, abs=1e-12)

    def test_cdf_normal_at_one(self):
        f = builtin("cdf-normal")
        assert f(1.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-14)

    def test_power_requires_nonzero_phi(self):
        with pytest.raises(BadParams):
            builtin("power", [0.0])

    def test_bridge_requires_positive_params(self):
        with pytest.raises(BadParams):
            builtin("bridge", [0.0, 1.0])

    def test_unknown_family(self):
        with pytest.raises(BadParams):
            builtin("sinh")

    @pytest.mark.parametrize("spec", ALL_SPECS)
    def test_deriv_matches_finite_differences(self, spec):
        f = parse_spec(spec)
        xs = np.geomspace(1e-6, 1e6, 49)
        h = 1e-6 * xs
        fd = (np.asarray(f.eval(xs + h)) - np.asarray(f.eval(xs - h))) / (2 * h)
        dv = np.asarray(f.deriv(xs))
        assert np.all(np.abs(fd - dv) <= 1e-5 * (1.0 + np.abs(dv)))

    @pytest.mark.parametrize("spec", ALL_SPECS)
    def test_big_eval_consistent_with_eval(self, spec):
        f = parse_spec(spec)
        xs = np.linspace(-30.0, 30.0, 101)
        direct = np.asarray(f.eval(np.exp(xs)))
        stable = np.asarray(f.big_eval(xs))
        assert np.all(np.abs(direct - stable) <= 1e-9 * (1.0 + np.abs(stable)))


class TestPwl:
    def test_slopes_must_increase(self):
        with pytest.raises(BadParams):
            parse_spec("pwl:2,0,0;1,2")

    def test_continuity_enforced(self):
        with pytest.raises(BadParams):
            parse_spec("pwl:1,0,1;2,5")

    def test_valid_construction(self):
        f = parse_spec("pwl:1,0,1;2,-1")
        assert f.smoothness == "C0"
        assert big_psi(f, 0.5) == pytest.approx(0.5)
        assert big_psi(f, 2.0) == pytest.approx(3.0)
        assert f(math.e) == pytest.approx(1.0)  # psi(x) = Psi(ln x)


class TestBigPsi:
    def test_identity_at_zero(self):
        f = builtin("identity")
        assert big_psi(f, 0.0) == pytest.approx(1.0)
        assert big_psi_deriv(f, 0.0) == pytest.approx(1.0)

    def test_log_is_linear(self):
        f = builtin("log")
        for x in (-5.0, 0.0, 7.5):
            assert big_psi(f, x) == pytest.approx(x)
            assert big_psi_deriv(f, x) == pytest.approx(1.0)

    def test_power_chain_rule(self):
        f = builtin("power", [2.0])
        assert big_psi(f, 1.0) == pytest.approx(math.e ** 2 / 2.0)
        assert big_psi_deriv(f, 1.0) == pytest.approx(math.e ** 2)

    def test_overflow_raises(self):
        f = builtin("power", [2.0])
        with pytest.raises(g.NonFiniteResult):
            big_psi(f, 700.0)


class TestCombinators:
    def test_single_term_is_identity(self):
        f = g.combine_linear([builtin("identity")], [1.0])
        xs = np.geomspace(0.1, 10, 20)
        assert np.allclose(f.eval(xs), xs, rtol=0, atol=1e-15)

    def test_half_identity_half_log(self):
        f = g.combine_linear([builtin("identity"), builtin("log")], [0.5, 0.5])
        assert f(1.0) == pytest.approx(0.5)

    def test_scaling(self):
        f = g.combine_linear([builtin("log")], [2.0])
        assert f(math.e) == pytest.approx(2.0)

    def test_positive_coefficients_required(self):
        with pytest.raises(BadParams):
            g.combine_linear([builtin("log")], [0.0])

    def test_compose_log_outer_is_identity(self):
        inner = builtin("bridge", [1.0, 2.0])
        f = g.compose(builtin("log"), inner)
        xs = np.geomspace(0.1, 10, 20)
        assert np.allclose(f.eval(xs), inner.eval(xs), rtol=1e-12)

    def test_compose_identity_outer_exponentiates(self):
        f = g.compose(builtin("identity"), builtin("log"))
        assert f(3.7) == pytest.approx(3.7)
        f2 = g.compose(builtin("identity"), builtin("identity"))
        assert f2(1.0) == pytest.approx(math.e)

    def test_closure_under_combination(self):
        # positive combinations and compositions of valid members stay valid
        lin = g.combine_linear([builtin("log"), builtin("power", [2.0])], [0.3, 1.5])
        comp = g.compose(builtin("bridge", [1.0, 2.0]), builtin("log"))
        for f in (lin, comp):
            for ab in ((0.6, 0.7), (2.0, -0.8), (0.4, 0.6)):
                rep = check_validity(f, Hyper.of(*ab), CheckOptions(witness_budget=500))
                assert rep.verdict is Verdict.VALID, (f.name, ab)

    def test_scale_psi(self):
        f = g.scale_psi(builtin("log"), 2.0)
        assert f(1.0) == pytest.approx(math.log(2.0))
        assert big_psi(f, 0.0) == pytest.approx(math.log(2.0))


class TestParseSpec:
    def test_round_trips(self):
        assert parse_spec("identity").name == "identity"
        assert parse_spec("power:2").name == "power(2)"
        assert parse_spec("bridge:1,2").name == "bridge(1,2)"
        assert parse_spec("lin:0.5*identity+0.5*log")(1.0) == pytest.approx(0.5)
        assert parse_spec("comp:(bridge:1,2),log")(2.0) == pytest.approx(
            g.compose(parse_spec("bridge:1,2"), parse_spec("log"))(2.0))

    def test_nested_parentheses(self):
        assert parse_spec("((log))")(math.e) == pytest.approx(1.0)
        f = parse_spec("lin:1*(power:2)+0.5*(comp:(bridge:1,2),log)")
        assert f.name == "lin(1*power(2)+0.5*comp(bridge(1,2),log))"
        # parens that close early are part of the expression, not a wrapper
        with pytest.raises(BadParams):
            parse_spec("(bridge:1,2),(log)")

    def test_bad_specs(self):
        for bad in ("", "power:", "power:1,2", "lin:identity", "comp:log",
                    "comp:bridge:1,2,log", "pwl:1", "nope:1"):
            with pytest.raises(BadParams):
                parse_spec(bad)

    def test_single_segment_pwl_is_a_scaled_log(self):
        f = parse_spec("pwl:2,1")
        assert f.smoothness == "C1"
        assert f(math.e) == pytest.approx(3.0)


class TestGeometricConvexity:
    def test_log_has_equality(self, rng):
        triples = np.column_stack([
            np.exp(rng.uniform(-5, 5, 500)),
            np.exp(rng.uniform(-5, 5, 500)),
            rng.uniform(0, 1, 500),
        ])
        assert g.geometric_convexity_check(parse_spec("log"), triples)

    def test_identity_is_am_gm(self, rng):
        triples = np.column_stack([
            np.exp(rng.uniform(-5, 5, 500)),
            np.exp(rng.uniform(-5, 5, 500)),
            rng.uniform(0, 1, 500),
        ])
        assert g.geometric_convexity_check(parse_spec("identity"), triples)

    def test_negated_identity_fails_hand_triple(self):
        f = GenFn(name="neg", eval=_vec(lambda x: -x),
                  deriv=_vec(lambda x: -np.ones_like(x)), smoothness="C1")
        assert not g.geometric_convexity_check(f, [(1.0, 4.0, 0.5)])

    @pytest.mark.parametrize("spec", ALL_SPECS + ["pwl:0.5,0,0;2,0"])
    def test_agrees_with_log_domain_convexity(self, spec, rng):
        f = parse_spec(spec)
        x = np.exp(rng.uniform(-20, 20, 2000))
        y = np.exp(rng.uniform(-20, 20, 2000))
        lam = rng.uniform(0, 1, 2000)
        sc = 1.0 + np.abs(lam * f.eval(x)) + np.abs((1 - lam) * f.eval(y))
        lhs = geometric_gaps(f, x, y, lam) >= -1e-10 * sc
        rhs = log_convexity_gaps(f, x, y, lam) >= -1e-10 * sc
        assert np.array_equal(lhs, rhs)


class TestCheckValidity:
    @pytest.mark.parametrize("spec", ["identity", "log"])
    @pytest.mark.parametrize("ab", [(0.5, 0.7), (1.0, 1.0), (2.0, -0.8),
                                    (-0.5, -0.7), (0.7, -0.7), (0.3, 0.7),
                                    (1.0, 0.0), (0.0, 1.0), (0.4, 0.0),
                                    (0.0, 0.4), (0.0, 0.0)])
    def test_identity_and_log_valid_everywhere(self, spec, ab):
        rep = check_validity(parse_spec(spec), Hyper.of(*ab),
                             CheckOptions(witness_budget=200))
        assert rep.verdict is Verdict.VALID

    def test_density_power_regime_valid(self):
        rep = check_validity(parse_spec("identity"), Hyper.of(1.0, 1.0))
        assert rep.verdict is Verdict.VALID

    def test_bridge_one_one_is_valid(self):
        # ln(1 + x) has increasing convex log-domain form, hence valid
        rep = check_validity(parse_spec("bridge:1,1"), Hyper.of(1.0, 1.0),
                             CheckOptions(witness_budget=200))
        assert rep.verdict is Verdict.VALID

    def test_cdf_exp_is_inconclusive(self):
        # Psi' vanishes left of 0, so the strictness check fails, but the
        # divergence is still nonnegative: no witness exists
        rep = check_validity(parse_spec("cdf-exp"), Hyper.of(1.0, 1.0),
                             CheckOptions(witness_budget=300, seed=0))
        assert rep.verdict is Verdict.INCONCLUSIVE
        assert rep.failed_condition is not None

    def test_concave_big_psi_is_invalid_with_witness(self):
        rep = check_validity(lnln_genfn(), Hyper.of(1.0, 1.0),
                             CheckOptions(witness_budget=100_000, seed=1))
        assert rep.verdict is Verdict.INVALID
        assert rep.witness is not None
        assert rep.witness.value < -1e-8
        # the witness pair must be genuine sub-probability measures
        assert rep.witness.p.is_sub_probability
        assert rep.witness.q.is_sub_probability

    def test_sum_one_local_monotonicity(self):
        # -(x-1)^2 increases left of 1 only: fine for alpha in (0,1),
        # refutable for alpha outside [0, 1] and on the KL edges
        hump = GenFn(name="hump", eval=_vec(lambda x: -(x - 1.0) ** 2),
                     deriv=_vec(lambda x: -2.0 * (x - 1.0)), smoothness="C1")
        assert check_validity(hump, Hyper.of(0.3, 0.7)).verdict is Verdict.VALID
        rep = check_validity(hump, Hyper.of(2.0, -1.0),
                             CheckOptions(witness_budget=50_000, seed=4))
        assert rep.verdict is Verdict.INVALID
        rep = check_validity(hump, Hyper.of(1.0, 0.0),
                             CheckOptions(witness_budget=50_000, seed=4))
        assert rep.verdict is Verdict.INVALID


class TestWitnessSearch:
    def test_no_witness_for_log(self):
        assert witness_search(parse_spec("log"), Hyper.of(0.7, 0.9),
                              budget=10_000, seed=0) is None

    def test_no_witness_for_ab_mixed_signs(self):
        assert witness_search(parse_spec("identity"), Hyper.of(2.0, -1.0),
                              budget=3000, seed=0) is None

    def test_finds_witness_for_lnln(self):
        wit = witness_search(lnln_genfn(), Hyper.of(1.0, 1.0),
                             budget=100_000, seed=1)
        assert wit is not None and wit.value < -1e-8

    def test_budget_validated(self):
        with pytest.raises(BadParams):
            witness_search(parse_spec("log"), Hyper.of(1.0, 1.0), budget=0)

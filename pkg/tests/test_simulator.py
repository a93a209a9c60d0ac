"""Simulator: exact enumeration, sampling consistency, regime invariance, soundness."""

import json
from fractions import Fraction

import numpy as np
import pytest

from conftest import SINGLETON_C, SINGLETON_U
from coact.errors import DegenerateDichotomizationError, InputFormatError, UsageError
from coact.mechanism import (
    ResponseFunction,
    ValueSet,
    VariableDomain,
    check_interference,
    check_monotonicity,
)
from coact.simulator import (
    Scenario,
    exact_risk,
    interventional_event_risk,
    observational_event_risk,
    random_monotone_scenario,
    sample_dataset,
    soundness_experiment,
)

HALF = Fraction(1, 2)


def binary_uniform_scenario(fn, n_u: int = 2) -> Scenario:
    f = ResponseFunction.from_callable(
        VariableDomain("A", (0, 1)),
        VariableDomain("B", (0, 1)),
        SINGLETON_C,
        VariableDomain("U", tuple(range(n_u))),
        fn,
    )
    w = Fraction(1, n_u)
    return Scenario(
        response=f,
        p_c=(Fraction(1),),
        p_u_given_c=((w,) * n_u,),
        p_a_given_c=((HALF, HALF),),
        p_b_given_c=((HALF, HALF),),
    )


def logical_scenario() -> Scenario:
    f = ResponseFunction.from_callable(
        VariableDomain("A", (0, 1, 2)),
        VariableDomain("B", (0, 1)),
        SINGLETON_C,
        SINGLETON_U,
        lambda a, b, c, u: (a == 2) or (a == 1 and b == 1),
    )
    third = Fraction(1, 3)
    return Scenario(
        response=f,
        p_c=(Fraction(1),),
        p_u_given_c=((Fraction(1),),),
        p_a_given_c=((third, third, third),),
        p_b_given_c=((HALF, HALF),),
    )


TOP_A = ValueSet("A", (1,))
TOP_B = ValueSet("B", (1,))


class TestScenarioValidation:
    def test_probabilities_must_sum_to_one(self):
        f = binary_uniform_scenario(lambda a, b, c, u: a).response
        with pytest.raises(InputFormatError):
            Scenario(f, (0.5, 0.6), ((0.5, 0.5),) * 2, ((0.5, 0.5),) * 2, ((0.5, 0.5),) * 2)

    def test_row_shapes_checked(self):
        f = binary_uniform_scenario(lambda a, b, c, u: a).response
        with pytest.raises(InputFormatError):
            Scenario(f, (1.0,), ((0.5, 0.5),), ((1.0,),), ((0.5, 0.5),))

    def test_negative_probability_rejected(self):
        f = binary_uniform_scenario(lambda a, b, c, u: a).response
        with pytest.raises(InputFormatError):
            Scenario(f, (1.0,), ((1.5, -0.5),), ((0.5, 0.5),), ((0.5, 0.5),))

    def test_regime_levels_validated(self):
        sc = binary_uniform_scenario(lambda a, b, c, u: a)
        with pytest.raises(Exception):
            Scenario(sc.response, sc.p_c, sc.p_u_given_c, sc.p_a_given_c,
                     sc.p_b_given_c, regime=(7, 0))

    def test_json_round_trip(self, tmp_path):
        sc = binary_uniform_scenario(lambda a, b, c, u: a and b)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(sc.to_json_obj()))
        back = Scenario.from_json_file(path)
        assert np.array_equal(back.response.table, sc.response.table)
        assert back.observational

    def test_json_with_response_file_reference(self, tmp_path):
        sc = binary_uniform_scenario(lambda a, b, c, u: a and b)
        (tmp_path / "resp.json").write_text(json.dumps(sc.response.to_json_obj()))
        obj = sc.to_json_obj()
        obj["response"] = {"file": "resp.json"}
        (tmp_path / "s.json").write_text(json.dumps(obj))
        back = Scenario.from_json_file(tmp_path / "s.json")
        assert np.array_equal(back.response.table, sc.response.table)


class TestExactRisk:
    def test_tautology_all_ones(self):
        table = exact_risk(binary_uniform_scenario(lambda a, b, c, u: 1), TOP_A, TOP_B)
        for i in (0, 1):
            for j in (0, 1):
                assert table.risk(0, i, j) == 1

    def test_conjunction_deterministic(self):
        table = exact_risk(binary_uniform_scenario(lambda a, b, c, u: a and b), TOP_A, TOP_B)
        assert table.risk(0, 1, 1) == 1
        assert table.risk(0, 1, 0) == 0
        assert table.risk(0, 0, 1) == 0
        assert table.excess(0) == 1

    def test_logical_example_block_mixture(self):
        # alpha = {1, 2}: R11 = P(event | A in {1,2}, B=1) = (f(1,1)+f(2,1))/2 = 1
        table = exact_risk(logical_scenario(), ValueSet("A", (1, 2)), TOP_B)
        assert table.risk(0, 1, 1) == 1
        assert table.risk(0, 1, 0) == HALF  # only A=2 produces it at B=0
        assert table.risk(0, 0, 1) == 0
        assert table.excess(0) == HALF

    def test_mixture_identity_is_exact(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            sc, alpha, beta = random_monotone_scenario(rng)
            table = exact_risk(sc, alpha, beta)
            for k, c_value in enumerate(sc.response.c.values):
                for i in (0, 1):
                    for j in (0, 1):
                        mixed = sum(
                            sc.p_u_given_c[k][l]
                            * table.risk_in_context(c_value, sc.response.u.values[l], i, j)
                            for l in range(len(sc.response.u))
                        )
                        assert mixed == table.risk(c_value, i, j)  # Fractions: exact

    def test_monte_carlo_cross_check(self):
        sc = logical_scenario()
        alpha, beta = ValueSet("A", (1, 2)), TOP_B
        table = exact_risk(sc, alpha, beta)
        n = 100_000
        data = sample_dataset(sc, n, seed=2024)
        frame = data.frame
        frame["ai"] = frame["A"].isin(alpha.members).astype(int)
        frame["bi"] = frame["B"].isin(beta.members).astype(int)
        for i in (0, 1):
            for j in (0, 1):
                sub = frame[(frame["ai"] == i) & (frame["bi"] == j)]
                p = float(table.risk(0, i, j))
                se = max((p * (1 - p) / len(sub)) ** 0.5, 1e-9)
                assert abs(sub["Y"].mean() - p) <= max(3 * se, 1e-9)

    def test_interventional_scenario_rejected(self):
        sc = binary_uniform_scenario(lambda a, b, c, u: a)
        forced = Scenario(sc.response, sc.p_c, sc.p_u_given_c, sc.p_a_given_c,
                          sc.p_b_given_c, regime=(1, 0))
        with pytest.raises(UsageError):
            exact_risk(forced, TOP_A, TOP_B)

    def test_zero_mass_block_degenerate(self):
        sc = binary_uniform_scenario(lambda a, b, c, u: a)
        broken = Scenario(
            sc.response, sc.p_c, sc.p_u_given_c,
            ((Fraction(1), Fraction(0)),),  # top A level has no mass
            sc.p_b_given_c,
        )
        with pytest.raises(DegenerateDichotomizationError):
            exact_risk(broken, TOP_A, TOP_B)

    def test_full_domain_block_degenerate(self):
        sc = binary_uniform_scenario(lambda a, b, c, u: a)
        with pytest.raises(DegenerateDichotomizationError):
            exact_risk(sc, ValueSet("A", (0, 1)), TOP_B)


class TestRegimeInvariance:
    def test_exact_equality_on_random_scenarios(self):
        rng = np.random.default_rng(55)
        for _ in range(25):
            sc, _, _ = random_monotone_scenario(rng)
            f = sc.response
            for a in f.a.values:
                for b in f.b.values:
                    for c in f.c.values:
                        assert observational_event_risk(sc, a, b, c) == (
                            interventional_event_risk(sc, a, b, c)
                        )


class TestSampling:
    def test_seed_determinism(self):
        sc = logical_scenario()
        d1 = sample_dataset(sc, 500, seed=9)
        d2 = sample_dataset(sc, 500, seed=9)
        assert d1.frame.equals(d2.frame)
        d3 = sample_dataset(sc, 500, seed=10)
        assert not d1.frame.equals(d3.frame)

    def test_interventional_columns_constant(self):
        sc = binary_uniform_scenario(lambda a, b, c, u: a and b)
        forced = Scenario(sc.response, sc.p_c, sc.p_u_given_c, sc.p_a_given_c,
                          sc.p_b_given_c, regime=(1, 0))
        data = sample_dataset(forced, 200, seed=1)
        assert (data.frame["A"] == 1).all()
        assert (data.frame["B"] == 0).all()
        assert (data.frame["Y"] == 0).all()  # conjunction with b forced off

    def test_outcome_always_flows_through_table(self):
        sc = logical_scenario()
        data = sample_dataset(sc, 2000, seed=3)
        f = sc.response
        recomputed = [
            f.value(a, b, c, u)
            for a, b, c, u in zip(
                data.frame["A"], data.frame["B"], data.frame["C"], data.frame["U"]
            )
        ]
        assert (data.frame["Y"] == recomputed).all()

    def test_needs_positive_n(self):
        with pytest.raises(UsageError):
            sample_dataset(logical_scenario(), 0, seed=1)


class TestSoundnessExperiment:
    def test_zero_counterexamples_with_claims(self):
        report = soundness_experiment(150, seed=42)
        assert report.sound
        assert report.counterexamples == ()
        assert report.positive_strata > 0
        assert report.skipped == 0  # generator is monotone by construction
        assert report.confirmed == report.positive_strata

    def test_worker_count_invariance(self):
        r1 = soundness_experiment(80, seed=5, workers=1)
        r4 = soundness_experiment(80, seed=5, workers=4)
        assert r1.to_dict() == r4.to_dict()

    def test_non_monotone_scenarios_skipped_with_reason(self):
        def bumpy_source(rng):
            f = ResponseFunction.from_callable(
                VariableDomain("A", (0, 1, 2)),
                VariableDomain("B", (0, 1)),
                SINGLETON_C,
                SINGLETON_U,
                lambda a, b, c, u: a == 1,  # rises then falls: not monotone
            )
            return (
                Scenario(
                    f,
                    (Fraction(1),),
                    ((Fraction(1),),),
                    ((Fraction(1, 3),) * 3,),
                    ((HALF, HALF),),
                ),
                ValueSet("A", (2,)),
                ValueSet("B", (1,)),
            )

        report = soundness_experiment(10, seed=1, source=bumpy_source)
        assert report.skipped == 10
        assert dict(report.skip_reasons) == {"non-monotone response": 10}
        assert report.positive_strata == 0

    def test_generated_scenarios_really_are_monotone_with_singleton_blocks(self):
        rng = np.random.default_rng(77)
        for _ in range(30):
            sc, alpha, beta = random_monotone_scenario(rng)
            assert check_monotonicity(sc.response, "A").value in ("non_decreasing", "constant")
            assert check_monotonicity(sc.response, "B").value in ("non_decreasing", "constant")
            assert len(alpha.members) == 1 and len(beta.members) == 1
            assert alpha.members[0] == sc.response.a.values[-1]

    def test_positive_excess_really_implies_interference(self):
        # a redundant outer check of what the experiment asserts internally
        rng = np.random.default_rng(13)
        seen = 0
        for _ in range(120):
            sc, alpha, beta = random_monotone_scenario(rng)
            table = exact_risk(sc, alpha, beta)
            for c_value in sc.response.c.values:
                if table.excess(c_value) > 0:
                    seen += 1
                    assert check_interference(sc.response, "B")[0]
                    assert check_interference(sc.response, "A")[0]
        assert seen > 10

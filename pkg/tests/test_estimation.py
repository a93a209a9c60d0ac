"""Estimation: dichotomization, risk tables, fits, contrasts, bootstrap."""

import math

import numpy as np
import pandas as pd
import pytest

from coact.errors import (
    BootstrapError,
    DegenerateDichotomizationError,
    DomainError,
    EstimationError,
    InputFormatError,
    UsageError,
)
from coact.estimation import (
    ALPHA_IND,
    BETA_IND,
    LINEAR_ODDS,
    LINEAR_RISK,
    AssumptionChecklist,
    Dataset,
    ModelFit,
    RiskCell,
    RiskTable,
    bootstrap_test,
    dichotomize,
    estimate_risk_table,
    excess_risk_test,
    fit_linear_odds,
    fit_linear_risk,
    model_excess_risk,
    nonparametric_excess,
    rare_disease_excess,
)
from coact.mechanism import ValueSet


def make_dataset(frame: pd.DataFrame, outcome: str = "Y") -> Dataset:
    return Dataset(frame, {}, outcome)


def cell_dataset(rng, probs: dict, n_per_cell: int) -> Dataset:
    """Independent binomial draws in each (alpha, beta) cell."""
    rows = []
    for (i, j), p in probs.items():
        y = rng.binomial(1, p, size=n_per_cell)
        rows.append(pd.DataFrame({ALPHA_IND: i, BETA_IND: j, "Y": y}))
    return make_dataset(pd.concat(rows, ignore_index=True))


TABLE1 = ModelFit(
    link=LINEAR_RISK,
    names=("intercept", "main[g1]", "main[s0]", "interaction[g1:s0]", "trend[t]"),
    coef=np.array([-2.33, -0.06, 1.41, -1.0, -0.02]),
    cov=np.diag(np.array([0.5, 0.19, 0.24, 0.33, 0.017]) ** 2),
    n_obs=1200,
    converged=True,
    n_iter=0,
    active_constraints=0,
    loglik=0.0,
    message="fixture",
)

TABLE3 = ModelFit(
    link=LINEAR_ODDS,
    names=("intercept", "main[smoker]", "main[rrh]", "interaction[smoker:rrh]"),
    coef=np.array([0.25, 1.46, 0.07, 0.9]),
    cov=np.diag(np.array([0.013, 0.044, 0.056, 0.22]) ** 2),
    n_obs=3716,
    converged=True,
    n_iter=0,
    active_constraints=0,
    loglik=0.0,
    message="fixture",
)


class TestDataset:
    def test_outcome_must_be_binary(self):
        with pytest.raises(InputFormatError):
            make_dataset(pd.DataFrame({"Y": [0, 1, 2]}))

    def test_outcome_must_exist(self):
        with pytest.raises(InputFormatError):
            make_dataset(pd.DataFrame({"X": [0, 1]}))

    def test_schema_columns_must_exist(self):
        with pytest.raises(InputFormatError):
            Dataset(pd.DataFrame({"Y": [0, 1]}), {"Q": "binary"}, "Y")

    def test_complete_cases_counts_drops(self):
        ds = make_dataset(pd.DataFrame({"A": [1, None, 3], "Y": [0, 1, 1]}))
        kept, dropped = ds.complete_cases(["A"])
        assert dropped == 1 and len(kept) == 2

    def test_csv_round_trip(self, tmp_path):
        frame = pd.DataFrame({"A": [1, 2], "Y": [0, 1]})
        frame.to_csv(tmp_path / "d.csv", index=False)
        (tmp_path / "d.schema.json").write_text(
            '{"outcome": "Y", "columns": {"A": "ordinal", "Y": "binary"}}'
        )
        ds = Dataset.from_csv(tmp_path / "d.csv", tmp_path / "d.schema.json")
        assert ds.outcome == "Y" and ds.types["A"] == "ordinal"


class TestDichotomize:
    def test_stratum_recode_threshold_example(self):
        # four-level factor, restrict to levels above 1, flip the coding with
        # a* = 5 - a, take the single recoded level 3: exactly original a == 2
        frame = pd.DataFrame(
            {"A": [1, 2, 3, 4] * 10, "B": [0.2, 0.4, 0.6, 0.8] * 10, "Y": [0, 1] * 20}
        )
        ds = make_dataset(frame)
        out, rep = dichotomize(
            ds,
            ValueSet("A", (3,)),
            ValueSet("B", (0.6, 0.8), threshold=0.5),
            recode={"A": {2: 3, 3: 2, 4: 1}},
            stratum="A > 1",
        )
        assert rep.n_stratum_excluded == 10
        assert rep.n_analyzed == 30
        assert (out.frame[ALPHA_IND] == (out.frame["A"] == 2).astype(int)).all()
        assert (out.frame[BETA_IND] == (out.frame["B"] > 0.5).astype(int)).all()

    def test_identity_recode_median_threshold_balances(self):
        rng = np.random.default_rng(3)
        b = rng.uniform(0, 1, 1000)
        ds = make_dataset(
            pd.DataFrame({"A": rng.integers(0, 2, 1000), "B": b, "Y": rng.integers(0, 2, 1000)})
        )
        out, _ = dichotomize(
            ds, ValueSet("A", (1,)), ValueSet("B", (1,), threshold=float(np.median(b)))
        )
        ones = int(out.frame[BETA_IND].sum())
        assert abs(ones - 500) <= 1  # strict '>' puts ties below

    def test_full_range_block_degenerate(self):
        ds = make_dataset(pd.DataFrame({"A": [0, 1], "B": [0, 1], "Y": [0, 1]}))
        with pytest.raises(DegenerateDichotomizationError):
            dichotomize(ds, ValueSet("A", (0, 1)), ValueSet("B", (1,)))

    def test_missing_rows_dropped_and_reported(self):
        ds = make_dataset(
            pd.DataFrame({"A": [1, None, 2, 2], "B": [1, 1, None, 0], "Y": [0, 1, 0, 1]})
        )
        out, rep = dichotomize(ds, ValueSet("A", (2,)), ValueSet("B", (1,)))
        assert rep.n_missing_dropped == 2
        assert rep.n_analyzed == 2

    def test_recode_must_be_bijection(self):
        ds = make_dataset(pd.DataFrame({"A": [1, 2, 3], "B": [0, 1, 1], "Y": [0, 1, 1]}))
        with pytest.raises(DomainError):
            dichotomize(
                ds, ValueSet("A", (1,)), ValueSet("B", (1,)), recode={"A": {1: 9, 2: 9, 3: 8}}
            )
        with pytest.raises(DomainError):
            dichotomize(
                ds, ValueSet("A", (1,)), ValueSet("B", (1,)), recode={"A": {1: 9}}
            )


class TestRiskTable:
    def test_binomial_synthetic_within_3_se(self):
        rng = np.random.default_rng(1234)
        probs = {(0, 0): 0.1, (0, 1): 0.2, (1, 0): 0.3, (1, 1): 0.7}
        ds = cell_dataset(rng, probs, 1000)
        table = estimate_risk_table(ds)
        for key, p in probs.items():
            cell = table.cell(*key)
            assert cell.count == 1000
            se_true = math.sqrt(p * (1 - p) / 1000)
            assert abs(cell.estimate - p) <= 3 * se_true

    def test_all_zero_outcome(self):
        ds = make_dataset(
            pd.DataFrame(
                {ALPHA_IND: [0, 0, 1, 1], BETA_IND: [0, 1, 0, 1], "Y": [0, 0, 0, 0]}
            )
        )
        table = estimate_risk_table(ds)
        result = excess_risk_test(table)
        assert result.statistic == 0.0 and result.p_value == 0.5
        assert table.low_count_cells  # every cell is a single row

    def test_single_row_cells_flagged_se_zero(self):
        ds = make_dataset(
            pd.DataFrame(
                {ALPHA_IND: [0, 0, 1, 1], BETA_IND: [0, 1, 0, 1], "Y": [1, 0, 0, 1]}
            )
        )
        table = estimate_risk_table(ds)
        assert table.cell(1, 1).se == 0.0
        assert set(table.low_count_cells) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_empty_cell_raises_named_cell(self):
        ds = make_dataset(
            pd.DataFrame({ALPHA_IND: [0, 0, 1], BETA_IND: [0, 1, 0], "Y": [0, 0, 1]})
        )
        with pytest.raises(EstimationError, match=r"\(1, 1\)"):
            estimate_risk_table(ds)

    def test_stratum_conditioning(self):
        frame = pd.DataFrame(
            {
                ALPHA_IND: [0, 0, 1, 1] * 4,
                BETA_IND: [0, 1, 0, 1] * 4,
                "C": [0] * 8 + [1] * 8,
                "Y": [0] * 8 + [1] * 8,
            }
        )
        table = estimate_risk_table(make_dataset(frame), "C", 1)
        assert table.stratum == ("C", 1)
        assert table.cell(1, 1).estimate == 1.0

    def test_requires_indicators(self):
        with pytest.raises(UsageError):
            estimate_risk_table(make_dataset(pd.DataFrame({"Y": [0, 1]})))


class TestExcessRiskTest:
    @staticmethod
    def fixed_table(r11, r10, r01, r00=0.05, n=1000) -> RiskTable:
        cells = []
        for (i, j), r in {(1, 1): r11, (1, 0): r10, (0, 1): r01, (0, 0): r00}.items():
            se = math.sqrt(r * (1 - r) / n)
            cells.append(((i, j), RiskCell(r, se, n)))
        return RiskTable(tuple(cells))

    def test_arithmetic(self):
        res = excess_risk_test(self.fixed_table(0.7, 0.3, 0.2))
        assert res.statistic == pytest.approx(0.2, abs=1e-15)
        expected_se = math.sqrt(
            0.7 * 0.3 / 1000 + 0.3 * 0.7 / 1000 + 0.2 * 0.8 / 1000
        )
        assert res.se == pytest.approx(expected_se)
        assert res.p_value < 0.01

    def test_boundary_zero(self):
        res = excess_risk_test(self.fixed_table(0.5, 0.3, 0.2))
        assert res.statistic == pytest.approx(0.0, abs=1e-15)
        assert res.p_value == pytest.approx(0.5, abs=1e-12)

    def test_additive_null_is_negative(self):
        # risks exactly additive: R = 0.1 + 0.2 i + 0.3 j, so S = -R00
        res = excess_risk_test(self.fixed_table(0.6, 0.3, 0.4, r00=0.1))
        assert res.statistic == pytest.approx(-0.1)
        assert res.p_value > 0.5

    def test_statistic_recomputable_from_reported_cells(self):
        res = excess_risk_test(self.fixed_table(0.7, 0.3, 0.2))
        cells = res.cells["cells"]
        again = cells["11"]["estimate"] - cells["10"]["estimate"] - cells["01"]["estimate"]
        assert again == pytest.approx(res.statistic, abs=1e-15)


def simulate_linear_risk(rng, n, theta=(0.1, 0.15, 0.15, 0.2, 0.002)):
    i = rng.integers(0, 2, n)
    j = rng.integers(0, 2, n)
    t = rng.uniform(0.0, 30.0, n)
    pi = theta[0] + theta[1] * i + theta[2] * j + theta[3] * i * j + theta[4] * t
    y = rng.binomial(1, pi)
    return make_dataset(
        pd.DataFrame({ALPHA_IND: i, BETA_IND: j, "T": np.round(t, 9), "Y": y})
    )


def simulate_linear_odds(rng, n, theta=(0.25, 1.46, 0.07, 0.9)):
    i = rng.integers(0, 2, n)
    j = rng.integers(0, 2, n)
    odds = theta[0] + theta[1] * i + theta[2] * j + theta[3] * i * j
    y = rng.binomial(1, odds / (1 + odds))
    return make_dataset(pd.DataFrame({ALPHA_IND: i, BETA_IND: j, "Y": y}))


class TestLinearRiskFit:
    def test_saturated_fit_reproduces_cell_proportions(self):
        rng = np.random.default_rng(77)
        ds = cell_dataset(rng, {(0, 0): 0.1, (0, 1): 0.25, (1, 0): 0.4, (1, 1): 0.8}, 400)
        fit = fit_linear_risk(ds)
        table = estimate_risk_table(ds)
        coding_rows = {(0, 0): [1, 0, 0, 0], (0, 1): [1, 0, 1, 0],
                       (1, 0): [1, 1, 0, 0], (1, 1): [1, 1, 1, 1]}
        for key, row in coding_rows.items():
            fitted = float(np.array(row) @ fit.coef)
            assert fitted == pytest.approx(table.cell(*key).estimate, abs=1e-6)

    def test_recovery_with_least_squares_cross_check(self):
        rng = np.random.default_rng(2025)
        theta = (0.1, 0.15, 0.15, 0.2, 0.002)
        ds = simulate_linear_risk(rng, 5000, theta)
        fit = fit_linear_risk(ds, trend="T")
        se = fit.se()
        for k, truth in enumerate(theta):
            assert abs(fit.coef[k] - truth) <= 3 * se[k]
        # independent least-squares oracle (valid when constraints are slack)
        frame = ds.frame
        X = np.column_stack(
            [
                np.ones(len(frame)),
                frame[ALPHA_IND],
                frame[BETA_IND],
                frame[ALPHA_IND] * frame[BETA_IND],
                frame["T"],
            ]
        )
        ols, *_ = np.linalg.lstsq(X, frame["Y"].to_numpy(float), rcond=None)
        assert fit.active_constraints == 0
        assert np.all(np.abs(ols - fit.coef) <= 3 * se)

    def test_duplicated_column_is_rank_error(self):
        ds = make_dataset(
            pd.DataFrame({ALPHA_IND: [0, 1, 0, 1], BETA_IND: [0, 1, 0, 1], "Y": [0, 1, 0, 1]})
        )
        with pytest.raises(UsageError):
            fit_linear_risk(ds)

    def test_covariance_symmetric_psd(self):
        rng = np.random.default_rng(8)
        fit = fit_linear_risk(simulate_linear_risk(rng, 2000))
        assert np.allclose(fit.cov, fit.cov.T)
        assert np.linalg.eigvalsh(fit.cov).min() >= -1e-12


class TestModelExcessRisk:
    def test_table1_point_arithmetic(self):
        res = model_excess_risk(TABLE1, t=0.0)
        assert abs(res.statistic - 1.33) < 1e-12
        # the statistic is recomputable from the three reported cell values
        assert res.statistic == pytest.approx(
            res.cells["11"] - res.cells["10"] - res.cells["01"], abs=1e-15
        )

    def test_symbolic_contrast_identity(self):
        # the three-cell expansion collapses to interaction - intercept - trend*t
        for t in (0.0, 7.0, 19.5):
            res = model_excess_risk(TABLE1, t=t)
            assert res.contrast == {
                "intercept": -1.0,
                "main[g1]": 0.0,
                "main[s0]": 0.0,
                "interaction[g1:s0]": 1.0,
                "trend[t]": -t,
            }
            assert res.statistic == pytest.approx(-1.0 + 2.33 + 0.02 * t, abs=1e-12)

    def test_zero_model_gives_zero(self):
        fit = ModelFit(
            link=LINEAR_RISK,
            names=TABLE1.names,
            coef=np.zeros(5),
            cov=np.zeros((5, 5)),
            n_obs=10,
            converged=True,
            n_iter=0,
            active_constraints=0,
            loglik=0.0,
            message="fixture",
        )
        res = model_excess_risk(fit, t=0.0)
        assert res.statistic == 0.0 and res.p_value == 0.5

    def test_delta_se_equals_direct_covariance_form(self):
        res = model_excess_risk(TABLE1, t=3.0)
        lam = np.array([res.contrast[n] for n in TABLE1.names])
        assert res.se == pytest.approx(math.sqrt(lam @ TABLE1.cov @ lam), abs=1e-15)

    def test_saturated_model_matches_nonparametric_exactly(self):
        rng = np.random.default_rng(31)
        ds = cell_dataset(rng, {(0, 0): 0.15, (0, 1): 0.3, (1, 0): 0.35, (1, 1): 0.75}, 500)
        fit = fit_linear_risk(ds)
        assert model_excess_risk(fit).statistic == pytest.approx(
            nonparametric_excess(ds), abs=1e-8
        )

    def test_unknown_coding_coefficient_rejected(self):
        with pytest.raises(UsageError):
            model_excess_risk(TABLE1, coding=lambda i, j: {"nonexistent": 1.0})

    def test_wrong_link_rejected(self):
        with pytest.raises(UsageError):
            model_excess_risk(TABLE3)


class TestLinearOddsFit:
    def test_table3_point_arithmetic(self):
        res = rare_disease_excess(TABLE3)
        assert abs(res.statistic - 0.65) < 1e-12
        assert "sign-valid under rare-disease assumption" in res.notes

    def test_positive_scaling_leaves_sign_invariant(self):
        lam_applied = rare_disease_excess(TABLE3).statistic
        for k in (0.1, 1.0, 17.3):
            scaled = ModelFit(
                link=LINEAR_ODDS,
                names=TABLE3.names,
                coef=TABLE3.coef * k,
                cov=TABLE3.cov,
                n_obs=TABLE3.n_obs,
                converged=True,
                n_iter=0,
                active_constraints=0,
                loglik=0.0,
                message="fixture",
            )
            res = rare_disease_excess(scaled)
            assert res.statistic == pytest.approx(k * lam_applied, rel=1e-12)
            assert math.copysign(1, res.statistic) == math.copysign(1, lam_applied)

    def test_recovery_from_synthetic_case_control(self):
        rng = np.random.default_rng(404)
        theta = (0.25, 1.46, 0.07, 0.9)
        fit = fit_linear_odds(simulate_linear_odds(rng, 5000, theta))
        se = fit.se()
        for k, truth in enumerate(theta):
            assert abs(fit.coef[k] - truth) <= 3 * se[k]

    def test_needs_interaction_and_intercept(self):
        rng = np.random.default_rng(2)
        fit = fit_linear_odds(simulate_linear_odds(rng, 1500), interaction=False)
        with pytest.raises(UsageError):
            rare_disease_excess(fit)

    def test_wrong_link_rejected(self):
        with pytest.raises(UsageError):
            rare_disease_excess(TABLE1)


class TestBootstrap:
    @staticmethod
    def dataset(seed=5, n=1500):
        rng = np.random.default_rng(seed)
        probs = {(0, 0): 0.1, (0, 1): 0.2, (1, 0): 0.3, (1, 1): 0.7}
        return cell_dataset(rng, probs, n // 4)

    def test_same_seed_identical(self):
        ds = self.dataset()
        r1 = bootstrap_test(ds, nonparametric_excess, b=200, seed=11)
        r2 = bootstrap_test(ds, nonparametric_excess, b=200, seed=11)
        assert (r1.lower, r1.upper) == (r2.lower, r2.upper)

    def test_worker_count_does_not_change_interval(self):
        ds = self.dataset()
        r1 = bootstrap_test(ds, nonparametric_excess, b=200, seed=11, workers=1)
        r4 = bootstrap_test(ds, nonparametric_excess, b=200, seed=11, workers=4)
        assert r1.to_dict() == r4.to_dict()

    def test_b100_vs_b1000_widths_within_25_percent(self):
        ds = self.dataset()
        w100 = (lambda r: r.upper - r.lower)(
            bootstrap_test(ds, nonparametric_excess, b=100, seed=21)
        )
        w1000 = (lambda r: r.upper - r.lower)(
            bootstrap_test(ds, nonparametric_excess, b=1000, seed=21)
        )
        assert abs(w100 - w1000) <= 0.25 * max(w100, w1000)

    def test_percentile_coverage_in_nested_simulation(self):
        # true S = 0.7 - 0.3 - 0.2 = 0.2; 95% interval should cover it in
        # at least 90 of 100 outer replications
        probs = {(0, 0): 0.1, (0, 1): 0.2, (1, 0): 0.3, (1, 1): 0.7}
        outer = np.random.default_rng(7)
        covered = 0
        for k in range(100):
            ds = cell_dataset(outer, probs, 600)
            res = bootstrap_test(ds, nonparametric_excess, b=200, seed=k)
            covered += res.lower <= 0.2 <= res.upper
        assert covered >= 90

    def test_minimum_resamples(self):
        with pytest.raises(UsageError):
            bootstrap_test(self.dataset(), nonparametric_excess, b=50, seed=1)

    def test_failure_rate_guard(self):
        calls = {"n": 0}

        def flaky(ds):
            calls["n"] += 1
            if calls["n"] > 1:  # point estimate succeeds, resamples all fail
                raise EstimationError("boom")
            return 0.0

        with pytest.raises(BootstrapError):
            bootstrap_test(self.dataset(), flaky, b=100, seed=1)


class TestChecklist:
    def test_updates_are_functional(self):
        base = AssumptionChecklist.unchecked()
        upd = base.updated("monotonicity of A", "holds", "verified")
        assert base.entries != upd.entries
        assert dict((e.name, e.status) for e in upd.entries)["monotonicity of A"] == "holds"

    def test_unknown_item_rejected(self):
        with pytest.raises(UsageError):
            AssumptionChecklist.unchecked().updated("nope", "holds")

"""Excess-risk estimation and inference from data.

The quantity under test is always the same contrast of stratified risks,

    S = R(1,1) - R(1,0) - R(0,1),

where R(i, j) is the probability of the event given the two dichotomized
factor indicators, within a stratum of the observed context.  ``S > 0``
is the data-side condition of the interference certificate, so inference
is one-sided against ``S > 0`` throughout.

Three routes to S are provided:

* nonparametric — cell proportions with binomial standard errors;
* a Bernoulli regression with *identity* link (probability linear in the
  design), fitted by box-constrained maximum likelihood so fitted
  probabilities stay inside [eps, 1 - eps];
* a Bernoulli regression with *linear odds* (odds linear in the design,
  constrained positive) for case-control data, where under a rare outcome
  the sign of (interaction - intercept) equals the sign of S up to a
  positive constant.

Missing data are handled by listwise deletion on the analysis columns,
with the drop count reported; nothing is imputed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import optimize, stats

from .errors import (
    BootstrapError,
    CoactError,
    DegenerateDichotomizationError,
    DomainError,
    EstimationError,
    FitError,
    InputFormatError,
    UsageError,
)
from .mechanism import ValueSet

COLUMN_KINDS = ("binary", "ordinal", "continuous")

ALPHA_IND = "alpha_ind"
BETA_IND = "beta_ind"


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """A data frame plus a typed column schema and a designated binary outcome."""

    frame: pd.DataFrame
    types: dict[str, str]
    outcome: str

    def __post_init__(self) -> None:
        for name, kind in self.types.items():
            if kind not in COLUMN_KINDS:
                raise InputFormatError(
                    f"column {name!r}: unknown type {kind!r} (use {COLUMN_KINDS})"
                )
            if name not in self.frame.columns:
                raise InputFormatError(f"schema column {name!r} missing from data")
        if self.outcome not in self.frame.columns:
            raise InputFormatError(f"outcome column {self.outcome!r} missing from data")
        y = self.frame[self.outcome].dropna()
        if not y.isin((0, 1)).all():
            raise InputFormatError(
                f"outcome {self.outcome!r} must be binary 0/1"
            )

    def __len__(self) -> int:
        return len(self.frame)

    def column(self, name: str) -> pd.Series:
        if name not in self.frame.columns:
            raise UsageError(f"no column {name!r} in dataset")
        return self.frame[name]

    def complete_cases(self, columns: Sequence[str]) -> tuple["Dataset", int]:
        """Listwise deletion on the given columns; returns (subset, n_dropped)."""
        for c in columns:
            self.column(c)
        kept = self.frame.dropna(subset=list(columns))
        return (
            Dataset(kept.reset_index(drop=True), dict(self.types), self.outcome),
            len(self.frame) - len(kept),
        )

    @classmethod
    def from_csv(cls, csv_path, schema_path) -> "Dataset":
        """Load a CSV with its sidecar schema JSON ({"outcome": ..., "columns": {...}})."""
        with open(schema_path, "r", encoding="utf-8") as fh:
            try:
                schema = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{schema_path}: not valid JSON ({exc})") from None
        try:
            outcome = schema["outcome"]
            types = dict(schema["columns"])
        except (KeyError, TypeError):
            raise InputFormatError(
                f"{schema_path}: schema needs 'outcome' and 'columns'"
            ) from None
        frame = pd.read_csv(csv_path)
        return cls(frame, types, outcome)

    def schema_obj(self) -> dict:
        return {"outcome": self.outcome, "columns": dict(self.types)}


# ---------------------------------------------------------------------------
# dichotomization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DichotomizationReport:
    a_variable: str
    b_variable: str
    alpha_block: dict
    beta_block: dict
    recode: dict | None
    stratum: str | None
    n_input: int
    n_missing_dropped: int
    n_stratum_excluded: int
    n_analyzed: int

    def to_dict(self) -> dict:
        return {
            "a_variable": self.a_variable,
            "b_variable": self.b_variable,
            "alpha_block": self.alpha_block,
            "beta_block": self.beta_block,
            "recode": self.recode,
            "stratum": self.stratum,
            "n_input": self.n_input,
            "n_missing_dropped": self.n_missing_dropped,
            "n_stratum_excluded": self.n_stratum_excluded,
            "n_analyzed": self.n_analyzed,
        }


def _apply_recode(series: pd.Series, mapping: Mapping) -> pd.Series:
    values = list(mapping.values())
    if len(set(values)) != len(values):
        raise DomainError("recode map must be a bijection on levels")
    observed = set(series.unique())
    missing = observed - set(mapping.keys())
    if missing:
        raise DomainError(f"recode map does not cover observed levels {sorted(missing, key=repr)}")
    return series.map(mapping)


def dichotomize(
    data: Dataset,
    alpha: ValueSet,
    beta: ValueSet,
    recode: Mapping[str, Mapping] | None = None,
    stratum: str | Callable[[pd.DataFrame], pd.Series] | None = None,
) -> tuple[Dataset, DichotomizationReport]:
    """Add binary indicator columns for the two dichotomization blocks.

    Pipeline, in order: listwise deletion on the two factor columns and the
    outcome; stratum restriction (a pandas query string or a boolean
    predicate on the frame, evaluated on *original* codings); per-variable
    recoding (a bijection on levels); membership indicators
    ``alpha_ind = 1[a in alpha]`` and ``beta_ind = 1[b in beta]``.

    A block (or its complement) that ends up empty on the analyzed rows is
    a degenerate dichotomization and raises.
    """
    a_var, b_var = alpha.variable, beta.variable
    n_input = len(data)
    working, n_missing = data.complete_cases([a_var, b_var, data.outcome])
    frame = working.frame

    if stratum is not None:
        if callable(stratum):
            mask = stratum(frame)
            stratum_desc = getattr(stratum, "__name__", "<predicate>")
        else:
            mask = frame.eval(stratum)
            stratum_desc = stratum
        mask = np.asarray(mask, dtype=bool)
        n_excluded = int((~mask).sum())
        frame = frame[mask].reset_index(drop=True)
    else:
        stratum_desc = None
        n_excluded = 0

    frame = frame.copy()
    recode = dict(recode or {})
    for var, block, ind_name in ((a_var, alpha, ALPHA_IND), (b_var, beta, BETA_IND)):
        col = frame[var]
        if var in recode:
            col = _apply_recode(col, recode[var])
        if block.threshold is not None:
            ind = (col > block.threshold).astype(np.int64)
        else:
            ind = col.isin(block.members).astype(np.int64)
        frame[ind_name] = ind

    for name, block in ((ALPHA_IND, alpha), (BETA_IND, beta)):
        ones = int(frame[name].sum())
        if ones == 0 or ones == len(frame):
            side = "block" if ones == 0 else "complement"
            raise DegenerateDichotomizationError(
                f"{name}: {side} of {block.variable!r} is empty after filtering"
            )

    report = DichotomizationReport(
        a_variable=a_var,
        b_variable=b_var,
        alpha_block=alpha.describe(),
        beta_block=beta.describe(),
        recode={k: dict(v) for k, v in recode.items()} or None,
        stratum=stratum_desc,
        n_input=n_input,
        n_missing_dropped=n_missing,
        n_stratum_excluded=n_excluded,
        n_analyzed=len(frame),
    )
    return Dataset(frame, dict(data.types), data.outcome), report


# ---------------------------------------------------------------------------
# nonparametric risk table
# ---------------------------------------------------------------------------

LOW_COUNT = 5


@dataclass(frozen=True)
class RiskCell:
    estimate: float
    se: float
    count: int

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "se": self.se, "count": self.count}


@dataclass(frozen=True)
class RiskTable:
    """Cell risks R(i, j) with binomial standard errors, within one stratum."""

    cells: tuple[tuple[tuple[int, int], RiskCell], ...]
    stratum: tuple[str, Any] | None = None
    low_count_cells: tuple[tuple[int, int], ...] = ()

    def cell(self, i: int, j: int) -> RiskCell:
        for key, cell in self.cells:
            if key == (i, j):
                return cell
        raise UsageError(f"risk table has no cell ({i}, {j})")

    def to_dict(self) -> dict:
        return {
            "stratum": list(self.stratum) if self.stratum else None,
            "cells": {f"{i}{j}": cell.to_dict() for (i, j), cell in self.cells},
            "low_count_cells": [f"{i}{j}" for i, j in self.low_count_cells],
        }


def estimate_risk_table(
    data: Dataset,
    c_var: str | None = None,
    c_value: Any | None = None,
) -> RiskTable:
    """Cell proportions of the event over the four (alpha, beta) cells.

    Expects the indicator columns created by :func:`dichotomize`.  When a
    stratum variable is given, only rows at ``c_value`` enter.  Every cell
    must be populated; SE is sqrt(R(1-R)/n).
    """
    frame = data.frame
    for col in (ALPHA_IND, BETA_IND):
        if col not in frame.columns:
            raise UsageError(f"missing {col!r}; run dichotomize first")
    if (c_var is None) != (c_value is None):
        raise UsageError("stratum variable and value must be given together")
    if c_var is not None:
        frame = frame[frame[c_var] == c_value]

    a = frame[ALPHA_IND].to_numpy(dtype=np.int64)
    b = frame[BETA_IND].to_numpy(dtype=np.int64)
    y = frame[data.outcome].to_numpy(dtype=np.float64)
    cell_of_row = 2 * a + b
    counts = np.bincount(cell_of_row, minlength=4)
    event_sums = np.bincount(cell_of_row, weights=y, minlength=4)
    cells = []
    low = []
    for i in (0, 1):
        for j in (0, 1):
            n = int(counts[2 * i + j])
            if n == 0:
                raise EstimationError(f"empty cell ({i}, {j}) in risk table")
            r = float(event_sums[2 * i + j] / n)
            se = math.sqrt(r * (1.0 - r) / n)
            cells.append(((i, j), RiskCell(r, se, n)))
            if n < LOW_COUNT:
                low.append((i, j))
    stratum = (c_var, c_value) if c_var is not None else None
    return RiskTable(tuple(cells), stratum, tuple(low))


# ---------------------------------------------------------------------------
# assumption checklist (echoed into every test result)
# ---------------------------------------------------------------------------

HOLDS = "holds"
FAILS = "fails"
ASSERTED = "asserted"
UNCHECKED = "unchecked"

_CHECKLIST_ITEMS = (
    "core condition 1 (functionality)",
    "core condition 2 (regime invariance)",
    "core condition 3 (context independence)",
    "core condition 4 (factor independence)",
    "monotonicity of A",
    "monotonicity of B",
    "alpha-insensitivity of A",
    "beta-insensitivity of B",
)


@dataclass(frozen=True)
class AssumptionEntry:
    name: str
    status: str
    note: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class AssumptionChecklist:
    entries: tuple[AssumptionEntry, ...]

    @classmethod
    def unchecked(cls) -> "AssumptionChecklist":
        return cls(tuple(AssumptionEntry(n, UNCHECKED) for n in _CHECKLIST_ITEMS))

    def updated(self, name: str, status: str, note: str = "") -> "AssumptionChecklist":
        if name not in [e.name for e in self.entries]:
            raise UsageError(f"unknown checklist item {name!r}")
        return AssumptionChecklist(
            tuple(
                AssumptionEntry(e.name, status, note) if e.name == name else e
                for e in self.entries
            )
        )

    def to_dict(self) -> list:
        return [e.to_dict() for e in self.entries]


# ---------------------------------------------------------------------------
# the excess-risk test statistic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    """One-sided inference on S = R(1,1) - R(1,0) - R(0,1)."""

    statistic: float
    se: float
    z: float
    p_value: float
    method: str
    cells: dict | None = None
    dichotomization: dict | None = None
    assumptions: AssumptionChecklist | None = None
    notes: tuple[str, ...] = ()
    interval: tuple[float, float] | None = None
    contrast: dict | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "statistic": self.statistic,
            "se": self.se,
            "z": self.z,
            "p_value": self.p_value,
            "method": self.method,
            "alternative": "S > 0",
        }
        if self.cells is not None:
            out["cells"] = self.cells
        if self.dichotomization is not None:
            out["dichotomization"] = self.dichotomization
        if self.assumptions is not None:
            out["assumptions"] = self.assumptions.to_dict()
        if self.notes:
            out["notes"] = list(self.notes)
        if self.interval is not None:
            out["bootstrap_interval"] = list(self.interval)
        if self.contrast is not None:
            out["contrast"] = self.contrast
        return out


def _one_sided(statistic: float, se: float) -> tuple[float, float]:
    """(z, p) for the alternative S > 0, with a degenerate-SE convention."""
    if se > 0:
        z = statistic / se
        return z, float(stats.norm.sf(z))
    if statistic == 0:
        return 0.0, 0.5
    return (math.inf, 0.0) if statistic > 0 else (-math.inf, 1.0)


def excess_risk_test(
    table: RiskTable,
    assumptions: AssumptionChecklist | None = None,
    dichotomization: DichotomizationReport | None = None,
) -> TestResult:
    """The nonparametric test: S from three cells, SE from independent binomials."""
    r11, r10, r01 = table.cell(1, 1), table.cell(1, 0), table.cell(0, 1)
    s = r11.estimate - r10.estimate - r01.estimate
    se = math.sqrt(r11.se**2 + r10.se**2 + r01.se**2)
    z, p = _one_sided(s, se)
    notes = []
    if table.low_count_cells:
        cells = ", ".join(f"({i},{j})" for i, j in table.low_count_cells)
        notes.append(f"low cell counts: {cells}")
    return TestResult(
        statistic=s,
        se=se,
        z=z,
        p_value=p,
        method="nonparametric",
        cells=table.to_dict(),
        dichotomization=dichotomization.to_dict() if dichotomization else None,
        assumptions=assumptions,
        notes=tuple(notes),
    )


def nonparametric_excess(
    data: Dataset, c_var: str | None = None, c_value: Any | None = None
) -> float:
    """Point value of S; convenient as a bootstrap estimator."""
    table = estimate_risk_table(data, c_var, c_value)
    return table.cell(1, 1).estimate - table.cell(1, 0).estimate - table.cell(0, 1).estimate


# ---------------------------------------------------------------------------
# constrained Bernoulli maximum likelihood (identity and odds-linear links)
# ---------------------------------------------------------------------------

LINEAR_RISK = "linear-risk"
LINEAR_ODDS = "linear-odds"

RISK_EPS = 1e-6
ODDS_EPS = 1e-9


@dataclass(frozen=True)
class ModelFit:
    link: str
    names: tuple[str, ...]
    coef: np.ndarray
    cov: np.ndarray
    n_obs: int
    converged: bool
    n_iter: int
    active_constraints: int
    loglik: float
    message: str
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=float)
        cov = (cov + cov.T) / 2.0
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float))

    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def coef_named(self, name: str) -> float:
        try:
            return float(self.coef[self.names.index(name)])
        except ValueError:
            raise UsageError(f"model has no coefficient {name!r}") from None

    def to_dict(self) -> dict:
        return {
            "link": self.link,
            "coefficients": {
                n: {"estimate": float(c), "se": float(s)}
                for n, c, s in zip(self.names, self.coef, self.se())
            },
            "n_obs": self.n_obs,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "active_constraints": self.active_constraints,
            "loglik": self.loglik,
            "notes": list(self.notes),
        }


def design_matrix(
    data: Dataset,
    a_col: str = ALPHA_IND,
    b_col: str = BETA_IND,
    trend: str | None = None,
    interaction: bool = True,
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """(X, y, names) for intercept + main effects (+ interaction) (+ linear trend)."""
    cols = [a_col, b_col] + ([trend] if trend else [])
    working, _ = data.complete_cases(cols + [data.outcome])
    frame = working.frame
    a = frame[a_col].to_numpy(dtype=float)
    b = frame[b_col].to_numpy(dtype=float)
    pieces = [np.ones_like(a), a, b]
    names = ["intercept", f"main[{a_col}]", f"main[{b_col}]"]
    if interaction:
        pieces.append(a * b)
        names.append(f"interaction[{a_col}:{b_col}]")
    if trend:
        pieces.append(frame[trend].to_numpy(dtype=float))
        names.append(f"trend[{trend}]")
    X = np.column_stack(pieces)
    y = frame[data.outcome].to_numpy(dtype=float)
    return X, y, tuple(names)


def _feasible_start(
    X: np.ndarray, y: np.ndarray, lower: float, upper: float | None
) -> np.ndarray:
    """A strictly feasible theta: blend the OLS solution toward a flat model."""
    margin = 10 * lower
    center = float(np.clip(y.mean(), lower + margin, (upper - margin) if upper else None))
    flat = np.zeros(X.shape[1])
    flat[0] = center  # column 0 is the intercept
    theta, *_ = np.linalg.lstsq(X, y, rcond=None)
    for _ in range(60):
        lin = X @ theta
        ok = (lin >= lower + margin / 2).all()
        if ok and upper is not None:
            ok = (lin <= upper - margin / 2).all()
        if ok:
            return theta
        theta = 0.5 * theta + 0.5 * flat
    return flat


def _fit_bernoulli(
    X: np.ndarray,
    y: np.ndarray,
    names: tuple[str, ...],
    link: str,
    max_iter: int,
) -> ModelFit:
    n, p = X.shape
    if np.linalg.matrix_rank(X) < p:
        raise UsageError("design matrix is rank deficient")
    unique_rows = np.unique(X, axis=0)

    if link == LINEAR_RISK:
        lower, upper = RISK_EPS, 1.0 - RISK_EPS

        def negloglik(theta):
            pi = np.clip(X @ theta, 1e-12, 1 - 1e-12)
            return -float(y @ np.log(pi) + (1 - y) @ np.log1p(-pi))

        def grad(theta):
            pi = np.clip(X @ theta, 1e-12, 1 - 1e-12)
            return -X.T @ (y / pi - (1 - y) / (1 - pi))

        constraints = [
            {"type": "ineq", "fun": lambda t: unique_rows @ t - lower,
             "jac": lambda t: unique_rows},
            {"type": "ineq", "fun": lambda t: upper - unique_rows @ t,
             "jac": lambda t: -unique_rows},
        ]
    elif link == LINEAR_ODDS:
        lower, upper = ODDS_EPS, None

        def negloglik(theta):
            w = np.clip(X @ theta, 1e-12, None)
            return -float(y @ np.log(w) - np.log1p(w).sum())

        def grad(theta):
            w = np.clip(X @ theta, 1e-12, None)
            return -X.T @ (y / w - 1.0 / (1.0 + w))

        constraints = [
            {"type": "ineq", "fun": lambda t: unique_rows @ t - lower,
             "jac": lambda t: unique_rows},
        ]
    else:
        raise UsageError(f"unknown link {link!r}")

    x0 = _feasible_start(X, y, lower, upper)
    result = optimize.minimize(
        negloglik,
        x0,
        jac=grad,
        method="SLSQP",
        constraints=constraints,
        options={"maxiter": max_iter, "ftol": 1e-12},
    )
    if not result.success:
        raise FitError(
            f"{link} fit did not converge after {result.nit} iterations: "
            f"{result.message} (fun={result.fun:.6g}, ||grad||="
            f"{np.linalg.norm(result.jac):.3g})"
        )
    theta = result.x
    lin = X @ theta
    active = int((np.abs(lin - lower) < 1e-7).sum())
    notes = []
    if link == LINEAR_RISK:
        active += int((np.abs(lin - upper) < 1e-7).sum())
        if (lin < lower - 1e-9).any() or (lin > upper + 1e-9).any():
            raise FitError("fitted probabilities escaped the unit interval")
        w = y / lin**2 + (1 - y) / (1 - lin) ** 2
    else:
        if (lin < lower - 1e-12).any():
            raise FitError("negative fitted odds at observed covariates")
        w = y / lin**2 - 1.0 / (1.0 + lin) ** 2
    info = X.T @ (X * w[:, None])
    eigs = np.linalg.eigvalsh((info + info.T) / 2)
    if eigs.min() <= 0:
        # observed information not positive definite: use expected information
        w = 1.0 / (lin * (1.0 + lin) ** 2) if link == LINEAR_ODDS else 1.0 / (
            lin * (1.0 - lin)
        )
        info = X.T @ (X * w[:, None])
        notes.append("covariance from expected information (observed not PD)")
    cov = np.linalg.pinv(info)
    if active:
        notes.append(f"{active} fitted values at a box constraint")
    return ModelFit(
        link=link,
        names=names,
        coef=theta,
        cov=cov,
        n_obs=n,
        converged=True,
        n_iter=int(result.nit),
        active_constraints=active,
        loglik=-float(result.fun),
        message=str(result.message),
        notes=tuple(notes),
    )


def fit_linear_risk(
    data: Dataset,
    a_col: str = ALPHA_IND,
    b_col: str = BETA_IND,
    trend: str | None = None,
    interaction: bool = True,
    max_iter: int = 300,
) -> ModelFit:
    """Identity-link Bernoulli ML: event probability linear in the design.

    Fitted probabilities are kept inside [1e-6, 1 - 1e-6] at every observed
    covariate row via linear box constraints; active constraints are
    reported in the diagnostics.  Covariance comes from the observed
    information at the optimum.
    """
    X, y, names = design_matrix(data, a_col, b_col, trend, interaction)
    return _fit_bernoulli(X, y, names, LINEAR_RISK, max_iter)


def fit_linear_odds(
    data: Dataset,
    a_col: str = ALPHA_IND,
    b_col: str = BETA_IND,
    trend: str | None = None,
    interaction: bool = True,
    max_iter: int = 300,
) -> ModelFit:
    """Odds-linear Bernoulli ML for case-control outcomes (odds = design @ theta > 0)."""
    X, y, names = design_matrix(data, a_col, b_col, trend, interaction)
    return _fit_bernoulli(X, y, names, LINEAR_ODDS, max_iter)


# ---------------------------------------------------------------------------
# model-based excess risk
# ---------------------------------------------------------------------------


def _standard_cell_design(names: tuple[str, ...], t: float) -> Callable[[int, int], dict]:
    def cell(i: int, j: int) -> dict:
        row = {}
        for name in names:
            if name == "intercept":
                row[name] = 1.0
            elif name.startswith("main["):
                row[name] = float(i) if name == names[1] else float(j)
            elif name.startswith("interaction["):
                row[name] = float(i * j)
            elif name.startswith("trend["):
                row[name] = float(t)
            else:
                raise UsageError(f"no standard cell coding for coefficient {name!r}")
        return row

    return cell


def model_excess_risk(
    fit: ModelFit,
    t: float = 0.0,
    coding: Callable[[int, int], Mapping[str, float]] | None = None,
    assumptions: AssumptionChecklist | None = None,
    dichotomization: DichotomizationReport | None = None,
) -> TestResult:
    """S evaluated from a linear-risk fit: pi(1,1) - pi(1,0) - pi(0,1).

    ``coding`` maps cell indicators (i, j) to covariate values by
    coefficient name; the default uses the fit's own design convention
    with the trend column held at ``t``.  Because S is linear in the
    coefficients the delta-method SE (via the coefficient covariance) is
    exact, not an approximation.
    """
    if fit.link != LINEAR_RISK:
        raise UsageError("model_excess_risk needs a linear-risk fit")
    cell = coding or _standard_cell_design(fit.names, t)

    def row_vec(i: int, j: int) -> np.ndarray:
        mapping = dict(cell(i, j))
        unknown = set(mapping) - set(fit.names)
        if unknown:
            raise UsageError(f"cell coding references absent coefficients {sorted(unknown)}")
        return np.array([float(mapping.get(n, 0.0)) for n in fit.names])

    x11, x10, x01 = row_vec(1, 1), row_vec(1, 0), row_vec(0, 1)
    lam = x11 - x10 - x01
    s = float(lam @ fit.coef)
    se = float(math.sqrt(max(lam @ fit.cov @ lam, 0.0)))
    z, p = _one_sided(s, se)
    cells = {
        "11": float(x11 @ fit.coef),
        "10": float(x10 @ fit.coef),
        "01": float(x01 @ fit.coef),
    }
    return TestResult(
        statistic=s,
        se=se,
        z=z,
        p_value=p,
        method="linear-risk model contrast",
        cells=cells,
        dichotomization=dichotomization.to_dict() if dichotomization else None,
        assumptions=assumptions,
        contrast={n: float(v) for n, v in zip(fit.names, lam)},
        notes=(f"trend held at t={t}",) if any(n.startswith("trend[") for n in fit.names) else (),
    )


def rare_disease_excess(
    fit: ModelFit,
    assumptions: AssumptionChecklist | None = None,
    dichotomization: DichotomizationReport | None = None,
) -> TestResult:
    """Interaction-minus-intercept contrast from a linear-odds case-control fit.

    Under a rare outcome, case-control sampling scales all cell odds by one
    positive constant, so the sign of (interaction - intercept) equals the
    sign of the prospective excess risk S; the magnitude does not transfer.
    """
    if fit.link != LINEAR_ODDS:
        raise UsageError("rare_disease_excess needs a linear-odds fit")
    interaction = [n for n in fit.names if n.startswith("interaction[")]
    if not interaction or "intercept" not in fit.names:
        raise UsageError("fit must contain an intercept and an interaction term")
    lam = np.zeros(len(fit.names))
    lam[fit.names.index(interaction[0])] = 1.0
    lam[fit.names.index("intercept")] = -1.0
    s = float(lam @ fit.coef)
    se = float(math.sqrt(max(lam @ fit.cov @ lam, 0.0)))
    z, p = _one_sided(s, se)
    return TestResult(
        statistic=s,
        se=se,
        z=z,
        p_value=p,
        method="linear-odds interaction-minus-intercept",
        dichotomization=dichotomization.to_dict() if dichotomization else None,
        assumptions=assumptions,
        contrast={n: float(v) for n, v in zip(fit.names, lam)},
        notes=("sign-valid under rare-disease assumption",),
    )


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    estimate: float
    lower: float
    upper: float
    level: float
    b_requested: int
    b_completed: int
    seed: int | None
    workers: int

    def to_dict(self) -> dict:
        # worker count deliberately absent: resample seeds are pre-partitioned,
        # so the interval is identical for any worker count
        return {
            "estimate": self.estimate,
            "interval": [self.lower, self.upper],
            "level": self.level,
            "b_requested": self.b_requested,
            "b_completed": self.b_completed,
            "seed": self.seed,
        }


def bootstrap_test(
    data: Dataset,
    estimator: Callable[[Dataset], float],
    b: int = 1000,
    seed: int | None = None,
    level: float = 0.95,
    workers: int = 1,
    max_failure_rate: float = 0.10,
) -> BootstrapResult:
    """Row-resampling percentile interval for any scalar estimator of the data.

    Per-resample RNG seeds are spawned from the master seed before any work
    starts, and results are gathered by resample index, so the output is
    identical for any worker count.  Resamples on which the estimator
    raises an analysis error are skipped; more than ``max_failure_rate`` of
    them is a bootstrap failure.
    """
    if b < 100:
        raise UsageError("bootstrap needs at least 100 resamples")
    point = estimator(data)
    n = len(data)
    child_seeds = np.random.SeedSequence(seed).spawn(b)

    def one(k: int) -> float | None:
        rng = np.random.default_rng(child_seeds[k])
        idx = rng.integers(0, n, n)
        resample = Dataset(
            data.frame.iloc[idx].reset_index(drop=True), dict(data.types), data.outcome
        )
        try:
            return float(estimator(resample))
        except CoactError:
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(one, range(b)))
    else:
        raw = [one(k) for k in range(b)]

    values = np.array([v for v in raw if v is not None], dtype=float)
    failures = b - len(values)
    if failures > max_failure_rate * b:
        raise BootstrapError(
            f"{failures}/{b} bootstrap resamples failed (tolerance {max_failure_rate:.0%})"
        )
    lo, hi = np.quantile(values, [(1 - level) / 2, 1 - (1 - level) / 2])
    return BootstrapResult(
        estimate=float(point),
        lower=float(lo),
        upper=float(hi),
        level=level,
        b_requested=b,
        b_completed=int(len(values)),
        seed=seed,
        workers=workers,
    )

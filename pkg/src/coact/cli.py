"""Command-line entry points with machine-readable reports.

Three console scripts are installed, matching the analysis workflows:

* ``mech classify <response.json>`` — coaction verdict for a tabulated
  response function;
* ``adag check <graph.json> --A .. --B .. --Y .. [--C ..] [--U ..]
  [--assert-functional]`` — core-condition and sufficient-covariate report;
* ``coact test <data.csv> --a-var .. --b-var .. --alpha .. --beta ..`` —
  the excess-risk test on data (nonparametric, linear-risk, or linear-odds);
* ``coact simulate <scenario.json> -n N --seed S --out data.csv``;
* ``coact soundness --trials K --seed S``.

Every command writes one report to stdout: JSON with ``--json`` (stable key
order, byte-identical across runs for a fixed seed and across worker
counts), a human-readable rendering otherwise.  The text rendering always
includes the assumption checklist where one applies, because the test's
conclusion is only as good as its explicitly stated assumptions.

Exit codes: 0 — success (an unfavourable verdict is still a success);
1 — analysis error (degenerate cells, non-convergence); 2 — usage error.
``COACT_SEED`` provides a default seed for all seeded commands.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import click
import numpy as np

from . import __version__, adag, estimation, mechanism, simulator
from .errors import CoactError, DomainError
from .errors import UsageError as CoactUsageError

# stable warning codes
W_DROPPED_ROWS = "DROPPED_ROWS"
W_LOW_CELL_COUNT = "LOW_CELL_COUNT"
W_UNVERIFIED_ASSUMPTION = "UNVERIFIED_ASSUMPTION"
W_ORIENTATION = "ORIENTATION"
W_ACTIVE_CONSTRAINTS = "ACTIVE_CONSTRAINTS"
W_NOT_ASSERTED = "FUNCTIONALITY_NOT_ASSERTED"
W_COUNTEREXAMPLES = "COUNTEREXAMPLES"
W_INTERNAL = "INTERNAL_INCONSISTENCY"


@dataclass
class Report:
    """The JSON envelope every command emits."""

    command: list[str]
    inputs: list[dict] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    assumptions: list | None = None
    warnings: list[dict] = field(default_factory=list)

    def warn(self, code: str, message: str) -> None:
        self.warnings.append({"code": code, "message": message})

    def to_dict(self) -> dict:
        return {
            "tool": "coact",
            "version": __version__,
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "assumptions": self.assumptions,
            "warnings": self.warnings,
        }


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest(report: Report, *paths) -> None:
    for p in paths:
        report.inputs.append({"path": str(p), "sha256": _sha256(p)})


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(report: Report, as_json: bool, lines: list[str]) -> None:
    if as_json:
        click.echo(
            json.dumps(report.to_dict(), sort_keys=True, indent=2, default=_json_default)
        )
        return
    for line in lines:
        click.echo(line)
    if report.assumptions:
        click.echo("assumption checklist:")
        for entry in report.assumptions:
            note = f"  [{entry['note']}]" if entry.get("note") else ""
            click.echo(f"  - {entry['name']}: {entry['status']}{note}")
    for w in report.warnings:
        click.echo(f"warning [{w['code']}]: {w['message']}")


def published_schema(name: str) -> dict:
    """Load one of the schemas shipped under ``coact/schemas``."""
    ref = resources.files("coact.schemas").joinpath(name)
    return json.loads(ref.read_text(encoding="utf-8"))


def _parse_level(token: str):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _parse_block(spec: str, variable: str, observed) -> mechanism.ValueSet:
    """CLI block syntax: ``>tau`` (threshold, strict) or ``v1,v2,...`` (members)."""
    spec = spec.strip()
    if spec.startswith(">"):
        tau = _parse_level(spec[1:])
        if isinstance(tau, str):
            raise CoactUsageError(f"threshold for {variable!r} must be numeric: {spec!r}")
        members = tuple(sorted({v for v in observed if v > tau}))
        if not members:
            raise DomainError(f"no observed {variable!r} levels above {tau!r}")
        return mechanism.ValueSet(variable, members, threshold=tau)
    members = tuple(_parse_level(tok) for tok in spec.split(",") if tok.strip())
    if not members:
        raise CoactUsageError(f"empty block specification for {variable!r}")
    return mechanism.ValueSet(variable, members)


def _parse_nodes(value: str) -> list[str]:
    return [tok.strip() for tok in value.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# mech
# ---------------------------------------------------------------------------


@click.group(name="mech")
def mech_group():
    """Structural analysis of tabulated response functions."""


@mech_group.command("classify")
@click.argument("response_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
def mech_classify(response_file: str, as_json: bool) -> None:
    """Classify coaction for the response function in RESPONSE_FILE."""
    f = mechanism.ResponseFunction.from_json_file(response_file)
    verdict = mechanism.classify_coaction(f)
    report = Report(command=["mech", "classify", response_file])
    _digest(report, response_file)
    report.results = {
        "verdict": verdict.to_dict(),
        "monotonicity": {
            "A": mechanism.check_monotonicity(f, "A").value,
            "B": mechanism.check_monotonicity(f, "B").value,
        },
    }
    lines = [
        f"response function: {response_file}",
        f"A interferes with B: {verdict.a_interferes_with_b}",
        f"B interferes with A: {verdict.b_interferes_with_a}",
        f"weak coaction:  {verdict.weak}",
        f"strong coaction: {verdict.strong}",
    ]
    for w in verdict.witnesses:
        lines.append(
            f"  witness[{w.actor}]: context (c={w.c!r}, u={w.u!r}), "
            f"forcing value {w.forcing!r}, partner varies at {w.relevance_anchor!r} "
            f"over {w.relevance_pair!r}"
        )
    _emit(report, as_json, lines)


# ---------------------------------------------------------------------------
# adag
# ---------------------------------------------------------------------------


@click.group(name="adag")
def adag_group():
    """Augmented-DAG identifiability checks."""


@adag_group.command("check")
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--A", "role_a", required=True, help="Node playing factor A.")
@click.option("--B", "role_b", required=True, help="Node playing factor B.")
@click.option("--Y", "role_y", required=True, help="Outcome node.")
@click.option("--C", "role_c", default="", help="Comma-separated observed context nodes.")
@click.option("--U", "role_u", default="", help="Comma-separated unobserved context nodes.")
@click.option(
    "--assert-functional",
    is_flag=True,
    help="Assert core condition 1 (the outcome is a deterministic function "
    "of A, B, C, U, identical across regimes).",
)
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
def adag_check(graph_file, role_a, role_b, role_y, role_c, role_u, assert_functional, as_json):
    """Check the core conditions and the sufficient-covariate clauses."""
    g = adag.Adag.from_json_file(graph_file)
    roles = adag.RoleAssignment(
        a=role_a,
        b=role_b,
        y=role_y,
        c=frozenset(_parse_nodes(role_c)),
        u=frozenset(_parse_nodes(role_u)),
        asserted_functional=assert_functional,
    )
    cond_report = adag.check_core_conditions(g, roles)
    suff = adag.check_sufficient_covariate(g, roles, roles.c)

    report = Report(command=["adag", "check", graph_file])
    _digest(report, graph_file)
    report.results = {
        "roles": {
            "A": roles.a,
            "B": roles.b,
            "Y": roles.y,
            "C": sorted(roles.c),
            "U": sorted(roles.u),
        },
        "core_conditions": cond_report.to_dict(),
        "sufficient_covariate": suff.to_dict(),
    }
    report.assumptions = []
    for idx, verdict in enumerate(cond_report.conditions, start=1):
        entry = {"name": f"core condition {idx} ({verdict.name})", "status": verdict.status}
        if verdict.status == adag.ASSERTED_ONLY:
            entry["note"] = "asserted by caller" if verdict.asserted else "NOT asserted"
        report.assumptions.append(entry)
    if not assert_functional:
        report.warn(
            W_NOT_ASSERTED,
            "core condition 1 cannot be read off a graph and was not asserted",
        )
    if not cond_report.consistent:
        report.warn(W_INTERNAL, "conditions 2+3 hold but the implied invariance failed")

    lines = [f"graph: {graph_file}"]
    for idx, verdict in enumerate(cond_report.conditions, start=1):
        line = f"condition {idx} ({verdict.name}): {verdict.status}"
        if verdict.status == adag.ASSERTED_ONLY:
            line += " (asserted)" if verdict.asserted else " (not asserted)"
        if verdict.blocking_path:
            line += f" — active path {' - '.join(verdict.blocking_path)}"
        lines.append(line)
    corr = cond_report.corollary
    lines.append(f"implied invariance ({corr.statement}): {corr.status}")
    if suff.holds:
        lines.append("sufficient covariate (joint effects): holds")
    else:
        path = f" — active path {' - '.join(suff.blocking_path)}" if suff.blocking_path else ""
        lines.append(f"sufficient covariate (joint effects): fails clause {suff.failed_clause}{path}")
    _emit(report, as_json, lines)


# ---------------------------------------------------------------------------
# coact
# ---------------------------------------------------------------------------


@click.group(name="coact")
def coact_group():
    """Excess-risk testing and simulation."""


def _default_schema_path(data_file: str) -> Path:
    return Path(data_file).with_suffix(".schema.json")


@coact_group.command("test")
@click.argument("data_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--a-var", required=True, help="Column for factor A.")
@click.option("--b-var", required=True, help="Column for factor B.")
@click.option("--alpha", "alpha_spec", required=True, help="Block for A: '>tau' or 'v1,v2'.")
@click.option("--beta", "beta_spec", required=True, help="Block for B: '>tau' or 'v1,v2'.")
@click.option("--stratum", default=None, help="Row filter (pandas query), e.g. 'A > 1'.")
@click.option(
    "--model",
    type=click.Choice(["nonparam", "riskreg", "oddsreg"]),
    default="nonparam",
    show_default=True,
)
@click.option("--trend", default=None, help="Linear trend column (riskreg only).")
@click.option("--at-trend", type=float, default=0.0, show_default=True,
              help="Trend value at which the model contrast is evaluated.")
@click.option("--recode", "recode_json", default=None,
              help='Per-variable level recoding, e.g. \'{"A": {"1": 4, "2": 3}}\'.')
@click.option("--boot", "boot_b", type=int, default=0, help="Bootstrap resamples (0 = off).")
@click.option("--seed", type=int, default=None, envvar="COACT_SEED", help="RNG seed.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--schema", "schema_file", default=None,
              help="Sidecar schema path (default: <data>.schema.json).")
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
def coact_test(
    data_file, a_var, b_var, alpha_spec, beta_spec, stratum, model, trend,
    at_trend, recode_json, boot_b, seed, workers, schema_file, as_json,
):
    """Run the one-sided excess-risk test S = R11 - R10 - R01 > 0 on DATA_FILE."""
    schema_path = Path(schema_file) if schema_file else _default_schema_path(data_file)
    if not schema_path.exists():
        raise CoactUsageError(f"no sidecar schema at {schema_path} (use --schema)")
    data = estimation.Dataset.from_csv(data_file, schema_path)

    recode = None
    if recode_json:
        try:
            raw = json.loads(recode_json)
        except json.JSONDecodeError as exc:
            raise CoactUsageError(f"--recode is not valid JSON: {exc}") from None
        recode = {
            var: {_parse_level(k): _parse_level(str(v)) for k, v in mapping.items()}
            for var, mapping in raw.items()
        }

    def observed_levels(var: str):
        col = data.column(var).dropna()
        if recode and var in recode:
            col = col.map(recode[var])
        return col.unique().tolist()

    alpha = _parse_block(alpha_spec, a_var, observed_levels(a_var))
    beta = _parse_block(beta_spec, b_var, observed_levels(b_var))

    working, dich = estimation.dichotomize(data, alpha, beta, recode=recode, stratum=stratum)

    report = Report(command=["coact", "test", data_file])
    _digest(report, data_file, schema_path)
    if dich.n_missing_dropped:
        report.warn(
            W_DROPPED_ROWS,
            f"{dich.n_missing_dropped} rows dropped for missing analysis columns",
        )

    checklist = estimation.AssumptionChecklist.unchecked()
    for name in (
        "core condition 1 (functionality)",
        "core condition 2 (regime invariance)",
        "core condition 3 (context independence)",
        "core condition 4 (factor independence)",
    ):
        checklist = checklist.updated(name, estimation.UNCHECKED, "verify with `adag check`")
    for name in ("monotonicity of A", "monotonicity of B"):
        checklist = checklist.updated(name, estimation.ASSERTED, "not derivable from data")
    report.warn(
        W_UNVERIFIED_ASSUMPTION,
        "core conditions and monotonicity are assumptions; this test cannot verify them",
    )
    for name, block in (("alpha-insensitivity of A", alpha), ("beta-insensitivity of B", beta)):
        if len(block.members) == 1:
            checklist = checklist.updated(name, estimation.HOLDS, "single-point block")
        else:
            checklist = checklist.updated(name, estimation.ASSERTED, "multi-point block")
            report.warn(
                W_UNVERIFIED_ASSUMPTION,
                f"{name} assumed for the multi-point block {block.describe()!r}",
            )

    fit = None
    if model == "nonparam":
        table = estimation.estimate_risk_table(working)
        result = estimation.excess_risk_test(table, checklist, dich)
        if table.low_count_cells:
            report.warn(
                W_LOW_CELL_COUNT,
                f"cells with fewer than {estimation.LOW_COUNT} rows: "
                + ", ".join(f"({i},{j})" for i, j in table.low_count_cells),
            )
        estimator = estimation.nonparametric_excess
    elif model == "riskreg":
        fit = estimation.fit_linear_risk(working, trend=trend)
        result = estimation.model_excess_risk(
            fit, t=at_trend, assumptions=checklist, dichotomization=dich
        )

        def estimator(ds, _trend=trend, _t=at_trend):
            return estimation.model_excess_risk(
                estimation.fit_linear_risk(ds, trend=_trend), t=_t
            ).statistic

    else:
        fit = estimation.fit_linear_odds(working)
        result = estimation.rare_disease_excess(fit, checklist, dich)

        def estimator(ds):
            return estimation.rare_disease_excess(estimation.fit_linear_odds(ds)).statistic

    if fit is not None:
        if fit.active_constraints:
            report.warn(
                W_ACTIVE_CONSTRAINTS,
                f"{fit.active_constraints} fitted values sit on a feasibility bound",
            )
        for name in fit.names:
            if name.startswith("main[") and fit.coef_named(name) < 0:
                report.warn(
                    W_ORIENTATION,
                    f"{name} < 0: the block looks risk-decreasing; the excess-risk "
                    "identity expects both indicators oriented risk-increasing",
                )

    boot = None
    if boot_b:
        boot = estimation.bootstrap_test(
            working, estimator, b=boot_b, seed=seed, workers=workers
        )
        result = replace(result, interval=(boot.lower, boot.upper))

    report.assumptions = checklist.to_dict()
    report.results = {"test": result.to_dict()}
    if fit is not None:
        report.results["fit"] = fit.to_dict()
    if boot is not None:
        report.results["bootstrap"] = boot.to_dict()

    lines = [
        f"data: {data_file} ({dich.n_analyzed} rows analyzed, "
        f"{dich.n_missing_dropped} dropped, {dich.n_stratum_excluded} outside stratum)",
        f"model: {result.method}",
        f"S = {result.statistic:.6g}   SE = {result.se:.6g}   "
        f"z = {result.z:.4g}   one-sided p = {result.p_value:.4g}",
    ]
    if result.interval:
        lines.append(
            f"bootstrap {int(boot.level * 100)}% percentile interval: "
            f"[{result.interval[0]:.6g}, {result.interval[1]:.6g}] "
            f"({boot.b_completed}/{boot.b_requested} resamples)"
        )
    for note in result.notes:
        lines.append(f"note: {note}")
    _emit(report, as_json, lines)


@coact_group.command("simulate")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "n", type=int, required=True, help="Number of rows to draw.")
@click.option("--seed", type=int, default=None, envvar="COACT_SEED", help="RNG seed.")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
def coact_simulate(scenario_file, n, seed, out_file, as_json):
    """Sample a dataset from SCENARIO_FILE and write CSV plus sidecar schema."""
    scenario = simulator.Scenario.from_json_file(scenario_file)
    data = simulator.sample_dataset(scenario, n, seed)
    data.frame.to_csv(out_file, index=False)
    schema_path = _default_schema_path(out_file)
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(data.schema_obj(), fh, sort_keys=True, indent=2)
        fh.write("\n")

    report = Report(command=["coact", "simulate", scenario_file])
    _digest(report, scenario_file)
    report.results = {
        "n": n,
        "seed": seed,
        "regime": None if scenario.observational else list(scenario.regime),
        "out": str(out_file),
        "schema": str(schema_path),
        "columns": list(data.frame.columns),
        "event_rate": float(data.frame[data.outcome].mean()),
    }
    lines = [
        f"scenario: {scenario_file}",
        f"wrote {n} rows to {out_file} (schema: {schema_path})",
        f"event rate: {report.results['event_rate']:.4f}",
    ]
    _emit(report, as_json, lines)


@coact_group.command("soundness")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None, envvar="COACT_SEED", help="RNG seed.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
def coact_soundness(trials, seed, workers, as_json):
    """Randomized check: every exact S > 0 is confirmed by brute-force interference."""
    rep = simulator.soundness_experiment(trials, seed=seed, workers=workers)
    report = Report(command=["coact", "soundness"])
    report.results = rep.to_dict()
    if not rep.sound:
        report.warn(
            W_COUNTEREXAMPLES, f"{len(rep.counterexamples)} counterexamples found"
        )
    lines = [
        f"trials: {rep.trials} (skipped {rep.skipped})",
        f"strata with exact S > 0: {rep.positive_strata} "
        f"across {rep.trials_with_positive} trials",
        f"confirmed by brute-force interference: {rep.confirmed}",
        f"counterexamples: {len(rep.counterexamples)}",
        f"sound: {rep.sound}",
    ]
    _emit(report, as_json, lines)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_ROOTS = {"mech": mech_group, "adag": adag_group, "coact": coact_group}


def run(argv) -> int:
    """Dispatch one command line; returns the exit code (0/1/2)."""
    argv = list(argv)
    if not argv or argv[0] not in _ROOTS:
        click.echo("usage: {mech|adag|coact} <subcommand> [options]", err=True)
        return 2
    group = _ROOTS[argv[0]]
    try:
        group.main(args=argv[1:], prog_name=argv[0], standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except CoactUsageError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except CoactError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


def main_mech() -> None:
    sys.exit(run(["mech", *sys.argv[1:]]))


def main_adag() -> None:
    sys.exit(run(["adag", *sys.argv[1:]]))


def main_coact() -> None:
    sys.exit(run(["coact", *sys.argv[1:]]))

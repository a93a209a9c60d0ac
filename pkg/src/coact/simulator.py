"""Synthetic populations under deep determinism, exact risks, and the soundness experiment.

A scenario couples a tabulated response function with a generating law
factored as P(c) P(u|c) P(a|c) P(b|c) — the two factors are independent
given the observed context by construction — plus a regime: ``None`` for
observational sampling, or a fixed (a, b) pair for an intervention.

Population cell risks are computed by *exact enumeration* of

    R_ij_c(u) = sum_{a in block_i} P(a | block_i, c)
                sum_{b in block_j} f(a, b, c, u) P(b | block_j, c)
    R_ij_c    = sum_u R_ij_c(u) P(u | c)

with no sampling involved.  Probability tables may be ``fractions.Fraction``
values, in which case every risk (and the excess contrast) is exact
rational arithmetic — the randomized soundness experiment relies on this
to make "S > 0" a discrete, error-free event.

The soundness experiment generates random scenarios whose response is
monotone in both factors by construction (random staircase tables), takes
singleton upper dichotomization blocks so the insensitivity side
conditions hold trivially, and checks that every stratum with exact
S > 0 is confirmed by the brute-force interference checker, each way.
Trials violating the monotonicity precondition are skipped and counted,
never silently used.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateDichotomizationError, InputFormatError, UsageError
from .estimation import Dataset
from .mechanism import (
    BlockWitness,
    Monotonicity,
    ResponseFunction,
    ValueSet,
    VariableDomain,
    block_contrast_witness,
    check_alpha_insensitivity,
    check_interference,
    check_monotonicity,
)

PROB_TOL = 1e-12


def _check_distribution(name: str, probs: Sequence, size: int) -> tuple:
    probs = tuple(probs)
    if len(probs) != size:
        raise InputFormatError(f"{name}: expected {size} probabilities, got {len(probs)}")
    if any(p < 0 for p in probs):
        raise InputFormatError(f"{name}: negative probability")
    if abs(sum(probs) - 1) > PROB_TOL:
        raise InputFormatError(f"{name}: probabilities sum to {float(sum(probs))!r}, not 1")
    return probs


@dataclass(frozen=True)
class Scenario:
    """A response function plus its generating law and data-collection regime."""

    response: ResponseFunction
    p_c: tuple
    p_u_given_c: tuple[tuple, ...]
    p_a_given_c: tuple[tuple, ...]
    p_b_given_c: tuple[tuple, ...]
    regime: tuple[Any, Any] | None = None

    def __post_init__(self) -> None:
        f = self.response
        object.__setattr__(self, "p_c", _check_distribution("p_c", self.p_c, len(f.c)))
        for field_name, per_c, dom in (
            ("p_u_given_c", self.p_u_given_c, f.u),
            ("p_a_given_c", self.p_a_given_c, f.a),
            ("p_b_given_c", self.p_b_given_c, f.b),
        ):
            per_c = tuple(per_c)
            if len(per_c) != len(f.c):
                raise InputFormatError(
                    f"{field_name}: expected one row per C level ({len(f.c)})"
                )
            rows = tuple(
                _check_distribution(f"{field_name}[{k}]", row, len(dom))
                for k, row in enumerate(per_c)
            )
            object.__setattr__(self, field_name, rows)
        if self.regime is not None:
            a_val, b_val = self.regime
            f.a.index(a_val)
            f.b.index(b_val)
            object.__setattr__(self, "regime", (a_val, b_val))

    @property
    def observational(self) -> bool:
        return self.regime is None

    # -- file format ---------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "response": self.response.to_json_obj(),
            "p_c": [float(p) for p in self.p_c],
            "p_u_given_c": [[float(p) for p in row] for row in self.p_u_given_c],
            "p_a_given_c": [[float(p) for p in row] for row in self.p_a_given_c],
            "p_b_given_c": [[float(p) for p in row] for row in self.p_b_given_c],
            "regime": None
            if self.regime is None
            else {"a": self.regime[0], "b": self.regime[1]},
        }

    @classmethod
    def from_json_obj(cls, obj: dict, base_dir: str | None = None) -> "Scenario":
        try:
            raw_response = obj["response"]
        except (KeyError, TypeError):
            raise InputFormatError("scenario JSON needs a 'response' entry") from None
        if isinstance(raw_response, dict) and "file" in raw_response:
            path = raw_response["file"]
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            response = ResponseFunction.from_json_file(path)
        else:
            response = ResponseFunction.from_json_obj(raw_response)
        regime = obj.get("regime")
        if regime is not None:
            try:
                regime = (regime["a"], regime["b"])
            except (KeyError, TypeError):
                raise InputFormatError("regime must be null or {'a': ..., 'b': ...}") from None
        try:
            return cls(
                response=response,
                p_c=obj["p_c"],
                p_u_given_c=obj["p_u_given_c"],
                p_a_given_c=obj["p_a_given_c"],
                p_b_given_c=obj["p_b_given_c"],
                regime=regime,
            )
        except KeyError as exc:
            raise InputFormatError(f"scenario JSON is missing {exc}") from None

    @classmethod
    def from_json_file(cls, path) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_json_obj(obj, base_dir=os.path.dirname(os.fspath(path)))


# ---------------------------------------------------------------------------
# exact population risks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactRiskTable:
    """R_ij per stratum and per (stratum, context), from exact enumeration.

    ``by_stratum[k][i][j]`` is R_ij at the k-th C level; ``by_context``
    additionally indexes the U level before the cell indices.  Entries are
    Fractions when the scenario's tables are Fractions.
    """

    c_values: tuple
    u_values: tuple
    by_stratum: tuple
    by_context: tuple
    p_u_given_c: tuple

    def risk(self, c_value: Any, i: int, j: int):
        k = self.c_values.index(c_value)
        return self.by_stratum[k][i][j]

    def risk_in_context(self, c_value: Any, u_value: Any, i: int, j: int):
        k = self.c_values.index(c_value)
        l = self.u_values.index(u_value)
        return self.by_context[k][l][i][j]

    def excess(self, c_value: Any):
        """S = R11 - R10 - R01 in the given stratum."""
        k = self.c_values.index(c_value)
        cells = self.by_stratum[k]
        return cells[1][1] - cells[1][0] - cells[0][1]

    def excess_in_context(self, c_value: Any, u_value: Any):
        k = self.c_values.index(c_value)
        l = self.u_values.index(u_value)
        cells = self.by_context[k][l]
        return cells[1][1] - cells[1][0] - cells[0][1]

    def to_dict(self) -> dict:
        return {
            "c_values": list(self.c_values),
            "u_values": list(self.u_values),
            "by_stratum": [
                {f"{i}{j}": float(row[i][j]) for i in (0, 1) for j in (0, 1)}
                for row in self.by_stratum
            ],
        }


def exact_risk(scenario: Scenario, alpha: ValueSet, beta: ValueSet) -> ExactRiskTable:
    """Enumerate the population risk table under the observational regime.

    Raises if the scenario is interventional or if either block (or its
    complement) carries zero probability in some stratum.
    """
    if not scenario.observational:
        raise UsageError("exact risks are defined under the observational regime")
    f = scenario.response
    a_blocks = _split_indices(alpha, f.a)
    b_blocks = _split_indices(beta, f.b)
    tbl = f.table

    by_stratum = []
    by_context = []
    for k in range(len(f.c)):
        pa = scenario.p_a_given_c[k]
        pb = scenario.p_b_given_c[k]
        pu = scenario.p_u_given_c[k]
        a_mass = [sum(pa[i] for i in a_blocks[s]) for s in (0, 1)]
        b_mass = [sum(pb[j] for j in b_blocks[s]) for s in (0, 1)]
        for s in (0, 1):
            if a_mass[s] == 0:
                raise DegenerateDichotomizationError(
                    f"P({alpha.variable} block={s} | c={f.c.values[k]!r}) = 0"
                )
            if b_mass[s] == 0:
                raise DegenerateDichotomizationError(
                    f"P({beta.variable} block={s} | c={f.c.values[k]!r}) = 0"
                )
        per_u = []
        for l in range(len(f.u)):
            cells = [[None, None], [None, None]]
            for i in (0, 1):
                for j in (0, 1):
                    acc = 0
                    for ai in a_blocks[i]:
                        inner = 0
                        for bj in b_blocks[j]:
                            if tbl[ai, bj, k, l]:
                                inner = inner + pb[bj]
                        acc = acc + pa[ai] * inner
                    cells[i][j] = acc / (a_mass[i] * b_mass[j])
            per_u.append(tuple(tuple(row) for row in cells))
        mixed = [[None, None], [None, None]]
        for i in (0, 1):
            for j in (0, 1):
                mixed[i][j] = sum(pu[l] * per_u[l][i][j] for l in range(len(f.u)))
        by_context.append(tuple(per_u))
        by_stratum.append(tuple(tuple(row) for row in mixed))
    return ExactRiskTable(
        c_values=f.c.values,
        u_values=f.u.values,
        by_stratum=tuple(by_stratum),
        by_context=tuple(by_context),
        p_u_given_c=scenario.p_u_given_c,
    )


def _split_indices(block: ValueSet, dom: VariableDomain) -> tuple[tuple, tuple]:
    inside = set(block.indices(dom))
    outside = tuple(i for i in range(len(dom)) if i not in inside)
    if not outside:
        raise DegenerateDichotomizationError(
            f"block on {block.variable!r} covers the whole domain"
        )
    return (outside, tuple(sorted(inside)))


def observational_event_risk(scenario: Scenario, a_value, b_value, c_value):
    """P(event | A=a, B=b, C=c) under the observational regime, via the full joint.

    Enumerates the joint law over (a, b, c, u) and conditions — a different
    computational route from :func:`interventional_event_risk`, used to
    check regime invariance by exact enumeration.
    """
    if not scenario.observational:
        raise UsageError("observational risk requires the observational regime")
    f = scenario.response
    ai, bi, ci = f.a.index(a_value), f.b.index(b_value), f.c.index(c_value)
    num = 0
    den = 0
    for l in range(len(f.u)):
        mass = (
            scenario.p_c[ci]
            * scenario.p_u_given_c[ci][l]
            * scenario.p_a_given_c[ci][ai]
            * scenario.p_b_given_c[ci][bi]
        )
        den = den + mass
        if f.table[ai, bi, ci, l]:
            num = num + mass
    if den == 0:
        raise DegenerateDichotomizationError(
            f"configuration (a={a_value!r}, b={b_value!r}, c={c_value!r}) has probability 0"
        )
    return num / den


def interventional_event_risk(scenario: Scenario, a_value, b_value, c_value):
    """P(event | C=c) under the regime forcing (A, B) = (a, b): mix f over P(u|c)."""
    f = scenario.response
    ai, bi, ci = f.a.index(a_value), f.b.index(b_value), f.c.index(c_value)
    return sum(
        scenario.p_u_given_c[ci][l]
        for l in range(len(f.u))
        if f.table[ai, bi, ci, l]
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_dataset(scenario: Scenario, n: int, seed: int | None = None) -> Dataset:
    """Draw n i.i.d. individuals; the outcome always flows through the response table.

    Under an interventional regime the factor columns are constant at the
    forced values; context variables are drawn from their law either way.
    Deterministic for a fixed seed.
    """
    if n < 1:
        raise UsageError("need n >= 1")
    f = scenario.response
    rng = np.random.default_rng(seed)

    p_c = np.array([float(p) for p in scenario.p_c])
    ci = rng.choice(len(f.c), size=n, p=p_c / p_c.sum())
    ui = np.empty(n, dtype=np.int64)
    ai = np.empty(n, dtype=np.int64)
    bi = np.empty(n, dtype=np.int64)
    for k in range(len(f.c)):
        mask = ci == k
        m = int(mask.sum())
        if m == 0:
            continue
        pu = np.array([float(p) for p in scenario.p_u_given_c[k]])
        ui[mask] = rng.choice(len(f.u), size=m, p=pu / pu.sum())
        if scenario.observational:
            pa = np.array([float(p) for p in scenario.p_a_given_c[k]])
            pb = np.array([float(p) for p in scenario.p_b_given_c[k]])
            ai[mask] = rng.choice(len(f.a), size=m, p=pa / pa.sum())
            bi[mask] = rng.choice(len(f.b), size=m, p=pb / pb.sum())
    if not scenario.observational:
        a_val, b_val = scenario.regime
        ai[:] = f.a.index(a_val)
        bi[:] = f.b.index(b_val)
    y = f.table[ai, bi, ci, ui].astype(np.int64)

    def levels(dom, idx):
        return np.asarray(dom.values, dtype=object)[idx]

    names = [f.a.name, f.b.name, f.c.name, f.u.name]
    if len(set(names)) != 4 or "Y" in names:
        raise UsageError("scenario domains must have distinct names != 'Y'")
    frame = pd.DataFrame(
        {
            f.a.name: levels(f.a, ai),
            f.b.name: levels(f.b, bi),
            f.c.name: levels(f.c, ci),
            f.u.name: levels(f.u, ui),
            "Y": y,
        }
    )
    types = {name: "ordinal" for name in names}
    types["Y"] = "binary"
    return Dataset(frame, types, "Y")


# ---------------------------------------------------------------------------
# randomized soundness experiment
# ---------------------------------------------------------------------------

ScenarioSource = Callable[[np.random.Generator], tuple[Scenario, ValueSet, ValueSet]]


def random_monotone_scenario(
    rng: np.random.Generator,
) -> tuple[Scenario, ValueSet, ValueSet]:
    """A random scenario whose response is non-decreasing in both factors.

    Each (c, u) slice is a random staircase: level a produces the event from
    a random b-threshold upward, thresholds non-increasing in a — so
    monotonicity holds by construction rather than by rejection.  All
    probabilities are small rationals (exact arithmetic downstream), every
    level has positive mass, and the dichotomization blocks are the top
    singletons of each factor.
    """
    n_a = int(rng.integers(2, 5))
    n_b = int(rng.integers(2, 5))
    n_c = int(rng.integers(1, 3))
    n_u = int(rng.integers(1, 4))
    dom_a = VariableDomain("A", tuple(range(n_a)))
    dom_b = VariableDomain("B", tuple(range(n_b)))
    dom_c = VariableDomain("C", tuple(range(n_c)))
    dom_u = VariableDomain("U", tuple(range(n_u)))

    table = np.zeros((n_a, n_b, n_c, n_u), dtype=np.uint8)
    for k in range(n_c):
        for l in range(n_u):
            thresholds = np.sort(rng.integers(0, n_b + 1, size=n_a))[::-1]
            for i in range(n_a):
                table[i, thresholds[i] :, k, l] = 1
    response = ResponseFunction(dom_a, dom_b, dom_c, dom_u, table)

    def rational_row(size: int) -> tuple:
        weights = rng.integers(1, 10, size=size)
        total = int(weights.sum())
        return tuple(Fraction(int(w), total) for w in weights)

    scenario = Scenario(
        response=response,
        p_c=rational_row(n_c),
        p_u_given_c=tuple(rational_row(n_u) for _ in range(n_c)),
        p_a_given_c=tuple(rational_row(n_a) for _ in range(n_c)),
        p_b_given_c=tuple(rational_row(n_b) for _ in range(n_c)),
    )
    alpha = ValueSet("A", (n_a - 1,), threshold=n_a - 2)
    beta = ValueSet("B", (n_b - 1,), threshold=n_b - 2)
    return scenario, alpha, beta


@dataclass(frozen=True)
class SoundnessReport:
    """Outcome of the randomized check that exact S > 0 always implies interference."""

    trials: int
    skipped: int
    skip_reasons: tuple[tuple[str, int], ...]
    positive_strata: int
    trials_with_positive: int
    confirmed: int
    counterexamples: tuple[dict, ...]
    seed: int | None
    workers: int

    @property
    def sound(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict:
        # the worker count is an execution detail: results are identical for
        # any partitioning, so it is deliberately absent from the payload
        return {
            "trials": self.trials,
            "skipped": self.skipped,
            "skip_reasons": {r: n for r, n in self.skip_reasons},
            "positive_strata": self.positive_strata,
            "trials_with_positive": self.trials_with_positive,
            "confirmed": self.confirmed,
            "counterexamples": list(self.counterexamples),
            "sound": self.sound,
            "seed": self.seed,
        }


def soundness_experiment(
    trials: int,
    seed: int | None = None,
    source: ScenarioSource | None = None,
    workers: int = 1,
) -> SoundnessReport:
    """Generate scenarios, compute exact S per stratum, confirm every positive.

    For each trial: verify the monotone-in-both-factors precondition and the
    two insensitivity side conditions (singleton blocks hold trivially);
    scenarios violating a precondition are skipped with a counted reason.
    Wherever the exact excess contrast is strictly positive, the brute-force
    checker must find interference in each direction licensed by the
    corresponding insensitivity, and a replayable block witness must exist
    in some context of that stratum.  Any failure is recorded as a
    counterexample; strata with S <= 0 support no claim and are ignored.

    Per-trial RNG streams are spawned from the master seed up front and
    results are aggregated by trial index, so the report is identical for
    any worker count.
    """
    if trials < 1:
        raise UsageError("need at least one trial")
    src = source or random_monotone_scenario
    child_seeds = np.random.SeedSequence(seed).spawn(trials)

    def one(k: int) -> dict:
        rng = np.random.default_rng(child_seeds[k])
        scenario, alpha, beta = src(rng)
        f = scenario.response
        mon_a = check_monotonicity(f, "A")
        mon_b = check_monotonicity(f, "B")
        if mon_a is Monotonicity.NONE or mon_b is Monotonicity.NONE:
            return {"skip": "non-monotone response"}
        alpha_ok = check_alpha_insensitivity(f, "A", alpha)
        beta_ok = check_alpha_insensitivity(f, "B", beta)
        if not alpha_ok and not beta_ok:
            return {"skip": "no insensitivity side condition"}
        table = exact_risk(scenario, alpha, beta)
        out = {"positives": 0, "confirmed": 0, "counterexamples": []}
        for c_value in f.c.values:
            s = table.excess(c_value)
            if not s > 0:
                continue
            out["positives"] += 1
            problems = []
            if alpha_ok:
                interferes, _ = check_interference(f, "B")
                if not interferes:
                    problems.append("B does not interfere with A")
            if beta_ok:
                interferes, _ = check_interference(f, "A")
                if not interferes:
                    problems.append("A does not interfere with B")
            witness = _positive_context_witness(f, alpha, beta, table, c_value)
            if witness is None:
                problems.append("no replayable block witness in any positive context")
            if problems:
                out["counterexamples"].append(
                    {
                        "trial": k,
                        "stratum": c_value,
                        "excess": float(s),
                        "problems": problems,
                    }
                )
            else:
                out["confirmed"] += 1
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(k) for k in range(trials)]

    skip_counter: Counter = Counter()
    positive_strata = 0
    trials_with_positive = 0
    confirmed = 0
    counterexamples: list[dict] = []
    skipped = 0
    for res in results:
        if "skip" in res:
            skipped += 1
            skip_counter[res["skip"]] += 1
            continue
        positive_strata += res["positives"]
        confirmed += res["confirmed"]
        if res["positives"]:
            trials_with_positive += 1
        counterexamples.extend(res["counterexamples"])
    return SoundnessReport(
        trials=trials,
        skipped=skipped,
        skip_reasons=tuple(sorted(skip_counter.items())),
        positive_strata=positive_strata,
        trials_with_positive=trials_with_positive,
        confirmed=confirmed,
        counterexamples=tuple(counterexamples),
        seed=seed,
        workers=workers,
    )


def _positive_context_witness(
    f: ResponseFunction,
    alpha: ValueSet,
    beta: ValueSet,
    table: ExactRiskTable,
    c_value,
) -> BlockWitness | None:
    """A replayable block witness from some context with positive contextual excess.

    A strictly positive stratum excess is a P(u|c)-mixture of contextual
    excesses, so at least one context must be strictly positive; the level
    tuple extracted there must replay through the table.
    """
    for u_value in f.u.values:
        if table.excess_in_context(c_value, u_value) > 0:
            witness = block_contrast_witness(f, alpha, beta, (c_value, u_value))
            if witness is not None and witness.replay(f):
                return witness
    return None

"""Deterministic response functions on finite grids, and exact structural checks.

The model: a binary outcome is a total function ``f(a, b, c, u) -> {0, 1}``
of two causal factors A and B and a context split into an observed part C
and an unobserved part U.  Everything here is decided by exhaustive
enumeration over the grid, so the answers are exact for the grid supplied;
discretizing a continuous factor is the caller's modelling decision and
the resolution is an explicit input, never inferred.

Conventions used throughout:

* A *context* is a pair ``(c, u)`` of level values.
* ``target``/``actor`` arguments are the strings ``"A"`` or ``"B"``.
* Dichotomization blocks are *upper* sets of an ordered domain
  (threshold form ``{v : v > tau}``); ties at the threshold fall in the
  complement.
* All objects are immutable after construction and all operations are
  pure, so concurrent read-only use is safe.

Coaction "to prevent" is deliberately not a separate API: apply
:func:`negate_outcome` and query the production direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InputFormatError

Level = Any  # a domain level: int, float, or string label


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariableDomain:
    """A named finite domain whose level order is the list order."""

    name: str
    values: tuple[Level, ...]
    ordered: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise DomainError(f"domain {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise DomainError(f"domain {self.name!r} has duplicate values")

    def __len__(self) -> int:
        return len(self.values)

    def index(self, value: Level) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise DomainError(
                f"{value!r} is not a level of domain {self.name!r}"
            ) from None


@dataclass(frozen=True)
class ResponseFunction:
    """Tabulated deterministic map ``(a, b, c, u) -> {0, 1}``.

    ``table[i, j, k, l]`` is the outcome at the i-th level of A, j-th of B,
    k-th of C and l-th of U.  The table is stored C-contiguous ``uint8``
    and frozen, which is exactly the layout the scan kernels require.
    """

    a: VariableDomain
    b: VariableDomain
    c: VariableDomain
    u: VariableDomain
    table: np.ndarray

    def __post_init__(self) -> None:
        tbl = np.ascontiguousarray(self.table, dtype=np.uint8)
        shape = (len(self.a), len(self.b), len(self.c), len(self.u))
        if tbl.shape != shape:
            raise DomainError(
                f"table shape {tbl.shape} does not match domains {shape}"
            )
        if not np.isin(tbl, (0, 1)).all():
            raise DomainError("table entries must be 0 or 1")
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)

    @classmethod
    def from_callable(
        cls,
        a: VariableDomain,
        b: VariableDomain,
        c: VariableDomain,
        u: VariableDomain,
        fn: Callable[[Level, Level, Level, Level], int],
    ) -> "ResponseFunction":
        tbl = np.empty((len(a), len(b), len(c), len(u)), dtype=np.uint8)
        for i, av in enumerate(a.values):
            for j, bv in enumerate(b.values):
                for k, cv in enumerate(c.values):
                    for l, uv in enumerate(u.values):
                        tbl[i, j, k, l] = 1 if fn(av, bv, cv, uv) else 0
        return cls(a, b, c, u, tbl)

    def value(self, av: Level, bv: Level, cv: Level, uv: Level) -> int:
        return int(
            self.table[
                self.a.index(av), self.b.index(bv), self.c.index(cv), self.u.index(uv)
            ]
        )

    __call__ = value

    def domain(self, target: str) -> VariableDomain:
        return self.a if _axis(target) == 0 else self.b

    def contexts(self) -> Iterable[tuple[Level, Level]]:
        for cv in self.c.values:
            for uv in self.u.values:
                yield (cv, uv)

    # -- file format --------------------------------------------------------
    # {"domains": {<name>: [levels], ... 4 entries in (a, b, c, u) order},
    #  "table": [flat row-major 0/1]}

    def to_json_obj(self) -> dict:
        return {
            "domains": {
                d.name: list(d.values) for d in (self.a, self.b, self.c, self.u)
            },
            "table": [int(x) for x in self.table.reshape(-1)],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ResponseFunction":
        try:
            domains = obj["domains"]
            flat = obj["table"]
        except (KeyError, TypeError):
            raise InputFormatError(
                "response function JSON needs 'domains' and 'table'"
            ) from None
        if len(domains) != 4:
            raise InputFormatError(
                "'domains' must list exactly four variables in (A, B, C, U) order"
            )
        doms = [VariableDomain(name, tuple(vals)) for name, vals in domains.items()]
        size = 1
        for d in doms:
            size *= len(d)
        if len(flat) != size:
            raise InputFormatError(
                f"'table' has {len(flat)} entries, expected {size}"
            )
        tbl = np.asarray(flat, dtype=np.uint8).reshape(
            len(doms[0]), len(doms[1]), len(doms[2]), len(doms[3])
        )
        return cls(doms[0], doms[1], doms[2], doms[3], tbl)

    @classmethod
    def from_json_file(cls, path) -> "ResponseFunction":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_json_obj(obj)


@dataclass(frozen=True)
class ValueSet:
    """A subset of one variable's levels, optionally in threshold form."""

    variable: str
    members: tuple[Level, ...]
    threshold: Level | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise DomainError(f"value set on {self.variable!r} is empty")

    @classmethod
    def above(cls, domain: VariableDomain, tau: Level) -> "ValueSet":
        """Upper block ``{v : v > tau}``; ties at tau go to the complement."""
        members = tuple(v for v in domain.values if v > tau)
        if not members:
            raise DomainError(
                f"threshold {tau!r} leaves no levels of {domain.name!r} above it"
            )
        return cls(domain.name, members, threshold=tau)

    def indices(self, domain: VariableDomain) -> tuple[int, ...]:
        return tuple(sorted(domain.index(v) for v in self.members))

    def complement(self, domain: VariableDomain) -> tuple[Level, ...]:
        return tuple(v for v in domain.values if v not in self.members)

    def is_upper_block(self, domain: VariableDomain) -> bool:
        idx = self.indices(domain)
        return idx == tuple(range(len(domain) - len(idx), len(domain)))

    def describe(self) -> dict:
        """Compact description for reports: threshold form when available."""
        if self.threshold is not None:
            return {"variable": self.variable, "threshold": self.threshold}
        return {"variable": self.variable, "members": list(self.members)}


class PatternClass(str, Enum):
    """The three-way partition of the sixteen 2x2 Boolean patterns."""

    IRRELEVANCE = "irrelevance"
    DISJUNCTIVE = "disjunctive"
    INTERDEPENDENT = "interdependent"


class Monotonicity(str, Enum):
    NON_DECREASING = "non_decreasing"
    NON_INCREASING = "non_increasing"
    CONSTANT = "constant"
    NONE = "none"


@dataclass(frozen=True)
class InterferenceWitness:
    """Replayable evidence that ``actor`` interferes with the other factor.

    In context ``(c, u)``: setting the actor to ``forcing`` pins the outcome
    to 0 for every partner value, while at actor value ``relevance_anchor``
    the two partner values in ``relevance_pair`` give different outcomes.
    """

    actor: str
    c: Level
    u: Level
    forcing: Level
    relevance_anchor: Level
    relevance_pair: tuple[Level, Level]

    def replay(self, f: ResponseFunction) -> bool:
        if self.actor == "A":
            forced = all(
                f.value(self.forcing, bv, self.c, self.u) == 0 for bv in f.b.values
            )
            lo, hi = self.relevance_pair
            varies = f.value(self.relevance_anchor, lo, self.c, self.u) != f.value(
                self.relevance_anchor, hi, self.c, self.u
            )
        else:
            forced = all(
                f.value(av, self.forcing, self.c, self.u) == 0 for av in f.a.values
            )
            lo, hi = self.relevance_pair
            varies = f.value(lo, self.relevance_anchor, self.c, self.u) != f.value(
                hi, self.relevance_anchor, self.c, self.u
            )
        return forced and varies

    def to_dict(self) -> dict:
        return {
            "actor": self.actor,
            "c": self.c,
            "u": self.u,
            "forcing": self.forcing,
            "relevance_anchor": self.relevance_anchor,
            "relevance_pair": list(self.relevance_pair),
        }


@dataclass(frozen=True)
class BlockWitness:
    """Level tuple showing both factors matter inside/below their blocks.

    In context ``(c, u)``: ``a_hit`` (in the A block) produces the event at
    ``b_hit`` (in the B block) but not at ``b_miss`` (below it); ``a_hit2``
    (in the A block) produces the event at ``b_hit2`` (in the B block) while
    ``a_miss`` (below the A block) does not.
    """

    c: Level
    u: Level
    a_hit: Level
    b_hit: Level
    b_miss: Level
    a_hit2: Level
    b_hit2: Level
    a_miss: Level

    def replay(self, f: ResponseFunction) -> bool:
        return (
            f.value(self.a_hit, self.b_hit, self.c, self.u) == 1
            and f.value(self.a_hit, self.b_miss, self.c, self.u) == 0
            and f.value(self.a_hit2, self.b_hit2, self.c, self.u) == 1
            and f.value(self.a_miss, self.b_hit2, self.c, self.u) == 0
        )

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "u": self.u,
            "a_hit": self.a_hit,
            "b_hit": self.b_hit,
            "b_miss": self.b_miss,
            "a_hit2": self.a_hit2,
            "b_hit2": self.b_hit2,
            "a_miss": self.a_miss,
        }


@dataclass(frozen=True)
class CoactionVerdict:
    """Interference each way plus the derived weak/strong conclusions."""

    a_interferes_with_b: bool
    b_interferes_with_a: bool
    weak: bool
    strong: bool
    witnesses: tuple[InterferenceWitness, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.weak != (self.a_interferes_with_b or self.b_interferes_with_a):
            raise ValueError("weak flag inconsistent with interference flags")
        if self.strong != (self.a_interferes_with_b and self.b_interferes_with_a):
            raise ValueError("strong flag inconsistent with interference flags")

    def to_dict(self) -> dict:
        return {
            "a_interferes_with_b": self.a_interferes_with_b,
            "b_interferes_with_a": self.b_interferes_with_a,
            "weak": self.weak,
            "strong": self.strong,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _axis(target: str) -> int:
    if target == "A":
        return 0
    if target == "B":
        return 1
    raise DomainError(f"target must be 'A' or 'B', got {target!r}")


def check_irrelevance(
    f: ResponseFunction, target: str, context: tuple[Level, Level]
) -> bool:
    """True iff varying the target never changes the outcome in this context."""
    axis = _axis(target)
    cv, uv = context
    return kernels.is_irrelevant(f.table, axis, f.c.index(cv), f.u.index(uv))


def check_interference(
    f: ResponseFunction, actor: str
) -> tuple[bool, InterferenceWitness | None]:
    """Does ``actor`` interfere with the other factor in producing the event?

    True when some context makes the partner non-irrelevant given the actor
    while some actor value forces the outcome to 0 for every partner value.
    Contexts are scanned lexicographically and the first witness is
    returned, so the output is deterministic.
    """
    axis = _axis(actor)
    hit = kernels.first_interference_witness(f.table, axis)
    if hit is None:
        return False, None
    ci, ui, forcing, anchor, varying = hit
    own = f.a if axis == 0 else f.b
    other = f.b if axis == 0 else f.a
    witness = InterferenceWitness(
        actor=actor,
        c=f.c.values[ci],
        u=f.u.values[ui],
        forcing=own.values[forcing],
        relevance_anchor=own.values[anchor],
        relevance_pair=(other.values[0], other.values[varying]),
    )
    return True, witness


def classify_coaction(f: ResponseFunction) -> CoactionVerdict:
    """Full verdict: interference each way, weak/strong coaction, witnesses."""
    a_int, a_wit = check_interference(f, "A")
    b_int, b_wit = check_interference(f, "B")
    witnesses = tuple(w for w in (a_wit, b_wit) if w is not None)
    return CoactionVerdict(
        a_interferes_with_b=a_int,
        b_interferes_with_a=b_int,
        weak=a_int or b_int,
        strong=a_int and b_int,
        witnesses=witnesses,
    )


def classify_boolean_pattern(
    f: ResponseFunction, context: tuple[Level, Level] | None = None
) -> tuple[int, PatternClass]:
    """Identify the 2x2 Boolean pattern in one context.

    Returns ``(pattern_id, pattern_class)``.  The id in 1..16 encodes the
    truth table read row-major over (a, b), most significant bit first:
    ``id = 1 + 8*f(0,0) + 4*f(0,1) + 2*f(1,0) + f(1,1)`` (indices, not
    level values).  The class is:

    * ``IRRELEVANCE``    — at least one factor is irrelevant;
    * ``DISJUNCTIVE``    — both matter, yet a single value of one factor
      already guarantees the event;
    * ``INTERDEPENDENT`` — both matter and neither factor alone can
      guarantee the event.
    """
    if len(f.a) != 2 or len(f.b) != 2:
        raise DomainError("boolean pattern classification needs |A| = |B| = 2")
    if context is None:
        if len(f.c) != 1 or len(f.u) != 1:
            raise DomainError(
                "context required when the response has more than one (c, u) point"
            )
        ci = ui = 0
    else:
        ci, ui = f.c.index(context[0]), f.u.index(context[1])
    ctx = f.table[:, :, ci, ui]
    bits = int(ctx[0, 0]) * 8 + int(ctx[0, 1]) * 4 + int(ctx[1, 0]) * 2 + int(ctx[1, 1])
    pattern_id = 1 + bits

    a_irrelevant = bool((ctx == ctx[:1, :]).all())
    b_irrelevant = bool((ctx == ctx[:, :1]).all())
    if a_irrelevant or b_irrelevant:
        klass = PatternClass.IRRELEVANCE
    elif ctx.all(axis=1).any() or ctx.all(axis=0).any():
        klass = PatternClass.DISJUNCTIVE
    else:
        klass = PatternClass.INTERDEPENDENT
    return pattern_id, klass


def check_monotonicity(f: ResponseFunction, target: str) -> Monotonicity:
    """Direction of the target's effect, uniform over every (partner, c, u)."""
    axis = _axis(target)
    dom = f.a if axis == 0 else f.b
    if not dom.ordered:
        raise DomainError(f"domain {dom.name!r} is not ordered")
    nondec, noninc = kernels.monotone_flags(f.table, axis)
    if nondec and noninc:
        return Monotonicity.CONSTANT
    if nondec:
        return Monotonicity.NON_DECREASING
    if noninc:
        return Monotonicity.NON_INCREASING
    return Monotonicity.NONE


def check_consistency(f: ResponseFunction, target: str) -> bool:
    """True iff no pair of target levels flips its pointwise order across slices."""
    return kernels.first_consistency_violation(f.table, _axis(target)) is None


def find_monotone_recoding(
    f: ResponseFunction, target: str
) -> tuple[Level, ...] | None:
    """Level order making the target's effect monotone, if one exists.

    Returns the target's level values in an order under which
    :func:`check_monotonicity` is not ``NONE`` (sorted by pointwise
    dominance; ties keep original order), or ``None`` when the effect is
    inconsistent and no reordering can help.
    """
    axis = _axis(target)
    if kernels.first_consistency_violation(f.table, axis) is not None:
        return None
    dom = f.a if axis == 0 else f.b
    work = f.table if axis == 0 else np.moveaxis(f.table, 1, 0)
    sums = work.reshape(work.shape[0], -1).sum(axis=1)
    order = sorted(range(len(dom)), key=lambda i: (int(sums[i]), i))
    return tuple(dom.values[i] for i in order)


def recode_levels(
    f: ResponseFunction, target: str, new_order: Sequence[Level]
) -> ResponseFunction:
    """Reorder the target domain's levels (a bijection) and permute the table."""
    axis = _axis(target)
    dom = f.a if axis == 0 else f.b
    if len(new_order) != len(dom.values) or set(new_order) != set(dom.values):
        raise DomainError(
            f"recoding must be a permutation of domain {dom.name!r}"
        )
    perm = [dom.index(v) for v in new_order]
    tbl = np.take(f.table, perm, axis=axis)
    new_dom = VariableDomain(dom.name, tuple(new_order), dom.ordered)
    if axis == 0:
        return ResponseFunction(new_dom, f.b, f.c, f.u, tbl)
    return ResponseFunction(f.a, new_dom, f.c, f.u, tbl)


def check_alpha_insensitivity(
    f: ResponseFunction, target: str, block: ValueSet
) -> bool:
    """Once the outcome hits 0 inside the upper block, it stays 0 above.

    The block must be the upper block of a threshold dichotomization of the
    (ordered) target domain.  A single-point block is trivially insensitive.
    """
    axis = _axis(target)
    dom = f.a if axis == 0 else f.b
    if block.variable != dom.name:
        raise DomainError(
            f"block is on {block.variable!r} but target domain is {dom.name!r}"
        )
    if not dom.ordered:
        raise DomainError(f"domain {dom.name!r} is not ordered")
    if not block.is_upper_block(dom):
        raise DomainError(
            f"insensitivity needs a threshold (upper) block of {dom.name!r}, "
            f"got {block.members!r}"
        )
    block_start = len(dom) - len(block.members)
    return (
        kernels.first_insensitivity_violation(f.table, axis, block_start) is None
    )


def negate_outcome(f: ResponseFunction) -> ResponseFunction:
    """Swap event and non-event; production queries then answer prevention."""
    return ResponseFunction(f.a, f.b, f.c, f.u, 1 - f.table)


def block_contrast_witness(
    f: ResponseFunction,
    alpha: ValueSet,
    beta: ValueSet,
    context: tuple[Level, Level],
) -> BlockWitness | None:
    """Search one context for the level tuple behind an excess-risk certificate.

    Finds (lexicographically first) ``a_hit`` in the A block producing the
    event at some ``b_hit`` in the B block but not at some ``b_miss`` below
    it, and ``(a_hit2, b_hit2)`` inside the blocks producing the event while
    ``a_miss`` below the A block does not.  Returns ``None`` when no such
    tuple exists in this context.
    """
    ci, ui = f.c.index(context[0]), f.u.index(context[1])
    ctx = f.table[:, :, ci, ui]
    a_in = alpha.indices(f.a)
    a_out = [i for i in range(len(f.a)) if i not in a_in]
    b_in = beta.indices(f.b)
    b_out = [j for j in range(len(f.b)) if j not in b_in]
    if not a_out or not b_out:
        raise DomainError("blocks must leave a non-empty complement")

    first_leg = None
    for i in a_in:
        for j in b_in:
            if ctx[i, j] == 1:
                for j2 in b_out:
                    if ctx[i, j2] == 0:
                        first_leg = (i, j, j2)
                        break
            if first_leg:
                break
        if first_leg:
            break
    second_leg = None
    for i in a_in:
        for j in b_in:
            if ctx[i, j] == 1:
                for i2 in a_out:
                    if ctx[i2, j] == 0:
                        second_leg = (i, j, i2)
                        break
            if second_leg:
                break
        if second_leg:
            break
    if first_leg is None or second_leg is None:
        return None
    return BlockWitness(
        c=context[0],
        u=context[1],
        a_hit=f.a.values[first_leg[0]],
        b_hit=f.b.values[first_leg[1]],
        b_miss=f.b.values[first_leg[2]],
        a_hit2=f.a.values[second_leg[0]],
        b_hit2=f.b.values[second_leg[1]],
        a_miss=f.a.values[second_leg[2]],
    )

"""Augmented DAGs: regime indicators, d-separation, and identifiability checks.

An augmented DAG extends a causal DAG over domain variables with *regime
indicator* nodes, each governing exactly one variable.  A regime node is
not a random variable, but it participates in graphical queries like any
other node, which is what lets one graph encode both the causal structure
and how the system is assumed to behave across observational and
interventional data-collection regimes.

Independence queries are answered by the moralization criterion: restrict
to the ancestral subgraph of the query nodes, marry parents, drop
directions, delete the conditioning set, and test connectivity.  When a
query comes back dependent, :func:`find_active_path` produces the
lexicographically first active path as concrete evidence; the test suite
verifies it against an independent path-blocking checker.

Verified here, per role assignment (A, B, Y, C, U):

* the four core conditions licensing the excess-risk test on
  non-experimental data (condition 1, functionality of the outcome, is a
  user assertion and is surfaced as such — never derived from the graph);
* the two "sufficient covariate" clauses (``C indep sigma`` and
  ``Y indep sigma | (A, B, C)``), which are related but not equivalent;
* the implication "conditions 2 and 3 entail ``Y indep sigma | (A, B, C)``",
  cross-checked on every report and flagged as an internal error if it
  ever failed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import InputFormatError, UsageError

NodeId = str

VARIABLE = "variable"
REGIME = "regime"


@dataclass(frozen=True)
class AdagNode:
    id: NodeId
    kind: str = VARIABLE
    governs: NodeId | None = None

    def __post_init__(self) -> None:
        if self.kind not in (VARIABLE, REGIME):
            raise InputFormatError(f"node {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == REGIME and not self.governs:
            raise InputFormatError(f"regime node {self.id!r} must govern a variable")
        if self.kind == VARIABLE and self.governs is not None:
            raise InputFormatError(f"variable node {self.id!r} cannot govern anything")


@dataclass(frozen=True)
class Adag:
    """Immutable augmented DAG with sorted adjacency for deterministic queries."""

    nodes: tuple[AdagNode, ...]
    edges: tuple[tuple[NodeId, NodeId], ...]
    _parents: dict = field(init=False, repr=False, compare=False)
    _children: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InputFormatError("duplicate node ids")
        known = set(ids)
        parents: dict[NodeId, list[NodeId]] = {i: [] for i in ids}
        children: dict[NodeId, list[NodeId]] = {i: [] for i in ids}
        for src, dst in self.edges:
            if src not in known or dst not in known:
                raise InputFormatError(f"edge ({src!r}, {dst!r}) references unknown node")
            if src == dst:
                raise InputFormatError(f"self-loop on {src!r}")
            parents[dst].append(src)
            children[src].append(dst)
        object.__setattr__(
            self, "_parents", {k: tuple(sorted(v)) for k, v in parents.items()}
        )
        object.__setattr__(
            self, "_children", {k: tuple(sorted(v)) for k, v in children.items()}
        )
        self._validate_acyclic()
        self._validate_regimes()

    def _validate_acyclic(self) -> None:
        indeg = {n.id: len(self._parents[n.id]) for n in self.nodes}
        queue = [i for i, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            n = queue.pop()
            seen += 1
            for ch in self._children[n]:
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    queue.append(ch)
        if seen != len(self.nodes):
            raise InputFormatError("graph contains a directed cycle")

    def _validate_regimes(self) -> None:
        kinds = {n.id: n.kind for n in self.nodes}
        for n in self.nodes:
            if n.kind != REGIME:
                continue
            if kinds.get(n.governs) != VARIABLE:
                raise InputFormatError(
                    f"regime node {n.id!r} governs {n.governs!r}, not a variable"
                )
            if self._parents[n.id]:
                raise InputFormatError(f"regime node {n.id!r} must have in-degree 0")
            if n.governs not in self._children[n.id]:
                raise InputFormatError(
                    f"regime node {n.id!r} has no edge into its variable {n.governs!r}"
                )

    # -- queries -------------------------------------------------------------

    def ids(self) -> tuple[NodeId, ...]:
        return tuple(n.id for n in self.nodes)

    def node(self, node_id: NodeId) -> AdagNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UsageError(f"unknown node {node_id!r}")

    def has(self, node_id: NodeId) -> bool:
        return node_id in self._parents

    def parents(self, node_id: NodeId) -> tuple[NodeId, ...]:
        return self._parents[node_id]

    def children(self, node_id: NodeId) -> tuple[NodeId, ...]:
        return self._children[node_id]

    def regime_of(self, variable: NodeId) -> NodeId | None:
        for n in self.nodes:
            if n.kind == REGIME and n.governs == variable:
                return n.id
        return None

    def variable_ids(self) -> tuple[NodeId, ...]:
        return tuple(n.id for n in self.nodes if n.kind == VARIABLE)

    def ancestors(self, seeds: Iterable[NodeId], inclusive: bool = True) -> set[NodeId]:
        out: set[NodeId] = set()
        stack = list(seeds)
        if inclusive:
            out.update(stack)
        while stack:
            n = stack.pop()
            for p in self._parents[n]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    # -- file format -----------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "kind": n.kind}
                | ({"governs": n.governs} if n.governs else {})
                for n in self.nodes
            ],
            "edges": [{"from": a, "to": b} for a, b in self.edges],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Adag":
        try:
            raw_nodes = obj["nodes"]
            raw_edges = obj["edges"]
        except (KeyError, TypeError):
            raise InputFormatError("graph JSON needs 'nodes' and 'edges'") from None
        nodes = tuple(
            AdagNode(
                id=str(n["id"]),
                kind=n.get("kind", VARIABLE),
                governs=n.get("governs"),
            )
            for n in raw_nodes
        )
        edges = tuple((str(e["from"]), str(e["to"])) for e in raw_edges)
        return cls(nodes, edges)

    @classmethod
    def from_json_file(cls, path) -> "Adag":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_json_obj(obj)


def make_adag(
    variables: Sequence[NodeId],
    edges: Iterable[tuple[NodeId, NodeId]],
    regimes: Mapping[NodeId, NodeId] | None = None,
) -> Adag:
    """Convenience constructor: ``regimes`` maps indicator id -> governed variable."""
    nodes = [AdagNode(v) for v in variables]
    edge_list = list(edges)
    for rid, var in (regimes or {}).items():
        nodes.append(AdagNode(rid, kind=REGIME, governs=var))
        edge_list.append((rid, var))
    return Adag(tuple(nodes), tuple(edge_list))


# ---------------------------------------------------------------------------
# d-separation by moralization
# ---------------------------------------------------------------------------


def _as_idset(g: Adag, nodes: Iterable[NodeId] | NodeId) -> frozenset[NodeId]:
    if isinstance(nodes, str):
        nodes = [nodes]
    out = frozenset(nodes)
    for n in out:
        if not g.has(n):
            raise UsageError(f"unknown node {n!r}")
    return out


def d_separated(
    g: Adag,
    x: Iterable[NodeId] | NodeId,
    y: Iterable[NodeId] | NodeId,
    z: Iterable[NodeId] | NodeId = (),
) -> bool:
    """True iff X and Y are separated given Z in the moralized ancestral graph.

    X, Y, Z must be pairwise disjoint; X or Y empty is vacuously separated.
    Regime indicators may appear in any of the three sets.
    """
    xs, ys, zs = _as_idset(g, x), _as_idset(g, y), _as_idset(g, z)
    if xs & ys or xs & zs or ys & zs:
        raise UsageError("query sets must be pairwise disjoint")
    if not xs or not ys:
        return True

    relevant = g.ancestors(xs | ys | zs)
    adj: dict[NodeId, set[NodeId]] = {n: set() for n in relevant}
    for n in relevant:
        ps = [p for p in g.parents(n) if p in relevant]
        for p in ps:
            adj[n].add(p)
            adj[p].add(n)
        for p1, p2 in itertools.combinations(ps, 2):
            adj[p1].add(p2)
            adj[p2].add(p1)

    # delete Z and test reachability X -> Y
    frontier = list(xs)
    seen = set(xs)
    while frontier:
        n = frontier.pop()
        for m in adj[n]:
            if m in zs or m in seen:
                continue
            if m in ys:
                return False
            seen.add(m)
            frontier.append(m)
    return True


def find_active_path(
    g: Adag,
    x: Iterable[NodeId] | NodeId,
    y: Iterable[NodeId] | NodeId,
    z: Iterable[NodeId] | NodeId = (),
) -> tuple[NodeId, ...] | None:
    """Lexicographically first active path from X to Y given Z, or ``None``.

    Used to attach concrete evidence to every failed independence verdict.
    Paths are enumerated by depth-first search with sorted starts and
    sorted neighbor expansion, so the first active path found is the
    lexicographically smallest one.
    """
    xs, ys, zs = _as_idset(g, x), _as_idset(g, y), _as_idset(g, z)
    if not xs or not ys:
        return None
    anz = g.ancestors(zs)  # nodes with a descendant in Z (inclusive)

    neighbors = {
        n: tuple(sorted(set(g.parents(n)) | set(g.children(n)))) for n in g.ids()
    }
    parent_sets = {n: set(g.parents(n)) for n in g.ids()}

    def path_active(path: tuple[NodeId, ...]) -> bool:
        for k in range(1, len(path) - 1):
            prev_in = path[k - 1] in parent_sets[path[k]]
            next_in = path[k + 1] in parent_sets[path[k]]
            if prev_in and next_in:  # collider
                if path[k] not in anz:
                    return False
            elif path[k] in zs:
                return False
        return True

    def dfs(path: list[NodeId], on_path: set[NodeId]):
        node = path[-1]
        if node in ys:
            candidate = tuple(path)
            if path_active(candidate):
                return candidate
            return None  # do not extend past an endpoint
        for m in neighbors[node]:
            if m in on_path or m in xs:
                continue
            path.append(m)
            on_path.add(m)
            found = dfs(path, on_path)
            if found is not None:
                return found
            on_path.discard(m)
            path.pop()
        return None

    for start in sorted(xs):
        found = dfs([start], {start})
        if found is not None:
            return found
    return None


# ---------------------------------------------------------------------------
# role assignments and condition reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoleAssignment:
    """Which nodes play A, B, Y, C, U; condition 1 is a caller assertion."""

    a: NodeId
    b: NodeId
    y: NodeId
    c: frozenset[NodeId] = frozenset()
    u: frozenset[NodeId] = frozenset()
    asserted_functional: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", frozenset(self.c))
        object.__setattr__(self, "u", frozenset(self.u))

    def validate(self, g: Adag) -> None:
        singles = [self.a, self.b, self.y]
        if len(set(singles)) != 3:
            raise UsageError("A, B, Y must be three distinct nodes")
        pooled = set(singles) | self.c | self.u
        if len(pooled) != 3 + len(self.c) + len(self.u) or self.c & self.u:
            raise UsageError("role sets must be disjoint")
        for n in pooled:
            if not g.has(n):
                raise UsageError(f"unknown node {n!r}")
            if g.node(n).kind != VARIABLE:
                raise UsageError(f"regime indicator {n!r} cannot take a role")
        if g.regime_of(self.a) is None or g.regime_of(self.b) is None:
            raise UsageError("A and B must each have a regime indicator")
        if g.regime_of(self.y) is not None:
            raise UsageError("Y must not have a regime indicator")

    def sigma(self, g: Adag) -> frozenset[NodeId]:
        return frozenset({g.regime_of(self.a), g.regime_of(self.b)})


HOLDS = "holds"
FAILS = "fails"
ASSERTED_ONLY = "asserted-only"


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    statement: str
    status: str
    asserted: bool | None = None
    blocking_path: tuple[NodeId, ...] | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "statement": self.statement, "status": self.status}
        if self.asserted is not None:
            out["asserted"] = self.asserted
        if self.blocking_path is not None:
            out["blocking_path"] = list(self.blocking_path)
        return out


@dataclass(frozen=True)
class ConditionReport:
    conditions: tuple[ConditionVerdict, ...]
    corollary: ConditionVerdict
    consistent: bool

    def condition(self, number: int) -> ConditionVerdict:
        return self.conditions[number - 1]

    def graph_conditions_hold(self) -> bool:
        """Conditions 2-4 (the graph-derivable ones) all hold."""
        return all(v.status == HOLDS for v in self.conditions[1:])

    def to_dict(self) -> dict:
        return {
            "conditions": [v.to_dict() for v in self.conditions],
            "corollary": self.corollary.to_dict(),
            "consistent": self.consistent,
        }


def _graph_verdict(
    g: Adag,
    name: str,
    statement: str,
    x: Iterable[NodeId],
    y: Iterable[NodeId],
    z: Iterable[NodeId],
) -> ConditionVerdict:
    if d_separated(g, x, y, z):
        return ConditionVerdict(name, statement, HOLDS)
    return ConditionVerdict(
        name, statement, FAILS, blocking_path=find_active_path(g, x, y, z)
    )


def check_core_conditions(g: Adag, roles: RoleAssignment) -> ConditionReport:
    """Verdict on the four core conditions plus the implied-invariance cross-check.

    Condition 1 (the outcome is a deterministic function of A, B, C, U,
    identical across regimes) cannot be read off a graph; it is echoed as
    asserted or not asserted, exactly as supplied by the caller.
    """
    roles.validate(g)
    sigma = roles.sigma(g)
    ab = {roles.a, roles.b}

    cond1 = ConditionVerdict(
        "functionality",
        f"{roles.y} = f({roles.a}, {roles.b}, C, U), identical across regimes",
        ASSERTED_ONLY,
        asserted=roles.asserted_functional,
    )
    cond2 = _graph_verdict(
        g,
        "regime invariance given full context",
        f"{roles.y} indep sigma | ({roles.a}, {roles.b}, C, U)",
        {roles.y},
        sigma,
        ab | roles.c | roles.u,
    )
    cond3 = _graph_verdict(
        g,
        "context independence",
        f"U indep ({roles.a}, {roles.b}, sigma) | C",
        roles.u,
        ab | sigma,
        roles.c,
    )
    cond4 = _graph_verdict(
        g,
        "factor independence",
        f"{roles.a} indep {roles.b} | (C, sigma)",
        {roles.a},
        {roles.b},
        roles.c | sigma,
    )
    corollary = _graph_verdict(
        g,
        "regime invariance given observables",
        f"{roles.y} indep sigma | ({roles.a}, {roles.b}, C)",
        {roles.y},
        sigma,
        ab | roles.c,
    )
    consistent = not (
        cond2.status == HOLDS and cond3.status == HOLDS and corollary.status != HOLDS
    )
    return ConditionReport((cond1, cond2, cond3, cond4), corollary, consistent)


@dataclass(frozen=True)
class SufficientCovariateResult:
    holds: bool
    failed_clause: int | None = None  # 1: C indep sigma, 2: Y indep sigma | (A,B,C)
    blocking_path: tuple[NodeId, ...] | None = None

    def to_dict(self) -> dict:
        out: dict = {"holds": self.holds}
        if self.failed_clause is not None:
            out["failed_clause"] = self.failed_clause
        if self.blocking_path is not None:
            out["blocking_path"] = list(self.blocking_path)
        return out


def check_sufficient_covariate(
    g: Adag, roles: RoleAssignment, candidate: Iterable[NodeId]
) -> SufficientCovariateResult:
    """Is the candidate set a sufficient covariate for the joint effects on Y?

    Two clauses: the candidate is independent of the regime indicators, and
    the outcome is independent of the regime indicators given (A, B,
    candidate).  Reports the first clause that fails, with an active path.
    """
    cand = frozenset(candidate)
    if cand & {roles.a, roles.b, roles.y}:
        raise UsageError("candidate C must be disjoint from A, B, Y")
    roles.validate(g)
    sigma = roles.sigma(g)
    if cand and not d_separated(g, cand, sigma, ()):
        return SufficientCovariateResult(
            False, 1, find_active_path(g, cand, sigma, ())
        )
    given = {roles.a, roles.b} | cand
    if not d_separated(g, {roles.y}, sigma, given):
        return SufficientCovariateResult(
            False, 2, find_active_path(g, {roles.y}, sigma, given)
        )
    return SufficientCovariateResult(True)


def search_admissible_c(
    g: Adag,
    roles: RoleAssignment,
    pool: Iterable[NodeId],
    max_pool: int = 12,
) -> list[tuple[NodeId, ...]]:
    """All subsets of the pool under which graph conditions 2-4 hold.

    Exhaustive over the pool's power set, smallest sets first (ties broken
    lexicographically).  The fixed U role is kept as supplied; pool members
    must be unassigned variable nodes.
    """
    pool_t = tuple(sorted(set(pool)))
    if len(pool_t) > max_pool:
        raise UsageError(
            f"pool of {len(pool_t)} exceeds the cap of {max_pool} (2^n subsets)"
        )
    taken = {roles.a, roles.b, roles.y} | roles.u
    for n in pool_t:
        if not g.has(n):
            raise UsageError(f"unknown node {n!r}")
        if n in taken or g.node(n).kind != VARIABLE:
            raise UsageError(f"pool member {n!r} is not an assignable variable")
    admissible: list[tuple[NodeId, ...]] = []
    for size in range(len(pool_t) + 1):
        for subset in itertools.combinations(pool_t, size):
            candidate_roles = replace(roles, c=frozenset(subset))
            if check_core_conditions(g, candidate_roles).graph_conditions_hold():
                admissible.append(subset)
    return admissible

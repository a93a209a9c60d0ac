"""Shared fixtures: the worked examples and random-structure generators."""

import numpy as np
import pytest

from coact.adag import Adag, RoleAssignment, make_adag
from coact.mechanism import ResponseFunction, VariableDomain

SINGLETON_C = VariableDomain("C", (0,))
SINGLETON_U = VariableDomain("U", (0,))


def singleton_context_function(table_2d, a_values=None, b_values=None) -> ResponseFunction:
    """A response function over one (c, u) point from a 2-D array."""
    table = np.asarray(table_2d, dtype=np.uint8)[:, :, np.newaxis, np.newaxis]
    a_values = tuple(a_values) if a_values else tuple(range(table.shape[0]))
    b_values = tuple(b_values) if b_values else tuple(range(table.shape[1]))
    return ResponseFunction(
        VariableDomain("A", a_values),
        VariableDomain("B", b_values),
        SINGLETON_C,
        SINGLETON_U,
        table,
    )


def boolean_pattern(f00, f01, f10, f11) -> ResponseFunction:
    """One of the sixteen 2x2 patterns (indices: f[a][b])."""
    return singleton_context_function([[f00, f01], [f10, f11]])


ALL_16_PATTERNS = [
    (bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1) for bits in range(16)
]


@pytest.fixture
def logical_example() -> ResponseFunction:
    """A in {0,1,2}, B in {0,1}: event iff A==2, or A==1 and B==1."""
    return ResponseFunction.from_callable(
        VariableDomain("A", (0, 1, 2)),
        VariableDomain("B", (0, 1)),
        SINGLETON_C,
        SINGLETON_U,
        lambda a, b, c, u: (a == 2) or (a == 1 and b == 1),
    )


# Switch circuit: two A-switches in the layout (series A2) -> (A1 parallel B)
# -> (series U); the event is "current flows".  A's four configurations are
# encoded in increasing closed-switch count: none < a1 only < a2 only < both.
CIRCUIT_A_LEVELS = ("none", "a1", "a2", "both")


@pytest.fixture
def circuit_example() -> ResponseFunction:
    def current(a, b, c, u):
        a1_closed = a in ("a1", "both")
        a2_closed = a in ("a2", "both")
        b_closed = b == "closed"
        u_closed = u == "closed"
        return a2_closed and (a1_closed or b_closed) and u_closed

    return ResponseFunction.from_callable(
        VariableDomain("A", CIRCUIT_A_LEVELS),
        VariableDomain("B", ("open", "closed")),
        VariableDomain("C", (0,)),
        VariableDomain("U", ("open", "closed")),
        current,
    )


# ---------------------------------------------------------------------------
# worked-example graphs
# ---------------------------------------------------------------------------


def fig1b() -> Adag:
    return make_adag(
        ["V", "Y", "A", "B"],
        [("V", "Y"), ("A", "Y"), ("B", "Y")],
        {"sigma_A": "A", "sigma_B": "B"},
    )


def fig1c() -> Adag:
    return make_adag(
        ["V", "Y", "A", "B"],
        [("V", "Y"), ("A", "Y"), ("B", "Y"), ("A", "B")],
        {"sigma_A": "A", "sigma_B": "B"},
    )


def fig3a() -> Adag:
    return make_adag(
        ["U", "Y", "A", "B", "Z"],
        [("U", "Y"), ("A", "Y"), ("B", "Y"), ("Z", "U"), ("Z", "A"), ("Z", "B")],
        {"sigma_A": "A", "sigma_B": "B"},
    )


def fig3b() -> Adag:
    return make_adag(
        ["U", "Y", "A", "B"],
        [("U", "Y"), ("U", "A"), ("A", "Y"), ("B", "Y")],
        {"sigma_A": "A", "sigma_B": "B"},
    )


def fig3c() -> Adag:
    return make_adag(
        ["U", "Y", "Z", "A", "B"],
        [("U", "Y"), ("Z", "Y"), ("A", "Y"), ("B", "Y"), ("A", "Z")],
        {"sigma_A": "A", "sigma_B": "B"},
    )


def fig3d() -> Adag:
    base = fig3c()
    return Adag(base.nodes, base.edges + (("U", "Z"),))


def roles_v(**kwargs) -> RoleAssignment:
    return RoleAssignment("A", "B", "Y", u=frozenset({"V"}), **kwargs)


def roles_u(c=(), **kwargs) -> RoleAssignment:
    return RoleAssignment("A", "B", "Y", c=frozenset(c), u=frozenset({"U"}), **kwargs)


# ---------------------------------------------------------------------------
# random structures
# ---------------------------------------------------------------------------


def random_dag(rng: np.random.Generator, max_nodes: int = 8) -> Adag:
    n = int(rng.integers(3, max_nodes + 1))
    names = [f"v{i}" for i in range(n)]
    order = rng.permutation(n)
    edges = []
    p = rng.uniform(0.2, 0.5)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((names[order[i]], names[order[j]]))
    return make_adag(names, edges)


def random_adag_with_roles(rng: np.random.Generator) -> tuple[Adag, RoleAssignment]:
    """A random ADAG plus roles: A, B, Y distinct; leftovers split over C/U/neither."""
    n = int(rng.integers(4, 8))
    names = [f"v{i}" for i in range(n)]
    order = rng.permutation(n)
    p = rng.uniform(0.2, 0.5)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((names[order[i]], names[order[j]]))
    a, b, y = (names[k] for k in rng.choice(n, size=3, replace=False))
    g = make_adag(names, edges, {"sigma_A": a, "sigma_B": b})
    c, u = set(), set()
    for name in names:
        if name in (a, b, y):
            continue
        bucket = rng.integers(0, 3)
        if bucket == 0:
            c.add(name)
        elif bucket == 1:
            u.add(name)
    roles = RoleAssignment(a, b, y, c=frozenset(c), u=frozenset(u))
    return g, roles


def random_disjoint_sets(rng: np.random.Generator, g: Adag):
    """Random disjoint (X, Y, Z) over the graph's nodes; X and Y non-empty."""
    ids = list(g.ids())
    rng.shuffle(ids)
    nx = int(rng.integers(1, 3))
    ny = int(rng.integers(1, 3))
    nz = int(rng.integers(0, min(4, max(1, len(ids) - nx - ny) + 1)))
    if nx + ny + nz > len(ids):
        nz = len(ids) - nx - ny
    x = ids[:nx]
    y = ids[nx : nx + ny]
    z = ids[nx + ny : nx + ny + nz]
    return x, y, z


def random_table(rng: np.random.Generator, max_side: int = 4) -> ResponseFunction:
    shape = tuple(int(rng.integers(1, max_side + 1)) for _ in range(4))
    if shape[0] < 2:
        shape = (2,) + shape[1:]
    if shape[1] < 2:
        shape = (shape[0], 2) + shape[2:]
    table = rng.integers(0, 2, size=shape, dtype=np.uint8)
    return ResponseFunction(
        VariableDomain("A", tuple(range(shape[0]))),
        VariableDomain("B", tuple(range(shape[1]))),
        VariableDomain("C", tuple(range(shape[2]))),
        VariableDomain("U", tuple(range(shape[3]))),
        table,
    )

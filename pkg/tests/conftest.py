"""Shared fixture builders.

Plain functions (importable from acceptance tests and scripts) plus a few
pytest fixtures wrapping them.  The numeric expectations frozen in the test
suite for these objects were derived by hand before the engine existed; see
the assertions where they are used.
"""

import random
from fractions import Fraction

import pytest

from cprings.graphalg import Edge, FiniteGraph, cycle_graph, line_graph, rose_graph
from cprings.rsystem import (
    Pairing,
    RSystem,
    StructuredBimodule,
    StructuredRing,
    build_automorphism_system,
    build_graph_system,
)
from cprings.exactlin import unit_vec, zero_vec

F = Fraction


def a2_graph() -> FiniteGraph:
    return FiniteGraph(["u", "v"], [Edge("e", "u", "v")], name="a2")


def three_vertex_two_cycle() -> FiniteGraph:
    # a <-> b two-cycle, plus a sink hanging off a
    return FiniteGraph(
        ["a", "b", "c"],
        [Edge("e_ab", "a", "b"), Edge("e_ba", "b", "a"), Edge("e_ac", "a", "c")],
        name="3v2c",
    )


def five_vertex_mixed() -> FiniteGraph:
    # source s -> a, 2-cycle a <-> b, sink t under b, extra sink w under a
    return FiniteGraph(
        ["s", "a", "b", "t", "w"],
        [
            Edge("f_sa", "s", "a"),
            Edge("f_ab", "a", "b"),
            Edge("f_ba", "b", "a"),
            Edge("f_bt", "b", "t"),
            Edge("f_aw", "a", "w"),
        ],
        name="5v-mixed",
    )


def infinite_emitter_graph() -> FiniteGraph:
    return FiniteGraph(
        ["v", "w", "h0"],
        [Edge("binf", "v", "h0", float("inf")), Edge("e", "v", "w")],
        name="inf-emitter",
    )


def diagonal_ring(n: int, prefix: str = "v") -> StructuredRing:
    labels = [f"{prefix}{i+1}" for i in range(n)]
    mult = [
        [unit_vec(n, i) if i == j else zero_vec(n) for j in range(n)]
        for i in range(n)
    ]
    return StructuredRing(labels, mult)


def dual_numbers_ring() -> StructuredRing:
    # Q[x]/(x^2): not semiprime, witness x
    one = [F(1), F(0)]
    x = [F(0), F(1)]
    zero = [F(0), F(0)]
    return StructuredRing(["1", "x"], [[one, x], [x, zero]])


def matrix2_ring() -> StructuredRing:
    # 2x2 matrix units e11, e12, e21, e22 (semisimple)
    labels = ["e11", "e12", "e21", "e22"]
    idx = {lab: i for i, lab in enumerate(labels)}

    def unit(lab):
        return unit_vec(4, idx[lab])

    z = zero_vec(4)
    table = {}
    for a in (1, 2):
        for b in (1, 2):
            for c in (1, 2):
                for d in (1, 2):
                    table[(f"e{a}{b}", f"e{c}{d}")] = unit(f"e{a}{d}") if b == c else z
    mult = [[table[(r, c)] for c in labels] for r in labels]
    return StructuredRing(labels, mult)


def perm3_system() -> RSystem:
    ring = diagonal_ring(3)
    phi = [
        [F(0), F(0), F(1)],
        [F(1), F(0), F(0)],
        [F(0), F(1), F(0)],
    ]  # e1 -> e2 -> e3 -> e1
    sys = build_automorphism_system(ring, phi)
    sys.name = "perm3"
    return sys


def psi_zero_system() -> RSystem:
    """P = Q = R = Q^2 (diagonal), psi identically zero: (FS) must fail."""
    ring = diagonal_ring(2)
    n = ring.dim
    left = [ring.left_matrix(unit_vec(n, i)) for i in range(n)]
    right = [ring.right_matrix(unit_vec(n, i)) for i in range(n)]
    mod_p = StructuredBimodule(["p1", "p2"], left, right)
    mod_q = StructuredBimodule(["q1", "q2"], list(left), list(right))
    psi = Pairing([[zero_vec(n) for _ in range(n)] for _ in range(n)])
    return RSystem(ring=ring, p=mod_p, q=mod_q, psi=psi, name="psi-zero")


def random_graph(rng: random.Random, max_v: int = 6, max_e: int = 10) -> FiniteGraph:
    nv = rng.randint(1, max_v)
    verts = [f"v{i}" for i in range(1, nv + 1)]
    ne = rng.randint(0, max_e)
    edges = [
        Edge(f"e{i}", rng.choice(verts), rng.choice(verts)) for i in range(1, ne + 1)
    ]
    return FiniteGraph(verts, edges, name=f"rand{nv}v{ne}e")


def random_permutation_system(rng: random.Random, max_n: int = 6) -> RSystem:
    n = rng.randint(1, max_n)
    ring = diagonal_ring(n)
    perm = list(range(n))
    rng.shuffle(perm)
    phi = [[F(1) if perm[j] == i else F(0) for j in range(n)] for i in range(n)]
    sys = build_automorphism_system(ring, phi)
    sys.name = f"perm{n}"
    return sys


def random_graph_element(rng, system, ctx_free_degree=2):
    """Small random Toeplitz element over a graph system (used by several suites)."""
    from cprings import toeplitz

    x = toeplitz.ToeplitzElement(system)
    for _ in range(rng.randint(1, 4)):
        word = []
        for _ in range(rng.randint(0, ctx_free_degree)):
            kind = rng.choice(["Q", "P", "R"])
            if kind == "R":
                word.append(toeplitz.embed(system, "R", unit_vec(system.ring.dim, rng.randrange(system.ring.dim))))
            elif kind == "Q":
                word.append(toeplitz.embed(system, "Q", unit_vec(system.q.dim, rng.randrange(system.q.dim))))
            else:
                word.append(toeplitz.embed(system, "P", unit_vec(system.p.dim, rng.randrange(system.p.dim))))
        term = toeplitz.embed(system, "R", unit_vec(system.ring.dim, rng.randrange(system.ring.dim)))
        for w in word:
            term = toeplitz.toeplitz_mul(term, w)
        x = x.add(term.scale(F(rng.randint(-3, 3))))
    return x


@pytest.fixture
def a2():
    return a2_graph()


@pytest.fixture
def line3():
    return line_graph(3)


@pytest.fixture
def rose1():
    return rose_graph(1)


@pytest.fixture
def cyc2():
    return cycle_graph(2)


@pytest.fixture
def mixed5():
    return five_vertex_mixed()


@pytest.fixture
def a2_system():
    return build_graph_system(a2_graph())


@pytest.fixture
def line3_system():
    return build_graph_system(line_graph(3))


@pytest.fixture
def perm3():
    return perm3_system()

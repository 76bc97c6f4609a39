"""Finitely presented R-systems over exact rationals.

An R-system is a triple (P, Q, psi): two bimodules over a ring R and a
bimodule map psi : P (x)_R Q -> R.  Everything here is finite-dimensional
over Q and presented by structure constants:

- `StructuredRing`: basis labels + multiplication table
- `StructuredBimodule`: basis labels + one left and one right action matrix
  per ring basis element
- `Pairing`: the table psi(p_i (x) q_j) in ring coordinates

`validate_axioms` checks every defining identity on basis elements (which
suffices by linearity) and reports each failure individually.  The two
builders construct the standard examples: path/graph systems and
automorphism (skew) systems.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exactlin import (
    Subspace,
    frac,
    is_zero_vec,
    kernel,
    mat_identity,
    mat_transpose,
    mat_zero,
    matmul,
    matvec,
    solve_matrix,
    unit_vec,
    vec_add,
    vec_scale,
    zero_vec,
)

ZERO = Fraction(0)


class StructuredRing:
    """Finite-dimensional Q-algebra given by basis labels and a mult table.

    mult[i][j] is the coordinate vector of e_i * e_j.
    """

    __slots__ = ("labels", "mult", "_index")

    def __init__(self, labels: Sequence[str], mult):
        self.labels = tuple(labels)
        n = len(self.labels)
        if len(mult) != n or any(len(row) != n for row in mult):
            raise ValueError("multiplication table shape does not match basis")
        self.mult = tuple(
            tuple(tuple(frac(c) for c in cell) for cell in row) for row in mult
        )
        for row in self.mult:
            for cell in row:
                if len(cell) != n:
                    raise ValueError("product vector has wrong length")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def basis_vector(self, label: str) -> list[Fraction]:
        return unit_vec(self.dim, self._index[label])

    def multiply(self, a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
        out = zero_vec(self.dim)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                if bj == 0:
                    continue
                cell = self.mult[i][j]
                c = ai * bj
                out = [x + c * y for x, y in zip(out, cell)]
        return out

    def left_matrix(self, r: Sequence[Fraction]) -> list[list[Fraction]]:
        """Matrix of x -> r * x."""
        cols = [self.multiply(r, unit_vec(self.dim, j)) for j in range(self.dim)]
        return mat_transpose(cols)

    def right_matrix(self, r: Sequence[Fraction]) -> list[list[Fraction]]:
        """Matrix of x -> x * r."""
        cols = [self.multiply(unit_vec(self.dim, j), r) for j in range(self.dim)]
        return mat_transpose(cols)

    def __repr__(self) -> str:
        return f"StructuredRing({list(self.labels)!r})"


class StructuredBimodule:
    """R-bimodule given by action matrices per ring basis element.

    left[i] is the matrix of m -> e_i . m, right[i] of m -> m . e_i.
    """

    __slots__ = ("labels", "left", "right", "_index")

    def __init__(self, labels: Sequence[str], left, right):
        self.labels = tuple(labels)
        d = len(self.labels)
        self.left = tuple(tuple(tuple(frac(c) for c in row) for row in m) for m in left)
        self.right = tuple(tuple(tuple(frac(c) for c in row) for row in m) for m in right)
        for mats in (self.left, self.right):
            for m in mats:
                if len(m) != d or any(len(row) != d for row in m):
                    raise ValueError("action matrix shape does not match basis")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def basis_vector(self, label: str) -> list[Fraction]:
        return unit_vec(self.dim, self._index[label])

    def act_left(self, r: Sequence[Fraction], m: Sequence[Fraction]) -> list[Fraction]:
        out = zero_vec(self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                out = vec_add(out, vec_scale(ri, matvec(self.left[i], m)))
        return out

    def act_right(self, m: Sequence[Fraction], r: Sequence[Fraction]) -> list[Fraction]:
        out = zero_vec(self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                out = vec_add(out, vec_scale(ri, matvec(self.right[i], m)))
        return out

    def left_matrix(self, r: Sequence[Fraction]) -> list[list[Fraction]]:
        out = mat_zero(self.dim, self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                for a in range(self.dim):
                    for b in range(self.dim):
                        if self.left[i][a][b] != 0:
                            out[a][b] += ri * self.left[i][a][b]
        return out

    def right_matrix(self, r: Sequence[Fraction]) -> list[list[Fraction]]:
        out = mat_zero(self.dim, self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                for a in range(self.dim):
                    for b in range(self.dim):
                        if self.right[i][a][b] != 0:
                            out[a][b] += ri * self.right[i][a][b]
        return out

    def __repr__(self) -> str:
        return f"StructuredBimodule({list(self.labels)!r})"


class Pairing:
    """psi : P (x) Q -> R as the table psi(p_i (x) q_j) in ring coordinates."""

    __slots__ = ("table",)

    def __init__(self, table):
        self.table = tuple(
            tuple(tuple(frac(c) for c in cell) for cell in row) for row in table
        )

    def apply(self, p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
        if not self.table:
            return []
        d_r = len(self.table[0][0]) if self.table[0] else 0
        out = zero_vec(d_r)
        for i, pi in enumerate(p):
            if pi == 0:
                continue
            row = self.table[i]
            for j, qj in enumerate(q):
                if qj == 0:
                    continue
                c = pi * qj
                out = [x + c * y for x, y in zip(out, row[j])]
        return out

    def __repr__(self) -> str:
        return f"Pairing({len(self.table)}x{len(self.table[0]) if self.table else 0})"


@dataclass(eq=False)
class RSystem:
    """An R-system (R, P, Q, psi).  Identity-hashed so caches can key on it."""

    ring: StructuredRing
    p: StructuredBimodule
    q: StructuredBimodule
    psi: Pairing
    name: str = "system"

    def __repr__(self) -> str:
        return (
            f"RSystem({self.name!r}: dim R={self.ring.dim}, "
            f"dim P={self.p.dim}, dim Q={self.q.dim})"
        )


@dataclass
class ValidationReport:
    ok: bool
    failures: list[str] = field(default_factory=list)
    checks: int = 0

    def __bool__(self) -> bool:
        return self.ok


def _check_bimodule(ring: StructuredRing, mod: StructuredBimodule, tag: str, failures, count):
    n, d = ring.dim, mod.dim
    for i in range(n):
        for j in range(n):
            prod = ring.mult[i][j]
            # e_i . (e_j . m) = (e_i e_j) . m
            lhs = matmul(mod.left[i], mod.left[j])
            rhs = mod.left_matrix(prod)
            count[0] += 1
            if lhs != rhs:
                failures.append(f"{tag}: left action not associative at ({ring.labels[i]},{ring.labels[j]})")
            # (m . e_i) . e_j = m . (e_i e_j)
            lhs = matmul(mod.right[j], mod.right[i])
            rhs = mod.right_matrix(prod)
            count[0] += 1
            if lhs != rhs:
                failures.append(f"{tag}: right action not associative at ({ring.labels[i]},{ring.labels[j]})")
            # (e_i . m) . e_j = e_i . (m . e_j)
            lhs = matmul(mod.right[j], mod.left[i])
            rhs = matmul(mod.left[i], mod.right[j])
            count[0] += 1
            if lhs != rhs:
                failures.append(f"{tag}: actions do not commute at ({ring.labels[i]},{ring.labels[j]})")


def validate_axioms(system: RSystem) -> ValidationReport:
    """Check every defining identity of (R, P, Q, psi) on basis elements."""
    failures: list[str] = []
    count = [0]
    ring = system.ring
    n = ring.dim

    for i in range(n):
        for j in range(n):
            for k in range(n):
                lhs = ring.multiply(ring.mult[i][j], unit_vec(n, k))
                rhs = ring.multiply(unit_vec(n, i), ring.mult[j][k])
                count[0] += 1
                if lhs != rhs:
                    failures.append(
                        f"ring: associativity fails at ({ring.labels[i]},{ring.labels[j]},{ring.labels[k]})"
                    )

    _check_bimodule(ring, system.p, "P", failures, count)
    _check_bimodule(ring, system.q, "Q", failures, count)

    psi = system.psi
    dp, dq = system.p.dim, system.q.dim
    if len(psi.table) != dp or any(len(row) != dq for row in psi.table):
        failures.append("psi: table shape does not match module bases")
    else:
        for i in range(n):
            e = unit_vec(n, i)
            for a in range(dp):
                pa = unit_vec(dp, a)
                for b in range(dq):
                    qb = unit_vec(dq, b)
                    # balanced over R: psi(p.r (x) q) = psi(p (x) r.q)
                    lhs = psi.apply(system.p.act_right(pa, e), qb)
                    rhs = psi.apply(pa, system.q.act_left(e, qb))
                    count[0] += 1
                    if lhs != rhs:
                        failures.append(
                            f"psi: not balanced at ({ring.labels[i]},p{a},q{b})"
                        )
                    # left R-linear: psi(r.p (x) q) = r psi(p (x) q)
                    lhs = psi.apply(system.p.act_left(e, pa), qb)
                    rhs = ring.multiply(e, psi.apply(pa, qb))
                    count[0] += 1
                    if lhs != rhs:
                        failures.append(f"psi: not left linear at ({ring.labels[i]},p{a},q{b})")
                    # right R-linear: psi(p (x) q.r) = psi(p (x) q) r
                    lhs = psi.apply(pa, system.q.act_right(qb, e))
                    rhs = ring.multiply(psi.apply(pa, qb), e)
                    count[0] += 1
                    if lhs != rhs:
                        failures.append(f"psi: not right linear at ({ring.labels[i]},p{a},q{b})")

    return ValidationReport(ok=not failures, failures=failures, checks=count[0])


def right_annihilator(ring: StructuredRing) -> Subspace:
    """{r in R : r R = 0} as a subspace."""
    if ring.dim == 0:
        return Subspace(0)
    stacked = []
    for j in range(ring.dim):
        stacked.extend(ring.right_matrix(unit_vec(ring.dim, j)))
    return Subspace(ring.dim, kernel(stacked))


def is_right_nondegenerate(system: RSystem) -> bool:
    """r R = 0 implies r = 0."""
    return right_annihilator(system.ring).is_zero()


def is_semiprime_witness(system: RSystem):
    """None if R is semiprime; else a nonzero x whose two-sided ideal squares to zero.

    Uses the characteristic-zero trace-form criterion on the unital hull: the
    radical of R is the kernel of (x, y) -> tr(L_{xy}); if it is nonzero with
    nilpotency index k, the (k-1)-st power of the radical is a nonzero ideal
    with square zero, and any nonzero element of it is a witness.
    """
    ring = system.ring
    d = ring.dim
    if d == 0:
        return None
    # unital hull: basis u, e_0..e_{d-1}
    n = d + 1

    def hull_mult(a, b):
        # (s, x)(t, y) = (st, sy + tx + xy)
        s, x = a[0], a[1:]
        t, y = b[0], b[1:]
        xy = ring.multiply(x, y)
        rest = [s * yi + t * xi + zi for xi, yi, zi in zip(x, y, xy)]
        return [s * t] + rest

    basis = [unit_vec(n, i) for i in range(n)]
    left_mats = []
    for bi in basis:
        cols = [hull_mult(bi, bj) for bj in basis]
        left_mats.append(mat_transpose(cols))

    def tr(m):
        return sum((m[i][i] for i in range(n)), ZERO)

    gram = []
    for i in range(n):
        row = []
        for j in range(n):
            prod = hull_mult(basis[i], basis[j])
            lm = mat_zero(n, n)
            for k, c in enumerate(prod):
                if c != 0:
                    for a in range(n):
                        for b in range(n):
                            if left_mats[k][a][b] != 0:
                                lm[a][b] += c * left_mats[k][a][b]
            row.append(tr(lm))
        gram.append(row)

    rad_hull = kernel(gram)
    # the radical is a nilpotent ideal, hence inside R (unit component zero)
    rad_vecs = []
    for v in rad_hull:
        if v[0] != 0:
            # cannot happen for an algebra; be defensive
            raise ArithmeticError("radical escaped the non-unital part")
        rad_vecs.append(v[1:])
    rad = Subspace(d, rad_vecs)
    if rad.is_zero():
        return None

    def ideal_product(a: Subspace, b: Subspace) -> Subspace:
        gens = []
        for x in a.basis():
            for y in b.basis():
                gens.append(ring.multiply(x, y))
        return Subspace(d, gens)

    power = rad
    while True:
        nxt = ideal_product(power, rad)
        if nxt.is_zero():
            break
        power = nxt
    witness = power.basis()[0]
    return witness


# ---------------------------------------------------------------------------
# builders


def build_graph_system(graph) -> RSystem:
    """The path system of a finite graph.

    R has one idempotent per vertex.  Q is spanned by the edges with
    v . e = [src(e) = v] e  and  e . v = [tgt(e) = v] e; P is spanned by the
    reversed edges with v . e~ = [tgt(e) = v] e~ and e~ . v = [src(e) = v] e~.
    The pairing contracts a reversed edge against an edge:
    psi(e~ (x) f) = delta_{e,f} 1_{tgt(e)}.
    """
    verts = list(graph.vertices)
    vidx = {v: i for i, v in enumerate(verts)}
    edges = []
    for e in graph.edges:
        mult = getattr(e, "mult", 1)
        if not math.isfinite(mult) or mult != int(mult):
            raise ValueError(f"edge {e.name}: infinite multiplicity is not supported algebraically")
        mult = int(mult)
        if mult < 1:
            raise ValueError(f"edge {e.name}: multiplicity must be >= 1")
        for k in range(mult):
            name = e.name if k == 0 else f"{e.name}#{k + 1}"
            edges.append((name, e.src, e.tgt))

    nv = len(verts)
    ne = len(edges)
    ring_mult = [
        [unit_vec(nv, i) if i == j else zero_vec(nv) for j in range(nv)]
        for i in range(nv)
    ]
    ring = StructuredRing(verts, ring_mult)

    def diag(flags):
        m = mat_zero(ne, ne)
        for a, f in enumerate(flags):
            if f:
                m[a][a] = Fraction(1)
        return m

    q_left = [diag([src == v for (_, src, _) in edges]) for v in verts]
    q_right = [diag([tgt == v for (_, _, tgt) in edges]) for v in verts]
    p_left = [diag([tgt == v for (_, _, tgt) in edges]) for v in verts]
    p_right = [diag([src == v for (_, src, _) in edges]) for v in verts]

    labels = [name for (name, _, _) in edges]
    q_mod = StructuredBimodule(labels, q_left, q_right)
    p_mod = StructuredBimodule(labels, p_left, p_right)

    table = [
        [
            unit_vec(nv, vidx[edges[a][2]]) if a == b else zero_vec(nv)
            for b in range(ne)
        ]
        for a in range(ne)
    ]
    psi = Pairing(table)
    return RSystem(ring=ring, p=p_mod, q=q_mod, psi=psi, name=f"graph:{getattr(graph, 'name', '?')}")


def build_automorphism_system(ring: StructuredRing, phi) -> RSystem:
    """The system of a ring automorphism phi (given as a matrix on R).

    P carries p . r = p phi(r), Q carries q . r = q phi^{-1}(r) (left actions
    are plain multiplication on both), and psi(p (x) q) = p phi(q).
    """
    d = ring.dim
    phi = [[frac(c) for c in row] for row in phi]
    phi_inv = solve_matrix(phi, mat_identity(d))
    if phi_inv is None:
        raise ValueError("phi is not invertible")
    # automorphism check: phi(e_i e_j) = phi(e_i) phi(e_j)
    cols = mat_transpose(phi)
    for i in range(d):
        for j in range(d):
            lhs = matvec(phi, ring.mult[i][j])
            rhs = ring.multiply(cols[i], cols[j])
            if lhs != rhs:
                raise ValueError(f"phi is not multiplicative at ({ring.labels[i]},{ring.labels[j]})")

    left = [ring.left_matrix(unit_vec(d, i)) for i in range(d)]
    right_p = [ring.right_matrix(matvec(phi, unit_vec(d, i))) for i in range(d)]
    right_q = [ring.right_matrix(matvec(phi_inv, unit_vec(d, i))) for i in range(d)]

    p_mod = StructuredBimodule(ring.labels, left, right_p)
    q_mod = StructuredBimodule(ring.labels, list(left), right_q)

    table = [
        [ring.multiply(unit_vec(d, i), matvec(phi, unit_vec(d, j))) for j in range(d)]
        for i in range(d)
    ]
    psi = Pairing(table)
    sys = RSystem(ring=ring, p=p_mod, q=q_mod, psi=psi, name="automorphism")
    sys.phi = phi  # kept for the crossed-product backend
    sys.phi_inv = phi_inv
    return sys


# ---------------------------------------------------------------------------
# JSON serialization (schema shared with the CLI)


def _triples_to_table(triples, n1, n2, n3):
    table = [[zero_vec(n3) for _ in range(n2)] for _ in range(n1)]
    for i, j, k, c in triples:
        table[i][j][k] += frac(c)
    return table


def _triples_to_mats(triples, n_ring, d):
    mats = [mat_zero(d, d) for _ in range(n_ring)]
    for i, a, b, c in triples:
        mats[i][b][a] += frac(c)  # coefficient of m_b in e_i . m_a: column a, row b
    return mats


def system_from_json(data: dict) -> RSystem:
    """Build a system from the interchange schema.

    ring.mult triples [i, j, k, c]: e_i e_j has coefficient c on e_k.
    module left triples [i, a, b, c]: e_i . m_a has coefficient c on m_b;
    right triples [i, a, b, c]: m_a . e_i has coefficient c on m_b.
    psi triples [i, j, k, c]: psi(p_i (x) q_j) has coefficient c on e_k.
    Missing entries are zero; coefficients are strings or ints.
    """
    if data.get("base_field", "Q") != "Q":
        raise ValueError("only base_field 'Q' is supported")
    rbasis = data["ring"]["basis"]
    n = len(rbasis)
    mult = _triples_to_table(data["ring"].get("mult", []), n, n, n)
    ring = StructuredRing(rbasis, mult)

    def load_mod(key):
        spec = data[key]
        labels = spec["basis"]
        d = len(labels)
        left = _triples_to_mats(spec.get("left", []), n, d)
        right = _triples_to_mats(spec.get("right", []), n, d)
        return StructuredBimodule(labels, left, right)

    p_mod = load_mod("p")
    q_mod = load_mod("q")
    psi = Pairing(_triples_to_table(data.get("psi", []), p_mod.dim, q_mod.dim, n))
    return RSystem(ring=ring, p=p_mod, q=q_mod, psi=psi, name=data.get("name", "system"))


def _table_to_triples(table):
    out = []
    for i, row in enumerate(table):
        for j, cell in enumerate(row):
            for k, c in enumerate(cell):
                if c != 0:
                    out.append([i, j, k, str(c)])
    return out


def _mats_to_triples(mats):
    out = []
    for i, m in enumerate(mats):
        for b, row in enumerate(m):
            for a, c in enumerate(row):
                if c != 0:
                    out.append([i, a, b, str(c)])
    return out


def system_to_json(system: RSystem) -> dict:
    return {
        "base_field": "Q",
        "name": system.name,
        "ring": {
            "basis": list(system.ring.labels),
            "mult": _table_to_triples(system.ring.mult),
        },
        "p": {
            "basis": list(system.p.labels),
            "left": _mats_to_triples(system.p.left),
            "right": _mats_to_triples(system.p.right),
        },
        "q": {
            "basis": list(system.q.labels),
            "left": _mats_to_triples(system.q.left),
            "right": _mats_to_triples(system.q.right),
        },
        "psi": _table_to_triples(system.psi.table),
    }


def save_system(system: RSystem, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(system_to_json(system), fh, indent=1)


def load_system(path: str) -> RSystem:
    with open(path) as fh:
        return system_from_json(json.load(fh))

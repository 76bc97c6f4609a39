"""Exact arithmetic in the Toeplitz ring of an R-system.

Elements are finitely supported maps from semigroup grades (m, n) to
coordinate vectors in the component

    T_(m,n) = Q^(x)m (x)_R P^(x)n   (m, n >= 1),
    T_(m,0) = Q^(x)m,  T_(0,n) = P^(x)n,  T_(0,0) = R,

with the grade product (m1,n1)(m2,n2) = (m1+m2-k, n1+n2-k), k = min(n1, m2).

Multiplication runs one case analysis per component pair; the full bullet
table collapses onto four code paths keyed on k = min(n1, m2):

* k = 0            — pure concatenation (module actions when a leg has
                     level 0, covering all products with grade (0,0));
* 0 < k = m2 < n1  — contract-right: the trailing k P-factors of the left
                     operand pair against the whole Q-leg of the right one,
                     and the resulting ring element multiplies the surviving
                     P-head from the right;
* 0 < k = n1 < m2  — contract-left: the whole P-leg pairs against the
                     leading k Q-factors of the right operand, the ring
                     element hitting the surviving Q-tail from the left;
* k = n1 = m2      — full contraction down to psi_k, absorbed into the
                     adjacent leg (or grade (0,0) when none remains).

Products of component classes are cached as exact bilinear matrices per
grade pair, so repeated multiplication is a sparse matvec.

The module also hosts representation evaluation (images T^m(q) S^n(p),
multiplicative in tensor order) and the truncated Fock representation used
as the independent equality oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exactlin import (
    QuotientSpace,
    Subspace,
    is_zero_vec,
    kron_vec,
    mat_identity,
    mat_transpose,
    mat_zero,
    matmul,
    matvec,
    unit_vec,
    vec_add,
    vec_scale,
    zero_vec,
)
from .rsystem import RSystem
from .tensorpow import (
    CapExceeded,
    DEFAULT_CAP,
    ModuleElement,
    _system_store,
    psi_apply,
    tensor_embed,
    tensor_space,
    tensor_split,
)

__all__ = [
    "CapExceeded",
    "ComponentSpace",
    "GradePair",
    "InvalidRepresentation",
    "Mat",
    "Representation",
    "SystemMismatch",
    "ToeplitzElement",
    "check_representation",
    "component_space",
    "embed",
    "embed_n",
    "evaluate",
    "fock_apply",
    "fock_is_zero",
    "fock_matrix",
    "grade_project",
    "pair",
    "semigroup_mul",
    "toeplitz_is_zero",
    "toeplitz_mul",
    "z_project",
]

GradePair = tuple  # (m, n) with m, n natural


class SystemMismatch(ValueError):
    """Operands belong to different systems."""


class InvalidRepresentation(ValueError):
    """The target does not expose sigma/s/t or violates the axioms."""


def semigroup_mul(a: GradePair, b: GradePair) -> GradePair:
    (m1, n1), (m2, n2) = a, b
    k = min(n1, m2)
    return (m1 + m2 - k, n1 + n2 - k)


@dataclass(eq=False)
class ComponentSpace:
    system: RSystem
    m: int
    n: int
    dim: int
    proj: Optional[list]  # only for mixed grades
    sect: Optional[list]

    def __repr__(self) -> str:
        return f"ComponentSpace(({self.m},{self.n}), dim {self.dim})"


def component_space(system: RSystem, m: int, n: int, cap: int = DEFAULT_CAP) -> ComponentSpace:
    store = _system_store(system)
    key = ("comp", m, n)
    if key in store:
        return store[key]
    if m < 0 or n < 0:
        raise ValueError("negative grade")
    if m == 0 and n == 0:
        comp = ComponentSpace(system, 0, 0, system.ring.dim, None, None)
    elif n == 0:
        comp = ComponentSpace(system, m, 0, tensor_space(system, "Q", m, cap=cap).dim, None, None)
    elif m == 0:
        comp = ComponentSpace(system, 0, n, tensor_space(system, "P", n, cap=cap).dim, None, None)
    else:
        qm = tensor_space(system, "Q", m, cap=cap)
        pn = tensor_space(system, "P", n, cap=cap)
        if qm.dim == 0 or pn.dim == 0:
            comp = ComponentSpace(system, m, n, 0, None, None)
        else:
            rel = []
            d_r = system.ring.dim
            for a in range(qm.dim):
                ea = unit_vec(qm.dim, a)
                for i in range(d_r):
                    qa = matvec(qm.right[i], ea)
                    for b in range(pn.dim):
                        eb = unit_vec(pn.dim, b)
                        pb = matvec(pn.left[i], eb)
                        rel.append([x - y for x, y in zip(kron_vec(qa, eb), kron_vec(ea, pb))])
            quot = QuotientSpace(Subspace(qm.dim * pn.dim, rel))
            comp = ComponentSpace(system, m, n, quot.dim, quot.projection_matrix(), quot.section_matrix())
    store[key] = comp
    return comp


def _class_coords(system: RSystem, m: int, n: int, q, p, cap: int):
    """Component coordinates of the class of q (x) p at grade (m, n)."""
    if n == 0:
        return q
    if m == 0:
        return p
    comp = component_space(system, m, n, cap=cap)
    if comp.dim == 0:
        return None
    return matvec(comp.proj, kron_vec(q, p))


class ToeplitzElement:
    """Finitely supported grade -> component-coordinates map (immutable)."""

    __slots__ = ("system", "comps")

    def __init__(self, system: RSystem, components=None):
        self.system = system
        comps = {}
        if components:
            for g, v in components.items():
                v = tuple(v)
                if any(c != 0 for c in v):
                    comps[(int(g[0]), int(g[1]))] = v
        self.comps = comps

    # -- inspection ---------------------------------------------------------
    def support(self):
        return sorted(self.comps)

    def component(self, grade: GradePair):
        g = (int(grade[0]), int(grade[1]))
        v = self.comps.get(g)
        if v is not None:
            return v
        return tuple(zero_vec(component_space(self.system, g[0], g[1]).dim))

    def is_zero(self) -> bool:
        return not self.comps

    def max_degree(self) -> int:
        return max((m + n for (m, n) in self.comps), default=0)

    def max_n_degree(self) -> int:
        return max((n for (_, n) in self.comps), default=0)

    def z_degrees(self):
        return sorted({m - n for (m, n) in self.comps})

    # -- linear structure ---------------------------------------------------
    def add(self, other: "ToeplitzElement") -> "ToeplitzElement":
        if other.system is not self.system:
            raise SystemMismatch("cannot add elements over different systems")
        comps = {g: list(v) for g, v in self.comps.items()}
        for g, v in other.comps.items():
            if g in comps:
                comps[g] = vec_add(comps[g], v)
            else:
                comps[g] = list(v)
        return ToeplitzElement(self.system, comps)

    def scale(self, c) -> "ToeplitzElement":
        c = Fraction(c)
        return ToeplitzElement(self.system, {g: vec_scale(c, v) for g, v in self.comps.items()})

    def neg(self) -> "ToeplitzElement":
        return self.scale(-1)

    def sub(self, other: "ToeplitzElement") -> "ToeplitzElement":
        return self.add(other.neg())

    def mul(self, other: "ToeplitzElement", cap: int = DEFAULT_CAP) -> "ToeplitzElement":
        return toeplitz_mul(self, other, cap=cap)

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __neg__ = neg

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ToeplitzElement):
            return NotImplemented
        return self.system is other.system and self.comps == other.comps

    def __hash__(self):
        return hash((id(self.system), tuple(sorted(self.comps.items()))))

    def __repr__(self) -> str:
        if not self.comps:
            return "ToeplitzElement(0)"
        parts = ", ".join(f"{g}:{list(v)}" for g, v in sorted(self.comps.items()))
        return f"ToeplitzElement({parts})"


def embed(system: RSystem, kind: str, x, cap: int = DEFAULT_CAP) -> ToeplitzElement:
    """Level-1 (or ring) embedding; accepts raw coordinates or a ModuleElement."""
    if isinstance(x, ModuleElement):
        return embed_n(system, kind, x.level, x.coords, cap=cap)
    level = 0 if kind == "R" else 1
    return embed_n(system, kind, level, x, cap=cap)


def embed_n(system: RSystem, kind: str, level: int, coords, cap: int = DEFAULT_CAP) -> ToeplitzElement:
    if isinstance(coords, ModuleElement):
        coords = coords.coords
    coords = list(coords)
    if kind == "R":
        if level != 0:
            raise ValueError("ring elements sit at level 0")
        if len(coords) != system.ring.dim:
            raise ValueError("coordinate length mismatch")
        return ToeplitzElement(system, {(0, 0): coords})
    if kind == "Q":
        grade = (level, 0)
    elif kind == "P":
        grade = (0, level)
    else:
        raise ValueError(f"kind must be R, Q or P, got {kind!r}")
    want = tensor_space(system, kind, level, cap=cap).dim
    if len(coords) != want:
        raise ValueError(f"coordinate length {len(coords)} != dim {want} of {kind}^{level}")
    return ToeplitzElement(system, {grade: coords})


def pair(system: RSystem, m: int, n: int, q_coords, p_coords, cap: int = DEFAULT_CAP) -> ToeplitzElement:
    """The class of q (x) p at grade (m, n)."""
    if m == 0 and n == 0:
        raise ValueError("grade (0,0) holds ring elements; use embed")
    if m == 0:
        return embed_n(system, "P", n, p_coords, cap=cap)
    if n == 0:
        return embed_n(system, "Q", m, q_coords, cap=cap)
    v = _class_coords(system, m, n, list(q_coords), list(p_coords), cap)
    if v is None:
        return ToeplitzElement(system)
    return ToeplitzElement(system, {(m, n): v})


# -- multiplication ----------------------------------------------------------


def _basis_legs(system: RSystem, m: int, n: int, idx: int, cap: int):
    """Decompose a component basis class into pure (q, p, r, coeff) legs."""
    if m == 0 and n == 0:
        return [(None, None, unit_vec(system.ring.dim, idx), Fraction(1))]
    if n == 0:
        return [(unit_vec(tensor_space(system, "Q", m, cap=cap).dim, idx), None, None, Fraction(1))]
    if m == 0:
        return [(None, unit_vec(tensor_space(system, "P", n, cap=cap).dim, idx), None, Fraction(1))]
    comp = component_space(system, m, n, cap=cap)
    dq = tensor_space(system, "Q", m, cap=cap).dim
    dp = tensor_space(system, "P", n, cap=cap).dim
    col = mat_transpose(comp.sect)[idx]
    out = []
    for a in range(dq):
        for b in range(dp):
            c = col[a * dp + b]
            if c != 0:
                out.append((unit_vec(dq, a), unit_vec(dp, b), None, c))
    return out


def _legpair_product(system: RSystem, g1, legs1, g2, legs2, cap: int):
    """Product of two pure leg tuples; returns component coords at semigroup_mul(g1, g2)."""
    (m1, n1), (m2, n2) = g1, g2
    q1, p1, r1, _ = legs1
    q2, p2, r2, _ = legs2
    ring = system.ring

    if g1 == (0, 0):
        r = r1
        if g2 == (0, 0):
            return ring.multiply(r, r2)
        if m2 >= 1:
            q2s = tensor_space(system, "Q", m2, cap=cap)
            return _class_coords(system, m2, n2, q2s.act_left(r, q2), p2, cap)
        pns = tensor_space(system, "P", n2, cap=cap)
        return _class_coords(system, 0, n2, None, pns.act_left(r, p2), cap)
    if g2 == (0, 0):
        r = r2
        if n1 >= 1:
            pns = tensor_space(system, "P", n1, cap=cap)
            return _class_coords(system, m1, n1, q1, pns.act_right(p1, r), cap)
        qms = tensor_space(system, "Q", m1, cap=cap)
        return _class_coords(system, m1, 0, qms.act_right(q1, r), None, cap)

    k = min(n1, m2)
    if k == 0:
        if n1 == 0:
            if m2 == 0:
                # pure Q times pure P: just the mixed class
                return _class_coords(system, m1, n2, q1, p2, cap)
            q_full = matvec(tensor_embed(system, "Q", m1, m2, cap=cap), kron_vec(q1, q2))
            return _class_coords(system, m1 + m2, n2, q_full, p2, cap)
        # m2 == 0, n1 >= 1: concatenate the P legs
        p_full = matvec(tensor_embed(system, "P", n1, n2, cap=cap), kron_vec(p1, p2))
        return _class_coords(system, m1, n1 + n2, q1, p_full, cap)

    if k == n1 == m2:
        r = psi_apply(system, k, p1, q2, cap=cap)
        if m1 >= 1:
            qms = tensor_space(system, "Q", m1, cap=cap)
            return _class_coords(system, m1, n2, qms.act_right(q1, r), p2, cap)
        if n2 >= 1:
            pns = tensor_space(system, "P", n2, cap=cap)
            return _class_coords(system, 0, n2, None, pns.act_left(r, p2), cap)
        return r  # grade (0,0)

    if k == m2:  # k < n1: trailing P-factors of the left operand contract away
        head = tensor_space(system, "P", n1 - k, cap=cap)
        dk = tensor_space(system, "P", k, cap=cap).dim
        v = matvec(tensor_split(system, "P", n1 - k, k, cap=cap), p1)
        p_head = zero_vec(head.dim)
        for h in range(head.dim):
            for t in range(dk):
                c = v[h * dk + t]
                if c == 0:
                    continue
                r = psi_apply(system, k, unit_vec(dk, t), q2, cap=cap)
                p_head = vec_add(p_head, vec_scale(c, head.act_right(unit_vec(head.dim, h), r)))
        if n2 >= 1:
            p_full = matvec(tensor_embed(system, "P", n1 - k, n2, cap=cap), kron_vec(p_head, p2))
        else:
            p_full = p_head
        return _class_coords(system, m1, n1 - k + n2, q1, p_full, cap)

    # k == n1 < m2: the whole P-leg contracts against the leading Q-factors
    tail = tensor_space(system, "Q", m2 - k, cap=cap)
    dk = tensor_space(system, "Q", k, cap=cap).dim
    v = matvec(tensor_split(system, "Q", k, m2 - k, cap=cap), q2)
    q_tail = zero_vec(tail.dim)
    for h in range(dk):
        for t in range(tail.dim):
            c = v[h * tail.dim + t]
            if c == 0:
                continue
            r = psi_apply(system, k, p1, unit_vec(dk, h), cap=cap)
            q_tail = vec_add(q_tail, vec_scale(c, tail.act_left(r, unit_vec(tail.dim, t))))
    if m1 >= 1:
        q_full = matvec(tensor_embed(system, "Q", m1, m2 - k, cap=cap), kron_vec(q1, q_tail))
    else:
        q_full = q_tail
    return _class_coords(system, m1 + m2 - k, n2, q_full, p2, cap)


def _product_matrix(system: RSystem, g1, g2, cap: int):
    """Bilinear matrix of the component product C(g1) x C(g2) -> C(g1 g2)."""
    store = _system_store(system)
    key = ("prodmat", g1, g2)
    if key in store:
        return store[key]
    g_out = semigroup_mul(g1, g2)
    if g_out[0] + g_out[1] > cap:
        raise CapExceeded(f"product grade {g_out} exceeds cap {cap}")
    d1 = component_space(system, *g1, cap=cap).dim
    d2 = component_space(system, *g2, cap=cap).dim
    d_out = component_space(system, *g_out, cap=cap).dim
    cols = []
    for i in range(d1):
        legs1 = _basis_legs(system, g1[0], g1[1], i, cap)
        for j in range(d2):
            legs2 = _basis_legs(system, g2[0], g2[1], j, cap)
            acc = zero_vec(d_out)
            for l1 in legs1:
                for l2 in legs2:
                    v = _legpair_product(system, g1, l1, g2, l2, cap)
                    if v is not None:
                        acc = vec_add(acc, vec_scale(l1[3] * l2[3], v))
            cols.append(acc)
    out = (g_out, mat_transpose(cols) if cols else mat_zero(d_out, 0))
    store[key] = out
    return out


def toeplitz_mul(a: ToeplitzElement, b: ToeplitzElement, cap: int = DEFAULT_CAP) -> ToeplitzElement:
    if a.system is not b.system:
        raise SystemMismatch("cannot multiply elements over different systems")
    system = a.system
    acc: dict = {}
    for g1 in sorted(a.comps):
        v1 = a.comps[g1]
        for g2 in sorted(b.comps):
            v2 = b.comps[g2]
            g_out, mat = _product_matrix(system, g1, g2, cap)
            if not mat or not mat[0]:
                continue
            w = matvec(mat, kron_vec(v1, v2))
            if g_out in acc:
                acc[g_out] = vec_add(acc[g_out], w)
            else:
                acc[g_out] = w
    return ToeplitzElement(system, acc)


# -- grading ------------------------------------------------------------------


def grade_project(x: ToeplitzElement, grade: GradePair) -> ToeplitzElement:
    g = (int(grade[0]), int(grade[1]))
    if g in x.comps:
        return ToeplitzElement(x.system, {g: x.comps[g]})
    return ToeplitzElement(x.system)


def z_project(x: ToeplitzElement, k: int) -> ToeplitzElement:
    return ToeplitzElement(x.system, {g: v for g, v in x.comps.items() if g[0] - g[1] == k})


def toeplitz_is_zero(x: ToeplitzElement, cross_check: bool = False, cap: int = DEFAULT_CAP) -> bool:
    """Structural zero test (complete, by the grading); optional Fock cross-check."""
    structural = x.is_zero()
    if cross_check:
        fock = fock_is_zero(x, cap=cap)
        if fock != structural:
            raise RuntimeError(
                "Fock oracle disagrees with the structural zero test; "
                "component spaces and the representation are out of sync"
            )
    return structural


# -- representations ----------------------------------------------------------


class Mat:
    """Tiny exact-matrix wrapper so representation targets share one protocol."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(Fraction(x) for x in row) for row in rows)

    @classmethod
    def zero(cls, d: int) -> "Mat":
        return cls(mat_zero(d, d))

    @classmethod
    def identity(cls, d: int) -> "Mat":
        return cls(mat_identity(d))

    def __add__(self, other: "Mat") -> "Mat":
        return Mat([vec_add(a, b) for a, b in zip(self.rows, other.rows)])

    def __sub__(self, other: "Mat") -> "Mat":
        return Mat([[x - y for x, y in zip(a, b)] for a, b in zip(self.rows, other.rows)])

    def __mul__(self, other: "Mat") -> "Mat":
        return Mat(matmul(self.rows, other.rows))

    def __rmul__(self, c) -> "Mat":
        c = Fraction(c)
        return Mat([[c * x for x in row] for row in self.rows])

    def __eq__(self, other) -> bool:
        return isinstance(other, Mat) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.rows for x in row)

    def __repr__(self) -> str:
        return f"Mat({[list(r) for r in self.rows]})"


@dataclass(eq=False)
class Representation:
    """Matrix images of the R/Q/P basis elements (linear in coordinates)."""

    dim: int
    r_images: list  # Mat per ring basis element
    q_images: list  # Mat per Q basis element
    p_images: list  # Mat per P basis element

    def sigma(self, r) -> Mat:
        return self._comb(self.r_images, r)

    def t(self, q) -> Mat:
        return self._comb(self.q_images, q)

    def s(self, p) -> Mat:
        return self._comb(self.p_images, p)

    def _comb(self, images, coords) -> Mat:
        acc = Mat.zero(self.dim)
        for c, img in zip(coords, images):
            if c != 0:
                acc = acc + Fraction(c) * img
        return acc


def check_representation(system: RSystem, rep) -> list[str]:
    """Covariance axioms on basis elements; empty list means a valid target."""
    failures = []
    d_r, d_q, d_p = system.ring.dim, system.q.dim, system.p.dim
    sig = [rep.sigma(unit_vec(d_r, i)) for i in range(d_r)]
    tt = [rep.t(unit_vec(d_q, b)) for b in range(d_q)]
    ss = [rep.s(unit_vec(d_p, a)) for a in range(d_p)]
    for i in range(d_r):
        for j in range(d_r):
            if sig[i] * sig[j] != rep.sigma(system.ring.mult[i][j]):
                failures.append(f"sigma not multiplicative at ({i},{j})")
    for i in range(d_r):
        r = unit_vec(d_r, i)
        for b in range(d_q):
            if tt[b] * sig[i] != rep.t(system.q.act_right(unit_vec(d_q, b), r)):
                failures.append(f"T(q.r) mismatch at (q{b},r{i})")
            if sig[i] * tt[b] != rep.t(system.q.act_left(r, unit_vec(d_q, b))):
                failures.append(f"T(r.q) mismatch at (r{i},q{b})")
        for a in range(d_p):
            if ss[a] * sig[i] != rep.s(system.p.act_right(unit_vec(d_p, a), r)):
                failures.append(f"S(p.r) mismatch at (p{a},r{i})")
            if sig[i] * ss[a] != rep.s(system.p.act_left(r, unit_vec(d_p, a))):
                failures.append(f"S(r.p) mismatch at (r{i},p{a})")
    for a in range(d_p):
        for b in range(d_q):
            lhs = rep.sigma(system.psi.apply(unit_vec(d_p, a), unit_vec(d_q, b)))
            if ss[a] * tt[b] != lhs:
                failures.append(f"covariance fails at (p{a},q{b})")
    return failures


def _rep_leg_images(system: RSystem, rep, side: str, level: int, memo, cap: int):
    """Images of the level basis under T^m / S^n (multiplicative in order)."""
    key = (side, level)
    if key in memo:
        return memo[key]
    sp = tensor_space(system, side, level, cap=cap)
    if level == 0:
        out = [rep.sigma(unit_vec(system.ring.dim, i)) for i in range(system.ring.dim)]
    elif level == 1:
        f = rep.t if side == "Q" else rep.s
        out = [f(unit_vec(sp.dim, i)) for i in range(sp.dim)]
    else:
        prev = _rep_leg_images(system, rep, side, level - 1, memo, cap)
        ones = _rep_leg_images(system, rep, side, 1, memo, cap)
        d1 = tensor_space(system, side, 1, cap=cap).dim
        cols = mat_transpose(sp.sect)
        zero = rep.sigma(zero_vec(system.ring.dim))
        out = []
        for idx in range(sp.dim):
            acc = zero
            col = cols[idx]
            for a in range(len(prev)):
                for b in range(d1):
                    c = col[a * d1 + b]
                    if c != 0:
                        acc = acc + Fraction(c) * (prev[a] * ones[b])
            out.append(acc)
    memo[key] = out
    return out


def evaluate(x: ToeplitzElement, rep, cap: int = DEFAULT_CAP):
    """Image of x under the representation induced by (sigma, T, S)."""
    for attr in ("sigma", "t", "s"):
        if not callable(getattr(rep, attr, None)):
            raise InvalidRepresentation(f"representation target lacks {attr}()")
    system = x.system
    memo: dict = {}
    acc = rep.sigma(zero_vec(system.ring.dim))
    for (m, n) in x.support():
        v = x.comps[(m, n)]
        if m == 0 and n == 0:
            acc = acc + rep.sigma(list(v))
            continue
        if n == 0:
            imgs = _rep_leg_images(system, rep, "Q", m, memo, cap)
            for i, c in enumerate(v):
                if c != 0:
                    acc = acc + Fraction(c) * imgs[i]
            continue
        if m == 0:
            imgs = _rep_leg_images(system, rep, "P", n, memo, cap)
            for i, c in enumerate(v):
                if c != 0:
                    acc = acc + Fraction(c) * imgs[i]
            continue
        q_imgs = _rep_leg_images(system, rep, "Q", m, memo, cap)
        p_imgs = _rep_leg_images(system, rep, "P", n, memo, cap)
        comp = component_space(system, m, n, cap=cap)
        dq = tensor_space(system, "Q", m, cap=cap).dim
        dp = tensor_space(system, "P", n, cap=cap).dim
        cols = mat_transpose(comp.sect)
        for idx, c in enumerate(v):
            if c == 0:
                continue
            col = cols[idx]
            for a in range(dq):
                for b in range(dp):
                    w = col[a * dp + b]
                    if w != 0:
                        acc = acc + (Fraction(c) * w) * (q_imgs[a] * p_imgs[b])
    return acc


# -- Fock representation -------------------------------------------------------


def _creator_block(system: RSystem, q_idx: int, j: int, cap: int):
    """T(e_q): Q^(x)j -> Q^(x)(j+1) (prepend)."""
    src = tensor_space(system, "Q", j, cap=cap)
    emb = tensor_embed(system, "Q", 1, j, cap=cap)
    d1 = system.q.dim
    eq = unit_vec(d1, q_idx)
    cols = [matvec(emb, kron_vec(eq, unit_vec(src.dim, c))) for c in range(src.dim)]
    return mat_transpose(cols) if cols else []


def _annihilator_block(system: RSystem, p_idx: int, j: int, cap: int):
    """S(e_p): Q^(x)j -> Q^(x)(j-1) (contract the first factor); kills j = 0."""
    if j == 0:
        return mat_zero(0, system.ring.dim)
    ep = unit_vec(system.p.dim, p_idx)
    if j == 1:
        # straight into the vacuum level: S(p)(q) = psi(p (x) q)
        cols = [system.psi.apply(ep, unit_vec(system.q.dim, c)) for c in range(system.q.dim)]
        return mat_transpose(cols)
    src = tensor_space(system, "Q", j, cap=cap)
    dst = tensor_space(system, "Q", j - 1, cap=cap)
    d1 = system.q.dim
    split = tensor_split(system, "Q", 1, j - 1, cap=cap)
    cols = []
    for c in range(src.dim):
        v = matvec(split, unit_vec(src.dim, c))
        acc = zero_vec(dst.dim)
        for b in range(d1):
            for rest in range(dst.dim):
                w = v[b * dst.dim + rest]
                if w == 0:
                    continue
                r = system.psi.apply(ep, unit_vec(d1, b))
                acc = vec_add(acc, vec_scale(w, dst.act_left(r, unit_vec(dst.dim, rest))))
        cols.append(acc)
    return mat_transpose(cols) if cols else [[] for _ in range(dst.dim)]


def _fock_leg_blocks(system: RSystem, side: str, level: int, idx: int, j: int, cap: int):
    """Block of T^level(e_idx) (side Q) or S^level(e_idx) (side P) from Q^(x)j."""
    store = _system_store(system)
    key = ("fockleg", side, level, idx, j)
    if key in store:
        return store[key]
    if side == "Q":
        if level == 1:
            out = (j + 1, _creator_block(system, idx, j, cap))
        else:
            sp = tensor_space(system, side, level, cap=cap)
            col = mat_transpose(sp.sect)[idx]
            d1 = system.q.dim
            prev_dim = tensor_space(system, side, level - 1, cap=cap).dim
            dst = tensor_space(system, "Q", j + level, cap=cap)
            src = tensor_space(system, "Q", j, cap=cap)
            acc = mat_zero(dst.dim, src.dim)
            for a in range(prev_dim):
                for b in range(d1):
                    c = col[a * d1 + b]
                    if c == 0:
                        continue
                    _, first = _fock_leg_blocks(system, "Q", 1, b, j, cap)
                    _, rest = _fock_leg_blocks(system, "Q", level - 1, a, j + 1, cap)
                    m = matmul(rest, first)
                    for rr in range(dst.dim):
                        for cc in range(src.dim):
                            if m[rr][cc] != 0:
                                acc[rr][cc] += c * m[rr][cc]
            out = (j + level, acc)
    else:
        if level > j:
            out = (None, None)  # annihilates the whole level
        elif level == 1:
            out = (j - 1, _annihilator_block(system, idx, j, cap))
        else:
            sp = tensor_space(system, side, level, cap=cap)
            col = mat_transpose(sp.sect)[idx]
            d1 = system.p.dim
            prev_dim = tensor_space(system, side, level - 1, cap=cap).dim
            dst = tensor_space(system, "Q", j - level, cap=cap)
            src = tensor_space(system, "Q", j, cap=cap)
            acc = mat_zero(dst.dim, src.dim)
            for a in range(prev_dim):
                for b in range(d1):
                    c = col[a * d1 + b]
                    if c == 0:
                        continue
                    # S^level(x (x) y) = S^(level-1)(x) S(y): S(y) acts first
                    _, last = _fock_leg_blocks(system, "P", 1, b, j, cap)
                    _, rest = _fock_leg_blocks(system, "P", level - 1, a, j - 1, cap)
                    m = matmul(rest, last)
                    for rr in range(dst.dim):
                        for cc in range(src.dim):
                            if m[rr][cc] != 0:
                                acc[rr][cc] += c * m[rr][cc]
            out = (j - level, acc)
    store[key] = out
    return out


def fock_apply(x: ToeplitzElement, j: int, cap: int = DEFAULT_CAP) -> dict:
    """Blocks of the Fock image of x on the level-j summand: {j_out: matrix}."""
    system = x.system
    src = tensor_space(system, "Q", j, cap=cap)
    out: dict = {}

    def bump(j_out, mat):
        if j_out in out:
            out[j_out] = [vec_add(a, b) for a, b in zip(out[j_out], mat)]
        else:
            out[j_out] = [list(r) for r in mat]

    for (m, n), v in sorted(x.comps.items()):
        if n > j:
            continue
        if m == 0 and n == 0:
            # diagonal action of the ring
            if j == 0:
                mat = system.ring.left_matrix(list(v))
            else:
                dm = mat_zero(src.dim, src.dim)
                for i, c in enumerate(v):
                    if c != 0:
                        li = src.left[i]
                        for rr in range(src.dim):
                            for cc in range(src.dim):
                                if li[rr][cc] != 0:
                                    dm[rr][cc] += c * li[rr][cc]
                mat = dm
            bump(j, mat)
            continue
        if n == 0:
            for idx, c in enumerate(v):
                if c == 0:
                    continue
                j_out, blk = _fock_leg_blocks(system, "Q", m, idx, j, cap)
                bump(j_out, [[c * xx for xx in row] for row in blk])
            continue
        if m == 0:
            for idx, c in enumerate(v):
                if c == 0:
                    continue
                j_out, blk = _fock_leg_blocks(system, "P", n, idx, j, cap)
                if j_out is None:
                    continue
                bump(j_out, [[c * xx for xx in row] for row in blk])
            continue
        comp = component_space(system, m, n, cap=cap)
        dq = tensor_space(system, "Q", m, cap=cap).dim
        dp = tensor_space(system, "P", n, cap=cap).dim
        cols = mat_transpose(comp.sect)
        for idx, c in enumerate(v):
            if c == 0:
                continue
            col = cols[idx]
            for a in range(dq):
                for b in range(dp):
                    w = col[a * dp + b]
                    if w == 0:
                        continue
                    js, sblk = _fock_leg_blocks(system, "P", n, b, j, cap)
                    if js is None:
                        continue
                    jt, tblk = _fock_leg_blocks(system, "Q", m, a, js, cap)
                    mmat = matmul(tblk, sblk)
                    bump(jt, [[c * w * xx for xx in row] for row in mmat])
    return {k: v for k, v in out.items() if any(any(e != 0 for e in row) for row in v)}


def fock_is_zero(x: ToeplitzElement, cap: int = DEFAULT_CAP) -> bool:
    """Exact zero test through the Fock representation.

    Testing domain levels j = 0..max_n(x) suffices: a nonzero component of
    minimal n in its z-degree acts nontrivially on Q^(x)n already (the lower
    levels cannot interfere, and higher components kill them).
    """
    for j in range(x.max_n_degree() + 1):
        if fock_apply(x, j, cap=cap):
            return False
    return True


def fock_matrix(x: ToeplitzElement, cutoff: Optional[int] = None, cap: int = DEFAULT_CAP):
    """One square matrix on the truncated Fock space ⊕_{j<=N} Q^(x)j.

    Blocks that would land above the cutoff are dropped, so products are only
    trustworthy on levels <= N - deg; `fock_apply` keeps all blocks exact.
    """
    system = x.system
    n_max = cutoff if cutoff is not None else x.max_n_degree()
    dims = [tensor_space(system, "Q", j, cap=cap).dim for j in range(n_max + 1)]
    offs = [0]
    for d in dims:
        offs.append(offs[-1] + d)
    total = offs[-1]
    big = mat_zero(total, total)
    for j in range(n_max + 1):
        if dims[j] == 0:
            continue
        for j_out, blk in fock_apply(x, j, cap=cap).items():
            if j_out > n_max:
                continue
            for rr in range(dims[j_out]):
                row = blk[rr]
                for cc in range(dims[j]):
                    if row[cc] != 0:
                        big[offs[j_out] + rr][offs[j] + cc] = row[cc]
    return big

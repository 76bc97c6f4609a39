"""Skew Laurent (crossed product) backend R x_phi Z for automorphism systems.

For a system built from a ring automorphism phi (module legs P = Q = R with
the phi-twisted right actions, psi(p (x) q) = p phi(q)), the relative
Cuntz-Pimsner ring at J = R has a closed form: the crossed product with
basis symbols [r, k] and product

    [r1, k1] [r2, k2] = [r1 phi^{k1}(r2), k1 + k2].

The covariant triple lands as sigma(r) = [r, 0], T(q) = [q, -1],
S(p) = [p, +1]; a word T(q1)...T(qm) S(p1)...S(pn) collapses to

    [q1 phi^{-1}(q2 phi^{-1}(... qm)) . phi^{-m}(p1 phi(p2 ... )), n - m],

so every graded component contributes to exactly one Laurent degree n - m.
`cp_to_crossed` implements that collapse directly on component coordinates
(recursing through the tensor-power splittings), while
`crossed_representation` exposes the same triple to the generic evaluator in
`toeplitz`; the two paths are independent, which the tests exploit.  The map
kills the full-ideal relation generators, so it is well defined on the
Cuntz-Pimsner quotient; that too is a verified property, not an assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cpring import ContextMismatch, CpContext, CpElement
from .exactlin import (
    frac,
    mat_identity,
    mat_transpose,
    matmul,
    matvec,
    unit_vec,
    vec_add,
    vec_scale,
    zero_vec,
)
from .rsystem import RSystem
from .tensorpow import DEFAULT_CAP, _system_store, tensor_space, tensor_split
from .toeplitz import SystemMismatch, ToeplitzElement, component_space

__all__ = [
    "CrossedElement",
    "CrossedRepresentation",
    "cp_to_crossed",
    "cross_mul",
    "crossed_representation",
    "permutation_matrix",
    "phi_power",
    "toeplitz_to_crossed",
]


def permutation_matrix(perm) -> list[list[Fraction]]:
    """Automorphism matrix sending e_j to e_{perm[j]} on the diagonal ring."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    return [
        [Fraction(1) if perm[j] == i else Fraction(0) for j in range(n)]
        for i in range(n)
    ]


def _require_automorphism(system: RSystem):
    if getattr(system, "phi", None) is None:
        raise SystemMismatch(
            "crossed products need an automorphism system (build_automorphism_system)"
        )


def phi_power(system: RSystem, k: int):
    """Cached matrix of phi^k (negative k through the stored inverse)."""
    _require_automorphism(system)
    k = int(k)
    store = _system_store(system)
    key = ("phi-pow", k)
    if key in store:
        return store[key]
    if k == 0:
        out = mat_identity(system.ring.dim)
    elif k > 0:
        out = matmul(system.phi, phi_power(system, k - 1))
    else:
        out = matmul(system.phi_inv, phi_power(system, k + 1))
    store[key] = out
    return out


class CrossedElement:
    """Finitely supported map k -> coefficient of [., k] (coordinates in R)."""

    __slots__ = ("system", "terms")

    def __init__(self, system: RSystem, terms=None):
        _require_automorphism(system)
        self.system = system
        clean = {}
        if terms:
            for k, v in terms.items():
                v = tuple(frac(c) for c in v)
                if len(v) != system.ring.dim:
                    raise ValueError(
                        f"coefficient of [., {k}] has length {len(v)}, ring has dim {system.ring.dim}"
                    )
                if any(c != 0 for c in v):
                    clean[int(k)] = v
        self.terms = clean

    @classmethod
    def zero(cls, system: RSystem) -> "CrossedElement":
        return cls(system, {})

    def is_zero(self) -> bool:
        return not self.terms

    def support(self):
        return sorted(self.terms)

    def coefficient(self, k: int):
        return list(self.terms.get(int(k), zero_vec(self.system.ring.dim)))

    def _check(self, other: "CrossedElement"):
        if other.system is not self.system:
            raise SystemMismatch("operands belong to different systems")

    def __add__(self, other: "CrossedElement") -> "CrossedElement":
        self._check(other)
        out = {k: list(v) for k, v in self.terms.items()}
        for k, v in other.terms.items():
            out[k] = vec_add(out[k], v) if k in out else list(v)
        return CrossedElement(self.system, out)

    def __sub__(self, other: "CrossedElement") -> "CrossedElement":
        return self + (-other)

    def __rmul__(self, c) -> "CrossedElement":
        c = frac(c)
        return CrossedElement(
            self.system, {k: vec_scale(c, list(v)) for k, v in self.terms.items()}
        )

    def __neg__(self) -> "CrossedElement":
        return self.__rmul__(-1)

    def __mul__(self, other: "CrossedElement") -> "CrossedElement":
        if not isinstance(other, CrossedElement):
            return NotImplemented
        return cross_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CrossedElement):
            return NotImplemented
        return self.system is other.system and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((id(self.system), frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "CrossedElement(0)"
        bits = ", ".join(f"[{list(v)}, {k}]" for k, v in sorted(self.terms.items()))
        return f"CrossedElement({bits})"


def cross_mul(a: CrossedElement, b: CrossedElement) -> CrossedElement:
    """Bilinear extension of [r1,k1][r2,k2] = [r1 phi^{k1}(r2), k1+k2]."""
    a._check(b)
    ring = a.system.ring
    acc: dict[int, list[Fraction]] = {}
    for k1, r1 in a.terms.items():
        for k2, r2 in b.terms.items():
            w = ring.multiply(list(r1), matvec(phi_power(a.system, k1), list(r2)))
            k = k1 + k2
            acc[k] = vec_add(acc[k], w) if k in acc else w
    return CrossedElement(a.system, acc)


# ---------------------------------------------------------------------------
# Collapse of graded Toeplitz components into Laurent degrees
# ---------------------------------------------------------------------------


def _leg_collapse(system: RSystem, side: str, level: int, cap: int = DEFAULT_CAP):
    """Matrix taking level-`level` tensor coordinates to the ring part of the
    crossed-product word (degree -level for Q, +level for P)."""
    _require_automorphism(system)
    store = _system_store(system)
    key = ("crossed-leg", side, level)
    if key in store:
        return store[key]
    d = system.ring.dim
    if level <= 1:
        out = mat_identity(d)
    else:
        prev = _leg_collapse(system, side, level - 1, cap=cap)
        twist = phi_power(system, -1 if side == "Q" else 1)
        shifted = mat_transpose(matmul(twist, prev))  # rows = collapsed tails
        split = tensor_split(system, side, 1, level - 1, cap=cap)
        dim_prev = tensor_space(system, side, level - 1, cap=cap).dim
        dim_lvl = tensor_space(system, side, level, cap=cap).dim
        cols = []
        for c in range(dim_lvl):
            acc = zero_vec(d)
            for idx in range(len(split)):
                coeff = split[idx][c]
                if coeff == 0:
                    continue
                i, t = divmod(idx, dim_prev)
                head = unit_vec(d, i)
                acc = vec_add(
                    acc, vec_scale(coeff, system.ring.multiply(head, shifted[t]))
                )
            cols.append(acc)
        out = mat_transpose(cols)
    store[key] = out
    return out


def toeplitz_to_crossed(x: ToeplitzElement, cap: int = 2 * DEFAULT_CAP) -> CrossedElement:
    """Word-collapse of a Toeplitz element; grade (m, n) lands at degree n-m."""
    system = x.system
    _require_automorphism(system)
    d = system.ring.dim
    acc: dict[int, list[Fraction]] = {}

    def put(k: int, w):
        if any(c != 0 for c in w):
            acc[k] = vec_add(acc[k], w) if k in acc else list(w)

    for (m, n) in x.support():
        v = list(x.comps[(m, n)])
        if m == 0 and n == 0:
            put(0, v)
            continue
        if n == 0:
            put(-m, matvec(_leg_collapse(system, "Q", m, cap=cap), v))
            continue
        if m == 0:
            put(n, matvec(_leg_collapse(system, "P", n, cap=cap), v))
            continue
        comp = component_space(system, m, n, cap=cap)
        if comp.dim == 0:
            continue
        raw = matvec(comp.sect, v)  # representative in Q^m (x) P^n
        dp = tensor_space(system, "P", n, cap=cap).dim
        q_cols = mat_transpose(_leg_collapse(system, "Q", m, cap=cap))
        p_cols = mat_transpose(
            matmul(phi_power(system, -m), _leg_collapse(system, "P", n, cap=cap))
        )
        w = zero_vec(d)
        for idx, coeff in enumerate(raw):
            if coeff == 0:
                continue
            a, b = divmod(idx, dp)
            w = vec_add(w, vec_scale(coeff, system.ring.multiply(q_cols[a], p_cols[b])))
        put(n - m, w)
    return CrossedElement(system, acc)


def cp_to_crossed(ctx: CpContext, x) -> CrossedElement:
    """Image of a Cuntz-Pimsner class in the crossed product R x_phi Z.

    Requires a context over an automorphism system with J = R (the relation
    ideal of the full ideal is exactly what the collapse kills).  Accepts a
    CpElement of that context or a raw ToeplitzElement representative.
    """
    system = ctx.system
    if getattr(system, "phi", None) is None:
        raise ContextMismatch("context system was not built from a ring automorphism")
    if ctx.j.ideal.dim != system.ring.dim:
        raise ContextMismatch("the crossed-product realization needs J = R")
    if isinstance(x, CpElement):
        if x.context is not ctx:
            raise ContextMismatch("element belongs to a different context")
        rep = x.rep
    elif isinstance(x, ToeplitzElement):
        if x.system is not system:
            raise ContextMismatch("element belongs to a different system")
        rep = x
    else:
        raise TypeError(f"expected CpElement or ToeplitzElement, got {type(x).__name__}")
    return toeplitz_to_crossed(rep, cap=ctx.cap)


@dataclass(eq=False)
class CrossedRepresentation:
    """The covariant triple sigma(r)=[r,0], T(q)=[q,-1], S(p)=[p,1].

    Duck-typed for `toeplitz.evaluate` / `toeplitz.check_representation`;
    gives a second, independent route from Toeplitz words into the crossed
    product (the generic evaluator knows nothing about the collapse rule).
    """

    system: RSystem

    def sigma(self, r) -> CrossedElement:
        return CrossedElement(self.system, {0: list(r)})

    def t(self, q) -> CrossedElement:
        return CrossedElement(self.system, {-1: list(q)})

    def s(self, p) -> CrossedElement:
        return CrossedElement(self.system, {1: list(p)})


def crossed_representation(system: RSystem) -> CrossedRepresentation:
    _require_automorphism(system)
    return CrossedRepresentation(system)

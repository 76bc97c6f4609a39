"""T-pairs, quotient systems, and the graded-ideal correspondence.

A two-sided ideal I of R is psi-invariant when psi(p (x) x q) lands back in I;
that is exactly what makes the quotient data R/I, Q/QI, P/IP, psi_I an
R-system again.  A T-pair (I, J) couples such an I with an ideal J whose image
in R/I is psi_I-compatible and faithful; these index the graded two-sided
ideals of the relative Cuntz-Pimsner rings.  The correspondence is realized
intensionally: an ideal handle answers membership by projecting an element
into the quotient system's Toeplitz ring and asking whether it dies in the
quotient CP ring, and the backward map recovers (I, J) from stabilized
relation spans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .exactlin import (
    QuotientSpace,
    Subspace,
    kernel,
    kron,
    mat_transpose,
    matmul,
    matvec,
    preimage,
    unit_vec,
    zero_vec,
)
from .cpring import (
    CpContext,
    stable_relation_span,
    validate_ideal,
    _coords_in_layout,
    _core_generator,
)
from .rsystem import (
    Pairing,
    RSystem,
    StructuredBimodule,
    StructuredRing,
    validate_axioms,
)
from .tensorpow import DEFAULT_CAP, tensor_space
from .toeplitz import ToeplitzElement, component_space, embed

__all__ = [
    "HypothesisViolated",
    "IdealHandle",
    "NotInvariant",
    "NotTwoSided",
    "QuotientSystem",
    "TPair",
    "enumerate_tpairs",
    "extract_tpair_from_handle",
    "graded_ideal_correspondence",
    "ideal_closure",
    "is_psi_invariant",
    "is_two_sided",
    "lattice_dot",
    "lattice_json",
    "quotient_system",
    "tpair_join",
    "tpair_le",
    "tpair_meet",
    "validate_tpair",
]


class NotTwoSided(ValueError):
    """The subspace is not a two-sided ideal of R."""


class NotInvariant(ValueError):
    """The ideal is not psi-invariant (or the quotient actions fail to descend)."""


class HypothesisViolated(ValueError):
    """The correspondence needs K contained in the pair's J."""


# ---------------------------------------------------------------------------
# invariant ideals


def is_two_sided(system: RSystem, space: Subspace) -> bool:
    ring = system.ring
    for k in space.basis():
        for i in range(ring.dim):
            e = unit_vec(ring.dim, i)
            if not space.contains(matvec(ring.left_matrix(e), k)):
                return False
            if not space.contains(matvec(ring.right_matrix(e), k)):
                return False
    return True


def is_psi_invariant(system: RSystem, i: Subspace, *, check_two_sided: bool = True) -> bool:
    """psi(p (x) x.q) in I for all basis p, q and x in I."""
    if check_two_sided and not is_two_sided(system, i):
        raise NotTwoSided("psi-invariance is only defined for two-sided ideals")
    dq, dp = system.q.dim, system.p.dim
    for x in i.basis():
        for b in range(dq):
            xq = system.q.act_left(x, unit_vec(dq, b))
            for a in range(dp):
                val = system.psi.apply(unit_vec(dp, a), xq)
                if not i.contains(val):
                    return False
    return True


def ideal_closure(system: RSystem, space: Subspace) -> Subspace:
    """Smallest two-sided psi-invariant ideal containing the space."""
    ring = system.ring
    d = ring.dim
    dq, dp = system.q.dim, system.p.dim
    cur = space
    while True:
        rows = [list(v) for v in cur.basis()]
        grown = list(rows)
        for k in rows:
            for i in range(d):
                e = unit_vec(d, i)
                grown.append(matvec(ring.left_matrix(e), k))
                grown.append(matvec(ring.right_matrix(e), k))
            for b in range(dq):
                xq = system.q.act_left(k, unit_vec(dq, b))
                for a in range(dp):
                    grown.append(system.psi.apply(unit_vec(dp, a), xq))
        nxt = Subspace(d, grown)
        if nxt.dim == cur.dim:
            return nxt
        cur = nxt


# ---------------------------------------------------------------------------
# quotient systems


@dataclass(eq=False)
class QuotientSystem:
    parent: RSystem
    i: Subspace
    system: RSystem
    proj_r: list
    sect_r: list
    proj_q: list
    sect_q: list
    proj_p: list
    sect_p: list

    def project_ring(self, r: Sequence) -> list:
        return matvec(self.proj_r, list(r))

    def project_subspace(self, space: Subspace) -> Subspace:
        return Subspace(self.system.ring.dim,
                        [self.project_ring(b) for b in space.basis()])

    def lift_subspace(self, space: Subspace) -> Subspace:
        """Full preimage in R of a subspace of R/I (always contains I)."""
        if self.system.ring.dim == 0:
            # R/I = 0: the projection matrix is empty and every element of R
            # lands in the (zero) subspace, so the preimage is all of R.
            return Subspace.full(self.parent.ring.dim)
        return preimage(self.proj_r, space)


def _acting_quotient(ambient_dim, killed_rows, labels):
    sub = Subspace(ambient_dim, killed_rows)
    quo = QuotientSpace(sub)
    proj = quo.projection_matrix()
    sect = quo.section_matrix()
    kept = [labels[c] for c in quo.free]
    return quo, proj, sect, kept


def quotient_system(system: RSystem, i: Subspace, *, name: Optional[str] = None) -> QuotientSystem:
    """R/I, Q/QI, P/IP with the induced actions and pairing, validated."""
    if not is_two_sided(system, i):
        raise NotTwoSided("quotients need a two-sided ideal")
    if not is_psi_invariant(system, i, check_two_sided=False):
        raise NotInvariant("quotients need a psi-invariant ideal")

    ring, q, p = system.ring, system.q, system.p
    d, dq, dp = ring.dim, q.dim, p.dim
    ibasis = [list(v) for v in i.basis()]

    _, proj_r, sect_r, r_labels = _acting_quotient(d, ibasis, list(ring.labels))
    qi_rows = [q.act_right(unit_vec(dq, b), x) for x in ibasis for b in range(dq)]
    _, proj_q, sect_q, q_labels = _acting_quotient(dq, qi_rows, list(q.labels))
    ip_rows = [p.act_left(x, unit_vec(dp, a)) for x in ibasis for a in range(dp)]
    _, proj_p, sect_p, p_labels = _acting_quotient(dp, ip_rows, list(p.labels))

    # the induced R/I actions exist only when IQ <= QI and PI <= IP
    for x in ibasis:
        for row in matmul(proj_q, q.left_matrix(x)):
            if any(c != 0 for c in row):
                raise NotInvariant("IQ is not contained in QI: left action does not descend")
        for row in matmul(proj_p, p.right_matrix(x)):
            if any(c != 0 for c in row):
                raise NotInvariant("PI is not contained in IP: right action does not descend")

    dr2 = len(proj_r) if proj_r else 0
    mult = [[matvec(proj_r, ring.multiply(
        matvec(sect_r, unit_vec(dr2, a)), matvec(sect_r, unit_vec(dr2, b))))
        for b in range(dr2)] for a in range(dr2)]
    ring2 = StructuredRing(r_labels, mult)

    def induced(proj, sect, mats):
        out = []
        for a in range(dr2):
            lift = matvec(sect_r, unit_vec(dr2, a))
            acting = None
            for idx, c in enumerate(lift):
                if c != 0:
                    scaled = [[c * x for x in row] for row in mats[idx]]
                    acting = scaled if acting is None else [
                        [u + v for u, v in zip(r1, r2)] for r1, r2 in zip(acting, scaled)]
            if acting is None:
                dim_src = len(mats[0]) if mats else 0
                acting = [[0] * dim_src for _ in range(dim_src)]
            out.append(matmul(proj, matmul(acting, sect)))
        return out

    q2 = StructuredBimodule(q_labels, induced(proj_q, sect_q, q.left),
                            induced(proj_q, sect_q, q.right))
    p2 = StructuredBimodule(p_labels, induced(proj_p, sect_p, p.left),
                            induced(proj_p, sect_p, p.right))

    dq2, dp2 = q2.dim, p2.dim
    table = [[matvec(proj_r, system.psi.apply(
        matvec(sect_p, unit_vec(dp2, a)), matvec(sect_q, unit_vec(dq2, b))))
        for b in range(dq2)] for a in range(dp2)]
    psi2 = Pairing(table)

    quotient = RSystem(ring2, p2, q2, psi2, name=name or f"{system.name}/I")
    report = validate_axioms(quotient)
    if not report.ok:
        raise NotInvariant("quotient fails system axioms: " + "; ".join(report.failures))
    return QuotientSystem(system, i, quotient, proj_r, sect_r,
                          proj_q, sect_q, proj_p, sect_p)


# ---------------------------------------------------------------------------
# T-pairs


@dataclass(eq=False)
class TPair:
    i: Subspace
    j: Subspace
    flags: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        required = ("i_two_sided", "i_psi_invariant", "i_in_j",
                    "quotient_compatible", "quotient_faithful")
        return all(self.flags.get(k, False) for k in required)

    def __repr__(self):
        return f"TPair(dim i={self.i.dim}, dim j={self.j.dim}, ok={self.ok})"


def validate_tpair(system: RSystem, i: Subspace, j: Subspace) -> TPair:
    flags = {
        "i_two_sided": is_two_sided(system, i),
        "i_in_j": i.le(j),
        "j_two_sided": is_two_sided(system, j),
    }
    flags["i_psi_invariant"] = (
        flags["i_two_sided"] and is_psi_invariant(system, i, check_two_sided=False))
    if flags["i_two_sided"] and flags["i_psi_invariant"]:
        qs = quotient_system(system, i)
        jq = validate_ideal(qs.system, qs.project_subspace(j))
        flags["quotient_two_sided"] = jq.is_two_sided
        flags["quotient_compatible"] = jq.is_psi_compatible
        flags["quotient_faithful"] = jq.is_faithful
    else:
        flags["quotient_two_sided"] = False
        flags["quotient_compatible"] = False
        flags["quotient_faithful"] = False
    return TPair(i, j, flags)


def tpair_le(a: TPair, b: TPair) -> bool:
    return a.i.le(b.i) and a.j.le(b.j)


def tpair_meet(a: TPair, b: TPair) -> TPair:
    return TPair(a.i.intersect(b.i), a.j.intersect(b.j))


def tpair_join(system: RSystem, a: TPair, b: TPair, cap: int = DEFAULT_CAP) -> TPair:
    """Smallest T-pair above both, via the coproduct recipe.

    J is the ideal generated by both j's (and the closed-up i's); I collects
    the x in J whose Delta_I eventually vanishes on the quotient tensor powers
    while every intermediate image stays inside Q_I^m . J_I.  The nilpotency
    search runs to the level cap; `truncation_risk` is set when the kernel
    chain is still growing there.
    """
    i0 = ideal_closure(system, a.i.add(b.i))
    jt = _two_sided_saturate(system, a.j.add(b.j).add(i0))
    qs = quotient_system(system, i0)
    qsys = qs.system
    d2 = qsys.ring.dim
    j_img = qs.project_subspace(jt)

    stabilized = False
    cond = Subspace.full(d2)  # running condition (b), levels below the current one
    candidates = Subspace(d2)
    prev_dim = None
    for n in range(1, cap + 1):
        lvl = tensor_space(qsys, "Q", n, cap=cap)
        dmat_cols = [_flatten(lvl.left[idx]) for idx in range(d2)]
        dmat = mat_transpose(dmat_cols) if lvl.dim else []
        ker_n = Subspace(d2, kernel(dmat)) if dmat else Subspace.full(d2)
        candidates = candidates.add(j_img.intersect(ker_n).intersect(cond))
        if prev_dim is not None and ker_n.dim == prev_dim:
            stabilized = True  # the kernel chain is monotone, so it has settled
            break
        prev_dim = ker_n.dim
        cond = cond.intersect(_delta_into_qj(qsys, j_img, n, cap))
    truncation_risk = not stabilized

    i_join = qs.lift_subspace(candidates)
    pair = validate_tpair(system, i_join, jt)
    pair.flags["truncation_risk"] = truncation_risk
    return pair


def _two_sided_saturate(system: RSystem, space: Subspace) -> Subspace:
    ring = system.ring
    d = ring.dim
    cur = space
    while True:
        rows = [list(v) for v in cur.basis()]
        grown = list(rows)
        for k in rows:
            for i in range(d):
                e = unit_vec(d, i)
                grown.append(matvec(ring.left_matrix(e), k))
                grown.append(matvec(ring.right_matrix(e), k))
        nxt = Subspace(d, grown)
        if nxt.dim == cur.dim:
            return nxt
        cur = nxt


def _flatten(m) -> list:
    return [ent for row in m for ent in row]


def _delta_into_qj(qsys: RSystem, j_img: Subspace, n: int, cap: int) -> Subspace:
    """{x in R_I : Delta^n(x)(Q_I^n) <= Q_I^n . J_I}, exactly."""
    d2 = qsys.ring.dim
    lvl = tensor_space(qsys, "Q", n, cap=cap)
    if lvl.dim == 0:
        return Subspace.full(d2)
    w_rows = []
    for u in range(lvl.dim):
        for x in j_img.basis():
            w_rows.append(lvl.act_right(unit_vec(lvl.dim, u), list(x)))
    w = Subspace(lvl.dim, w_rows)
    qw = QuotientSpace(w)
    qproj = qw.projection_matrix()
    cols = []
    for idx in range(d2):
        stacked = []
        for u in range(lvl.dim):
            img = matvec(lvl.left[idx], unit_vec(lvl.dim, u))
            stacked.extend(matvec(qproj, img) if qw.dim else [])
        cols.append(stacked)
    if not cols or not cols[0]:
        return Subspace.full(d2)
    return Subspace(d2, kernel(mat_transpose(cols)))


# ---------------------------------------------------------------------------
# graded-ideal correspondence


@dataclass(eq=False)
class IdealHandle:
    """Intensional handle on the graded ideal H_omega of the relative CP ring.

    Membership: project into the quotient system's Toeplitz ring, then test
    vanishing in the quotient CP ring.  Generator list: iota_R of the i-part
    plus the covariance defects of the j-part (where theta-decomposable over
    the parent).
    """

    context: CpContext
    tpair: TPair
    quotient: QuotientSystem
    qctx: CpContext
    _level_maps: dict = field(default_factory=dict, init=False, repr=False)
    _comp_maps: dict = field(default_factory=dict, init=False, repr=False)

    def _level_map(self, side: str, n: int):
        key = (side, n)
        if key in self._level_maps:
            return self._level_maps[key]
        qs = self.quotient
        if n == 0:
            out = qs.proj_r
        elif n == 1:
            out = qs.proj_q if side == "Q" else qs.proj_p
        else:
            src = tensor_space(self.context.system, side, n, cap=self.context.cap)
            dst = tensor_space(qs.system, side, n, cap=self.context.cap)
            prev = self._level_map(side, n - 1)
            one = self._level_map(side, 1)
            out = matmul(dst.proj, matmul(kron(prev, one), src.sect)) if dst.dim else \
                [[0] * src.dim for _ in range(0)]
        self._level_maps[key] = out
        return out

    def _comp_map(self, m: int, n: int):
        key = (m, n)
        if key in self._comp_maps:
            return self._comp_maps[key]
        src = component_space(self.context.system, m, n)
        dst = component_space(self.quotient.system, m, n)
        if dst.dim == 0 or src.dim == 0:
            out = [[0] * src.dim for _ in range(dst.dim)]
        elif n == 0:
            out = self._level_map("Q", m)
        elif m == 0:
            out = self._level_map("P", n)
        else:
            big = kron(self._level_map("Q", m), self._level_map("P", n))
            out = matmul(dst.proj, matmul(big, src.sect))
        self._comp_maps[key] = out
        return out

    def project_element(self, x: ToeplitzElement) -> ToeplitzElement:
        comps = {}
        for (m, n), v in x.comps.items():
            mapped = matvec(self._comp_map(m, n), list(v))
            if any(c != 0 for c in mapped):
                comps[(m, n)] = mapped
        return ToeplitzElement(self.quotient.system, comps)

    def contains(self, x: ToeplitzElement) -> bool:
        from .cpring import in_relation_ideal

        return in_relation_ideal(self.qctx, self.project_element(x))

    def generators(self) -> list[ToeplitzElement]:
        system = self.context.system
        gens = [embed(system, "R", list(v)) for v in self.tpair.i.basis()]
        for v in self.tpair.j.basis():
            if self.context.j.ideal.contains(v) or self.tpair.i.contains(v):
                continue
            try:
                gens.append(_core_generator(self.context, list(v)))
            except ValueError:
                pass  # not theta-decomposable over the parent; membership still works
        return gens


def graded_ideal_correspondence(ctx: CpContext, tpair: TPair) -> IdealHandle:
    """The graded ideal of O(K) attached to a T-pair (I, J) with K <= J."""
    if not ctx.j.ideal.le(tpair.j):
        raise HypothesisViolated("the context ideal K must sit inside the pair's J")
    if not tpair.flags:
        tpair = validate_tpair(ctx.system, tpair.i, tpair.j)
    if not tpair.ok:
        raise ValueError("not a T-pair: " +
                         ", ".join(k for k, v in tpair.flags.items() if not v))
    qs = quotient_system(ctx.system, tpair.i)
    jq = validate_ideal(qs.system, qs.project_subspace(tpair.j))
    qctx = CpContext(qs.system, jq, slack=ctx.slack, cap=ctx.cap)
    return IdealHandle(ctx, tpair, qs, qctx)


def extract_tpair_from_handle(handle: IdealHandle) -> TPair:
    """Recover (I, J) from the handle by stabilized linear membership.

    I = { r : iota_R(r) in H }; J = { r : iota_R(r) in H + pi(F_P(Q)) },
    both computed in the quotient system and lifted back to R.
    """
    qctx = handle.qctx
    qsys = qctx.system
    d2 = qsys.ring.dim
    offsets, total, span = stable_relation_span(qctx, 0, 1)

    if total == 0:
        i_bar = Subspace.full(d2)
        j_bar = Subspace.full(d2)
    else:
        cols = []
        for r in range(d2):
            x = embed(qsys, "R", unit_vec(d2, r))
            v = _coords_in_layout(x, offsets, total)
            cols.append(v if v is not None else zero_vec(total))
        place = mat_transpose(cols)
        i_bar = preimage(place, span)
        extra = []
        cs = component_space(qsys, 1, 1)
        if (1, 1) in offsets and cs.dim:
            for c in range(cs.dim):
                el = ToeplitzElement(qsys, {(1, 1): unit_vec(cs.dim, c)})
                v = _coords_in_layout(el, offsets, total)
                if v is not None:
                    extra.append(v)
        j_bar = preimage(place, span.add(Subspace(total, extra)))
    qs = handle.quotient
    return TPair(qs.lift_subspace(i_bar), qs.lift_subspace(j_bar))


# ---------------------------------------------------------------------------
# enumeration (idempotent-diagonal coefficient rings)


def _diagonal_idempotents(ring: StructuredRing) -> bool:
    d = ring.dim
    for i in range(d):
        for j in range(d):
            want = unit_vec(d, i) if i == j else zero_vec(d)
            if list(ring.mult[i][j]) != want:
                return False
    return True


def enumerate_tpairs(system: RSystem) -> list[TPair]:
    """All T-pairs, for systems over a diagonal ring of orthogonal idempotents.

    Over such rings every two-sided ideal is spanned by a subset of the basis
    idempotents, so the search over subsets is exhaustive.
    """
    ring = system.ring
    if not _diagonal_idempotents(ring):
        raise NotImplementedError("exhaustive T-pair enumeration needs a diagonal ring")
    d = ring.dim
    out = []
    for imask in range(1 << d):
        ivecs = [unit_vec(d, t) for t in range(d) if imask >> t & 1]
        i = Subspace(d, ivecs)
        if not is_psi_invariant(system, i, check_two_sided=False):
            continue
        for jmask in range(1 << d):
            if jmask & imask != imask:
                continue
            jvecs = [unit_vec(d, t) for t in range(d) if jmask >> t & 1]
            pair = validate_tpair(system, i, Subspace(d, jvecs))
            if pair.ok:
                out.append(pair)
    return out


# ---------------------------------------------------------------------------
# lattice export


def _basis_lists(space: Subspace) -> list[list[str]]:
    return [[str(c) for c in row] for row in space.basis()]


def lattice_json(system: RSystem, tpairs: Sequence[TPair]) -> dict:
    """Nodes with (i, j) bases and Hasse edges of the componentwise order."""
    n = len(tpairs)
    le = [[tpair_le(tpairs[a], tpairs[b]) for b in range(n)] for a in range(n)]
    edges = []
    for a in range(n):
        for b in range(n):
            if a == b or not le[a][b]:
                continue
            if any(c != a and c != b and le[a][c] and le[c][b] for c in range(n)):
                continue
            edges.append([a, b])
    nodes = [{"i_basis": _basis_lists(t.i), "j_basis": _basis_lists(t.j),
              "i_dim": t.i.dim, "j_dim": t.j.dim} for t in tpairs]
    return {"system": system.name, "nodes": nodes, "hasse_edges": edges}


def lattice_dot(system: RSystem, tpairs: Sequence[TPair]) -> str:
    data = lattice_json(system, tpairs)
    lines = ["digraph tpairs {", "  rankdir=BT;"]
    for idx, node in enumerate(data["nodes"]):
        label = f"i:{node['i_dim']} j:{node['j_dim']}"
        lines.append(f'  n{idx} [label="{label}"];')
    for a, b in data["hasse_edges"]:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines)

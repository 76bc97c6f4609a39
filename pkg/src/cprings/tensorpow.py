"""Balanced tensor powers of the module legs and the iterated pairing.

Level n of a leg M (side 'P' or 'Q') is built by appending:

    M^0 = R,   M^n = (M^(n-1) (x)_F M) / <(x.r) (x) y - x (x) (r.y)>

so a level carries a projection from and a section into the ambient Kronecker
coordinates of level (n-1) times level 1, plus induced left/right R-action
matrices.  Level 0 is R with its own multiplication as both actions.

`tensor_embed(system, side, k, l)` is the concatenation map
M^k (x) M^l -> M^(k+l) on Kronecker coordinates; for k=0 / l=0 it degenerates
to the module action, and for k=l=0 to ring multiplication.  `tensor_split`
is an exact right inverse (concatenations span every level, so the embed is
onto).  Downstream consumers only ever compose a split with maps that factor
through the balanced tensor product, so the choice of section is invisible.

`psi_n` iterates the pairing:

    psi_0(r1 (x) r2) = r1 r2,   psi_1 = psi,
    psi_n((p1 (x) p2) (x) (q1 (x) q2)) = psi(p1 . psi_(n-1)(p2 (x) q1) (x) q2)

with p1 in P, p2 in P^(n-1), q1 in Q^(n-1), q2 in Q; computationally the left
factor is split at (1, n-1) and the right factor at (n-1, 1).

Everything is memoized per system (identity-keyed); with CP_RINGS_CACHE_DIR
set, level data and psi tables are also cached on disk, content-addressed by
a hash of the system presentation.
"""

from __future__ import annotations

import hashlib
import json
import os
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactlin import (
    Subspace,
    QuotientSpace,
    kron,
    kron_vec,
    mat_identity,
    mat_transpose,
    matmul,
    matvec,
    solve_matrix,
    unit_vec,
    vec_add,
    vec_scale,
    zero_vec,
)
from .rsystem import RSystem, system_to_json

DEFAULT_CAP = 6


class CapExceeded(RuntimeError):
    """A tensor level beyond the configured cap was requested."""


@dataclass(eq=False)
class TensorSpace:
    system: RSystem
    side: str  # 'P' or 'Q'
    level: int
    dim: int
    proj: list | None  # (dim_{n-1} * d) -> dim, None for level <= 1
    sect: list | None
    left: tuple  # per ring basis element, dim x dim
    right: tuple

    def act_left(self, r: Sequence[Fraction], x: Sequence[Fraction]) -> list[Fraction]:
        out = zero_vec(self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                out = vec_add(out, vec_scale(ri, matvec(self.left[i], x)))
        return out

    def act_right(self, x: Sequence[Fraction], r: Sequence[Fraction]) -> list[Fraction]:
        out = zero_vec(self.dim)
        for i, ri in enumerate(r):
            if ri != 0:
                out = vec_add(out, vec_scale(ri, matvec(self.right[i], x)))
        return out

    def __repr__(self) -> str:
        return f"TensorSpace({self.side}^{self.level}, dim {self.dim})"


@dataclass(frozen=True)
class ModuleElement:
    """An element of P^(x)n or Q^(x)n in canonical level coordinates."""

    system: RSystem
    side: str
    level: int
    coords: tuple

    def add(self, other: "ModuleElement") -> "ModuleElement":
        if (self.system, self.side, self.level) != (other.system, other.side, other.level):
            raise ValueError("elements live in different tensor spaces")
        return ModuleElement(self.system, self.side, self.level, tuple(vec_add(self.coords, other.coords)))

    def scale(self, c) -> "ModuleElement":
        return ModuleElement(self.system, self.side, self.level, tuple(vec_scale(c, self.coords)))

    def tensor(self, other: "ModuleElement") -> "ModuleElement":
        if self.system is not other.system or self.side != other.side:
            raise ValueError("can only concatenate along one leg of one system")
        e = tensor_embed(self.system, self.side, self.level, other.level)
        coords = matvec(e, kron_vec(self.coords, other.coords))
        return ModuleElement(self.system, self.side, self.level + other.level, tuple(coords))


_cache: "weakref.WeakKeyDictionary[RSystem, dict]" = weakref.WeakKeyDictionary()


def _system_store(system: RSystem) -> dict:
    store = _cache.get(system)
    if store is None:
        store = {"hash": None}
        _cache[system] = store
    return store


def _system_hash(system: RSystem) -> str:
    store = _system_store(system)
    if store["hash"] is None:
        blob = json.dumps(system_to_json(system), sort_keys=True).encode()
        store["hash"] = hashlib.sha256(blob).hexdigest()[:24]
    return store["hash"]


_MAGIC = b"CPRT\x01"


def _disk_path(system: RSystem, tag: str) -> str | None:
    root = os.environ.get("CP_RINGS_CACHE_DIR")
    if not root:
        return None
    os.makedirs(root, exist_ok=True)
    return os.path.join(root, f"{_system_hash(system)}-{tag}.cpt")


def _encode_frac_tree(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_encode_frac_tree(v) for v in x]
    if isinstance(x, dict):
        return {k: _encode_frac_tree(v) for k, v in x.items()}
    if x is None or isinstance(x, int):
        return x
    raise TypeError(f"cannot encode {type(x)}")


def _decode_frac_tree(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, list):
        return [_decode_frac_tree(v) for v in x]
    if isinstance(x, dict):
        return {k: _decode_frac_tree(v) for k, v in x.items()}
    return x


def _disk_write(path: str, payload) -> None:
    data = json.dumps(_encode_frac_tree(payload)).encode()
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(data)
    os.replace(tmp, path)


def _disk_read(path: str):
    try:
        with open(path, "rb") as fh:
            head = fh.read(len(_MAGIC))
            if head != _MAGIC:
                return None
            return _decode_frac_tree(json.loads(fh.read().decode()))
    except (OSError, ValueError):
        return None


def _module_of(system: RSystem, side: str):
    if side == "Q":
        return system.q
    if side == "P":
        return system.p
    raise ValueError(f"side must be 'P' or 'Q', got {side!r}")


def tensor_space(system: RSystem, side: str, n: int, cap: int = DEFAULT_CAP) -> TensorSpace:
    if n < 0:
        raise ValueError("negative tensor level")
    if n > cap:
        raise CapExceeded(f"tensor level {n} exceeds cap {cap}")
    store = _system_store(system)
    key = ("space", side, n)
    if key in store:
        return store[key]

    ring = system.ring
    d_r = ring.dim
    if n == 0:
        left = tuple(ring.left_matrix(unit_vec(d_r, i)) for i in range(d_r))
        right = tuple(ring.right_matrix(unit_vec(d_r, i)) for i in range(d_r))
        space = TensorSpace(system, side, 0, d_r, None, None, left, right)
        store[key] = space
        return space
    mod = _module_of(system, side)
    if n == 1:
        space = TensorSpace(system, side, 1, mod.dim, None, None, mod.left, mod.right)
        store[key] = space
        return space

    prev = tensor_space(system, side, n - 1, cap=cap)
    d_prev, d_m = prev.dim, mod.dim

    path = _disk_path(system, f"{side}{n}")
    if path is not None and os.path.exists(path):
        data = _disk_read(path)
        if data is not None:
            space = TensorSpace(
                system, side, n, data["dim"], data["proj"], data["sect"],
                tuple(data["left"]), tuple(data["right"]),
            )
            store[key] = space
            return space

    # balancedness relations in the ambient Kronecker coordinates
    rel = []
    for a in range(d_prev):
        ea = unit_vec(d_prev, a)
        for i in range(d_r):
            # (x.e_i) (x) e_b - x (x) (e_i.e_b)
            right_x = matvec(prev.right[i], ea)
            for b in range(d_m):
                eb = unit_vec(d_m, b)
                left_y = matvec(mod.left[i], eb)
                v = kron_vec(right_x, eb)
                w = kron_vec(ea, left_y)
                rel.append([x - y for x, y in zip(v, w)])
    quot = QuotientSpace(Subspace(d_prev * d_m, rel))
    proj = quot.projection_matrix()
    sect = quot.section_matrix()

    left = []
    right = []
    for i in range(d_r):
        lat = kron(prev.left[i], mat_identity(d_m))
        left.append(matmul(proj, matmul(lat, sect)))
        rat = kron(mat_identity(d_prev), mod.right[i])
        right.append(matmul(proj, matmul(rat, sect)))

    space = TensorSpace(system, side, n, quot.dim, proj, sect, tuple(left), tuple(right))
    store[key] = space
    if path is not None:
        _disk_write(path, {
            "dim": space.dim, "proj": proj, "sect": sect,
            "left": list(left), "right": list(right),
        })
    return space


def tensor_embed(system: RSystem, side: str, k: int, l: int, cap: int = DEFAULT_CAP):
    """Concatenation matrix M^k (x) M^l -> M^(k+l) on Kronecker coordinates."""
    store = _system_store(system)
    key = ("embed", side, k, l)
    if key in store:
        return store[key]
    if k + l > cap:
        raise CapExceeded(f"tensor level {k + l} exceeds cap {cap}")

    ring = system.ring
    if tensor_space(system, side, k + l, cap=cap).dim == 0:
        out = []  # 0-row matrix: the target level vanished
    elif k == 0 and l == 0:
        cols = []
        for i in range(ring.dim):
            for j in range(ring.dim):
                cols.append(list(ring.mult[i][j]))
        out = mat_transpose(cols)
    elif l == 0:
        sp = tensor_space(system, side, k, cap=cap)
        cols = []
        for a in range(sp.dim):
            ea = unit_vec(sp.dim, a)
            for i in range(ring.dim):
                cols.append(sp.act_right(ea, unit_vec(ring.dim, i)))
        out = mat_transpose(cols)
    elif k == 0:
        sp = tensor_space(system, side, l, cap=cap)
        cols = []
        for i in range(ring.dim):
            ei = unit_vec(ring.dim, i)
            for b in range(sp.dim):
                cols.append(sp.act_left(ei, unit_vec(sp.dim, b)))
        out = mat_transpose(cols)
    elif l == 1:
        out = tensor_space(system, side, k + 1, cap=cap).proj
    else:
        top = tensor_space(system, side, l, cap=cap)
        d_m = _module_of(system, side).dim
        d_k = tensor_space(system, side, k, cap=cap).dim
        inner = tensor_embed(system, side, k, l - 1, cap=cap)
        glue = tensor_embed(system, side, k + l - 1, 1, cap=cap)
        out = matmul(glue, matmul(kron(inner, mat_identity(d_m)), kron(mat_identity(d_k), top.sect)))
    store[key] = out
    return out


def tensor_split(system: RSystem, side: str, k: int, l: int, cap: int = DEFAULT_CAP):
    """A right inverse of tensor_embed (exists because concatenations span)."""
    store = _system_store(system)
    key = ("split", side, k, l)
    if key in store:
        return store[key]
    target = tensor_space(system, side, k + l, cap=cap)
    if target.dim == 0:
        dk = tensor_space(system, side, k, cap=cap).dim
        dl = tensor_space(system, side, l, cap=cap).dim
        s = [[] for _ in range(dk * dl)]
        store[key] = s
        return s
    e = tensor_embed(system, side, k, l, cap=cap)
    s = solve_matrix(e, mat_identity(target.dim))
    if s is None:
        raise ArithmeticError(
            f"concatenation {side}^{k} (x) {side}^{l} -> {side}^{k+l} is not onto; "
            "the system violates the spanning property"
        )
    store[key] = s
    return s


def psi_n(system: RSystem, n: int, cap: int = DEFAULT_CAP):
    """Table of the iterated pairing: psi_n[a][b] in ring coordinates.

    Index a runs over the level-n P basis, b over the level-n Q basis.
    n = 0 is ring multiplication.
    """
    if n < 0:
        raise ValueError("negative pairing level")
    if n > cap:
        raise CapExceeded(f"pairing level {n} exceeds cap {cap}")
    store = _system_store(system)
    key = ("psi", n)
    if key in store:
        return store[key]

    ring = system.ring
    if n == 0:
        table = tuple(tuple(tuple(ring.mult[i][j]) for j in range(ring.dim)) for i in range(ring.dim))
        store[key] = table
        return table
    if n == 1:
        store[key] = system.psi.table
        return system.psi.table

    path = _disk_path(system, f"psi{n}")
    if path is not None and os.path.exists(path):
        data = _disk_read(path)
        if data is not None:
            table = tuple(tuple(tuple(cell) for cell in row) for row in data)
            store[key] = table
            return table

    prev = psi_n(system, n - 1, cap=cap)
    p_mod, q_mod = system.p, system.q
    pn = tensor_space(system, "P", n, cap=cap)
    qn = tensor_space(system, "Q", n, cap=cap)
    if pn.dim == 0 or qn.dim == 0:
        table = tuple(tuple() for _ in range(pn.dim))
        store[key] = table
        return table
    split_p = tensor_split(system, "P", 1, n - 1, cap=cap)  # p ~ p1 (x) p2
    split_q = tensor_split(system, "Q", n - 1, 1, cap=cap)  # q ~ q1 (x) q2
    d_pm, d_qm = p_mod.dim, q_mod.dim
    d_pprev = tensor_space(system, "P", n - 1, cap=cap).dim
    d_qprev = tensor_space(system, "Q", n - 1, cap=cap).dim

    split_p_cols = mat_transpose(split_p)
    split_q_cols = mat_transpose(split_q)

    table = []
    for a in range(pn.dim):
        pc = split_p_cols[a]  # index (i, a2) = i*d_pprev + a2
        row_out = []
        for b in range(qn.dim):
            qc = split_q_cols[b]  # index (b1, j) = b1*d_qm + j
            acc = zero_vec(ring.dim)
            for i in range(d_pm):
                for a2 in range(d_pprev):
                    c1 = pc[i * d_pprev + a2]
                    if c1 == 0:
                        continue
                    for b1 in range(d_qprev):
                        r_mid = prev[a2][b1]
                        for j in range(d_qm):
                            c2 = qc[b1 * d_qm + j]
                            if c2 == 0:
                                continue
                            # psi(p1 . r_mid (x) q2)
                            p_acted = p_mod.act_right(unit_vec(d_pm, i), r_mid)
                            val = system.psi.apply(p_acted, unit_vec(d_qm, j))
                            acc = vec_add(acc, vec_scale(c1 * c2, val))
            row_out.append(tuple(acc))
        table.append(tuple(row_out))
    table = tuple(table)
    store[key] = table
    if path is not None:
        _disk_write(path, [list(map(list, row)) for row in table])
    return table


def psi_apply(system: RSystem, n: int, p: Sequence[Fraction], q: Sequence[Fraction], cap: int = DEFAULT_CAP) -> list[Fraction]:
    table = psi_n(system, n, cap=cap)
    out = zero_vec(system.ring.dim)
    for a, pa in enumerate(p):
        if pa == 0:
            continue
        row = table[a]
        for b, qb in enumerate(q):
            if qb == 0:
                continue
            out = vec_add(out, vec_scale(pa * qb, row[b]))
    return out


def basis_element(system: RSystem, side: str, level: int, index: int, cap: int = DEFAULT_CAP) -> ModuleElement:
    sp = tensor_space(system, side, level, cap=cap)
    return ModuleElement(system, side, level, tuple(unit_vec(sp.dim, index)))


def path_element(system: RSystem, side: str, labels: Sequence[str], cap: int = DEFAULT_CAP) -> ModuleElement:
    """Concatenate level-1 basis elements named by labels (left to right)."""
    mod = _module_of(system, side)
    if not labels:
        raise ValueError("empty label path")
    out = basis_element(system, side, 1, mod.index(labels[0]), cap=cap)
    for lab in labels[1:]:
        out = out.tensor(basis_element(system, side, 1, mod.index(lab), cap=cap))
    return out

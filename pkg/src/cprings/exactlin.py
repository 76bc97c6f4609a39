"""Dense exact linear algebra over the rationals.

Everything in the package reduces to solving small exact linear systems, so
this module keeps the representation boring on purpose: a vector is a list of
`Fraction`, a matrix is a list of row vectors.  `Subspace` stores a reduced
row echelon basis and supports the handful of lattice operations the higher
layers need (sum, intersection, membership, canonical residuals).
`QuotientSpace` fixes the canonical complement spanned by the non-pivot
coordinates, which gives an exact section of the projection.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionMismatch(ValueError):
    """Raised when vector/matrix shapes do not line up."""


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to an exact rational")


def vec(entries: Iterable) -> list[Fraction]:
    return [frac(x) for x in entries]


def zero_vec(n: int) -> list[Fraction]:
    return [ZERO] * n


def unit_vec(n: int, i: int) -> list[Fraction]:
    v = [ZERO] * n
    v[i] = ONE
    return v


def is_zero_vec(v: Sequence[Fraction]) -> bool:
    return all(x == 0 for x in v)


def vec_add(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    if len(a) != len(b):
        raise DimensionMismatch(f"vector lengths {len(a)} != {len(b)}")
    return [x + y for x, y in zip(a, b)]


def vec_sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    if len(a) != len(b):
        raise DimensionMismatch(f"vector lengths {len(a)} != {len(b)}")
    return [x - y for x, y in zip(a, b)]


def vec_scale(c, v: Sequence[Fraction]) -> list[Fraction]:
    c = frac(c)
    return [c * x for x in v]


def kron_vec(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    """Coordinates of a (x) b: index (i, j) -> i * len(b) + j."""
    out = []
    for x in a:
        if x == 0:
            out.extend([ZERO] * len(b))
        else:
            out.extend(x * y for y in b)
    return out


def mat_zero(m: int, n: int) -> list[list[Fraction]]:
    return [[ZERO] * n for _ in range(m)]


def mat_identity(n: int) -> list[list[Fraction]]:
    return [unit_vec(n, i) for i in range(n)]


def mat_copy(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    return [list(row) for row in a]


def matvec(a: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> list[Fraction]:
    if a and len(a[0]) != len(x):
        raise DimensionMismatch(f"matrix is {len(a)}x{len(a[0])}, vector has {len(x)}")
    return [sum((r_j * x_j for r_j, x_j in zip(row, x) if x_j != 0), ZERO) for row in a]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    if a and b and len(a[0]) != len(b):
        raise DimensionMismatch(f"inner dimensions {len(a[0])} != {len(b)}")
    if not b:
        return [[] for _ in a]
    n_out = len(b[0])
    out = []
    for row in a:
        acc = [ZERO] * n_out
        for coef, brow in zip(row, b):
            if coef == 0:
                continue
            for j, bval in enumerate(brow):
                if bval != 0:
                    acc[j] += coef * bval
        out.append(acc)
    return out


def mat_transpose(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def mat_add(a, b) -> list[list[Fraction]]:
    if len(a) != len(b) or (a and len(a[0]) != len(b[0])):
        raise DimensionMismatch("matrix shapes differ")
    return [vec_add(ra, rb) for ra, rb in zip(a, b)]


def mat_scale(c, a) -> list[list[Fraction]]:
    c = frac(c)
    return [[c * x for x in row] for row in a]


def mat_eq(a, b) -> bool:
    return len(a) == len(b) and all(ra == rb for ra, rb in zip(a, b))


def kron(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Kronecker product acting on kron_vec coordinates: (A (x) B)(x (x) y) = Ax (x) By."""
    if not a or not b:
        return []
    out = []
    for arow in a:
        for brow in b:
            row = []
            for av in arow:
                if av == 0:
                    row.extend([ZERO] * len(brow))
                else:
                    row.extend(av * bv for bv in brow)
            out.append(row)
    return out


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form.  Returns (nonzero rows, pivot column indices)."""
    a = [list(map(frac, row)) for row in rows]
    if not a:
        return [], []
    ncols = len(a[0])
    for row in a:
        if len(row) != ncols:
            raise DimensionMismatch("ragged matrix")
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(a)):
            if a[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        inv = ONE / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                coef = a[i][c]
                a[i] = [x - coef * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """One exact solution of A x = b, or None if inconsistent."""
    m = len(a)
    if len(b) != m:
        raise DimensionMismatch(f"matrix has {m} rows, rhs has {len(b)}")
    n = len(a[0]) if m else 0
    aug = [list(map(frac, row)) + [frac(b[i])] for i, row in enumerate(a)]
    red, pivots = rref(aug)
    x = [ZERO] * n
    for row, p in zip(red, pivots):
        if p == n:
            return None  # pivot in the rhs column: inconsistent
        x[p] = row[n]
    return x


def solve_matrix(a, bmat) -> list[list[Fraction]] | None:
    """X with A X = B (B given as list of rows), or None. Solves columnwise."""
    if len(bmat) != len(a):
        raise DimensionMismatch("row counts differ")
    bt = mat_transpose(bmat)
    cols = []
    for bcol in bt:
        x = solve(a, bcol)
        if x is None:
            return None
        cols.append(x)
    n = len(a[0]) if a else 0
    if not cols:
        return [[] for _ in range(n)]
    return mat_transpose(cols)


def kernel(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Basis of the null space of A (vectors in the domain)."""
    if not a:
        return []
    n = len(a[0])
    red, pivots = rref(a)
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


class Subspace:
    """A subspace of Q^n stored as a reduced row echelon basis."""

    __slots__ = ("ambient", "rows", "pivots")

    def __init__(self, ambient: int, vectors: Iterable[Sequence[Fraction]] = ()):
        self.ambient = ambient
        vecs = []
        for v in vectors:
            if len(v) != ambient:
                raise DimensionMismatch(f"vector of length {len(v)} in Q^{ambient}")
            vecs.append(v)
        rows, pivots = rref(vecs)
        self.rows = tuple(tuple(r) for r in rows)
        self.pivots = tuple(pivots)

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls(ambient, mat_identity(ambient))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def is_zero(self) -> bool:
        return not self.rows

    def basis(self) -> list[list[Fraction]]:
        return [list(r) for r in self.rows]

    def reduce(self, v: Sequence[Fraction]) -> list[Fraction]:
        """Canonical residual of v modulo this subspace (zero iff v is a member)."""
        if len(v) != self.ambient:
            raise DimensionMismatch(f"vector of length {len(v)} in Q^{self.ambient}")
        out = list(map(frac, v))
        for row, p in zip(self.rows, self.pivots):
            c = out[p]
            if c != 0:
                for j in range(p, self.ambient):
                    if row[j] != 0:
                        out[j] -= c * row[j]
        return out

    def contains(self, v: Sequence[Fraction]) -> bool:
        return is_zero_vec(self.reduce(v))

    def coordinates(self, v: Sequence[Fraction]) -> list[Fraction] | None:
        """Coefficients of v in the RREF basis rows, or None if v is outside."""
        if len(v) != self.ambient:
            raise DimensionMismatch("length mismatch")
        out = list(map(frac, v))
        coords = []
        for row, p in zip(self.rows, self.pivots):
            c = out[p]
            coords.append(c)
            if c != 0:
                for j in range(p, self.ambient):
                    if row[j] != 0:
                        out[j] -= c * row[j]
        if not is_zero_vec(out):
            return None
        return coords

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise DimensionMismatch("ambient dimensions differ")
        return Subspace(self.ambient, list(self.rows) + list(other.rows))

    def intersect(self, other: "Subspace") -> "Subspace":
        """Zassenhaus-style: ker of [B_self; B_other] stacked as column relations."""
        if self.ambient != other.ambient:
            raise DimensionMismatch("ambient dimensions differ")
        if self.is_zero() or other.is_zero():
            return Subspace(self.ambient)
        # coefficients (c, d) with sum c_i u_i = sum d_j w_j, read off the u-part
        cols = [list(r) for r in self.rows] + [[-x for x in r] for r in other.rows]
        relations = kernel(mat_transpose(cols))
        k = len(self.rows)
        gens = []
        for rel in relations:
            v = [ZERO] * self.ambient
            for c, row in zip(rel[:k], self.rows):
                if c != 0:
                    v = [a + c * b for a, b in zip(v, row)]
            gens.append(v)
        return Subspace(self.ambient, gens)

    def le(self, other: "Subspace") -> bool:
        return all(other.contains(list(r)) for r in self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient == other.ambient and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.ambient, self.rows))

    def __repr__(self) -> str:
        return f"Subspace(dim {self.dim} of Q^{self.ambient})"


class QuotientSpace:
    """Q^n / W with the canonical basis = images of the non-pivot coordinates."""

    __slots__ = ("ambient", "sub", "free")

    def __init__(self, sub: Subspace):
        self.sub = sub
        self.ambient = sub.ambient
        pivot_set = set(sub.pivots)
        self.free = tuple(c for c in range(sub.ambient) if c not in pivot_set)

    @property
    def dim(self) -> int:
        return len(self.free)

    def project(self, v: Sequence[Fraction]) -> list[Fraction]:
        residual = self.sub.reduce(v)
        return [residual[c] for c in self.free]

    def section(self, coords: Sequence[Fraction]) -> list[Fraction]:
        """A representative with project(section(c)) == c (zeros at pivot slots)."""
        if len(coords) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} quotient coordinates")
        v = [ZERO] * self.ambient
        for c, pos in zip(coords, self.free):
            v[pos] = frac(c)
        return v

    def projection_matrix(self) -> list[list[Fraction]]:
        return mat_transpose([self.project(unit_vec(self.ambient, i)) for i in range(self.ambient)])

    def section_matrix(self) -> list[list[Fraction]]:
        return mat_transpose([self.section(unit_vec(self.dim, i)) for i in range(self.dim)])

    def __repr__(self) -> str:
        return f"QuotientSpace(Q^{self.ambient} / dim {self.sub.dim})"


def column_space(a: Sequence[Sequence[Fraction]]) -> Subspace:
    """Span of the columns of A, as a subspace of the codomain."""
    if not a:
        return Subspace(0)
    return Subspace(len(a), mat_transpose(a))


def preimage(a: Sequence[Sequence[Fraction]], w: Subspace) -> Subspace:
    """{x : A x in W} for A mapping Q^n -> Q^m, W <= Q^m."""
    m = len(a)
    if w.ambient != m:
        raise DimensionMismatch(f"W lives in Q^{w.ambient}, matrix maps into Q^{m}")
    n = len(a[0]) if a else 0
    q = QuotientSpace(w)
    comp = [q.project(col) for col in mat_transpose(a)]  # per domain basis vector
    if not comp or not comp[0]:
        return Subspace.full(n)
    return Subspace(n, kernel(mat_transpose(comp)))

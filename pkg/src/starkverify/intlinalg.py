"""Exact integer-matrix algebra: HNF, SNF, lattice membership, quotients.

Everything in this module works on plain Python integers (arbitrary
precision) and ``fractions.Fraction``; no floating point enters anywhere.
Matrices are lists of rows, vectors are flat lists, and lattices are row
spans.  The canonical Hermite normal form used throughout is row-style:
pivot columns strictly increase down the rows, pivots are positive, the
entries above each pivot are reduced into ``[0, pivot)``, and zero rows are
dropped.  Two equal lattices therefore have literally identical stored
bases, which makes lattice equality a plain data comparison.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

IntMatrix = list[list[int]]


def zeros(rows: int, cols: int) -> IntMatrix:
    return [[0] * cols for _ in range(rows)]


def identity(n: int) -> IntMatrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_copy(m: Sequence[Sequence[int]]) -> IntMatrix:
    return [list(row) for row in m]


def transpose(m: Sequence[Sequence[int]]) -> IntMatrix:
    if not m:
        return []
    return [list(col) for col in zip(*m)]


def mat_mul(a, b):
    """Matrix product; accepts int or Fraction entries."""
    if not a:
        return []
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def mat_vec(m, v):
    return [sum(x * y for x, y in zip(row, v)) for row in m]


def vec_mat(v, m):
    if not m:
        return []
    return [sum(v[i] * m[i][j] for i in range(len(v))) for j in range(len(m[0]))]


def vec_add(u, v):
    return [x + y for x, y in zip(u, v)]


def vec_sub(u, v):
    return [x - y for x, y in zip(u, v)]


def vec_scale(c, v):
    return [c * x for x in v]


def is_zero_vec(v) -> bool:
    return all(x == 0 for x in v)


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (x, y, g) with x*a + y*b == g == gcd(a, b), g >= 0."""
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def _row_reduce(rows: IntMatrix, transform: Optional[IntMatrix]) -> int:
    """In-place reduction of ``rows`` to canonical HNF; returns the rank.

    Zero rows end up at the bottom.  If ``transform`` is given, the same row
    operations are applied to it.
    """
    if not rows:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    piv = 0
    for col in range(n_cols):
        if piv >= n_rows:
            break
        # Clear the column below the pivot position with gcd row ops.
        pivot_row = None
        for i in range(piv, n_rows):
            if rows[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        if pivot_row != piv:
            rows[piv], rows[pivot_row] = rows[pivot_row], rows[piv]
            if transform is not None:
                transform[piv], transform[pivot_row] = transform[pivot_row], transform[piv]
        for i in range(piv + 1, n_rows):
            while rows[i][col] != 0:
                a, b = rows[piv][col], rows[i][col]
                if b % a == 0:
                    q = b // a
                    rows[i] = [x - q * y for x, y in zip(rows[i], rows[piv])]
                    if transform is not None:
                        transform[i] = [x - q * y for x, y in zip(transform[i], transform[piv])]
                else:
                    x, y, g = xgcd(a, b)
                    ag, bg = a // g, b // g
                    rp, ri = rows[piv], rows[i]
                    rows[piv] = [x * u + y * v for u, v in zip(rp, ri)]
                    rows[i] = [-bg * u + ag * v for u, v in zip(rp, ri)]
                    if transform is not None:
                        tp, ti = transform[piv], transform[i]
                        transform[piv] = [x * u + y * v for u, v in zip(tp, ti)]
                        transform[i] = [-bg * u + ag * v for u, v in zip(tp, ti)]
        if rows[piv][col] < 0:
            rows[piv] = [-x for x in rows[piv]]
            if transform is not None:
                transform[piv] = [-x for x in transform[piv]]
        # Reduce the entries above the pivot into [0, pivot).
        p = rows[piv][col]
        for i in range(piv):
            q = rows[i][col] // p
            if q:
                rows[i] = [x - q * y for x, y in zip(rows[i], rows[piv])]
                if transform is not None:
                    transform[i] = [x - q * y for x, y in zip(transform[i], transform[piv])]
        piv += 1
    return piv


def hnf(m: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix]:
    """Canonical row HNF.  Returns (H, U) with U unimodular and U @ m == H."""
    rows = mat_copy(m)
    u = identity(len(rows))
    _row_reduce(rows, u)
    return rows, u


def det(m: Sequence[Sequence[int]]) -> int:
    """Determinant by fraction-free Gaussian elimination (Bareiss)."""
    n = len(m)
    if n == 0:
        return 1
    a = mat_copy(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def is_unimodular(m: Sequence[Sequence[int]]) -> bool:
    return len(m) > 0 and len(m) == len(m[0]) and abs(det(m)) == 1


def unimodular_inverse(u: Sequence[Sequence[int]]) -> IntMatrix:
    """Exact inverse of a unimodular integer matrix."""
    h, w = hnf(u)
    if h != identity(len(u)):
        raise ValueError("matrix is not unimodular")
    return w


def kernel_basis(m: Sequence[Sequence[int]]) -> IntMatrix:
    """Canonical basis of the left kernel {x : x @ m == 0} over Z.

    The kernel of an integer matrix is saturated, so the basis is a genuine
    Z-basis of all integral solutions.
    """
    rows = mat_copy(m)
    u = identity(len(rows))
    rank = _row_reduce(rows, u)
    ker = [u[i] for i in range(rank, len(rows))]
    _row_reduce(ker, None)
    return [r for r in ker if not is_zero_vec(r)]


def snf(m: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form.  Returns (D, U, V) with U @ m @ V == D diagonal,
    U, V unimodular, and the diagonal entries nonnegative with d_i | d_{i+1}.
    """
    a = mat_copy(m)
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    u = identity(n_rows)
    v = identity(n_cols)

    def row_combine(i, k, x, y, pg, qg):
        # (row_i, row_k) <- (x row_i + y row_k, -qg row_i + pg row_k)
        ri, rk = a[i], a[k]
        a[i] = [x * c + y * d for c, d in zip(ri, rk)]
        a[k] = [-qg * c + pg * d for c, d in zip(ri, rk)]
        ti, tk = u[i], u[k]
        u[i] = [x * c + y * d for c, d in zip(ti, tk)]
        u[k] = [-qg * c + pg * d for c, d in zip(ti, tk)]

    def row_sub(i, k, q):
        a[k] = [c - q * d for c, d in zip(a[k], a[i])]
        u[k] = [c - q * d for c, d in zip(u[k], u[i])]

    def col_combine(j, k, x, y, pg, qg):
        # (col_j, col_k) <- (x col_j + y col_k, -qg col_j + pg col_k)
        for r in range(n_rows):
            cj, ck = a[r][j], a[r][k]
            a[r][j] = x * cj + y * ck
            a[r][k] = -qg * cj + pg * ck
        for r in range(n_cols):
            cj, ck = v[r][j], v[r][k]
            v[r][j] = x * cj + y * ck
            v[r][k] = -qg * cj + pg * ck

    def col_sub(j, k, q):
        for r in range(n_rows):
            a[r][k] -= q * a[r][j]
        for r in range(n_cols):
            v[r][k] -= q * v[r][j]

    def clear_cross(s):
        """Clear column s below (s,s) and row s right of (s,s)."""
        while True:
            for i in range(s + 1, n_rows):
                while a[i][s] != 0:
                    p, q_ = a[s][s], a[i][s]
                    if p != 0 and q_ % p == 0:
                        row_sub(s, i, q_ // p)
                    else:
                        x, y, g = xgcd(p, q_)
                        row_combine(s, i, x, y, p // g, q_ // g)
            for j in range(s + 1, n_cols):
                while a[s][j] != 0:
                    p, q_ = a[s][s], a[s][j]
                    if p != 0 and q_ % p == 0:
                        col_sub(s, j, q_ // p)
                    else:
                        x, y, g = xgcd(p, q_)
                        col_combine(s, j, x, y, p // g, q_ // g)
            if all(a[i][s] == 0 for i in range(s + 1, n_rows)):
                break

    s = 0
    while s < min(n_rows, n_cols):
        # Move a nonzero entry of the trailing block to position (s, s).
        found = False
        for i in range(s, n_rows):
            for j in range(s, n_cols):
                if a[i][j] != 0:
                    found = True
                    if i != s:
                        a[s], a[i] = a[i], a[s]
                        u[s], u[i] = u[i], u[s]
                    if j != s:
                        for r in range(n_rows):
                            a[r][s], a[r][j] = a[r][j], a[r][s]
                        for r in range(n_cols):
                            v[r][s], v[r][j] = v[r][j], v[r][s]
                    break
            if found:
                break
        if not found:
            break
        clear_cross(s)
        if a[s][s] < 0:
            for r in range(n_rows):
                a[r][s] = -a[r][s]
            for r in range(n_cols):
                v[r][s] = -v[r][s]
        s += 1

    # Enforce the divisibility chain d_i | d_{i+1}.
    rank = s
    changed = True
    while changed:
        changed = False
        for i in range(rank - 1):
            di, dj = a[i][i], a[i + 1][i + 1]
            if dj % di != 0:
                changed = True
                # row_i += row_{i+1} puts dj next to di; re-clear the block.
                a[i] = [c + d for c, d in zip(a[i], a[i + 1])]
                u[i] = [c + d for c, d in zip(u[i], u[i + 1])]
                clear_cross(i)
                for t in (i, i + 1):
                    if a[t][t] < 0:
                        for r in range(n_rows):
                            a[r][t] = -a[r][t]
                        for r in range(n_cols):
                            v[r][t] = -v[r][t]
    return a, u, v


class LatticeAccumulator:
    """Incremental HNF: insert rows one at a time into a maintained basis.

    Much cheaper than repeated full HNF when the number of generators far
    exceeds the ambient dimension (augmentation-power lattices, im iota).
    """

    __slots__ = ("n", "rows", "pivots")

    def __init__(self, ambient: int):
        self.n = ambient
        self.rows: IntMatrix = []
        self.pivots: list[int] = []  # pivot column of each row, increasing

    def insert(self, vec: Sequence[int]) -> bool:
        """Insert a vector; returns True if the lattice grew."""
        v = list(vec)
        grew = False
        while True:
            j = next((k for k, x in enumerate(v) if x != 0), None)
            if j is None:
                return grew
            pos = bisect.bisect_left(self.pivots, j)
            if pos < len(self.pivots) and self.pivots[pos] == j:
                a = self.rows[pos][j]
                b = v[j]
                if b % a == 0:
                    q = b // a
                    row = self.rows[pos]
                    v = [x - q * y for x, y in zip(v, row)]
                else:
                    x, y, g = xgcd(a, b)
                    ag, bg = a // g, b // g
                    row = self.rows[pos]
                    new_row = [x * u + y * w for u, w in zip(row, v)]
                    v = [-bg * u + ag * w for u, w in zip(row, v)]
                    self.rows[pos] = new_row
                    grew = True
            else:
                self.rows.insert(pos, v)
                self.pivots.insert(pos, j)
                return True

    def insert_all(self, vecs) -> None:
        for v in vecs:
            self.insert(v)

    def basis(self) -> IntMatrix:
        """Canonical HNF basis of everything inserted so far."""
        rows = mat_copy(self.rows)
        _row_reduce(rows, None)
        return [r for r in rows if not is_zero_vec(r)]


@dataclass(frozen=True)
class LatticeBasis:
    """A sublattice of Z^ambient_rank given by its canonical HNF row basis."""

    ambient_rank: int
    basis: tuple[tuple[int, ...], ...]

    @staticmethod
    def from_rows(ambient_rank: int, rows: Sequence[Sequence[int]]) -> "LatticeBasis":
        for r in rows:
            if len(r) != ambient_rank:
                raise ValueError("row length does not match ambient rank")
        acc = LatticeAccumulator(ambient_rank)
        acc.insert_all(rows)
        return LatticeBasis(ambient_rank, tuple(tuple(r) for r in acc.basis()))

    @staticmethod
    def full(ambient_rank: int) -> "LatticeBasis":
        return LatticeBasis(ambient_rank, tuple(tuple(row) for row in identity(ambient_rank)))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def membership(self, v: Sequence[int]) -> Optional[list[int]]:
        """Integer coordinates of v in the basis, or None if v is outside.

        Exact back-substitution along the pivot columns.
        """
        if len(v) != self.ambient_rank:
            raise ValueError("vector length does not match ambient rank")
        vec = list(v)
        coords = []
        for row in self.basis:
            j = next(k for k, x in enumerate(row) if x != 0)
            if vec[j] % row[j] != 0:
                return None
            q = vec[j] // row[j]
            coords.append(q)
            if q:
                vec = [x - q * y for x, y in zip(vec, row)]
        return coords if is_zero_vec(vec) else None

    def __contains__(self, v) -> bool:
        return self.membership(v) is not None

    def contains_lattice(self, other: "LatticeBasis") -> bool:
        return all(self.membership(list(r)) is not None for r in other.basis)

    def coordinates_matrix(self, rows: Sequence[Sequence[int]]) -> IntMatrix:
        out = []
        for r in rows:
            c = self.membership(list(r))
            if c is None:
                raise ValueError("vector not in lattice")
            out.append(c)
        return out


def lattice_sum(a: LatticeBasis, b: LatticeBasis) -> LatticeBasis:
    if a.ambient_rank != b.ambient_rank:
        raise ValueError("ambient rank mismatch")
    return LatticeBasis.from_rows(a.ambient_rank, list(a.basis) + list(b.basis))


@dataclass(frozen=True)
class FinitePresentation:
    """Canonical presentation of a quotient M/L of lattices L <= M.

    ``cyclic_orders`` lists the invariant factors (1s dropped) followed by 0s
    for the free part.  ``reduce`` is the projection: it maps the ambient
    coordinates of a vector in M to canonical quotient coordinates, with
    torsion coordinates reduced into the canonical range.  ``lift`` sends
    canonical coordinates back to an ambient representative.
    """

    ambient_rank: int
    cyclic_orders: tuple[int, ...]
    lift_rows: tuple[tuple[int, ...], ...]  # (#orders) x ambient
    _mod_basis: LatticeBasis
    _transform: tuple[tuple[int, ...], ...]  # maps M-coords to raw quotient coords

    @property
    def order(self) -> Optional[int]:
        """Group order, or None if there is a free part."""
        out = 1
        for d in self.cyclic_orders:
            if d == 0:
                return None
            out *= d
        return out

    def reduce(self, v: Sequence[int]) -> tuple[int, ...]:
        """Canonical coordinates of the class of v (v must lie in M)."""
        coords = self._mod_basis.membership(list(v))
        if coords is None:
            raise ValueError("vector not in the covering lattice")
        raw = vec_mat(coords, [list(r) for r in self._transform])
        out = []
        for x, d in zip(raw, self.cyclic_orders):
            out.append(x % d if d > 0 else x)
        return tuple(out)

    def lift(self, coords: Sequence[int]) -> list[int]:
        v = [0] * self.ambient_rank
        for c, row in zip(coords, self.lift_rows):
            if c:
                v = [x + c * y for x, y in zip(v, row)]
        return v

    def is_trivial_class(self, v: Sequence[int]) -> bool:
        return all(x == 0 for x in self.reduce(v))


def quotient_presentation(l: LatticeBasis, m: LatticeBasis) -> FinitePresentation:
    """Presentation of M/L for lattices L <= M (containment is checked)."""
    if l.ambient_rank != m.ambient_rank:
        raise ValueError("ambient rank mismatch")
    k = m.rank
    try:
        c = m.coordinates_matrix([list(r) for r in l.basis])
    except ValueError as e:
        raise ValueError("L is not contained in M") from e
    if l.rank == 0:
        c = []
    if not c:
        # Free quotient: M/0 = Z^k.
        orders = tuple([0] * k)
        transform = identity(k)
        lift_rows = [list(r) for r in m.basis]
        return FinitePresentation(
            m.ambient_rank, orders,
            tuple(tuple(r) for r in lift_rows), m, tuple(tuple(r) for r in transform))
    d, _u, v = snf(c)
    rank = sum(1 for i in range(min(len(c), k)) if d[i][i] != 0)
    invariants = [d[i][i] for i in range(rank)]
    orders_all = invariants + [0] * (k - rank)
    kept = tuple(i for i, dv in enumerate(orders_all) if dv != 1)
    orders = tuple(orders_all[i] for i in kept)
    # Raw quotient coordinates of x (in M-coords) are (x @ V) at kept indices.
    v_inv = unimodular_inverse(v)
    transform = [[v[i][j] for j in kept] for i in range(k)]
    # Lift: canonical generator j corresponds to row kept[j] of V^{-1} in M-coords.
    lift_rows = [vec_mat(v_inv[j], [list(r) for r in m.basis]) for j in kept]
    return FinitePresentation(
        m.ambient_rank, orders,
        tuple(tuple(r) for r in lift_rows), m, tuple(tuple(r) for r in transform))


def rational_solve(a, b):
    """One exact solution x (list of Fraction) of x @ a == b, or None.

    ``a`` is a (n x m) matrix, ``b`` a length-m vector; entries may be int or
    Fraction.  Free variables are set to zero.
    """
    n = len(a)
    m = len(a[0]) if a else len(b)
    # Work on the transposed system a^T x^T = b^T by Gaussian elimination.
    rows = [[Fraction(a[i][j]) for i in range(n)] + [Fraction(b[j])] for j in range(m)]
    piv_cols: list[int] = []
    r = 0
    for cjs in range(n):
        pr = next((i for i in range(r, m) if rows[i][cjs] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pv = rows[r][cjs]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][cjs] != 0:
                f = rows[i][cjs]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv_cols.append(cjs)
        r += 1
    # Consistency: rows beyond rank must have zero rhs.
    for i in range(r, m):
        if rows[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, cjs in enumerate(piv_cols):
        x[cjs] = rows[i][n]
    return x


def rational_matrix_rank(a) -> int:
    """Rank of a matrix with int/Fraction entries, by exact elimination."""
    rows = [[Fraction(x) for x in row] for row in a]
    if not rows:
        return 0
    m = len(rows[0])
    rank = 0
    for col in range(m):
        pr = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pr is None:
            continue
        rows[rank], rows[pr] = rows[pr], rows[rank]
        pv = rows[rank][col]
        rows[rank] = [x / pv for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def congruence_kernel(a: Sequence[Sequence[int]], moduli: Sequence[int]) -> IntMatrix:
    """Basis of {x : x @ a == 0 (mod moduli, componentwise)}.

    A modulus of 0 means the congruence is an exact equation.  Used for
    discrete-log kernels (T-congruence subgroups and similar).
    """
    n = len(a)
    m = len(moduli)
    # (x, y) @ [[a], [diag(moduli)]] == 0, projected onto the x part.
    rows = [list(row) for row in a]
    for j, d in enumerate(moduli):
        if d != 0:
            r = [0] * m
            r[j] = d
            rows.append(r)
    ker = kernel_basis(rows)
    return [list(r) for r in LatticeBasis.from_rows(n, [row[:n] for row in ker]).basis]

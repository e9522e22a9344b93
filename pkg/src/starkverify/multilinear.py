"""Equivariant multilinear algebra over integral group rings.

A G-module lattice is a free Z-lattice with commuting integer action
matrices.  Exterior powers over Z[G] are realized concretely: a wedge class
is stored as Q[G]-coefficients on the sorted r-tuples of the underlying
Z-basis, and two coefficient arrays represent the same class exactly when
all evaluations against wedges of equivariant homs agree.  Those evaluation
pairings are perfect after tensoring with Q, which is what makes every
construction here (the interior-product operators, Rubin's lattice, the
norm insertion kappa and the canonical injection nu built from it)
computable by finite exact linear algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .groupring import (
    Element,
    FiniteAbelianGroup,
    GradedPiece,
    GroupHom,
    GroupRingElement,
    QuotientRing,
    quotient_ring,
)
from .intlinalg import (
    LatticeBasis,
    hnf,
    is_zero_vec,
    mat_mul,
    rational_matrix_rank,
    rational_solve,
    vec_mat,
)

# -- group-ring coefficient rows -------------------------------------------
# Q[G] coefficients are plain tuples indexed by the group enumeration.


def gp_zero(group: FiniteAbelianGroup):
    return (0,) * group.order


def gp_one(group: FiniteAbelianGroup):
    c = [0] * group.order
    c[group.index[group.identity]] = 1
    return tuple(c)


def gp_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def gp_scale(c, a):
    return tuple(c * x for x in a)


def gp_mul(group: FiniteAbelianGroup, a, b):
    out = [0] * group.order
    for i, x in enumerate(a):
        if x == 0:
            continue
        ei = group.elements[i]
        for j, y in enumerate(b):
            if y == 0:
                continue
            out[group.index[group.mul(ei, group.elements[j])]] += x * y
    return tuple(out)


def gp_act(group: FiniteAbelianGroup, g: Element, a):
    out = [0] * group.order
    for i, x in enumerate(a):
        if x:
            out[group.index[group.mul(g, group.elements[i])]] = x
    return tuple(out)


def gp_is_integral(a) -> bool:
    return all(Fraction(x).denominator == 1 for x in a)


class GModuleLattice:
    """Free Z-lattice with a G-action given by one matrix per generator.

    Vectors are rows; the element g acts as v @ action(g).  Role is a tag
    ('units', 'divisors', or 'synthetic') carried for reporting.
    """

    def __init__(self, group: FiniteAbelianGroup, action_matrices: Sequence[Sequence[Sequence[int]]],
                 rank: Optional[int] = None, role: str = "synthetic"):
        self.group = group
        self.role = role
        gens = group.generators()
        if len(action_matrices) != len(gens):
            raise ValueError("one action matrix per group generator")
        if rank is None:
            rank = len(action_matrices[0]) if action_matrices else 0
        self.rank = rank
        self._gen_matrices = [[list(r) for r in m] for m in action_matrices]
        for m in self._gen_matrices:
            if len(m) != rank or any(len(r) != rank for r in m):
                raise ValueError("action matrices must be rank x rank")
        self._elem_matrix: dict[Element, list[list[int]]] = {}
        # Commutativity and order constraints are structural invariants.
        for i, (g, m) in enumerate(zip(gens, self._gen_matrices)):
            power = _mat_identity(rank)
            for _ in range(group.factors[i]):
                power = mat_mul(power, m)
            if power != _mat_identity(rank):
                raise ValueError("action matrix order does not divide the generator order")
        for m1 in self._gen_matrices:
            for m2 in self._gen_matrices:
                if mat_mul(m1, m2) != mat_mul(m2, m1):
                    raise ValueError("action matrices must commute")

    def action(self, e: Element):
        if e not in self._elem_matrix:
            m = _mat_identity(self.rank)
            for exp, gen_m in zip(e, self._gen_matrices):
                for _ in range(exp):
                    m = mat_mul(m, gen_m)
            self._elem_matrix[e] = m
        return self._elem_matrix[e]

    def act_vec(self, e: Element, v):
        return vec_mat(list(v), self.action(e))


def _mat_identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def trivial_module(rank: int, role: str = "synthetic") -> GModuleLattice:
    from .groupring import trivial_group

    return GModuleLattice(trivial_group(), [], rank=rank, role=role)


def free_module(group: FiniteAbelianGroup, copies: int = 1, role: str = "synthetic") -> GModuleLattice:
    """Z[G]^copies with the regular action."""
    n = group.order * copies
    mats = []
    for gen in group.generators():
        m = [[0] * n for _ in range(n)]
        for c in range(copies):
            for i, e in enumerate(group.elements):
                m[c * group.order + i][c * group.order + group.index[group.mul(gen, e)]] = 1
        mats.append(m)
    return GModuleLattice(group, mats, rank=n, role=role)


@dataclass(frozen=True)
class EquivariantHom:
    """G-equivariant map M -> Z[G], stored as the matrix of Z[G]-values on
    the module basis (rows of length |G|)."""

    module: GModuleLattice
    matrix: tuple  # rank rows, each a |G|-tuple

    def value(self, v):
        """Value on a module vector (rational coordinates allowed)."""
        g = self.module.group
        out = [0] * g.order
        for c, row in zip(v, self.matrix):
            if c:
                for j, x in enumerate(row):
                    if x:
                        out[j] += c * x
        return tuple(out)

    def is_equivariant(self) -> bool:
        g = self.module.group
        for gen in g.generators():
            for i in range(self.module.rank):
                e_i = [0] * self.module.rank
                e_i[i] = 1
                lhs = self.value(self.module.act_vec(gen, e_i))
                rhs = gp_act(g, gen, self.matrix[i])
                if tuple(lhs) != tuple(rhs):
                    return False
        return True


def hom_lattice(module: GModuleLattice) -> list[EquivariantHom]:
    """Z-basis of Hom_G(M, Z[G]), by solving the integral commutation system.

    The basis doubles as a Z[G]-generating set of the Hom module.
    """
    g = module.group
    n, order = module.rank, g.order
    if n == 0:
        return []
    # Unknown F (n x order), flattened row-major; constraints per generator:
    # rho(gen) @ F == F @ P_gen.
    num_unknowns = n * order
    columns = []  # constraint matrix, one row per unknown (left kernel form)
    gens = g.generators()
    eqs_per_gen = n * order
    total_eqs = eqs_per_gen * len(gens)
    mat = [[0] * total_eqs for _ in range(num_unknowns)]
    for gi, gen in enumerate(gens):
        rho = module.action(gen)
        base = gi * eqs_per_gen
        for i in range(n):
            for k in range(order):
                eq = base + i * order + k
                # (rho F)[i][k] = sum_j rho[i][j] F[j][k]
                for j in range(n):
                    if rho[i][j]:
                        mat[j * order + k][eq] += rho[i][j]
                # (F P_gen)[i][k] = F[i][gen^{-1} k]
                src = g.index[g.mul(g.inv(gen), g.elements[k])]
                mat[i * order + src][eq] -= 1
    basis_rows = _int_kernel(mat)
    homs = []
    for row in basis_rows:
        matrix = tuple(tuple(row[i * order:(i + 1) * order]) for i in range(n))
        homs.append(EquivariantHom(module, matrix))
    assert len(homs) == n, "Hom_G(M, Z[G]) must have Z-rank equal to rank M"
    return homs


def _int_kernel(mat):
    from .intlinalg import kernel_basis

    return kernel_basis(mat)


class WedgeVector:
    """Element of Q (x) Lambda^r_{Z[G]} M in the free presentation
    Q[G] (x) Lambda^r_Z M: a Q[G]-coefficient per sorted r-tuple."""

    def __init__(self, module: GModuleLattice, degree: int, coeffs: Optional[dict] = None):
        self.module = module
        self.degree = degree
        self.coeffs: dict[tuple, tuple] = {}
        if coeffs:
            for t, row in coeffs.items():
                if any(x != 0 for x in row):
                    self.coeffs[tuple(t)] = tuple(row)

    @staticmethod
    def basis_wedge(module: GModuleLattice, indices: Sequence[int]) -> "WedgeVector":
        t = tuple(indices)
        if list(t) != sorted(set(t)):
            raise ValueError("basis wedge requires strictly increasing indices")
        return WedgeVector(module, len(t), {t: gp_one(module.group)})

    @staticmethod
    def from_vector(module: GModuleLattice, v) -> "WedgeVector":
        """Degree-1 wedge from rational module coordinates."""
        g = module.group
        coeffs = {}
        for i, c in enumerate(v):
            if c:
                coeffs[(i,)] = gp_scale(c, gp_one(g))
        return WedgeVector(module, 1, coeffs)

    @staticmethod
    def scalar(module: GModuleLattice, row) -> "WedgeVector":
        """Degree-0 wedge: an element of Q[G]."""
        return WedgeVector(module, 0, {(): tuple(row)})

    def __add__(self, other):
        out = dict(self.coeffs)
        for t, row in other.coeffs.items():
            out[t] = gp_add(out.get(t, gp_zero(self.module.group)), row)
        return WedgeVector(self.module, self.degree, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "WedgeVector":
        return WedgeVector(self.module, self.degree,
                           {t: gp_scale(c, row) for t, row in self.coeffs.items()})

    def gmul(self, row) -> "WedgeVector":
        """Multiply by a Q[G]-scalar."""
        g = self.module.group
        return WedgeVector(self.module, self.degree,
                           {t: gp_mul(g, row, r) for t, r in self.coeffs.items()})

    def act(self, e: Element) -> "WedgeVector":
        g = self.module.group
        return WedgeVector(self.module, self.degree,
                           {t: gp_act(g, e, r) for t, r in self.coeffs.items()})

    def is_zero_presentation(self) -> bool:
        return not self.coeffs

    def denominator_lcm(self) -> int:
        from math import lcm

        d = 1
        for row in self.coeffs.values():
            for x in row:
                d = lcm(d, Fraction(x).denominator)
        return d


def det_value(group: FiniteAbelianGroup, rows):
    """Determinant of a small matrix with Q[G]-row entries (Leibniz)."""
    r = len(rows)
    if r == 0:
        return gp_one(group)
    if r > 6:
        raise ValueError("determinant expansion limited to r <= 6")
    out = gp_zero(group)
    for perm in itertools.permutations(range(r)):
        sign = _perm_sign(perm)
        term = gp_one(group)
        for i in range(r):
            term = gp_mul(group, term, rows[i][perm[i]])
        out = gp_add(out, gp_scale(sign, term))
    return out


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def contract(phi: EquivariantHom, omega: WedgeVector) -> WedgeVector:
    """Interior product: degree r -> r-1 along the alternating-sum formula."""
    if omega.degree < 1:
        raise ValueError("cannot contract a degree-0 wedge")
    module = omega.module
    g = module.group
    out: dict[tuple, tuple] = {}
    for t, c in omega.coeffs.items():
        for pos, i in enumerate(t):
            rest = t[:pos] + t[pos + 1:]
            e_i = [0] * module.rank
            e_i[i] = 1
            val = phi.value(e_i)
            term = gp_scale((-1) ** pos, gp_mul(g, c, val))
            out[rest] = gp_add(out.get(rest, gp_zero(g)), term)
    return WedgeVector(module, omega.degree - 1, out)


def wedge_operator(phis: Sequence[EquivariantHom], omega: WedgeVector) -> WedgeVector:
    """The map (2.1)-style operator phi_1 ^ ... ^ phi_s on a degree-r wedge,
    applied as phi_s o ... o phi_1; for s = r the scalar equals the
    determinant det(phi_i(m_j))."""
    if len(phis) > omega.degree:
        raise ValueError("operator degree exceeds wedge degree")
    out = omega
    for phi in phis:
        out = contract(phi, out)
    return out


def evaluate_wedge(phis: Sequence[EquivariantHom], omega: WedgeVector):
    """Full pairing (s = r): Q[G]-value of (phi_1 ^ ... ^ phi_r)(omega)."""
    module = omega.module
    g = module.group
    if len(phis) != omega.degree:
        raise ValueError("full pairing needs s = r")
    out = gp_zero(g)
    for t, c in omega.coeffs.items():
        rows = []
        for phi in phis:
            row = []
            for j in t:
                e_j = [0] * module.rank
                e_j[j] = 1
                row.append(phi.value(e_j))
            rows.append(row)
        out = gp_add(out, gp_mul(g, c, det_value(g, rows)))
    return out


# -- im iota and Rubin's lattice -------------------------------------------


class ImIota:
    """The lattice im(iota): wedges of equivariant homs as Z[G]-valued
    functionals on Lambda^r, realized as integer vectors over
    (sorted tuples) x (group coordinates)."""

    def __init__(self, module: GModuleLattice, r: int, hom_basis: Sequence[EquivariantHom]):
        self.module = module
        self.r = r
        self.hom_basis = list(hom_basis)
        g = module.group
        self.tuples = list(itertools.combinations(range(module.rank), r))
        self.tuple_index = {t: i for i, t in enumerate(self.tuples)}
        self.dim = len(self.tuples) * g.order
        self.generators = []  # (group element, hom index tuple)
        gen_rows = []
        for hom_tuple in itertools.combinations(range(len(self.hom_basis)), r):
            base_row = self._functional_row([self.hom_basis[i] for i in hom_tuple])
            for e in g.elements:
                self.generators.append((e, hom_tuple))
                gen_rows.append(self._translate_row(base_row, e))
        self.gen_rows = gen_rows
        h, u = hnf(gen_rows) if gen_rows else ([], [])
        basis_rows = []
        combos = []
        kernel = []
        for row, urow in zip(h, u):
            if is_zero_vec(row):
                kernel.append(urow)
            else:
                basis_rows.append(row)
                combos.append(urow)
        self.basis = LatticeBasis(self.dim, tuple(tuple(r_) for r_ in basis_rows))
        self.basis_combos = combos  # basis row b = sum_j combos[b][j] * gen_rows[j]
        self.kernel_combos = kernel

    def _functional_row(self, phis) -> list[int]:
        g = self.module.group
        row = [0] * self.dim
        for ti, t in enumerate(self.tuples):
            rows = []
            for phi in phis:
                vals = []
                for j in t:
                    e_j = [0] * self.module.rank
                    e_j[j] = 1
                    vals.append(phi.value(e_j))
                rows.append(vals)
            det = det_value(g, rows)
            row[ti * g.order:(ti + 1) * g.order] = list(det)
        return row

    def _translate_row(self, row, e: Element) -> list[int]:
        g = self.module.group
        out = [0] * self.dim
        for ti in range(len(self.tuples)):
            chunk = row[ti * g.order:(ti + 1) * g.order]
            out[ti * g.order:(ti + 1) * g.order] = list(gp_act(g, e, tuple(chunk)))
        return out

    def rank(self) -> int:
        return self.basis.rank

    def evaluate_basis_row(self, row, omega: WedgeVector):
        """Pairing of a functional row against a wedge: a Q[G]-value."""
        g = self.module.group
        out = gp_zero(g)
        for t, c in omega.coeffs.items():
            ti = self.tuple_index[t]
            chunk = tuple(row[ti * g.order:(ti + 1) * g.order])
            out = gp_add(out, gp_mul(g, c, chunk))
        return out

    def as_module(self) -> GModuleLattice:
        """im iota as a G-module lattice in its own basis coordinates."""
        g = self.module.group
        mats = []
        for gen in g.generators():
            rows = []
            for b in self.basis.basis:
                translated = self._translate_row(list(b), gen)
                coords = self.basis.membership(translated)
                assert coords is not None, "im iota must be stable under the group action"
                rows.append(coords)
            mats.append(rows)
        return GModuleLattice(g, mats, rank=self.basis.rank, role="synthetic")


@dataclass(frozen=True)
class RubinElement:
    """Member of the Rubin lattice with its integrality certificate."""

    lattice: "RubinLattice"
    coords: tuple[int, ...]
    certificate: tuple  # ((hom index tuple, Z[G]-value row), ...)

    def wedge(self) -> WedgeVector:
        return self.lattice.element_from_coords(self.coords)


class RubinLattice:
    """The lattice cap^r of a G-module lattice: all rational wedge classes
    whose evaluations against every wedge of equivariant homs are integral.

    Realized through the isomorphism with Hom_G(im iota, Z[G]): the basis
    elements store both their evaluation matrix (exact, integer) and one
    coordinate representative.
    """

    def __init__(self, module: GModuleLattice, r: int):
        self.module = module
        self.r = r
        g = module.group
        self.hom_basis = hom_lattice(module)
        self.im = ImIota(module, r, self.hom_basis)
        im_module = self.im.as_module()
        hom_of_im = hom_lattice(im_module) if self.im.rank() else []
        self.inter_ev = [f.matrix for f in hom_of_im]  # each: (im rank) x |G|
        self.ev_lattice = LatticeBasis.from_rows(
            self.im.rank() * g.order,
            [[x for row in mat for x in row] for mat in self.inter_ev]) if self.inter_ev else LatticeBasis(0, ())
        self._alpha = self._alpha_matrix()
        self.reps: list[WedgeVector] = [self._solve_representative(mat) for mat in self.inter_ev]

    def _alpha_matrix(self):
        """Linear system of the evaluation map alpha: presentation coordinate
        (T, h) against im-basis value slot (b, k)."""
        g = self.module.group
        order = g.order
        tuples = self.im.tuples
        a = [[0] * (self.im.rank() * order) for _ in range(len(tuples) * order)]
        for bi, brow in enumerate(self.im.basis.basis):
            for ti in range(len(tuples)):
                chunk = brow[ti * order:(ti + 1) * order]
                if all(x == 0 for x in chunk):
                    continue
                for hi, h in enumerate(g.elements):
                    shifted = gp_act(g, h, tuple(chunk))
                    for k in range(order):
                        if shifted[k]:
                            a[ti * order + hi][bi * order + k] += shifted[k]
        return a

    def solve_alpha(self, rhs) -> WedgeVector:
        """A representative wedge x with alpha(x) equal to the given values
        on the im iota basis (flattened)."""
        g = self.module.group
        order = g.order
        x = rational_solve(self._alpha, rhs)
        if x is None:
            raise AssertionError("alpha_G solve failed; evaluation isomorphism violated")
        coeffs = {}
        for ti, t in enumerate(self.im.tuples):
            row = tuple(x[ti * order + hi] for hi in range(order))
            if any(v != 0 for v in row):
                coeffs[t] = row
        return WedgeVector(self.module, self.r, coeffs)

    @property
    def rank(self) -> int:
        return len(self.inter_ev)

    # -- evaluation ------------------------------------------------------

    def ev_matrix(self, omega: WedgeVector):
        """Evaluations of omega against the im iota basis (rows of Q[G])."""
        return [self.im.evaluate_basis_row(list(b), omega) for b in self.im.basis.basis]

    def ev_flat(self, omega: WedgeVector):
        return [x for row in self.ev_matrix(omega) for x in row]

    def classes_equal(self, w1: WedgeVector, w2: WedgeVector) -> bool:
        return self.ev_flat(w1) == self.ev_flat(w2)

    def _solve_representative(self, ev_mat) -> WedgeVector:
        rhs = [x for row in ev_mat for x in row]
        return self.solve_alpha(rhs)

    def element_from_coords(self, coords) -> WedgeVector:
        out = WedgeVector(self.module, self.r)
        for c, rep in zip(coords, self.reps):
            if c:
                out = out + rep.scale(c)
        return out

    def membership(self, omega: WedgeVector) -> Optional[RubinElement]:
        """Decide omega in cap^r by evaluating all r-fold wedges of the hom
        basis; return the element with certificate, or None."""
        if omega.degree != self.r:
            raise ValueError("degree mismatch")
        cert = []
        for hom_tuple in itertools.combinations(range(len(self.hom_basis)), self.r):
            val = evaluate_wedge([self.hom_basis[i] for i in hom_tuple], omega)
            if not gp_is_integral(val):
                return None
            cert.append((hom_tuple, tuple(int(x) for x in val)))
        flat = self.ev_flat(omega)
        int_flat = [int(x) for x in flat]
        if any(Fraction(x).denominator != 1 for x in flat):
            return None
        coords = self.ev_lattice.membership(int_flat)
        if coords is None:
            return None
        return RubinElement(self, tuple(coords), tuple(cert))

    def coords_of(self, omega: WedgeVector) -> tuple[int, ...]:
        member = self.membership(omega)
        if member is None:
            raise ValueError("wedge class is not in the Rubin lattice")
        return member.coords


_RUBIN_CACHE: dict = {}


def rubin_lattice(module: GModuleLattice, r: int) -> RubinLattice:
    key = (id(module), r)
    if key not in _RUBIN_CACHE:
        _RUBIN_CACHE[key] = RubinLattice(module, r)
    return _RUBIN_CACHE[key]


# -- tensor elements over filtration quotients ------------------------------


def _canon_row(ring, row):
    orders = ring.cyclic_orders
    return tuple(x % d if d > 0 else x for x, d in zip(row, orders))


@dataclass(frozen=True)
class TensorResidueElement:
    """Element of (cap^r) (x) Z[H]/I(H)^n (or (x) Q(H)^n when graded):
    a matrix of canonical residue coordinates per Rubin-basis element."""

    lattice: RubinLattice
    ring_key: tuple
    rows: tuple  # (lattice.rank) rows of canonical residue coordinates

    @staticmethod
    def build(lattice: RubinLattice, ring, rows) -> "TensorResidueElement":
        return TensorResidueElement(lattice, ring.key,
                                    tuple(_canon_row(ring, list(r)) for r in rows))

    @staticmethod
    def zero(lattice: RubinLattice, ring) -> "TensorResidueElement":
        width = len(ring.cyclic_orders)
        return TensorResidueElement(lattice, ring.key,
                                    tuple((0,) * width for _ in range(lattice.rank)))

    def add(self, other: "TensorResidueElement", ring) -> "TensorResidueElement":
        if self.ring_key != other.ring_key or self.lattice is not other.lattice:
            raise ValueError("tensor elements live in different spaces")
        rows = [tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(self.rows, other.rows)]
        return TensorResidueElement.build(self.lattice, ring, rows)

    def is_zero(self) -> bool:
        return all(all(x == 0 for x in row) for row in self.rows)


def tensor_from_pairs(lattice: RubinLattice, ring, pairs) -> TensorResidueElement:
    """Sum of (coords, residue) pairs: coords over the Rubin basis, residue a
    FiltrationResidue of ``ring``."""
    width = len(ring.cyclic_orders)
    rows = [[0] * width for _ in range(lattice.rank)]
    for coords, residue in pairs:
        if residue.ring_key != ring.key:
            raise ValueError("residue ring mismatch")
        for i, c in enumerate(coords):
            if c:
                for j, x in enumerate(residue.coords):
                    rows[i][j] += c * x
    return TensorResidueElement.build(lattice, ring, rows)


def tensor_map_residue(t: TensorResidueElement, src_ring, dst_ring,
                       fn: Callable[[GroupRingElement], GroupRingElement],
                       dst_lattice: Optional[RubinLattice] = None) -> TensorResidueElement:
    """Apply a residue-leg transformation: lift each row, apply fn to the
    group-ring lift, reduce in the destination ring."""
    lattice = dst_lattice if dst_lattice is not None else t.lattice
    rows = []
    for row in t.rows:
        lifted = GroupRingElement(src_ring.group,
                                  tuple(src_ring.presentation.lift(list(row))))
        image = fn(lifted)
        rows.append(dst_ring.reduce(image).coords)
    return TensorResidueElement.build(lattice, dst_ring, rows)


def tensor_map_base(t: TensorResidueElement, matrix, dst_lattice: RubinLattice,
                    ring) -> TensorResidueElement:
    """Push the Rubin-basis leg through an integer matrix (src rank x dst
    rank), e.g. the canonical injection nu on basis elements."""
    width = len(t.rows[0]) if t.rows else len(ring.cyclic_orders)
    rows = [[0] * width for _ in range(dst_lattice.rank)]
    for i, row in enumerate(t.rows):
        for j in range(dst_lattice.rank):
            c = matrix[i][j]
            if c:
                for k, x in enumerate(row):
                    rows[j][k] += c * x
    return TensorResidueElement.build(dst_lattice, ring, rows)


def cal_n(a: RubinElement, subgroup: Sequence[Element], d: int) -> TensorResidueElement:
    """Higher norm: a |-> sum_{sigma in H} sigma a (x) sigma^{-1} in
    (cap^r) (x) Z[H]/I(H)^{d+1}."""
    lattice = a.lattice
    g = lattice.module.group
    sub = frozenset(subgroup)
    ring = quotient_ring(g, d + 1, None if sub == frozenset(g.elements) else sub)
    omega = a.wedge()
    pairs = []
    for sigma in sorted(sub):
        moved = omega.act(sigma)
        coords = lattice.coords_of(moved)
        residue = ring.reduce(GroupRingElement.of_element(g, g.inv(sigma)))
        pairs.append((coords, residue))
    return tensor_from_pairs(lattice, ring, pairs)


# -- descent data: kappa, beta, nu, norm powers ------------------------------


class DescentData:
    """Everything needed to move between the K-level lattice (over G) and an
    L-level lattice (over G/H): the group projection, the module embedding
    of the H-fixed sublattice, and both Rubin lattices."""

    def __init__(self, src: RubinLattice, tgt: RubinLattice, proj: GroupHom,
                 embed: Sequence[Sequence[int]]):
        # src: lattice over the quotient group; tgt: lattice over G.
        self.src = src
        self.tgt = tgt
        self.proj = proj  # G -> G/H
        self.embed = [list(r) for r in embed]  # src rank x tgt rank
        self.group = tgt.module.group
        self.quot = src.module.group
        if proj.src != self.group or proj.dst != self.quot:
            raise ValueError("projection endpoints do not match the lattices")
        self.kernel = frozenset(e for e in self.group.elements
                                if proj(e) == self.quot.identity)
        self._check_embedding()
        self._restricted = [self._restrict_hom(phi) for phi in tgt.hom_basis]
        self._check_well_defined()
        self._nu_matrix: Optional[list] = None

    # kappa: Z[G/H] ~ Z[G]^H, 1 -> N_H.
    def kappa(self, row):
        out = [0] * self.group.order
        for i, e in enumerate(self.group.elements):
            out[i] = row[self.quot.index[self.proj(e)]]
        return tuple(out)

    def kappa_inv(self, row):
        out = [None] * self.quot.order
        for i, e in enumerate(self.group.elements):
            j = self.quot.index[self.proj(e)]
            if out[j] is None:
                out[j] = row[i]
            elif out[j] != row[i]:
                raise ValueError("value is not H-fixed; kappa^{-1} undefined")
        return tuple(out)

    def _check_embedding(self):
        # e is equivariant for the G-action through the projection and lands
        # in the H-fixed part.
        src_m, tgt_m = self.src.module, self.tgt.module
        for h in self.kernel:
            act = tgt_m.action(h)
            if mat_mul(self.embed, act) != self.embed:
                raise ValueError("embedding does not land in the H-fixed sublattice")
        for gen in self.group.generators():
            gbar = self.proj(gen)
            lhs = mat_mul(self.embed, tgt_m.action(gen))
            rhs = mat_mul(src_m.action(gbar), self.embed)
            if lhs != rhs:
                raise ValueError("embedding is not equivariant")

    def _restrict_hom(self, phi: EquivariantHom) -> EquivariantHom:
        """phi^H-building block: kappa^{-1} of phi restricted along the
        embedding, an equivariant hom of the source module."""
        rows = []
        for i in range(self.src.module.rank):
            val = phi.value(self.embed[i])
            rows.append(self.kappa_inv(val))
        hom = EquivariantHom(self.src.module, tuple(tuple(r) for r in rows))
        assert hom.is_equivariant()
        return hom

    def _check_well_defined(self):
        """Combinations of generators of im iota_G that vanish must map to
        vanishing functionals over the source; otherwise Phi -> Phi^H would
        be ill-defined (this would contradict the construction of beta)."""
        for combo in self.tgt.im.kernel_combos:
            # Vanishing on the source basis reps suffices: they span the
            # source class space over Q.
            for rep in self.src.reps:
                val = self._mapped_functional_value(combo, rep)
                if any(x != 0 for x in val):
                    raise AssertionError("Phi^H is not well-defined on im iota")

    def _mapped_functional_value(self, combo, omega: WedgeVector):
        """Value on a source wedge of sum_j combo_j (proj(g_j)) iota(T(w_j))."""
        out = gp_zero(self.quot)
        for c, (e, hom_tuple) in zip(combo, self.tgt.im.generators):
            if c == 0:
                continue
            phis = [self._restricted[i] for i in hom_tuple]
            val = evaluate_wedge(phis, omega)
            val = gp_act(self.quot, self.proj(e), val)
            out = gp_add(out, gp_scale(c, val))
        return out

    # -- nu --------------------------------------------------------------

    def nu(self, a: RubinElement) -> RubinElement:
        if a.lattice is not self.src:
            raise ValueError("element does not belong to the source lattice")
        return self.nu_of_wedge(a.wedge())

    def nu_of_wedge(self, omega: WedgeVector) -> RubinElement:
        """alpha_G^{-1} (beta (alpha_{G/H}(omega))): solve for the target
        class whose evaluations are the kappa-images of the source values."""
        rhs = []
        for combo in self.tgt.im.basis_combos:
            val = self._mapped_functional_value(combo, omega)
            if not gp_is_integral(val):
                raise AssertionError("beta value not integral; nu must land in cap^r")
            rhs.extend(self.kappa(val))
        result = self.tgt.solve_alpha(rhs)
        member = self.tgt.membership(result)
        if member is None:
            raise AssertionError("nu image failed Rubin-lattice membership")
        return member

    def nu_matrix(self):
        """nu on the source basis, as an integer (src rank x tgt rank)
        matrix; full row rank is asserted (injectivity on a spanning set)."""
        if self._nu_matrix is None:
            rows = [list(self.nu(RubinElement(self.src, tuple(
                1 if j == i else 0 for j in range(self.src.rank)), ())).coords)
                for i in range(self.src.rank)]
            if rational_matrix_rank(rows) != self.src.rank:
                raise AssertionError("nu is not injective on the source basis")
            self._nu_matrix = rows
        return self._nu_matrix

    # -- norm power -------------------------------------------------------

    def norm_power(self, omega: WedgeVector) -> WedgeVector:
        """N^r: Lambda^r over G of the big module -> Lambda^r over G/H of the
        fixed sublattice, sending a pure wedge to the wedge of N_H m_i.
        For r = 0 this is the natural coefficient projection."""
        if omega.degree == 0:
            row = omega.coeffs.get((), gp_zero(self.group))
            pushed = [0] * self.quot.order
            for i, c in enumerate(row):
                if c:
                    pushed[self.quot.index[self.proj(self.group.elements[i])]] += c
            return WedgeVector.scalar(self.src.module, tuple(pushed))
        tgt_m = self.tgt.module
        out = WedgeVector(self.src.module, omega.degree)
        for t, c in omega.coeffs.items():
            pushed = [0] * self.quot.order
            for i, cv in enumerate(c):
                if cv:
                    pushed[self.quot.index[self.proj(self.group.elements[i])]] += cv
            vectors = []
            for i in t:
                e_i = [0] * tgt_m.rank
                e_i[i] = 1
                w = [0] * tgt_m.rank
                for h in self.kernel:
                    w = [x + y for x, y in zip(w, tgt_m.act_vec(h, e_i))]
                sol = rational_solve(self.embed, w)
                if sol is None:
                    raise AssertionError("N_H of a basis vector is not in the fixed sublattice")
                vectors.append(sol)
            wedge = _expand_wedge(self.src.module, vectors)
            out = out + wedge.gmul(tuple(pushed))
        return out


def _expand_wedge(module: GModuleLattice, vectors) -> WedgeVector:
    """Wedge of row vectors over the module basis, expanded into sorted
    tuples with minor coefficients."""
    r = len(vectors)
    g = module.group
    coeffs = {}
    for t in itertools.combinations(range(module.rank), r):
        minor = [[Fraction(vectors[i][j]) for j in t] for i in range(r)]
        d = _rational_det(minor)
        if d != 0:
            coeffs[t] = gp_scale(d, gp_one(g))
    return WedgeVector(module, r, coeffs)


def _rational_det(m):
    n = len(m)
    if n == 0:
        return Fraction(1)
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        term = Fraction(_perm_sign(perm))
        for i in range(n):
            term *= m[i][perm[i]]
        total += term
    return total


# -- the algebraic regulator operator ---------------------------------------


def regulator_apply(tgt_lattice: RubinLattice, omega: WedgeVector,
                    phi_lifts: Sequence[Sequence[GroupRingElement]],
                    graded) -> TensorResidueElement:
    """Apply the wedge of maps phi_v : M -> Q(H)^1 to a degree-r' wedge over
    the trivial group, producing an element of (cap^r) (x) Q(H)^d.

    ``phi_lifts[v][i]`` is a Z[H]-lift of phi_v on the i-th module basis
    vector (a member of I(H)); the d-fold products land in I(H)^d and are
    reduced in the graded piece only at the end.  The base group must be
    trivial (the only supplier of these maps is the k = Q backend).
    """
    module = omega.module
    if module.group.order != 1:
        raise ValueError("regulator operator is implemented over a trivial base group")
    d = len(phi_lifts)
    if d != graded.level:
        raise ValueError("number of maps must match the graded level")
    if omega.degree - d != tgt_lattice.r:
        raise ValueError("degree mismatch: need deg(omega) - d = r")
    h_group = graded.group
    # State: tuple -> Z[H]-coefficient with rational scale folded in.
    state: dict[tuple, GroupRingElement] = {}
    one_h = GroupRingElement.one(h_group)
    for t, row in omega.coeffs.items():
        state[t] = one_h.scale(row[0])
    for lifts in phi_lifts:
        new_state: dict[tuple, GroupRingElement] = {}
        for t, coeff in state.items():
            for pos, i in enumerate(t):
                rest = t[:pos] + t[pos + 1:]
                term = (coeff * lifts[i]).scale((-1) ** pos)
                if rest in new_state:
                    new_state[rest] = new_state[rest] + term
                else:
                    new_state[rest] = term
        state = new_state
    ring = graded
    rows = [[0] * len(ring.cyclic_orders) for _ in range(tgt_lattice.rank)]
    for t, coeff in state.items():
        if all(c == 0 for c in coeff.coeffs):
            continue
        for c in coeff.coeffs:
            if Fraction(c).denominator != 1:
                raise ValueError("regulator image has non-integral coefficients; "
                                 "the wedge must be integral over the unit basis")
        int_coeff = GroupRingElement(h_group, tuple(int(c) for c in coeff.coeffs))
        base = WedgeVector.basis_wedge(module, t)
        coords = tgt_lattice.coords_of(base)
        residue = ring.reduce(int_coeff)
        for bi, cb in enumerate(coords):
            if cb:
                for k, x in enumerate(residue.coords):
                    rows[bi][k] += cb * x
    return TensorResidueElement.build(tgt_lattice, ring, rows)


# -- permutation signs for place sets ---------------------------------------


def sgn_perm(vprime: Sequence, v: Sequence, sort_key=None) -> int:
    """Sign of the permutation rearranging (V' \\ V, then V) into sorted V'.

    Both inputs are place sets; V must be contained in V'."""
    key = sort_key if sort_key is not None else (lambda x: x)
    vs = sorted(v, key=key)
    vps = sorted(vprime, key=key)
    if any(x not in vps for x in vs):
        raise ValueError("V must be a subset of V'")
    diff = [x for x in vps if x not in set(vs)]
    arranged = diff + vs
    perm = [vps.index(x) for x in arranged]
    return _perm_sign(perm)

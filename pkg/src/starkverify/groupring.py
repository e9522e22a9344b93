"""Finite abelian groups, integral group rings, augmentation filtrations.

Groups are direct products of cyclic groups with a fixed lexicographic
element enumeration, so coefficient vectors of group-ring elements are
comparable across all operations.  The augmentation filtration I(H)^n is
realized as a lattice in Z^{|H|} and its quotients through the canonical
finite presentations of :mod:`starkverify.intlinalg`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .intlinalg import (
    FinitePresentation,
    LatticeAccumulator,
    LatticeBasis,
    hnf,
    quotient_presentation,
    snf,
    unimodular_inverse,
    vec_mat,
)

Element = tuple[int, ...]


class FiniteAbelianGroup:
    """Product of cyclic groups Z/n_1 x ... x Z/n_k, elements as exponent
    tuples enumerated lexicographically.  Immutable after construction."""

    def __init__(self, factors: Sequence[int], place_tags: Optional[Sequence] = None):
        if any(n < 2 for n in factors):
            raise ValueError("cyclic factors must be >= 2")
        if place_tags is not None and len(place_tags) != len(factors):
            raise ValueError("one place tag per factor")
        self.factors = tuple(int(n) for n in factors)
        self.place_tags = tuple(place_tags) if place_tags is not None else None
        self.order = 1
        for n in self.factors:
            self.order *= n
        self.elements: tuple[Element, ...] = tuple(
            itertools.product(*[range(n) for n in self.factors])
        )
        self.index = {e: i for i, e in enumerate(self.elements)}

    # -- basic group structure -------------------------------------------

    @property
    def identity(self) -> Element:
        return (0,) * len(self.factors)

    def mul(self, a: Element, b: Element) -> Element:
        return tuple((x + y) % n for x, y, n in zip(a, b, self.factors))

    def inv(self, a: Element) -> Element:
        return tuple((-x) % n for x, n in zip(a, self.factors))

    def pow(self, a: Element, k: int) -> Element:
        return tuple((x * k) % n for x, n in zip(a, self.factors))

    def generators(self) -> list[Element]:
        gens = []
        for i in range(len(self.factors)):
            e = [0] * len(self.factors)
            e[i] = 1
            gens.append(tuple(e))
        return gens

    def element_order(self, a: Element) -> int:
        from math import gcd

        o = 1
        for x, n in zip(a, self.factors):
            o_x = n // gcd(x, n) if x else 1
            o = o * o_x // gcd(o, o_x)
        return o

    def subgroup(self, gens: Iterable[Element]) -> frozenset[Element]:
        seen = {self.identity}
        frontier = [self.identity]
        gens = list(gens)
        while frontier:
            cur = frontier.pop()
            for g in gens:
                nxt = self.mul(cur, g)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return frozenset(seen)

    def key(self):
        return (self.factors, self.place_tags)

    def __eq__(self, other):
        return isinstance(other, FiniteAbelianGroup) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FiniteAbelianGroup{self.factors}"


TRIVIAL_GROUP = FiniteAbelianGroup(())


def trivial_group() -> FiniteAbelianGroup:
    return TRIVIAL_GROUP


@dataclass(frozen=True)
class GroupRingElement:
    """Element of Z[H] (or Q[H]) as a coefficient vector over the fixed
    enumeration of H."""

    group: FiniteAbelianGroup
    coeffs: tuple

    @staticmethod
    def zero(group: FiniteAbelianGroup) -> "GroupRingElement":
        return GroupRingElement(group, (0,) * group.order)

    @staticmethod
    def one(group: FiniteAbelianGroup) -> "GroupRingElement":
        return GroupRingElement.of_element(group, group.identity)

    @staticmethod
    def of_element(group: FiniteAbelianGroup, e: Element) -> "GroupRingElement":
        c = [0] * group.order
        c[group.index[e]] = 1
        return GroupRingElement(group, tuple(c))

    def _check(self, other: "GroupRingElement"):
        if self.group != other.group:
            raise ValueError("group mismatch")

    def __add__(self, other):
        self._check(other)
        return GroupRingElement(self.group, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        return GroupRingElement(self.group, tuple(x - y for x, y in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return GroupRingElement(self.group, tuple(-x for x in self.coeffs))

    def scale(self, c) -> "GroupRingElement":
        return GroupRingElement(self.group, tuple(c * x for x in self.coeffs))

    def __mul__(self, other):
        """Convolution product."""
        self._check(other)
        g = self.group
        out = [0] * g.order
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            ei = g.elements[i]
            for j, b in enumerate(other.coeffs):
                if b == 0:
                    continue
                out[g.index[g.mul(ei, g.elements[j])]] += a * b
        return GroupRingElement(g, tuple(out))

    def act(self, e: Element) -> "GroupRingElement":
        """Multiply by the group element e (a coefficient permutation)."""
        g = self.group
        out = [0] * g.order
        for i, a in enumerate(self.coeffs):
            if a:
                out[g.index[g.mul(e, g.elements[i])]] = a
        return GroupRingElement(g, tuple(out))

    def augmentation(self):
        return sum(self.coeffs)

    def support(self) -> list[Element]:
        return [self.group.elements[i] for i, a in enumerate(self.coeffs) if a]

    def __repr__(self):
        terms = [f"{a}*{e}" for e, a in zip(self.group.elements, self.coeffs) if a]
        return " + ".join(terms) if terms else "0"


def norm_element(group: FiniteAbelianGroup) -> GroupRingElement:
    """Sum of all group elements."""
    return GroupRingElement(group, (1,) * group.order)


def norm_of_subset(group: FiniteAbelianGroup, elements: Iterable[Element]) -> GroupRingElement:
    c = [0] * group.order
    for e in elements:
        c[group.index[e]] += 1
    return GroupRingElement(group, tuple(c))


# -- augmentation filtration ----------------------------------------------

_AUG_CACHE: dict = {}


def _subgroup_key(group: FiniteAbelianGroup, elements: Optional[frozenset]) -> tuple:
    if elements is None:
        return (group.key(), None)
    return (group.key(), tuple(sorted(elements)))


def span_of_subgroup(group: FiniteAbelianGroup, elements: Iterable[Element]) -> LatticeBasis:
    """Z[H'] as a sublattice of Z[H] for a subgroup H' <= H."""
    rows = []
    n = group.order
    for e in elements:
        row = [0] * n
        row[group.index[e]] = 1
        rows.append(row)
    return LatticeBasis.from_rows(n, rows)


def aug_power(
    group: FiniteAbelianGroup,
    n: int,
    subgroup: Optional[frozenset[Element]] = None,
    subgroup_gens: Optional[Sequence[Element]] = None,
) -> LatticeBasis:
    """HNF basis of I(H)^n inside Z[H] (or of I(H')^n for a subgroup H').

    I(H)^0 is Z[H] itself.  The lattice is generated by h * (g_1 - 1) ... with
    h running over the (sub)group and the g_i over a fixed generating set;
    the recursion I^n = I^{n-1} * I keeps the generator count small.
    """
    key = (_subgroup_key(group, subgroup), n)
    if key in _AUG_CACHE:
        return _AUG_CACHE[key]
    order = group.order
    if subgroup is None:
        members = list(group.elements)
        gens = group.generators()
    else:
        members = sorted(subgroup)
        gens = list(subgroup_gens) if subgroup_gens is not None else members
    if n == 0:
        base = span_of_subgroup(group, members)
        _AUG_CACHE[key] = base
        return base
    prev = aug_power(group, n - 1, subgroup, subgroup_gens)
    acc = LatticeAccumulator(order)
    for row in prev.basis:
        elt = GroupRingElement(group, tuple(row))
        for g in gens:
            if g == group.identity:
                continue
            shifted = elt.act(g) - elt
            acc.insert(list(shifted.coeffs))
    result = LatticeBasis(order, tuple(tuple(r) for r in acc.basis()))
    _AUG_CACHE[key] = result
    return result


def aug_power_bruteforce(group: FiniteAbelianGroup, n: int) -> LatticeBasis:
    """Oracle: Z-span of h * (s_1 - 1) ... (s_n - 1) over all s_i in H."""
    order = group.order
    if n == 0:
        return LatticeBasis.full(order)
    acc = LatticeAccumulator(order)
    for tup in itertools.combinations_with_replacement(group.elements, n):
        prod = GroupRingElement.one(group)
        for s in tup:
            prod = prod * (GroupRingElement.of_element(group, s) - GroupRingElement.one(group))
        for h in group.elements:
            acc.insert(list(prod.act(h).coeffs))
    return LatticeBasis(order, tuple(tuple(r) for r in acc.basis()))


@dataclass(frozen=True)
class FiltrationResidue:
    """Canonical residue in Z[H']/I(H')^n (or in Q(H')^n when graded)."""

    ring_key: tuple
    level: int
    graded: bool
    coords: tuple[int, ...]

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.coords)


class QuotientRing:
    """Z[H']/I(H')^n with canonical coordinates, for H' a subgroup of H
    realized inside the ambient coefficient space Z^{|H|}."""

    def __init__(self, group: FiniteAbelianGroup, n: int,
                 subgroup: Optional[frozenset[Element]] = None,
                 subgroup_gens: Optional[Sequence[Element]] = None):
        self.group = group
        self.level = n
        self.subgroup = subgroup
        if subgroup is None:
            covering = LatticeBasis.full(group.order)
        else:
            covering = span_of_subgroup(group, subgroup)
        self.presentation: FinitePresentation = quotient_presentation(
            aug_power(group, n, subgroup, subgroup_gens), covering)
        self.key = ("ZH/I^n", _subgroup_key(group, subgroup), n)

    @property
    def cyclic_orders(self):
        return self.presentation.cyclic_orders

    def reduce(self, a: GroupRingElement) -> FiltrationResidue:
        if a.group != self.group:
            raise ValueError("group mismatch")
        return FiltrationResidue(self.key, self.level, False,
                                 self.presentation.reduce(list(a.coeffs)))

    def lift(self, r: FiltrationResidue) -> GroupRingElement:
        if r.ring_key != self.key:
            raise ValueError("residue belongs to a different ring")
        return GroupRingElement(self.group, tuple(self.presentation.lift(list(r.coords))))

    def mul(self, r1: FiltrationResidue, r2: FiltrationResidue) -> FiltrationResidue:
        return self.reduce(self.lift(r1) * self.lift(r2))

    def mul_by(self, r: FiltrationResidue, a: GroupRingElement) -> FiltrationResidue:
        return self.reduce(self.lift(r) * a)

    def zero(self) -> FiltrationResidue:
        return FiltrationResidue(self.key, self.level, False,
                                 (0,) * len(self.presentation.cyclic_orders))

    def one(self) -> FiltrationResidue:
        return self.reduce(GroupRingElement.one(self.group))


class GradedPiece:
    """Q(H')^n = I(H')^n / I(H')^{n+1} with canonical coordinates."""

    def __init__(self, group: FiniteAbelianGroup, n: int,
                 subgroup: Optional[frozenset[Element]] = None,
                 subgroup_gens: Optional[Sequence[Element]] = None):
        self.group = group
        self.level = n
        self.subgroup = subgroup
        self.numerator = aug_power(group, n, subgroup, subgroup_gens)
        self.presentation = quotient_presentation(
            aug_power(group, n + 1, subgroup, subgroup_gens), self.numerator)
        self.key = ("Q(H)^n", _subgroup_key(group, subgroup), n)

    @property
    def cyclic_orders(self):
        return self.presentation.cyclic_orders

    def reduce(self, a: GroupRingElement) -> FiltrationResidue:
        if a.group != self.group:
            raise ValueError("group mismatch")
        if self.numerator.membership(list(a.coeffs)) is None:
            raise ValueError("element does not lie in I^n")
        return FiltrationResidue(self.key, self.level, True,
                                 self.presentation.reduce(list(a.coeffs)))

    def lift(self, r: FiltrationResidue) -> GroupRingElement:
        if r.ring_key != self.key:
            raise ValueError("residue belongs to a different graded piece")
        return GroupRingElement(self.group, tuple(self.presentation.lift(list(r.coords))))

    def zero(self) -> FiltrationResidue:
        return FiltrationResidue(self.key, self.level, True,
                                 (0,) * len(self.presentation.cyclic_orders))


_QUOTIENT_CACHE: dict = {}
_GRADED_CACHE: dict = {}


def quotient_ring(group: FiniteAbelianGroup, n: int,
                  subgroup: Optional[frozenset[Element]] = None,
                  subgroup_gens: Optional[Sequence[Element]] = None) -> QuotientRing:
    key = (_subgroup_key(group, subgroup), n)
    if key not in _QUOTIENT_CACHE:
        _QUOTIENT_CACHE[key] = QuotientRing(group, n, subgroup, subgroup_gens)
    return _QUOTIENT_CACHE[key]


def graded_piece(group: FiniteAbelianGroup, n: int,
                 subgroup: Optional[frozenset[Element]] = None,
                 subgroup_gens: Optional[Sequence[Element]] = None) -> GradedPiece:
    key = (_subgroup_key(group, subgroup), n)
    if key not in _GRADED_CACHE:
        _GRADED_CACHE[key] = GradedPiece(group, n, subgroup, subgroup_gens)
    return _GRADED_CACHE[key]


def reduce_mod(a: GroupRingElement, n: int) -> FiltrationResidue:
    """Canonical residue of a modulo I(H)^n."""
    return quotient_ring(a.group, n).reduce(a)


def graded_component(a: GroupRingElement, n: int) -> FiltrationResidue:
    """Class of a in Q(H)^n; requires a in I(H)^n."""
    return graded_piece(a.group, n).reduce(a)


# -- product decompositions and the projections pi_X -----------------------


class ProductDecomposition:
    """Internal direct product H = prod_v J_v, with the factorization witness.

    Validated eagerly at construction: every element of H must factor
    uniquely as a product of one element from each factor.
    """

    def __init__(self, group: FiniteAbelianGroup, factors: dict):
        # factors: place -> sequence of generators of J_v
        self.group = group
        self.places = tuple(sorted(factors.keys(), key=_place_sort_key))
        self.factor_elements = {}
        size = 1
        for v in self.places:
            sub = group.subgroup(factors[v])
            self.factor_elements[v] = sub
            size *= len(sub)
        if size != group.order:
            raise ValueError(
                f"not an internal direct product: factor sizes multiply to {size}, |H| = {group.order}")
        if group.order > 10**4:
            raise ValueError("decomposition validation is exhaustive; group too large")
        self.factor_gens = {v: tuple(factors[v]) for v in self.places}
        factorization: dict[Element, dict] = {}
        ordered = [sorted(self.factor_elements[v]) for v in self.places]
        for combo in itertools.product(*ordered):
            prod = group.identity
            for c in combo:
                prod = group.mul(prod, c)
            if prod in factorization:
                raise ValueError("not an internal direct product: factorization not unique")
            factorization[prod] = dict(zip(self.places, combo))
        self.factorization = factorization

    def component(self, e: Element, v) -> Element:
        return self.factorization[e][v]

    def project_element(self, e: Element, x: Iterable) -> Element:
        """pi_X on a group element: keep the components at places in X."""
        comp = self.factorization[e]
        out = self.group.identity
        for v in x:
            out = self.group.mul(out, comp[v])
        return out

    def subgroup_for(self, x: Iterable) -> frozenset[Element]:
        gens = []
        for v in x:
            gens.extend(self.factor_gens[v])
        return self.group.subgroup(gens)


def _place_sort_key(v):
    # Infinite place sorts first; finite places ascending.
    if v == "inf":
        return (0, 0)
    return (1, v)


def pi_x(a: GroupRingElement, x: Iterable, decomposition: ProductDecomposition) -> GroupRingElement:
    """Ring endomorphism of Z[H] induced by projection onto prod_{v in X} J_v."""
    if a.group != decomposition.group:
        raise ValueError("group mismatch")
    xs = [v for v in decomposition.places if v in set(x)]
    g = a.group
    out = [0] * g.order
    for i, c in enumerate(a.coeffs):
        if c:
            out[g.index[decomposition.project_element(g.elements[i], xs)]] += c
    return GroupRingElement(g, tuple(out))


# Groups up to this order use genuine aug_power lattice membership for the
# inclusion-exclusion certificate; larger groups use the tensor certificate
# (each summand is a product of |W| augmentation elements by construction).
AUG_MEMBERSHIP_BOUND = 120


def inclusion_exclusion_defect(sigma: Element, decomposition: ProductDecomposition):
    """Alternating sum over subsets X of W of pi_X(sigma).

    Returns (defect, certificate).  Asserts the defect equals the product of
    (sigma_v - 1) over the places and that it lies in I(H)^{|W|}; violations
    are hard errors since they would falsify the inclusion-exclusion lemma.
    """
    group = decomposition.group
    places = decomposition.places
    k = len(places)
    defect = GroupRingElement.zero(group)
    for rsize in range(k + 1):
        for x in itertools.combinations(places, rsize):
            sign = (-1) ** (k - rsize)
            term = GroupRingElement.of_element(group, decomposition.project_element(sigma, x))
            defect = defect + term.scale(sign)
    prod = GroupRingElement.one(group)
    for v in places:
        c = decomposition.component(sigma, v)
        prod = prod * (GroupRingElement.of_element(group, c) - GroupRingElement.one(group))
    if defect.coeffs != prod.coeffs:
        raise AssertionError("inclusion-exclusion expansion mismatch")
    cert = defect_membership_certificate(defect, decomposition, k)
    if cert is None:
        raise AssertionError("defect not in I(H)^{|W|}; inclusion-exclusion lemma violated")
    return defect, cert


def defect_membership_certificate(a: GroupRingElement, decomposition: ProductDecomposition, n: int):
    """Certificate that a lies in I(H)^n, or None.

    For small groups this is lattice membership in aug_power(H, n).  For
    large groups it expresses a in the tensor lattice I(J_{v_1}) x ... x
    I(J_{v_k}), whose basis vectors are products of k augmentation elements
    and hence lie in I(H)^k syntactically.
    """
    group = decomposition.group
    if group.order <= AUG_MEMBERSHIP_BOUND:
        coords = aug_power(group, n).membership(list(a.coeffs))
        if coords is None:
            return None
        return ("aug_power", tuple(coords))
    coords = _tensor_membership(a, decomposition)
    if coords is None:
        return None
    return ("tensor", coords)


def _tensor_membership(a: GroupRingElement, decomposition: ProductDecomposition):
    """Coordinates of a in I(J_{v_1}) (x) ... (x) I(J_{v_k}), or None.

    Uses the unique factorization of H to reindex Z[H] as a tensor product
    of the Z[J_v], then back-substitutes one tensor mode at a time against
    the (h - 1 : h != 1) basis of each I(J_v).
    """
    group = decomposition.group
    places = decomposition.places
    members = [sorted(decomposition.factor_elements[v]) for v in places]
    # Tensor coefficient table indexed by factor components.
    table: dict[tuple, object] = {}
    for i, c in enumerate(a.coeffs):
        if c:
            comp = decomposition.factorization[group.elements[i]]
            table[tuple(comp[v] for v in places)] = c
    # Mode-by-mode: write coefficients over the basis {h - 1 : h != 1} of
    # I(J_v).  In the group-element basis {h}, x = sum_h x_h h lies in I and
    # equals sum_{h != 1} x_h (h - 1) iff sum_h x_h = 0; solve per fiber.
    for mode, v in enumerate(places):
        new_table: dict[tuple, object] = {}
        idx = {h: t for t, h in enumerate(members[mode])}
        fibers: dict[tuple, dict] = {}
        for key, c in table.items():
            rest = key[:mode] + key[mode + 1:]
            fibers.setdefault(rest, {})[key[mode]] = c
        for rest, fiber in fibers.items():
            if sum(fiber.values()) != 0:
                return None  # not in the augmentation ideal of this factor
            ident = decomposition.group.identity
            for h, c in fiber.items():
                if h == ident or c == 0:
                    continue
                new_key = rest[:mode] + (h,) + rest[mode:]
                new_table[new_key] = c
        table = new_table
    return tuple(sorted(table.items()))


def inclusion_exclusion_identity(a: GroupRingElement, decomposition: ProductDecomposition):
    """Defect of a general group-ring element a, with membership certificate.

    Linearity reduces to single group elements; the returned certificate
    covers the whole sum.
    """
    group = decomposition.group
    places = decomposition.places
    k = len(places)
    defect = GroupRingElement.zero(group)
    for rsize in range(k):
        for x in itertools.combinations(places, rsize):
            sign = (-1) ** (k - rsize)
            defect = defect + pi_x(a, x, decomposition).scale(sign)
    defect = defect + a  # pi_W = identity
    cert = defect_membership_certificate(defect, decomposition, k)
    return defect, cert


# -- homomorphisms and quotient structure ----------------------------------


class GroupHom:
    """Homomorphism between enumerated finite abelian groups, stored as an
    element map; induces the coefficient map on group rings."""

    def __init__(self, src: FiniteAbelianGroup, dst: FiniteAbelianGroup, mapping: dict):
        self.src = src
        self.dst = dst
        self.mapping = dict(mapping)
        if len(self.mapping) != src.order:
            raise ValueError("mapping must cover the source group")

    @staticmethod
    def from_generator_images(src: FiniteAbelianGroup, dst: FiniteAbelianGroup,
                              images: Sequence[Element]) -> "GroupHom":
        mapping = {}
        for e in src.elements:
            out = dst.identity
            for exp, img in zip(e, images):
                out = dst.mul(out, dst.pow(img, exp))
            mapping[e] = out
        return GroupHom(src, dst, mapping)

    def __call__(self, e: Element) -> Element:
        return self.mapping[e]

    def ring_map(self, a: GroupRingElement) -> GroupRingElement:
        if a.group != self.src:
            raise ValueError("group mismatch")
        out = [0] * self.dst.order
        for i, c in enumerate(a.coeffs):
            if c:
                out[self.dst.index[self.mapping[self.src.elements[i]]]] += c
        return GroupRingElement(self.dst, tuple(out))

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == self.src.order


def structure_from_relations(num_gens: int, relation_rows: Sequence[Sequence[int]]):
    """Invariant-factor structure of Z^k / (relation lattice).

    Returns (factors, to_canonical) where ``factors`` lists the cyclic orders
    > 1 (the quotient must be finite) and ``to_canonical`` maps an exponent
    tuple to canonical coordinates.
    """
    lat = LatticeBasis.from_rows(num_gens, relation_rows)
    if lat.rank != num_gens:
        raise ValueError("quotient is infinite")
    d, _u, v = snf([list(r) for r in lat.basis])
    orders = [d[i][i] for i in range(num_gens)]
    kept = [i for i, dv in enumerate(orders) if dv != 1]
    factors = [orders[i] for i in kept]

    def to_canonical(exponents: Sequence[int]) -> Element:
        raw = vec_mat(list(exponents), v)
        return tuple(raw[i] % orders[i] for i in kept)

    return factors, to_canonical


def quotient_group(group: FiniteAbelianGroup, kernel: frozenset[Element],
                   tags: Optional[Sequence] = None):
    """Quotient H/N as a FiniteAbelianGroup together with the projection."""
    k = len(group.factors)
    rows = [[group.factors[i] if j == i else 0 for j in range(k)] for i in range(k)]
    rows += [list(e) for e in kernel]
    factors, to_canonical = structure_from_relations(k, rows)
    q = FiniteAbelianGroup(factors, tags) if factors else trivial_group()
    mapping = {e: to_canonical(e) for e in group.elements}
    return q, GroupHom(group, q, mapping)

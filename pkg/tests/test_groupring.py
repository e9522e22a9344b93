import itertools
import random

import pytest

from starkverify.groupring import (
    FiniteAbelianGroup,
    GroupHom,
    GroupRingElement,
    ProductDecomposition,
    aug_power,
    aug_power_bruteforce,
    graded_component,
    inclusion_exclusion_defect,
    inclusion_exclusion_identity,
    norm_element,
    pi_x,
    quotient_group,
    quotient_ring,
    reduce_mod,
    trivial_group,
)

Z2 = FiniteAbelianGroup((2,))
Z4 = FiniteAbelianGroup((4,))
Z2xZ3 = FiniteAbelianGroup((2, 3), place_tags=(5, 7))


def elem(group, *exps):
    return GroupRingElement.of_element(group, tuple(exps))


def test_ring_identity():
    g = Z2xZ3
    a = elem(g, 1, 2) + elem(g, 0, 1).scale(3)
    assert (GroupRingElement.one(g) * a).coeffs == a.coeffs


def test_ring_tau_minus_one_squared():
    # (tau - 1)^2 = -2(tau - 1) in Z[Z/2].
    tau = elem(Z2, 1)
    one = GroupRingElement.one(Z2)
    sq = (tau - one) * (tau - one)
    assert sq.coeffs == ((tau - one).scale(-2)).coeffs


def test_norm_annihilates_augmentation():
    for g in (Z2, Z4, Z2xZ3):
        n = norm_element(g)
        for s in g.elements:
            prod = n * (GroupRingElement.of_element(g, s) - GroupRingElement.one(g))
            assert all(c == 0 for c in prod.coeffs)


def test_ring_mul_commutative_associative():
    rng = random.Random(11)
    g = Z2xZ3
    for _ in range(10):
        a = GroupRingElement(g, tuple(rng.randint(-3, 3) for _ in range(g.order)))
        b = GroupRingElement(g, tuple(rng.randint(-3, 3) for _ in range(g.order)))
        c = GroupRingElement(g, tuple(rng.randint(-3, 3) for _ in range(g.order)))
        assert (a * b).coeffs == (b * a).coeffs
        assert ((a * b) * c).coeffs == (a * (b * c)).coeffs


def test_group_mismatch_raises():
    with pytest.raises(ValueError):
        GroupRingElement.one(Z2) * GroupRingElement.one(Z4)


def test_norm_element_values():
    assert norm_element(trivial_group()).coeffs == (1,)
    assert norm_element(Z2).coeffs == (1, 1)
    g = FiniteAbelianGroup((2, 2))
    n = norm_element(g)
    assert (n * n).coeffs == n.scale(4).coeffs


def test_aug_power_z2():
    # I(Z/2) = span{tau - 1}, I(Z/2)^2 = span{2(tau - 1)}.
    lat1 = aug_power(Z2, 1)
    assert lat1.membership([-1, 1]) is not None
    assert lat1.rank == 1
    lat2 = aug_power(Z2, 2)
    assert lat2.membership([-2, 2]) is not None
    assert lat2.membership([-1, 1]) is None


def test_aug_power_zero_is_full():
    assert aug_power(Z4, 0).rank == 4


def test_aug_power_against_bruteforce():
    # All |H| <= 8, n <= 4: recursive minimal-generator span equals the
    # all-sigma brute-force span (exact basis equality).
    shapes = [(2,), (3,), (4,), (5,), (6,), (7,), (8,), (2, 2), (2, 3), (2, 4), (2, 2, 2)]
    for shape in shapes:
        g = FiniteAbelianGroup(shape)
        for n in range(5):
            assert aug_power(g, n) == aug_power_bruteforce(g, n), (shape, n)


def test_filtration_chain_and_products():
    g = FiniteAbelianGroup((4, 3))
    pows = [aug_power(g, n) for n in range(4)]
    for n in range(3):
        assert pows[n].contains_lattice(pows[n + 1])
    # I^a * I^b <= I^{a+b} on generators.
    for a, b in [(1, 1), (1, 2), (2, 1)]:
        target = aug_power(g, a + b)
        for ra in pows[a].basis[:3]:
            for rb in pows[b].basis[:3]:
                prod = GroupRingElement(g, tuple(ra)) * GroupRingElement(g, tuple(rb))
                assert target.membership(list(prod.coeffs)) is not None


def test_reduce_mod_level_zero():
    a = elem(Z4, 3).scale(7)
    r = reduce_mod(a, 0)
    assert r.is_zero()


def test_reduce_mod_augmentation():
    # Every group element is 1 mod I(H).
    for s in Z2xZ3.elements:
        r = reduce_mod(elem(Z2xZ3, *s), 1)
        assert r == reduce_mod(GroupRingElement.one(Z2xZ3), 1)


def test_reduce_mod_z4_square():
    # sigma^2 == 2 sigma - 1 mod I^2 since (sigma - 1)^2 in I^2.
    s2 = elem(Z4, 2)
    rhs = elem(Z4, 1).scale(2) - GroupRingElement.one(Z4)
    assert reduce_mod(s2, 2) == reduce_mod(rhs, 2)


def test_quotient_ring_z2_structure():
    # Z[Z/2]/I^2: free rank 1 plus Z/2 from I/I^2.
    ring = quotient_ring(Z2, 2)
    assert sorted(ring.cyclic_orders) == [0, 2]


def test_graded_component_z2():
    tau = elem(Z2, 1)
    one = GroupRingElement.one(Z2)
    r = graded_component(tau - one, 1)
    assert not r.is_zero()
    assert graded_component((tau - one).scale(2), 1).is_zero()
    # Q(Z/2)^1 is Z/2.
    g = graded_component((tau - one).scale(3), 1)
    assert g == r


def test_graded_component_klein():
    g = FiniteAbelianGroup((2, 2))
    s = elem(g, 1, 0) - GroupRingElement.one(g)
    t = elem(g, 0, 1) - GroupRingElement.one(g)
    assert not graded_component(s * t, 2).is_zero()


def test_graded_component_requires_membership():
    with pytest.raises(ValueError):
        graded_component(GroupRingElement.one(Z2), 1)


def _decomp_z2z3():
    return ProductDecomposition(Z2xZ3, {5: [(1, 0)], 7: [(0, 1)]})


def test_pi_x_basics():
    d = _decomp_z2z3()
    a = elem(Z2xZ3, 1, 1)
    # pi_W = identity.
    assert pi_x(a, [5, 7], d).coeffs == a.coeffs
    # Kill the 7-component.
    assert pi_x(a, [5], d).coeffs == elem(Z2xZ3, 1, 0).coeffs
    # pi_empty sends every sigma to 1.
    assert pi_x(a, [], d).coeffs == GroupRingElement.one(Z2xZ3).coeffs


def test_pi_x_composition():
    d = _decomp_z2z3()
    rng = random.Random(3)
    a = GroupRingElement(Z2xZ3, tuple(rng.randint(-4, 4) for _ in range(6)))
    for x in ([], [5], [7], [5, 7]):
        for y in ([], [5], [7], [5, 7]):
            xy = [v for v in x if v in y]
            lhs = pi_x(pi_x(a, y, d), x, d)
            assert lhs.coeffs == pi_x(a, xy, d).coeffs


def test_pi_x_is_ring_hom():
    d = _decomp_z2z3()
    rng = random.Random(5)
    a = GroupRingElement(Z2xZ3, tuple(rng.randint(-3, 3) for _ in range(6)))
    b = GroupRingElement(Z2xZ3, tuple(rng.randint(-3, 3) for _ in range(6)))
    assert pi_x(a * b, [5], d).coeffs == (pi_x(a, [5], d) * pi_x(b, [5], d)).coeffs


def test_decomposition_rejects_non_product():
    g = FiniteAbelianGroup((4,))
    with pytest.raises(ValueError):
        ProductDecomposition(g, {2: [(2,)], 3: [(1,)]})


def test_inclusion_exclusion_defect_binomial():
    d = _decomp_z2z3()
    sigma = (1, 1)
    defect, cert = inclusion_exclusion_defect(sigma, d)
    # sigma*tau - sigma - tau + 1 pattern.
    expected = (elem(Z2xZ3, 1, 1) - elem(Z2xZ3, 1, 0) - elem(Z2xZ3, 0, 1)
                + GroupRingElement.one(Z2xZ3))
    assert defect.coeffs == expected.coeffs
    assert cert is not None


def test_inclusion_exclusion_identity_element():
    d = _decomp_z2z3()
    defect, cert = inclusion_exclusion_defect((0, 0), d)
    assert all(c == 0 for c in defect.coeffs)


def test_inclusion_exclusion_random_233():
    g = FiniteAbelianGroup((4, 3, 2), place_tags=(2, 3, 5))
    d = ProductDecomposition(g, {2: [(1, 0, 0)], 3: [(0, 1, 0)], 5: [(0, 0, 1)]})
    rng = random.Random(17)
    for _ in range(5):
        sigma = g.elements[rng.randrange(g.order)]
        defect, cert = inclusion_exclusion_defect(sigma, d)
        assert cert is not None
        # Independent check against aug_power membership.
        assert aug_power(g, 3).membership(list(defect.coeffs)) is not None


def test_inclusion_exclusion_general_element():
    g = FiniteAbelianGroup((2, 3))
    d = ProductDecomposition(g, {5: [(1, 0)], 7: [(0, 1)]})
    rng = random.Random(23)
    for _ in range(20):
        a = GroupRingElement(g, tuple(rng.randint(-9, 9) for _ in range(g.order)))
        defect, cert = inclusion_exclusion_identity(a, d)
        assert cert is not None


def test_quotient_group():
    g = FiniteAbelianGroup((4,))
    sub = g.subgroup([(2,)])
    q, proj = quotient_group(g, sub)
    assert q.order == 2
    assert proj((2,)) == q.identity
    assert proj((1,)) != q.identity


def test_group_hom_ring_map():
    g = FiniteAbelianGroup((4,))
    q, proj = quotient_group(g, g.subgroup([(2,)]))
    a = elem(g, 1) + elem(g, 3).scale(2)
    img = proj.ring_map(a)
    assert sum(img.coeffs) == 3


def test_trivial_group_ring():
    t = trivial_group()
    assert norm_element(t).coeffs == (1,)
    assert aug_power(t, 1).rank == 0
    assert aug_power(t, 0).rank == 1

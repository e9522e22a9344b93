import itertools
import random
from fractions import Fraction

import pytest

from starkverify.groupring import (
    FiniteAbelianGroup,
    GroupHom,
    GroupRingElement,
    graded_piece,
    norm_element,
    quotient_group,
    quotient_ring,
    trivial_group,
)
from starkverify.multilinear import (
    DescentData,
    EquivariantHom,
    GModuleLattice,
    WedgeVector,
    cal_n,
    contract,
    det_value,
    evaluate_wedge,
    free_module,
    gp_one,
    gp_scale,
    hom_lattice,
    regulator_apply,
    rubin_lattice,
    sgn_perm,
    trivial_module,
    wedge_operator,
)

Z2 = FiniteAbelianGroup((2,))


def z2_sign_module():
    # Rank-2 module over Z/2: generator swaps the two coordinates.
    return GModuleLattice(Z2, [[[0, 1], [1, 0]]], role="synthetic")


def test_hom_lattice_free_rank_one():
    m = free_module(Z2)
    homs = hom_lattice(m)
    assert len(homs) == 2
    for h in homs:
        assert h.is_equivariant()


def test_hom_lattice_trivial_action():
    # M = Z with trivial Z/2-action: Hom_G(Z, Z[Z/2]) = Z * (1 -> N_H).
    m = GModuleLattice(Z2, [[[1]]], role="synthetic")
    homs = hom_lattice(m)
    assert len(homs) == 1
    assert tuple(homs[0].matrix[0]) == (1, 1)


def test_hom_lattice_swap_module():
    m = z2_sign_module()
    homs = hom_lattice(m)
    assert len(homs) == 2
    for h in homs:
        assert h.is_equivariant()


def test_contract_r1_is_value():
    m = z2_sign_module()
    phi = hom_lattice(m)[0]
    w = WedgeVector.basis_wedge(m, [0])
    out = contract(phi, w)
    assert out.degree == 0
    e0 = [1, 0]
    assert out.coeffs.get((), None) == phi.value(e0)


def test_contract_degree_zero_raises():
    m = z2_sign_module()
    phi = hom_lattice(m)[0]
    with pytest.raises(ValueError):
        contract(phi, WedgeVector.scalar(m, gp_one(Z2)))


def test_wedge_operator_identity_matrix():
    # phi_i(m_j) = delta_ij: determinant 1.
    m = trivial_module(2)
    t = trivial_group()
    phi1 = EquivariantHom(m, ((1,), (0,)))
    phi2 = EquivariantHom(m, ((0,), (1,)))
    w = WedgeVector.basis_wedge(m, [0, 1])
    out = wedge_operator([phi1, phi2], w)
    assert out.coeffs[()] == (1,)


def test_wedge_operator_det_2x2():
    # phi values [[a,b],[c,d]] as integers over the trivial group: ad - bc.
    m = trivial_module(2)
    a, b, c, d = 3, 5, 2, 7
    phi1 = EquivariantHom(m, ((a,), (b,)))
    phi2 = EquivariantHom(m, ((c,), (d,)))
    w = WedgeVector.basis_wedge(m, [0, 1])
    out = wedge_operator([phi1, phi2], w)
    assert out.coeffs[()] == (a * d - b * c,)


def test_wedge_operator_s0_identity():
    m = z2_sign_module()
    w = WedgeVector.basis_wedge(m, [0, 1])
    out = wedge_operator([], w)
    assert out.coeffs == w.coeffs


def test_wedge_operator_s_gt_r_raises():
    m = z2_sign_module()
    homs = hom_lattice(m)
    w = WedgeVector.basis_wedge(m, [0])
    with pytest.raises(ValueError):
        wedge_operator(homs[:2], w)


def test_contract_antisymmetry():
    rng = random.Random(9)
    m = z2_sign_module()
    phis = hom_lattice(m)
    w = WedgeVector(m, 2, {(0, 1): tuple(Fraction(rng.randint(-3, 3)) for _ in range(2))})
    a = contract(phis[0], contract(phis[1], w))
    b = contract(phis[1], contract(phis[0], w))
    assert a.coeffs.get((), (0, 0)) == tuple(-x for x in b.coeffs.get((), (0, 0)))


def _random_hom(module, rng, bound=2):
    """Random equivariant hom as a Z[G]-combination of the hom basis."""
    homs = hom_lattice(module)
    g = module.group
    n = module.rank
    rows = [[0] * g.order for _ in range(n)]
    for h in homs:
        coeff = [rng.randint(-bound, bound) for _ in range(g.order)]
        for i in range(n):
            from starkverify.multilinear import gp_add, gp_mul

            rows[i] = list(gp_add(tuple(rows[i]), gp_mul(g, tuple(coeff), h.matrix[i])))
    return EquivariantHom(module, tuple(tuple(r) for r in rows))


@pytest.mark.parametrize("factors,rank_r", [((2,), 2), ((3,), 2), ((2, 2), 2), ((4,), 3)])
def test_determinant_law(factors, rank_r):
    # For s = r: wedge_operator equals det(phi_i(m_j)), brute-force expansion.
    rng = random.Random(sum(factors) * 10 + rank_r)
    group = FiniteAbelianGroup(factors)
    module = free_module(group)
    r = rank_r
    phis = [_random_hom(module, rng) for _ in range(r)]
    tuples = list(itertools.combinations(range(module.rank), r))
    t = tuples[rng.randrange(len(tuples))]
    w = WedgeVector.basis_wedge(module, t)
    lhs = wedge_operator(phis, w).coeffs.get((), (0,) * group.order)
    rows = []
    for phi in phis:
        row = []
        for j in t:
            e_j = [0] * module.rank
            e_j[j] = 1
            row.append(phi.value(e_j))
        rows.append(row)
    rhs = det_value(group, rows)
    assert tuple(lhs) == tuple(rhs)
    assert tuple(evaluate_wedge(phis, w)) == tuple(rhs)


def test_rubin_membership_free_module():
    m = free_module(Z2)
    lat = rubin_lattice(m, 1)
    w = WedgeVector.basis_wedge(m, [0])
    member = lat.membership(w)
    assert member is not None
    for _, val in member.certificate:
        assert all(isinstance(x, int) for x in val)
    # Scaling by 1/2 must fail some certificate.
    assert lat.membership(w.scale(Fraction(1, 2))) is None


def test_rubin_membership_degree0():
    m = free_module(Z2)
    lat = rubin_lattice(m, 0)
    w = WedgeVector.scalar(m, (1, 2))
    assert lat.membership(w) is not None
    assert lat.membership(w.scale(Fraction(1, 3))) is None
    # cap^0 = Z[G]: rank equals |G|.
    assert lat.rank == 2


def test_rubin_lattice_denominators():
    # Sign module: e0+e1 spans the fixed line; (e0+e1)/2 has phi-value 1 for
    # the norm functional... check a genuine non-member.
    m = z2_sign_module()
    lat = rubin_lattice(m, 1)
    w = WedgeVector.from_vector(m, [Fraction(1, 2), Fraction(1, 2)])
    # phi = coordinate-sum hom has value 1/2+1/2 = 1? Build and check via membership.
    got = lat.membership(w)
    # Either member with integral certificates or a rejection; must not crash.
    if got is not None:
        for _, val in got.certificate:
            assert all(isinstance(x, int) for x in val)


def test_cal_n_trivial_subgroup():
    m = free_module(Z2)
    lat = rubin_lattice(m, 1)
    a = lat.membership(WedgeVector.basis_wedge(m, [0]))
    t = cal_n(a, [Z2.identity], 0)
    # H trivial: a (x) 1.
    assert not t.is_zero()


def test_cal_n_d0_is_norm_collapse():
    # d = 0: N(a) = (N_H a) (x) 1 since sigma^{-1} = 1 mod I(H).
    m = free_module(Z2)
    lat = rubin_lattice(m, 1)
    a = lat.membership(WedgeVector.basis_wedge(m, [0]))
    t = cal_n(a, list(Z2.elements), 0)
    ring = quotient_ring(Z2, 1)
    nh = norm_element(Z2)
    na = lat.membership(a.wedge().gmul(tuple(nh.coeffs)))
    assert na is not None
    expected_rows = []
    one_residue = ring.reduce(GroupRingElement.one(Z2))
    for c in na.coords:
        expected_rows.append(tuple(c * x for x in one_residue.coords))
    assert t.rows == tuple(expected_rows)


def _fixed_point_descent(group, kernel_gens, copies=1):
    """DescentData for M = Z[G]^copies with M^H embedded via kappa."""
    big = free_module(group, copies)
    kernel = group.subgroup(kernel_gens)
    quot, proj = quotient_group(group, kernel)
    small_rank = quot.order * copies
    # Embedding: basis of M^H = (Z[G]^H)^copies: coset sums.
    embed = []
    cosets = {}
    for e in group.elements:
        cosets.setdefault(proj(e), []).append(e)
    small_mats = []
    for gen in quot.generators():
        mat = [[0] * small_rank for _ in range(small_rank)]
        small_mats.append(mat)
    # Build embed rows and the quotient action simultaneously.
    quot_elems = list(quot.elements)
    qindex = {e: i for i, e in enumerate(quot_elems)}
    for c in range(copies):
        for qi, qe in enumerate(quot_elems):
            row = [0] * (group.order * copies)
            for e in cosets[qe]:
                row[c * group.order + group.index[e]] = 1
            embed.append(row)
    for gi, gen in enumerate(quot.generators()):
        for c in range(copies):
            for qi, qe in enumerate(quot_elems):
                tgt = qindex[quot.mul(gen, qe)]
                small_mats[gi][c * quot.order + qi][c * quot.order + tgt] = 1
    small = GModuleLattice(quot, small_mats, rank=small_rank, role="synthetic")
    # Reorder embed rows: they were built per (copy, coset) matching small idx.
    src = rubin_lattice(small, 1)
    tgt = rubin_lattice(big, 1)
    return DescentData(src, tgt, proj, embed), small, big


def test_nu_r0_is_kappa():
    group = FiniteAbelianGroup((2,))
    big = free_module(group)
    kernel = group.subgroup([(1,)])
    quot, proj = quotient_group(group, kernel)
    small = trivial_module(1)
    src = rubin_lattice(small, 0)
    tgt = rubin_lattice(big, 0)
    descent = DescentData(src, tgt, proj, [[1, 1]])
    one = src.membership(WedgeVector.scalar(small, (1,)))
    img = descent.nu(one)
    # nu = kappa at r = 0: 1 -> N_H.
    w = img.wedge()
    assert tuple(w.coeffs[()]) == (1, 1)


def test_nu_lemma_44i_r1():
    # nu(N^r(a)) = N_H a for a in cap^r over G.
    group = FiniteAbelianGroup((4,))
    descent, small, big = _fixed_point_descent(group, [(2,)])
    lat = rubin_lattice(big, 1)
    rng = random.Random(31)
    for _ in range(3):
        vec = [rng.randint(-2, 2) for _ in range(big.rank)]
        a = lat.membership(WedgeVector.from_vector(big, vec))
        assert a is not None
        na = descent.norm_power(a.wedge())
        lhs = descent.nu_of_wedge(na)
        nh = GroupRingElement.zero(group)
        for h in descent.kernel:
            nh = nh + GroupRingElement.of_element(group, h)
        rhs = a.wedge().gmul(tuple(nh.coeffs))
        assert lat.classes_equal(lhs.wedge(), rhs)


def test_nu_tower_composition():
    # nu_{K/L} = nu_{K/K'} o nu_{K'/L} on a Z/4 tower.
    group = FiniteAbelianGroup((4,))
    mid_kernel = group.subgroup([(2,)])
    descent_full, small_full, big = _fixed_point_descent(group, [(1,)])
    descent_mid, small_mid, _big2 = None, None, None
    # Build the middle level from the same big module.
    big_common = descent_full.tgt.module
    quot_mid, proj_mid = quotient_group(group, mid_kernel)
    # M^{H_mid} inside big_common.
    cosets = {}
    for e in group.elements:
        cosets.setdefault(proj_mid(e), []).append(e)
    embed_mid = []
    elems = list(quot_mid.elements)
    for qe in elems:
        row = [0] * group.order
        for e in cosets[qe]:
            row[group.index[e]] = 1
        embed_mid.append(row)
    mats = []
    qindex = {e: i for i, e in enumerate(elems)}
    for gen in quot_mid.generators():
        mat = [[0] * quot_mid.order for _ in range(quot_mid.order)]
        for qi, qe in enumerate(elems):
            mat[qi][qindex[quot_mid.mul(gen, qe)]] = 1
        mats.append(mat)
    mid_module = GModuleLattice(quot_mid, mats, rank=quot_mid.order)
    mid_lat = rubin_lattice(mid_module, 1)
    descent_big_mid = DescentData(mid_lat, descent_full.tgt, proj_mid, embed_mid)
    # L-level: trivial group below mid.
    triv_kernel_in_mid = quot_mid.subgroup([(1,)])
    quot_triv, proj_triv = quotient_group(quot_mid, triv_kernel_in_mid)
    small_l = GModuleLattice(quot_triv, [], rank=1)
    l_lat = rubin_lattice(small_l, 1)
    embed_l = [[1] * quot_mid.order]
    descent_mid_l = DescentData(l_lat, mid_lat, proj_triv, embed_l)
    # Full descent L -> big directly.
    proj_full = GroupHom(group, quot_triv, {e: quot_triv.identity for e in group.elements})
    embed_full = [[1] * group.order]
    descent_direct = DescentData(l_lat, descent_full.tgt, proj_full, embed_full)
    a = l_lat.membership(WedgeVector.from_vector(small_l, [1]))
    via_tower = descent_big_mid.nu(descent_mid_l.nu(a))
    direct = descent_direct.nu(a)
    assert descent_full.tgt.classes_equal(via_tower.wedge(), direct.wedge())


def test_nu_matrix_injective():
    group = FiniteAbelianGroup((2, 2))
    descent, _, _ = _fixed_point_descent(group, [(1, 0)])
    mat = descent.nu_matrix()
    assert len(mat) == descent.src.rank


def test_regulator_d0_identity():
    m = trivial_module(2)
    lat = rubin_lattice(m, 1)
    h = FiniteAbelianGroup((6,))
    graded = graded_piece(h, 0)
    w = WedgeVector.from_vector(m, [1, -2])
    t = regulator_apply(lat, w, [], graded)
    # d = 0: the identity into Q(H)^0.
    assert not t.is_zero()


def test_regulator_product_formula_null():
    # Maps with phi_1 + phi_2 = 0 on a rank-1 module: wedge gives 0 at d=1.
    m = trivial_module(2)
    lat0 = rubin_lattice(m, 1)
    h = FiniteAbelianGroup((2,))
    graded = graded_piece(h, 1)
    tau = GroupRingElement.of_element(h, (1,))
    one = GroupRingElement.one(h)
    lift = tau - one
    # phi on the diagonal sub-wedge u = e0 ^ e1 with phi(e0) = -phi(e1):
    w = WedgeVector.basis_wedge(m, [0, 1])
    t = regulator_apply(lat0, w, [[lift, lift]], graded)
    # (phi)(e0^e1) = phi(e0) e1 - phi(e1) e0 = lift*(e1 - e0): nonzero...
    # The null case: phi identically zero.
    zero = GroupRingElement.zero(h)
    t0 = regulator_apply(lat0, w, [[zero, zero]], graded)
    assert t0.is_zero()


def test_regulator_section2_pattern():
    # d = 1, r = 1: phi(u1 ^ u2) = phi(u1) u2 - phi(u2) u1.
    m = trivial_module(2)
    lat = rubin_lattice(m, 1)
    h = FiniteAbelianGroup((4,))
    graded = graded_piece(h, 1)
    g1 = GroupRingElement.of_element(h, (1,)) - GroupRingElement.one(h)
    g2 = GroupRingElement.of_element(h, (2,)) - GroupRingElement.one(h)
    w = WedgeVector.basis_wedge(m, [0, 1])
    t = regulator_apply(lat, w, [[g1, g2]], graded)
    # Compare with the hand expansion phi(e0) e1 - phi(e1) e0.
    r1 = graded.reduce(g1)
    r2 = graded.reduce(g2)
    c0 = lat.coords_of(WedgeVector.basis_wedge(m, [0]))
    c1 = lat.coords_of(WedgeVector.basis_wedge(m, [1]))
    rows = [[0] * len(graded.cyclic_orders) for _ in range(lat.rank)]
    for ci, c in enumerate(c1):
        for k, x in enumerate(r1.coords):
            rows[ci][k] += c * x
    for ci, c in enumerate(c0):
        for k, x in enumerate(r2.coords):
            rows[ci][k] -= c * x
    from starkverify.multilinear import TensorResidueElement

    expected = TensorResidueElement.build(lat, graded, rows)
    assert t == expected


def test_sgn_perm():
    assert sgn_perm([1, 2, 3], [2, 3]) == 1  # {1} before {2,3} already ordered
    assert sgn_perm(["inf", 5], ["inf"], sort_key=lambda v: (0, 0) if v == "inf" else (1, v)) == -1
    # Parity formula sanity: |V'\V| = 2 inserted after V.
    assert sgn_perm([1, 2, 3, 4], [1, 2]) == 1  # (3,4,1,2) -> sorted: 2 swaps * 2 = even


def test_sgn_perm_parity_formula():
    # V'\V inserted entirely after V: parity is (-1)^{|V| * |V'\V|}.
    v = [1, 2, 3]
    vp = [1, 2, 3, 7, 9]
    assert sgn_perm(vp, v) == (-1) ** (len(v) * (len(vp) - len(v)))
    v = [1, 2]
    vp = [1, 2, 5]
    assert sgn_perm(vp, v) == (-1) ** (len(v) * 1)

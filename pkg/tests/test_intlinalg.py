import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starkverify.intlinalg import (
    FinitePresentation,
    LatticeBasis,
    congruence_kernel,
    det,
    hnf,
    identity,
    is_unimodular,
    kernel_basis,
    mat_mul,
    quotient_presentation,
    rational_matrix_rank,
    rational_solve,
    snf,
    unimodular_inverse,
    vec_mat,
)


def test_hnf_identity():
    h, u = hnf(identity(2))
    assert h == identity(2)
    assert u == identity(2)


def test_hnf_example_2x2():
    # Hand row-reduction over Z: |det| preserved = 2.
    h, u = hnf([[1, 2], [3, 4]])
    assert h == [[1, 0], [0, 2]]
    assert mat_mul(u, [[1, 2], [3, 4]]) == h
    assert is_unimodular(u)


def test_hnf_zero_matrix():
    h, u = hnf([[0, 0], [0, 0]])
    assert h == [[0, 0], [0, 0]]
    assert is_unimodular(u)


small_matrices = st.integers(min_value=1, max_value=5).flatmap(
    lambda n: st.integers(min_value=1, max_value=6).flatmap(
        lambda m: st.lists(
            st.lists(st.integers(min_value=-9, max_value=9), min_size=m, max_size=m),
            min_size=n,
            max_size=n,
        )
    )
)


@settings(max_examples=60, deadline=None)
@given(small_matrices)
def test_hnf_properties(m):
    h, u = hnf(m)
    assert mat_mul(u, m) == h
    assert is_unimodular(u)
    # Idempotence: HNF of H is H again.
    h2, _ = hnf(h)
    assert h2 == h
    # Canonical form: pivots positive, above-pivot entries reduced.
    piv_cols = []
    for row in h:
        nz = [j for j, x in enumerate(row) if x != 0]
        if nz:
            piv_cols.append(nz[0])
    assert piv_cols == sorted(piv_cols) and len(set(piv_cols)) == len(piv_cols)


@settings(max_examples=60, deadline=None)
@given(small_matrices)
def test_snf_properties(m):
    d, u, v = snf(m)
    assert mat_mul(mat_mul(u, m), v) == d
    assert is_unimodular(u) and is_unimodular(v)
    diag = [d[i][i] for i in range(min(len(d), len(d[0])))]
    for i in range(len(diag) - 1):
        if diag[i + 1] != 0:
            assert diag[i] != 0 and diag[i + 1] % diag[i] == 0
    for i in range(len(d)):
        for j in range(len(d[0])):
            if i != j:
                assert d[i][j] == 0
            else:
                assert d[i][j] >= 0


def test_snf_examples():
    d, _, _ = snf([[2, 0], [0, 3]])
    assert [d[0][0], d[1][1]] == [1, 6]
    d, _, _ = snf([[2, 4], [6, 8]])
    assert [d[0][0], d[1][1]] == [2, 4]
    d, _, _ = snf(identity(3))
    assert d == identity(3)


def test_snf_basis_independent():
    rng = random.Random(7)
    m = [[rng.randint(-9, 9) for _ in range(3)] for _ in range(3)]
    d0, _, _ = snf(m)
    # Random unimodular transforms: products of elementary matrices.
    for _ in range(5):
        u = identity(3)
        v = identity(3)
        for _ in range(6):
            i, j = rng.sample(range(3), 2)
            c = rng.randint(-3, 3)
            for r in range(3):
                u[i][r] += c * u[j][r]
                v[r][i] += c * v[r][j]
        m2 = mat_mul(mat_mul(u, m), v)
        d2, _, _ = snf(m2)
        assert d2 == d0


def test_membership():
    lat = LatticeBasis.from_rows(2, [[2, 0], [0, 3]])
    assert lat.membership([0, 0]) == [0, 0]
    assert lat.membership([2, 0]) == [1, 0]
    assert lat.membership([1, 0]) is None
    assert lat.membership([4, -3]) == [2, -1]
    with pytest.raises(ValueError):
        lat.membership([1, 2, 3])


@settings(max_examples=40, deadline=None)
@given(small_matrices, st.integers(min_value=0, max_value=2**30))
def test_membership_roundtrip(m, seed):
    lat = LatticeBasis.from_rows(len(m[0]), m)
    rng = random.Random(seed)
    coeffs = [rng.randint(-4, 4) for _ in lat.basis]
    v = [0] * lat.ambient_rank
    for c, row in zip(coeffs, lat.basis):
        v = [x + c * y for x, y in zip(v, row)]
    got = lat.membership(v)
    assert got is not None
    # Coordinates reproduce the vector exactly.
    w = [0] * lat.ambient_rank
    for c, row in zip(got, lat.basis):
        w = [x + c * y for x, y in zip(w, row)]
    assert w == v


def test_kernel_basis():
    # x + y + z = 0 hyperplane kernel of the all-ones column.
    k = kernel_basis([[1], [1], [1]])
    assert len(k) == 2
    for row in k:
        assert sum(row) == 0
    # Kernel of an injective map is trivial.
    assert kernel_basis([[1, 0], [0, 1]]) == []


def test_quotient_z2_mod_2z2():
    l = LatticeBasis.from_rows(2, [[2, 0], [0, 2]])
    m = LatticeBasis.full(2)
    pres = quotient_presentation(l, m)
    assert pres.cyclic_orders == (2, 2)
    assert pres.reduce([1, 0]) != pres.reduce([0, 0])
    assert pres.reduce([2, 0]) == (0, 0)
    assert pres.reduce([1, 1]) != (0, 0)


def test_quotient_trivial():
    m = LatticeBasis.from_rows(2, [[1, 2], [0, 5]])
    pres = quotient_presentation(m, m)
    assert pres.cyclic_orders == ()
    assert pres.reduce([1, 2]) == ()


def test_quotient_free_and_torsion():
    # Z^2 / span{(0,2)}: free rank 1 plus Z/2.
    l = LatticeBasis.from_rows(2, [[0, 2]])
    pres = quotient_presentation(l, LatticeBasis.full(2))
    assert sorted(pres.cyclic_orders) == [0, 2]
    # Lift/reduce roundtrip on canonical generators.
    for i, d in enumerate(pres.cyclic_orders):
        e = [0] * len(pres.cyclic_orders)
        e[i] = 1
        assert pres.reduce(pres.lift(e)) == tuple(e)


def test_quotient_containment_error():
    l = LatticeBasis.from_rows(2, [[1, 0]])
    m = LatticeBasis.from_rows(2, [[2, 0]])
    with pytest.raises(ValueError):
        quotient_presentation(l, m)


def test_unimodular_inverse():
    u = [[1, 2], [0, 1]]
    w = unimodular_inverse(u)
    assert mat_mul(w, u) == identity(2)


def test_rational_solve():
    a = [[1, 2], [3, 4]]  # x @ a = b
    b = [5, 6]
    x = rational_solve(a, b)
    assert x is not None
    assert vec_mat(x, a) == b
    assert rational_solve([[1, 1], [1, 1]], [0, 1]) is None


def test_rational_matrix_rank():
    assert rational_matrix_rank([[1, 2], [2, 4]]) == 1
    assert rational_matrix_rank([[1, 0], [0, 1]]) == 2
    assert rational_matrix_rank([]) == 0


def test_congruence_kernel():
    # x*1 == 0 mod 4 -> kernel 4Z; plus a free direction.
    k = congruence_kernel([[1], [0]], [4])
    lat = LatticeBasis.from_rows(2, k)
    assert lat.membership([4, 0]) is not None
    assert lat.membership([1, 0]) is None
    assert lat.membership([0, 1]) is not None


def test_det():
    assert det([[1, 2], [3, 4]]) == -2
    assert det(identity(3)) == 1
    assert det([[2, 0], [0, 3]]) == 6

from fractions import Fraction

import mpmath as mp
import pytest

from starkverify.cyclotomic import (
    CycloField,
    ResidueField,
    cyclotomic_polynomial,
    factor_cyclotomic_mod,
    power_product,
)


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(2) == (1, 1)
    assert cyclotomic_polynomial(3) == (1, 1, 1)
    assert cyclotomic_polynomial(5) == (1, 1, 1, 1, 1)
    assert cyclotomic_polynomial(9) == (1, 0, 0, 1, 0, 0, 1)
    assert cyclotomic_polynomial(35) == tuple(
        int(c) for c in reversed(
            __import__("sympy").Poly(__import__("sympy").cyclotomic_poly(35)).all_coeffs()))


def test_field_arithmetic_q5():
    k = CycloField(5)
    z = k.zeta()
    # zeta^5 = 1.
    prod = z
    for _ in range(4):
        prod = prod * z
    assert prod.is_one()
    # 1 + z + z^2 + z^3 + z^4 = 0.
    s = k.one() + z + k.zeta(2) + k.zeta(3) + k.zeta(4)
    assert s.is_zero()


def test_inverse():
    k = CycloField(7)
    a = k.one() - k.zeta()
    inv = a.inverse()
    assert (a * inv).is_one()
    with pytest.raises(ZeroDivisionError):
        k.zero().inverse()


def test_galois_action():
    k = CycloField(5)
    a = k.one() - k.zeta()
    b = a.galois(2)
    assert b == k.one() - k.zeta(2)
    # sigma_2 has order 4 on Q(zeta_5).
    c = a
    for _ in range(4):
        c = c.galois(2)
    assert c == a


def test_sqrt5_gauss_sum():
    # zeta + zeta^4 - zeta^2 - zeta^3 squares to 5 (and embeds to +sqrt(5)).
    k = CycloField(5)
    s5 = k.zeta(1) + k.zeta(4) - k.zeta(2) - k.zeta(3)
    sq = s5 * s5
    assert sq.is_rational() == 5
    mp.mp.prec = 80
    val = s5.embed(1)
    assert abs(val.real - mp.sqrt(5)) < mp.mpf(2) ** -60
    assert abs(val.imag) < mp.mpf(2) ** -60


def test_lift_to_bigger_field():
    k5 = CycloField(5)
    k35 = CycloField(35)
    a = k5.one() - k5.zeta()
    b = a.lift_to(k35)
    # Images agree under the compatible embeddings.
    mp.mp.prec = 80
    assert abs(a.embed(1) - b.embed(1)) < mp.mpf(2) ** -60


def test_power_product():
    k = CycloField(5)
    a = k.from_rational(2)
    b = k.from_rational(3)
    out = power_product([a, b], [3, -1])
    assert out.is_rational() == Fraction(8, 3)


def test_factor_cyclotomic_mod():
    # ord(3 mod 5) = 4: Phi_5 stays irreducible mod 3.
    factors = factor_cyclotomic_mod(5, 3)
    assert len(factors) == 1
    assert len(factors[0]) == 5
    # ord(11 mod 5) = 5? 11 = 1 mod 5: splits completely.
    factors = factor_cyclotomic_mod(5, 11)
    assert len(factors) == 4
    assert all(len(f) == 2 for f in factors)


def test_residue_field_q5_mod3():
    rf = ResidueField(5, 3)
    assert rf.f == 4
    assert rf.order == 80
    k = CycloField(5)
    # zeta reduces to a root of Phi_5 mod 3: order 5 element.
    z = rf.reduce(k.zeta())
    assert rf.pow(z, 5) == rf.one()
    assert z != rf.one()


def test_residue_reduction_is_ring_hom():
    rf = ResidueField(7, 5)
    k = CycloField(7)
    a = k.one() - k.zeta()
    b = k.one() + k.zeta(3)
    assert rf.reduce(a * b) == rf.mul(rf.reduce(a), rf.reduce(b))
    assert rf.reduce(a + b) == tuple((x + y) % 5 for x, y in zip(rf.reduce(a), rf.reduce(b)))


def test_residue_denominators():
    rf = ResidueField(5, 3)
    k = CycloField(5)
    half = k.from_rational(Fraction(1, 2))
    red = rf.reduce(half)
    # 1/2 = 2 mod 3.
    assert red == (2, 0, 0, 0)


def test_generator_and_dlog():
    rf = ResidueField(5, 3)
    g = rf.generator()
    # Generator has full order 80.
    assert rf.pow(g, 80) == rf.one()
    assert rf.pow(g, 40) != rf.one()
    assert rf.pow(g, 16) != rf.one()
    for e in [0, 1, 7, 33, 79]:
        target = rf.pow(g, e)
        assert rf.discrete_log(target) == e


def test_dlog_bigger_field():
    # F_{3^6}: the residue field data for conductor 35 above 3... the full
    # factor for m = 35 has degree ord(3 mod 35) = 12.
    rf = ResidueField(35, 3)
    assert rf.f == 12
    g = rf.generator()
    for e in [1, 12345, 400000]:
        assert rf.discrete_log(rf.pow(g, e)) == e % rf.order

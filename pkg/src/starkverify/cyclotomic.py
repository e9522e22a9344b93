"""Exact arithmetic in cyclotomic fields Q(zeta_m) and their residue fields.

Elements are coefficient vectors over the power basis 1, zeta, ...,
zeta^{phi(m)-1}, reduced modulo the m-th cyclotomic polynomial; all field
arithmetic is exact over Fraction.  Complex embeddings are evaluated with
mpmath at a caller-chosen precision.  Residue fields F_t[x]/(g) for primes
t coprime to m support discrete logarithms via Pohlig-Hellman, which is
what the T-congruence kernels are computed from.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

import mpmath as mp
import sympy


@lru_cache(maxsize=None)
def cyclotomic_polynomial(m: int) -> tuple[int, ...]:
    """Coefficients of Phi_m, ascending degree, computed by exact division
    of x^m - 1 by the proper cyclotomic divisors."""
    if m == 1:
        return (-1, 1)
    num = [0] * (m + 1)
    num[0], num[m] = -1, 1
    for d in range(1, m):
        if m % d == 0:
            num = _poly_div_exact(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _poly_div_exact(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    dd = len(den) - 1
    lead = den[-1]
    for i in range(len(num) - 1, dd - 1, -1):
        q, r = divmod(num[i], lead)
        assert r == 0
        out[i - dd] = q
        for j, c in enumerate(den):
            num[i - dd + j] -= q * c
    assert all(c == 0 for c in num)
    return out


class CycloField:
    """Q(zeta_m) with exact power-basis arithmetic."""

    _cache: dict[int, "CycloField"] = {}

    def __new__(cls, m: int):
        if m not in cls._cache:
            obj = super().__new__(cls)
            obj._init(m)
            cls._cache[m] = obj
        return cls._cache[m]

    def _init(self, m: int):
        self.m = m
        self.poly = cyclotomic_polynomial(m)
        self.degree = len(self.poly) - 1
        # zeta^k reduced mod Phi_m, for k = 0..m-1.
        table = []
        cur = [Fraction(0)] * self.degree
        cur[0] = Fraction(1)
        for _ in range(max(m, 1)):
            table.append(tuple(cur))
            cur = self._shift_reduce(cur)
        self._power_table = table

    def _shift_reduce(self, coeffs):
        out = [Fraction(0)] + list(coeffs[:-1])
        top = coeffs[-1]
        if top:
            for i in range(self.degree):
                out[i] -= top * self.poly[i]
        return out

    # -- constructors ------------------------------------------------------

    def zero(self) -> "CycloElement":
        return CycloElement(self, (Fraction(0),) * self.degree)

    def one(self) -> "CycloElement":
        return self.from_rational(1)

    def from_rational(self, q) -> "CycloElement":
        c = [Fraction(0)] * self.degree
        c[0] = Fraction(q)
        return CycloElement(self, tuple(c))

    def zeta(self, k: int = 1) -> "CycloElement":
        return CycloElement(self, self._power_table[k % self.m])

    def from_coeffs(self, coeffs) -> "CycloElement":
        c = [Fraction(x) for x in coeffs]
        if len(c) != self.degree:
            raise ValueError("coefficient length mismatch")
        return CycloElement(self, tuple(c))

    # -- arithmetic --------------------------------------------------------

    def mul(self, a, b):
        prod = [Fraction(0)] * (2 * self.degree - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        # Reduce degrees >= degree using the power table.
        out = list(prod[:self.degree])
        for k in range(self.degree, len(prod)):
            c = prod[k]
            if c:
                row = self._power_table[k % self.m] if k < self.m else None
                if row is None:
                    # k < 2*degree - 1 < 2m, so k mod m indexes the table.
                    row = self._power_table[k % self.m]
                for i, y in enumerate(row):
                    if y:
                        out[i] += c * y
        return tuple(out)

    def inv(self, a):
        # Extended Euclid in Q[x] against Phi_m.
        r0 = [Fraction(c) for c in self.poly]
        r1 = list(a) + [Fraction(0)]
        s0 = [Fraction(0)]
        s1 = [Fraction(1)]
        while any(c != 0 for c in r1):
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        deg = _poly_degree(r0)
        if deg != 0:
            raise ZeroDivisionError("element is not invertible (zero or bad modulus)")
        c = r0[0]
        inv = [x / c for x in s0]
        inv = inv[:self.degree] + [Fraction(0)] * max(0, self.degree - len(inv))
        # Reduce mod Phi just in case of degree overflow.
        out = [Fraction(0)] * self.degree
        for k, x in enumerate(inv):
            if x:
                row = self._power_table[k % self.m]
                for i, y in enumerate(row):
                    out[i] += x * y
        return tuple(out)

    def galois(self, a, c: int):
        """sigma_c: zeta -> zeta^c on a coefficient vector."""
        if gcd(c, self.m) != 1:
            raise ValueError("Galois index must be coprime to the conductor")
        out = [Fraction(0)] * self.degree
        for k, x in enumerate(a):
            if x:
                row = self._power_table[(k * c) % self.m]
                for i, y in enumerate(row):
                    out[i] += x * y
        return tuple(out)

    def embed(self, a, c: int = 1):
        """Complex value at zeta_m -> exp(2 pi i c / m), at current mp precision."""
        z = mp.e ** (2j * mp.pi * c / self.m)
        out = mp.mpc(0)
        for x in reversed(a):
            out = out * z + mp.mpf(x.numerator) / mp.mpf(x.denominator)
        return out


def _poly_degree(p) -> int:
    for i in range(len(p) - 1, -1, -1):
        if p[i] != 0:
            return i
    return -1


def _poly_divmod(num, den):
    num = list(num)
    dd = _poly_degree(den)
    out = [Fraction(0)] * max(1, len(num) - dd)
    lead = den[dd]
    for i in range(len(num) - 1, dd - 1, -1):
        if num[i] == 0:
            continue
        q = num[i] / lead
        out[i - dd] = q
        for j in range(dd + 1):
            num[i - dd + j] -= q * den[j]
    return out, num


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _poly_sub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


@dataclass(frozen=True)
class CycloElement:
    field: CycloField
    coeffs: tuple

    def __add__(self, other):
        self._chk(other)
        return CycloElement(self.field, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._chk(other)
        return CycloElement(self.field, tuple(x - y for x, y in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return CycloElement(self.field, tuple(-x for x in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, CycloElement):
            self._chk(other)
            return CycloElement(self.field, self.field.mul(self.coeffs, other.coeffs))
        return CycloElement(self.field, tuple(Fraction(other) * x for x in self.coeffs))

    def inverse(self) -> "CycloElement":
        return CycloElement(self.field, self.field.inv(self.coeffs))

    def __truediv__(self, other: "CycloElement") -> "CycloElement":
        return self * other.inverse()

    def galois(self, c: int) -> "CycloElement":
        return CycloElement(self.field, self.field.galois(self.coeffs, c))

    def embed(self, c: int = 1):
        return self.field.embed(self.coeffs, c)

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.coeffs)

    def is_one(self) -> bool:
        return self.coeffs[0] == 1 and all(x == 0 for x in self.coeffs[1:])

    def is_rational(self) -> Optional[Fraction]:
        if all(x == 0 for x in self.coeffs[1:]):
            return self.coeffs[0]
        return None

    def denominator_lcm(self) -> int:
        from math import lcm

        d = 1
        for x in self.coeffs:
            d = lcm(d, x.denominator)
        return d

    def _chk(self, other):
        if self.field.m != other.field.m:
            raise ValueError("cyclotomic conductor mismatch")

    def lift_to(self, bigger: CycloField) -> "CycloElement":
        """Image under zeta_m = zeta_M^{M/m} for m | M."""
        if bigger.m % self.field.m != 0:
            raise ValueError("target conductor must be a multiple")
        step = bigger.m // self.field.m
        out = bigger.zero()
        for k, x in enumerate(self.coeffs):
            if x:
                out = out + CycloElement(bigger, bigger._power_table[(k * step) % bigger.m]) * x
        return out


def power_product(factors: Sequence[CycloElement], exponents: Sequence[int]) -> CycloElement:
    """prod f_i^{e_i}, exact (negative exponents use field inverses)."""
    field = factors[0].field
    out = field.one()
    for f, e in zip(factors, exponents):
        if e == 0:
            continue
        base = f if e > 0 else f.inverse()
        for _ in range(abs(e)):
            out = out * base
    return out


# -- residue fields ----------------------------------------------------------


@lru_cache(maxsize=None)
def factor_cyclotomic_mod(m: int, t: int) -> tuple[tuple[int, ...], ...]:
    """Irreducible factors of Phi_m modulo the prime t, as ascending
    coefficient tuples, sorted deterministically."""
    x = sympy.symbols("x")
    poly = sympy.Poly(list(reversed(cyclotomic_polynomial(m))), x, modulus=t, symmetric=False)
    _, factors = poly.factor_list()
    out = []
    for fac, mult in factors:
        assert mult == 1, "t must be unramified (t coprime to m)"
        coeffs = [int(c) % t for c in reversed(fac.all_coeffs())]
        out.append(tuple(coeffs))
    return tuple(sorted(out))


class ResidueField:
    """F_t[x]/(g) for a fixed irreducible factor g of Phi_m mod t.

    The reduction map sends zeta_m to the class of x; elements whose
    denominators are prime to t reduce well.
    """

    def __init__(self, m: int, t: int, factor_index: int = 0):
        if m % t == 0:
            raise ValueError("t must not divide the conductor")
        self.m = m
        self.t = t
        factors = factor_cyclotomic_mod(m, t)
        self.g = factors[factor_index]
        self.f = len(self.g) - 1
        self.order = t ** self.f - 1
        self._xpow = self._power_table()
        self._factorization = sympy.factorint(self.order)
        self._gen: Optional[tuple] = None

    def _power_table(self):
        # x^k mod g for k = 0..m-1 (enough to reduce zeta powers directly).
        table = []
        cur = [0] * self.f
        cur[0] = 1
        for _ in range(max(self.m, 2 * self.f)):
            table.append(tuple(cur))
            cur = self._shift(cur)
        return table

    def _shift(self, coeffs):
        out = [0] + list(coeffs[:-1])
        top = coeffs[-1]
        if top:
            lead_inv = pow(self.g[-1], -1, self.t)
            c = (top * lead_inv) % self.t
            for i in range(self.f):
                out[i] = (out[i] - c * self.g[i]) % self.t
        return [x % self.t for x in out]

    def reduce(self, elem: CycloElement) -> tuple:
        if elem.field.m != self.m:
            raise ValueError("conductor mismatch")
        out = [0] * self.f
        for k, x in enumerate(elem.coeffs):
            if x:
                num = x.numerator % self.t
                den = pow(x.denominator % self.t, -1, self.t)
                c = (num * den) % self.t
                row = self._xpow[k]
                for i, y in enumerate(row):
                    out[i] = (out[i] + c * y) % self.t
        return tuple(out)

    def one(self):
        e = [0] * self.f
        e[0] = 1
        return tuple(e)

    def mul(self, a, b):
        prod = [0] * (2 * self.f - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] = (prod[i + j] + x * y) % self.t
        out = list(prod[:self.f])
        for k in range(self.f, len(prod)):
            c = prod[k]
            if c:
                row = self._xpow[k]
                for i, y in enumerate(row):
                    out[i] = (out[i] + c * y) % self.t
        return tuple(out)

    def pow(self, a, e: int):
        if e < 0:
            a = self.inv(a)
            e = -e
        out = self.one()
        base = a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def inv(self, a):
        return self.pow(a, self.order - 1)

    def generator(self):
        if self._gen is not None:
            return self._gen
        primes = list(self._factorization)
        for trial in itertools.count(0):
            cand = self._element_from_index(trial + 1)
            if cand == (0,) * self.f:
                continue
            if all(self.pow(cand, self.order // q) != self.one() for q in primes):
                self._gen = cand
                return cand

    def _element_from_index(self, idx: int):
        # Deterministic small elements: digits of idx base t as coefficients.
        out = []
        for _ in range(self.f):
            out.append(idx % self.t)
            idx //= self.t
        return tuple(out)

    def discrete_log(self, target, base=None, order: Optional[int] = None) -> int:
        """Pohlig-Hellman discrete log of target w.r.t. the field generator
        (or a supplied base of known order)."""
        if base is None:
            base = self.generator()
            order = self.order
        assert order is not None
        residues = []
        moduli = []
        for q, k in sympy.factorint(order).items():
            qk = q ** k
            h = self.pow(target, order // qk)
            g = self.pow(base, order // qk)
            residues.append(self._log_prime_power(h, g, q, k))
            moduli.append(qk)
        return int(sympy.ntheory.modular.crt(moduli, residues)[0])

    def _log_prime_power(self, h, g, q: int, k: int) -> int:
        # Standard digit-by-digit lift; BSGS inside the order-q subgroup.
        x = 0
        gamma = self.pow(g, q ** (k - 1))
        for i in range(k):
            hi = self.pow(self.mul(h, self.inv(self.pow(g, x))), q ** (k - 1 - i))
            d = self._bsgs(hi, gamma, q)
            x += d * (q ** i)
        return x

    def _bsgs(self, h, g, q: int) -> int:
        msqrt = int(q ** 0.5) + 1
        table = {}
        cur = self.one()
        for j in range(msqrt):
            table.setdefault(cur, j)
            cur = self.mul(cur, g)
        factor = self.inv(self.pow(g, msqrt))
        cur = h
        for i in range(msqrt + 1):
            if cur in table:
                return (i * msqrt + table[cur]) % q
            cur = self.mul(cur, factor)
        raise ValueError("element not in the cyclic subgroup")

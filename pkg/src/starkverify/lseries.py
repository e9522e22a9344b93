"""Dirichlet characters of an instance, leading Taylor coefficients of
(S,T)-modified L-functions at s = 0, Stickelberger vectors, and the
analytic target of the lambda map.

Only leading coefficients are ever computed: each factor of the
(S,T)-modified L-function contributes its own leading germ (the T-factor
value, an exact 1 - chi(p) or a log p per vanishing Euler factor at S, and
the primitive L-value).  For odd characters the primitive value is the
exact rational-cyclotomic -B_{1,chi}; for even nontrivial characters it is
L'(0,chi) = sum chi(a) log Gamma(a/f); the trivial character contributes
zeta(0) = -1/2.  Everything exact stays exact; transcendental factors are
tracked as mpmath values with conservative error bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional, Sequence

import mpmath as mp

from .cyclotomic import CycloElement, CycloField
from .groupring import Element

INF = "inf"


@dataclass(frozen=True)
class DirichletCharacter:
    """Character of the instance Galois group, stored through exact
    root-of-unity exponents: value(g) = zeta_N^{index(g)}."""

    instance: object
    index: int
    exponents: tuple  # one exponent per cyclic factor of G
    zeta_order: int  # N = exponent of G

    def value_index(self, e: Element) -> int:
        g = self.instance.group
        n = self.zeta_order
        total = 0
        for exp, a, dfac in zip(self.exponents, e, g.factors):
            total += exp * a * (n // dfac)
        return total % n

    def value_exact(self, e: Element) -> CycloElement:
        return CycloField(self.zeta_order).zeta(self.value_index(e))

    def value_mp(self, e: Element):
        k = self.value_index(e)
        return mp.e ** (2j * mp.pi * k / self.zeta_order)

    def value_on_class(self, c: int) -> int:
        return self.value_index(self.instance.class_to_elem[c])

    @property
    def is_trivial(self) -> bool:
        return all(x == 0 for x in self.exponents)

    def is_even(self) -> bool:
        inst = self.instance
        if inst.m == 1:
            return True
        return self.value_on_class(inst.m - 1) == 0

    def conductor(self) -> int:
        inst = self.instance
        m = inst.m
        if self.is_trivial:
            return 1
        best = m
        for f in range(1, m + 1):
            if m % f != 0:
                continue
            trivial_on_kernel = all(
                self.value_on_class(c) == 0
                for c in inst.classes if c % f == 1 % f)
            if trivial_on_kernel:
                best = f
                break
        return best

    def primitive_value_index(self, a: int, f: Optional[int] = None) -> int:
        """Exponent of the primitive character at a (requires gcd(a, f) = 1)."""
        inst = self.instance
        if f is None:
            f = self.conductor()
        if f == 1:
            return 0
        a %= f
        if gcd(a, f) != 1:
            raise ValueError("primitive value needs gcd(a, f) = 1")
        for c in inst.classes:
            if c % f == a:
                return self.value_on_class(c)
        raise ValueError("no class lifts the residue")

    def inverse_exponents(self) -> tuple:
        g = self.instance.group
        return tuple((-x) % dfac for x, dfac in zip(self.exponents, g.factors))


def characters(instance) -> list[DirichletCharacter]:
    """All |G| characters, enumerated deterministically, closed under
    inversion by construction."""
    g = instance.group
    n = 1
    for dfac in g.factors:
        n = lcm(n, dfac)
    if not g.factors:
        n = 1
    out = []
    import itertools

    for idx, exps in enumerate(itertools.product(*[range(dfac) for dfac in g.factors])):
        out.append(DirichletCharacter(instance, idx, tuple(exps), max(n, 1)))
    if not out:
        out.append(DirichletCharacter(instance, 0, (), 1))
    return out


def character_with_exponents(instance, exps) -> DirichletCharacter:
    chars = characters(instance)
    for chi in chars:
        if chi.exponents == tuple(exps):
            return chi
    raise ValueError("no such character")


def r_chi(chi: DirichletCharacter, instance=None) -> int:
    """Predicted vanishing order of L_{Q,S,T}(s, chi) at s = 0."""
    inst = chi.instance if instance is None else instance
    if chi.is_trivial:
        return len(inst.S) - 1
    count = 0
    for v in inst.S:
        if all(chi.value_index(e) == 0 for e in inst.G_v[v]):
            count += 1
    return count


@dataclass
class TaylorGerm:
    """Leading coefficient c_r of a function ~ c_r s^r at s = 0."""

    order: int
    value: object  # mpc
    error: object  # mpf bound
    exact: Optional[CycloElement] = None  # set when fully rational-cyclotomic

    def scaled_error(self):
        return self.error


def _chi_at_s_prime(chi: DirichletCharacter, v) -> Optional[int]:
    """Exponent of chi at the Frobenius datum of a finite place of S, or
    None when chi is ramified at v (no Euler factor)."""
    inst = chi.instance
    f = chi.conductor()
    if v in inst.prime_powers:
        # chi unramified at v iff v does not divide the conductor.
        if f % v == 0:
            return None
        return chi.value_index(inst.Fr[v])
    return chi.value_index(inst.Fr[v]) if inst.m > 1 else 0


def leading_term(chi: DirichletCharacter, t_primes: Optional[Sequence[int]] = None,
                 cache=None) -> TaylorGerm:
    """Leading germ of L_{Q,S,T}(s, chi) at s = 0; S is the instance S.

    The (m, chi, T, precision)-keyed part (T-factor times the primitive
    leading value) can be served from a cache; the exact S-Euler factors are
    always recomputed.
    """
    inst = chi.instance
    ts = tuple(sorted(inst.T if t_primes is None else t_primes))
    n = chi.zeta_order
    field = CycloField(n)
    exact = field.one()
    trans = []
    order = 0
    prec = mp.mp.prec

    core = None
    if cache is not None:
        core = cache.get(inst.m, chi.index, ts, prec)
    if core is None:
        core_exact, core_trans, core_order = _core_leading(chi, ts)
        if cache is not None:
            val = core_exact.embed(1) if core_trans is None else \
                core_exact.embed(1) * core_trans
            cache.put(inst.m, chi.index, ts, prec, val, core_order)
        core_val = None
    else:
        core_val, core_order = core
        core_exact, core_trans = None, None

    # S-Euler factors at finite places of S prime to the conductor.
    for v in inst.S:
        if v == INF:
            continue
        k = _chi_at_s_prime(chi, v)
        if k is None:
            continue
        if k == 0:
            order += 1
            trans.append(mp.log(v))
        else:
            exact = exact * (field.one() - field.zeta(k))
    order += core_order

    exact_out = None
    if core_val is not None:
        value = exact.embed(1) * core_val
    elif core_trans is None:
        exact_total = exact * core_exact
        value = exact_total.embed(1)
        if not trans:
            exact_out = exact_total
    else:
        value = exact.embed(1) * core_exact.embed(1) * core_trans
    for x in trans:
        value = value * x
    err = abs(value) * mp.mpf(2) ** (-(prec - 12)) + mp.mpf(2) ** (-(prec - 12))
    germ = TaylorGerm(order, value, err, exact_out)
    expected = r_chi(chi)
    assert germ.order == expected, (
        f"structural order {germ.order} disagrees with r_chi {expected}")
    return germ


def _core_leading(chi: DirichletCharacter, ts):
    """(exact cyclotomic part, transcendental part or None, order) of the
    T-factor times the primitive L-value leading germ."""
    inst = chi.instance
    n = chi.zeta_order
    field = CycloField(n)
    exact = field.one()
    for t in ts:
        k = chi.value_on_class(t % inst.m) if inst.m > 1 else 0
        exact = exact * (field.one() - field.zeta(k) * t)
    f = chi.conductor()
    if chi.is_trivial:
        exact = exact * field.from_rational(Fraction(-1, 2))
        return exact, None, 0
    if not chi.is_even():
        # L(0, chi) = -B_{1,chi}, exact.
        b1 = field.zero()
        for a in range(1, f + 1):
            if gcd(a, f) != 1:
                continue
            k = chi.primitive_value_index(a, f)
            b1 = b1 + field.zeta(k) * Fraction(a, f)
        exact = exact * (-b1)
        return exact, None, 0
    # Even nontrivial: L'(0, chi) = sum_a chi(a) log Gamma(a/f).
    total = mp.mpc(0)
    for a in range(1, f):
        if gcd(a, f) != 1:
            continue
        k = chi.primitive_value_index(a, f)
        total += mp.e ** (2j * mp.pi * k / n) * mp.loggamma(mp.mpf(a) / f)
    return exact, total, 1


def numeric_l_value(chi: DirichletCharacter, s, t_primes: Optional[Sequence[int]] = None):
    """L_{Q,S,T}(s, chi) at a real s != 0, via Hurwitz zeta functions."""
    inst = chi.instance
    ts = tuple(sorted(inst.T if t_primes is None else t_primes))
    s = mp.mpf(s)
    out = mp.mpc(1)
    for t in ts:
        k = chi.value_on_class(t % inst.m) if inst.m > 1 else 0
        out *= 1 - mp.e ** (2j * mp.pi * k / chi.zeta_order) * mp.mpf(t) ** (1 - s)
    for v in inst.S:
        if v == INF:
            continue
        k = _chi_at_s_prime(chi, v)
        if k is None:
            continue
        out *= 1 - mp.e ** (2j * mp.pi * k / chi.zeta_order) * mp.mpf(v) ** (-s)
    f = chi.conductor()
    if f == 1:
        out *= mp.zeta(s)
        return out
    lval = mp.mpc(0)
    for a in range(1, f + 1):
        if gcd(a, f) != 1:
            continue
        k = chi.primitive_value_index(a, f)
        lval += mp.e ** (2j * mp.pi * k / chi.zeta_order) * mp.zeta(s, mp.mpf(a) / f)
    out *= mp.mpf(f) ** (-s) * lval
    return out


def vanishing_order_slope(chi: DirichletCharacter, s1=mp.mpf("1e-3"), s2=mp.mpf("1e-4")):
    """Numeric slope of log|L| against log s between two small s values."""
    v1 = abs(numeric_l_value(chi, s1))
    v2 = abs(numeric_l_value(chi, s2))
    return float((mp.log(v1) - mp.log(v2)) / (mp.log(s1) - mp.log(s2)))


@dataclass
class StickelbergerVec:
    """theta^{(r)} as a real coefficient vector over the group enumeration."""

    order: int
    coeffs: list  # mpf per group element
    error: object
    imag_residual: float
    exact: Optional[list] = None  # Fractions, when every germ was exact

    def coeff_of(self, e: Element, group):
        return self.coeffs[group.index[e]]


def stickelberger(instance, r: int, cache=None) -> StickelbergerVec:
    """theta^{(r)} = sum over characters with r_chi = r of the leading
    coefficient of L_{S,T}(s, chi^{-1}) times the idempotent e_chi."""
    g = instance.group
    chars = characters(instance)
    contributing = [chi for chi in chars if r_chi(chi) == r]
    germs = {}
    all_exact = True
    for chi in contributing:
        inv = character_with_exponents(instance, chi.inverse_exponents())
        germs[chi.index] = leading_term(inv, cache=cache)
        if germs[chi.index].exact is None:
            all_exact = False
    coeffs = []
    exact_coeffs = [] if all_exact else None
    max_imag = mp.mpf(0)
    err_total = mp.mpf(0)
    for tau in g.elements:
        total = mp.mpc(0)
        exact_total = None
        for chi in contributing:
            germ = germs[chi.index]
            k = chi.value_index(g.inv(tau))
            total += germ.value * mp.e ** (2j * mp.pi * k / chi.zeta_order)
            err_total += germ.error
        total = total / g.order
        max_imag = max(max_imag, abs(total.imag))
        coeffs.append(total.real)
        if all_exact:
            n = max((chi.zeta_order for chi in contributing), default=1)
            field = CycloField(n)
            acc = field.zero()
            for chi in contributing:
                germ = germs[chi.index]
                k = chi.value_index(g.inv(tau)) * (n // chi.zeta_order)
                acc = acc + germ.exact.lift_to(field) * field.zeta(k)
            rat = acc.is_rational()
            assert rat is not None, "exact Stickelberger coefficient must be rational"
            exact_coeffs.append(rat / g.order)
    tol = mp.mpf(2) ** (-(mp.mp.prec // 2))
    if max_imag > tol:
        raise AssertionError(
            f"Stickelberger imaginary residual {mp.nstr(max_imag, 8)} exceeds tolerance")
    return StickelbergerVec(r, coeffs, err_total / max(1, g.order),
                            float(max_imag), exact_coeffs)


def classical_stickelberger_oracle(instance) -> list[Fraction]:
    """Independent exact route to theta^{(0)}: the T-smoothed classical
    Stickelberger element (5/6-style zeta-value coefficients), computed
    entirely in rational arithmetic on the group side."""
    from .groupring import GroupRingElement

    inst = instance
    g = inst.group
    m = inst.m
    base = [Fraction(0)] * g.order
    for a in inst.classes:
        e_inv = g.inv(inst.class_to_elem[a])
        base[g.index[e_inv]] += Fraction(1, 2) - Fraction(a, m)
    theta = GroupRingElement(g, tuple(base))
    one = GroupRingElement.one(g)
    for t in inst.T:
        fr_inv = GroupRingElement.of_element(g, g.inv(inst.class_to_elem[t % m]))
        theta = theta * (one - fr_inv.scale(t))
    for v in inst.S:
        if v == INF or v in inst.prime_powers:
            continue
        fr_inv = GroupRingElement.of_element(g, g.inv(inst.Fr[v]))
        theta = theta * (one - fr_inv)
    return [Fraction(c) for c in theta.coeffs]


def zeta_s_leading(instance):
    """Leading coefficient of zeta_{K,S}(s) = prod_chi L_{Q,S}(s, chi) at
    s = 0 (no T-smoothing); real by conjugate-pair symmetry."""
    total = mp.mpc(1)
    order = 0
    for chi in characters(instance):
        germ = leading_term(chi, t_primes=())
        total *= germ.value
        order += germ.order
    expected = len(instance.s_places()) - 1
    assert order == expected, "zeta_{K,S} vanishing order mismatch"
    assert abs(total.imag) < abs(total) * mp.mpf(2) ** (-(mp.mp.prec // 2)) + \
        mp.mpf(2) ** (-(mp.mp.prec // 2))
    return total.real


def x_vector(instance, theta: StickelbergerVec, v0) -> list:
    """Coordinates of x = theta^{(r)} wedge_{v in V}(w - w_0) over the
    places of S_K, for r = 1 (V a single split place)."""
    inst = instance
    assert len(inst.V) == 1, "x vector implemented for r = 1"
    v_star = inst.V[0]
    places = inst.s_places()
    g = inst.group
    out = [mp.mpf(0)] * len(places)
    theta_sum = mp.mpf(0)
    for c in theta.coeffs:
        theta_sum += c
    for i, (v, rep) in enumerate(places):
        if v == v_star:
            # G_{v*} trivial: the place (v*, rep) is rep . w; theta picks the
            # coefficient at rep.
            out[i] = theta.coeffs[g.index[rep]]
        elif v == v0:
            # -theta . w_0 spreads over the orbit of the fixed place.
            coset = inst.G_v[v0]
            acc = mp.mpf(0)
            for e in g.elements:
                if g.mul(g.inv(rep), e) in coset:
                    acc += theta.coeffs[g.index[e]]
            out[i] = -acc
    return out


# -- L-value cache ------------------------------------------------------------


class LValueCache:
    """Append-only textual cache of (T-factor x primitive leading value)
    records keyed by (m, character index, T, precision)."""

    def __init__(self, path):
        import os

        self.path = path
        self._mem = {}
        self.hits = 0
        self.misses = 0
        if path is not None and os.path.exists(path):
            self._load()

    def _load(self):
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = dict(part.split("=", 1) for part in line.split())
                    key = (int(rec["m"]), int(rec["chi"]), tuple(
                        int(x) for x in rec["T"].split(",") if x), int(rec["prec"]))
                    val = mp.mpc(mp.mpf(rec["re"]), mp.mpf(rec["im"]))
                    self._mem[key] = (val, int(rec["order"]))
                except (KeyError, ValueError):
                    continue  # corrupt record: skip with no side effects

    def key_count(self) -> int:
        return len(self._mem)

    def get(self, m: int, chi_index: int, ts, prec: int):
        key = (m, chi_index, tuple(ts), prec)
        got = self._mem.get(key)
        if got is None:
            self.misses += 1
            return None
        self.hits += 1
        return got

    def put(self, m: int, chi_index: int, ts, prec: int, value, order: int):
        key = (m, chi_index, tuple(ts), prec)
        if key in self._mem:
            return
        self._mem[key] = (mp.mpc(value), order)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                t_str = ",".join(str(t) for t in ts)
                fh.write(
                    f"m={m} chi={chi_index} T={t_str} prec={prec} "
                    f"re={mp.nstr(mp.mpc(value).real, prec // 3)} "
                    f"im={mp.nstr(mp.mpc(value).imag, prec // 3)} "
                    f"err=-{prec - 12} order={order}\n")

    def records(self):
        return sorted(self._mem.items())

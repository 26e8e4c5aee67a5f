import math
from fractions import Fraction
from math import gcd

import numpy as np
import pytest

from eisenlab import characters as ch
from eisenlab.errors import ConfigError, EisenlabError


def test_enumeration_counts():
    assert len(ch.enumerate_characters(5)) == 4
    assert len(ch.enumerate_characters(1)) == 1
    # phi(q) for a few moduli, incl. the 2^e special cases
    for q, phi in ((2, 1), (4, 2), (8, 4), (12, 4), (16, 8), (45, 24)):
        assert len(ch.enumerate_characters(q)) == phi


def test_trivial_character_mod_1():
    chi = ch.enumerate_characters(1)[0]
    assert all(chi(n) == 1 for n in range(-3, 7))


def test_quadratic_mod5_value_table():
    # Legendre-symbol table by direct squaring: QRs mod 5 are {1, 4}
    squares = {(n * n) % 5 for n in range(1, 5)}
    chi = ch.quadratic_character(5)
    for n in range(1, 5):
        expect = 1.0 if n in squares else -1.0
        assert chi(n).real == pytest.approx(expect)
    assert [round(chi(n).real) for n in (1, 2, 3, 4)] == [1, -1, -1, 1]


def test_character_invariants_random_moduli():
    for q in (5, 8, 9, 12, 21):
        for chi in ch.enumerate_characters(q):
            vals = chi.values
            for n in range(q):
                if gcd(n, q) > 1:
                    assert vals[n] == 0
                else:
                    assert abs(abs(vals[n]) - 1) < 1e-12
            assert vals[1 % q] == 1
            # exact multiplicativity through the exponent table
            for m in range(1, q):
                for n in range(1, q):
                    em, en = chi.value_exponent(m), chi.value_exponent(n)
                    emn = chi.value_exponent(m * n)
                    if em is None or en is None:
                        assert emn is None
                    else:
                        assert emn == (em + en) % chi.order
            assert chi.parity == (1 if chi.value_exponent(q - 1) in (0, None) else -1)


def test_gauss_sum_values():
    # direct 5-term sum gives sqrt(5); 3-term sum gives i sqrt(3)
    assert ch.gauss_sum(ch.quadratic_character(5)) == pytest.approx(math.sqrt(5), abs=1e-12)
    tau3 = ch.gauss_sum(ch.quadratic_character(3))
    assert tau3 == pytest.approx(1j * math.sqrt(3), abs=1e-12)
    assert ch.gauss_sum(ch.enumerate_characters(1)[0]) == pytest.approx(1.0)


def test_gauss_sum_law_small():
    for q in range(1, 40):
        for chi in ch.enumerate_characters(q):
            if chi.primitive:
                assert abs(abs(ch.gauss_sum(chi)) ** 2 - q) < 1e-10


def test_orthogonality():
    q = 7
    chars = ch.enumerate_characters(q)
    for a in chars:
        for b in chars:
            s = sum(a(n) * np.conj(b(n)) for n in range(q))
            expect = 6.0 if a.exps == b.exps else 0.0
            assert abs(s - expect) < 1e-10


def test_decompose_prime_full():
    chi = ch.quadratic_character(5)
    chi1, chi2, psi = ch.decompose(chi, 5)
    assert chi1.modulus == 1
    assert all(abs(chi2(n) - np.conj(chi(n))) < 1e-12 for n in range(5))
    assert all(abs(psi(n) - np.conj(chi(n))) < 1e-12 for n in range(5))


def test_decompose_f_equals_1():
    chi = ch.quadratic_character(5)
    chi1, chi2, psi = ch.decompose(chi, 1)
    assert chi2.modulus == 1
    assert all(abs(chi1(n) - chi(n)) < 1e-12 for n in range(5))
    assert all(abs(psi(n) - chi(n)) < 1e-12 for n in range(5))


def test_decompose_crt_15():
    prims = [c for c in ch.enumerate_characters(15) if c.primitive]
    assert prims, "există primitive characters mod 15"
    for chi in prims:
        chi1, chi2, psi = ch.decompose(chi, 5)
        assert chi1.modulus == 3 and chi2.modulus == 5
        assert chi1.primitive and chi2.primitive
        for n in range(15):
            if gcd(n, 15) == 1:
                assert abs(chi(n) - chi1(n) * np.conj(chi2(n))) < 1e-12
        assert psi.modulus == 15


def test_decompose_rejects_bad_f():
    chi = [c for c in ch.enumerate_characters(12) if c.primitive]
    with pytest.raises(EisenlabError):
        ch.decompose(ch.quadratic_character(8), 2)  # gcd(2, 4) = 2


def test_level_data():
    ld = ch.level_data(1)
    assert ld.nu == 1 and ld.sigma_minus_one == 1
    assert ch.level_data(5).nu == 6
    ld12 = ch.level_data(12)
    assert ld12.nu == 24
    assert ld12.sigma_minus_one == Fraction(7, 3)


def test_nu_multiplicative():
    nu = lambda n: ch.level_data(n).nu
    assert nu(3) * nu(4) == nu(12)
    assert nu(5) * nu(7) == nu(35)
    for p in (2, 3, 5, 7, 11, 13):
        assert nu(p) == p + 1


def test_admissible_level():
    assert ch.admissible_level(1, 0.5)
    for p in (2, 3, 5, 101):
        assert ch.admissible_level(p, 0.5)
    assert not ch.admissible_level(12, 0.5)  # 1/3 > 12^{-1/2}


def test_addressing():
    chi = ch.character_by_address("5:quad")
    assert chi.is_real and chi.primitive
    chi0 = ch.character_by_address("5:0")
    assert chi0.is_principal
    with pytest.raises(ConfigError):
        ch.character_by_address("5:17")
    with pytest.raises(ConfigError):
        ch.character_by_address("nonsense")
    with pytest.raises(ConfigError):
        ch.character_by_address("8:quad")  # three primitive real chars mod 8? (not unique)


def test_conductor_and_primitivity():
    # principal mod 5 is induced by the trivial character mod 1
    chars5 = ch.enumerate_characters(5)
    principal = [c for c in chars5 if c.is_principal][0]
    assert principal.conductor == 1 and not principal.primitive
    assert ch.quadratic_character(5).conductor == 5
    # mod 9: the cubic characters are primitive, the quadratic-order one mod 3 lifts
    chars9 = ch.enumerate_characters(9)
    conds = sorted(c.conductor for c in chars9)
    assert conds == [1, 3, 9, 9, 9, 9]

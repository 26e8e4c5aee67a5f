"""Dirichlet characters mod q, Gauss sums, conductor decomposition, level arithmetic.

Characters are built from exponent vectors against a fixed generator basis of
(Z/qZ)^x and stored as exact root-of-unity exponents (numerator over a common
order R), so multiplicativity and decomposition tests are exact integer
arithmetic; complex values are materialized lazily.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import ConfigError, EisenlabError

__all__ = [
    "DirichletCharacter",
    "LevelData",
    "enumerate_characters",
    "gauss_sum",
    "decompose",
    "level_data",
    "admissible_level",
    "character_by_address",
    "quadratic_character",
]


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as (p, e) pairs, ascending p."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


@lru_cache(maxsize=None)
def _primitive_root(pe: int, p: int) -> int:
    """Smallest primitive root mod p^e for odd p (valid for all e >= 1)."""
    phi = pe - pe // p
    fac = [q for q, _ in factorize(phi)]
    for g in range(2, pe):
        if g % p == 0:
            continue
        if all(pow(g, phi // q, pe) != 1 for q in fac):
            return g
    raise EisenlabError(f"no primitive root mod {pe}")


@lru_cache(maxsize=None)
def _unit_group(q: int) -> tuple[tuple[int, int], ...]:
    """Generators of (Z/qZ)^x as ((g, order), ...), CRT-lifted mod q.

    Odd prime powers contribute one cyclic factor (smallest primitive root);
    2^e contributes nothing (e=1), <3> (e=2), or <-1> x <5> (e>=3).
    """
    if q == 1:
        return ()
    gens = []
    for p, e in factorize(q):
        pe = p**e
        rest = q // pe
        local = []
        if p == 2:
            if e == 2:
                local = [(3, 2)]
            elif e >= 3:
                local = [(pe - 1, 2), (5, 2 ** (e - 2))]
        else:
            g = _primitive_root(pe, p)
            # the same g generating mod p^2 generates mod p^e
            if e >= 2 and pow(g, p - 1, p * p) == 1:
                g += p
            local = [(g, pe - pe // p)]
        for g, order in local:
            if rest == 1:
                gens.append((g % q, order))
            else:
                # CRT-lift: = g mod pe, = 1 mod rest
                inv = pow(pe, -1, rest)
                lifted = (g + pe * ((1 - g) * inv % rest)) % q
                gens.append((lifted, order))
    return tuple(gens)


@lru_cache(maxsize=None)
def _dlog_tables(q: int) -> tuple[np.ndarray, ...]:
    """Discrete-log table per generator: tables[i][n] = a_i with n = prod g_i^{a_i}."""
    gens = _unit_group(q)
    if not gens:
        return ()
    # enumerate the full group by exponent tuples
    tables = [np.full(q, -1, dtype=np.int64) for _ in gens]
    orders = [o for _, o in gens]
    total = math.prod(orders)
    idx = [0] * len(gens)
    n = 1
    for _ in range(total):
        for t, a in zip(tables, idx):
            t[n] = a
        # increment mixed-radix counter and the running product
        for i in reversed(range(len(gens))):
            idx[i] += 1
            n = (n * gens[i][0]) % q
            if idx[i] < orders[i]:
                break
            # wrapped g_i^{order}=1: product already back, reset digit
            idx[i] = 0
    return tuple(tables)


@dataclass(frozen=True)
class DirichletCharacter:
    """Character mod q stored as exact exponents: chi(n) = e(exps[n]/order), 0 on non-units.

    ``exps[n] = -1`` encodes chi(n) = 0 (gcd(n, q) > 1).
    """

    modulus: int
    order: int
    exps: tuple[int, ...]  # length q, exponent numerators mod `order`, -1 for zero
    label: str = ""

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_exponent_vector(q: int, kvec: tuple[int, ...]) -> "DirichletCharacter":
        gens = _unit_group(q)
        orders = [o for _, o in gens]
        R = math.lcm(*orders) if orders else 1
        tables = _dlog_tables(q)
        exps = np.full(q, -1, dtype=np.int64)
        if q == 1:
            return DirichletCharacter(1, 1, (0,))
        units = np.array([n for n in range(q) if gcd(n, q) == 1])
        acc = np.zeros(len(units), dtype=np.int64)
        for k, t, o in zip(kvec, tables, orders):
            acc += k * (R // o) * t[units]
        exps[units] = acc % R
        return DirichletCharacter(q, R, tuple(int(e) for e in exps))

    # -- basic values --------------------------------------------------------

    def value_exponent(self, n: int) -> int | None:
        """Exact exponent r with chi(n) = e(r/order), or None when chi(n)=0."""
        e = self.exps[n % self.modulus]
        return None if e == -1 else int(e)

    def __call__(self, n: int) -> complex:
        e = self.exps[n % self.modulus]
        if e == -1:
            return 0j
        if self.order == 1:
            return 1 + 0j
        if 2 * e % self.order == 0:  # real value, keep it exact
            return complex(1.0 if e == 0 else -1.0)
        return cmath.exp(2j * cmath.pi * e / self.order)

    @property
    def values(self) -> np.ndarray:
        """Complex value table indexed by residue mod q."""
        e = np.array(self.exps, dtype=float)
        vals = np.exp(2j * np.pi * e / self.order)
        vals[np.array(self.exps) == -1] = 0.0
        return vals

    # -- structure -----------------------------------------------------------

    @property
    def is_principal(self) -> bool:
        return all(e in (-1, 0) for e in self.exps)

    @property
    def is_real(self) -> bool:
        return all(e == -1 or 2 * e % self.order == 0 for e in self.exps)

    @property
    def parity(self) -> int:
        """chi(-1) as +1 or -1."""
        if self.modulus <= 2:
            return 1
        e = self.exps[self.modulus - 1]
        return 1 if e == 0 else -1

    @property
    def conductor(self) -> int:
        """Smallest f | q with chi trivial on units = 1 mod f."""
        q = self.modulus
        for f in sorted(_divisors(q)):
            if all(
                self.exps[n] == 0
                for n in range(1, q)
                if n % f == 1 % f and gcd(n, q) == 1  # 1 % f handles f = 1
            ):
                return f
        return q

    @property
    def primitive(self) -> bool:
        return self.conductor == self.modulus

    # -- algebra -------------------------------------------------------------

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.modulus == other.modulus:
            return _table_product(self, other, self.modulus)
        m = math.lcm(self.modulus, other.modulus)
        return _table_product(self, other, m)

    def conj(self) -> "DirichletCharacter":
        R = self.order
        exps = tuple(e if e == -1 else (-e) % R for e in self.exps)
        return DirichletCharacter(self.modulus, R, exps, self.label)

    def power(self, k: int) -> "DirichletCharacter":
        """chi^k with the convention chi^{+1} = chi, chi^{-1} = conj(chi)."""
        if k == 1:
            return self
        if k == -1:
            return self.conj()
        R = self.order
        exps = tuple(e if e == -1 else (k * e) % R for e in self.exps)
        return DirichletCharacter(self.modulus, R, exps)

    def restrict_to_conductor(self) -> "DirichletCharacter":
        """The primitive character inducing chi."""
        f = self.conductor
        if f == self.modulus:
            return self
        return _induced_mod(self, f)

    def __repr__(self) -> str:  # pragma: no cover
        tag = self.label or f"order {self.order}"
        return f"DirichletCharacter(mod {self.modulus}, {tag})"


def _divisors(n: int) -> list[int]:
    out = [1]
    for p, e in factorize(n):
        out = [d * p**k for d in out for k in range(e + 1)]
    return sorted(out)


def _normalize_order(exps: list[Fraction], q: int) -> DirichletCharacter:
    """Build a character from exact fractional exponents (None encoded as -1)."""
    den = 1
    for x in exps:
        if x is not None:
            den = math.lcm(den, x.denominator)
    tab = tuple(-1 if x is None else int(x * den) % den for x in exps)
    return DirichletCharacter(q, den, tab)


def _table_product(a: DirichletCharacter, b: DirichletCharacter, m: int) -> DirichletCharacter:
    exps: list[Fraction | None] = []
    for n in range(m):
        if gcd(n, m) != 1:
            exps.append(None)
            continue
        ea = a.exps[n % a.modulus]
        eb = b.exps[n % b.modulus]
        if ea == -1 or eb == -1:
            exps.append(None)
            continue
        exps.append(Fraction(ea, a.order) + Fraction(eb, b.order))
    return _normalize_order(exps, m)


def _induced_mod(chi: DirichletCharacter, f: int) -> DirichletCharacter:
    """Restrict chi (mod q) to a character mod f, f | q, chi trivial on 1 mod f."""
    q = chi.modulus
    exps: list[Fraction | None] = []
    for n in range(f):
        if gcd(n, f) != 1:
            exps.append(None)
            continue
        # lift n to a residue mod q coprime to q
        m = n
        while gcd(m, q) != 1:
            m += f
        exps.append(Fraction(chi.exps[m], chi.order))
    return _normalize_order(exps, f)


# -- public operations --------------------------------------------------------


@lru_cache(maxsize=None)
def enumerate_characters(q: int) -> tuple[DirichletCharacter, ...]:
    """All phi(q) characters mod q, ordered lexicographically in generator exponents."""
    if q == 1:
        return (DirichletCharacter(1, 1, (0,)),)
    gens = _unit_group(q)
    if not gens:
        return (DirichletCharacter.from_exponent_vector(q, ()),)
    orders = [o for _, o in gens]
    out = []
    import itertools

    for kvec in itertools.product(*(range(o) for o in orders)):
        out.append(DirichletCharacter.from_exponent_vector(q, kvec))
    return tuple(out)


def gauss_sum(chi: DirichletCharacter) -> complex:
    """tau(chi) = sum_a chi(a) e(a/q)."""
    q = chi.modulus
    if q == 1:
        return 1 + 0j
    a = np.arange(q)
    return complex(np.sum(chi.values * np.exp(2j * np.pi * a / q)))


def decompose(
    chi: DirichletCharacter, f: int
) -> tuple[DirichletCharacter, DirichletCharacter, DirichletCharacter]:
    """Split primitive chi mod N as chi = chi1 * conj(chi2) with moduli (N/f, f).

    Requires f | N and gcd(f, N/f) = 1. Returns (chi1, chi2, psi) with psi =
    chi1*chi2 as a character mod N.
    """
    N = chi.modulus
    if N % f != 0 or gcd(f, N // f) != 1:
        raise EisenlabError(f"f={f} must divide N={N} with gcd(f, N/f)=1")
    if not chi.primitive:
        raise EisenlabError("decompose requires a primitive character")
    m1 = N // f
    # chi1(n) = chi(m), m = n mod m1, m = 1 mod f  (CRT section)
    chi1 = _crt_component(chi, m1, f)
    beta = _crt_component(chi, f, m1)
    chi2 = beta.conj()
    psi = chi1 * chi2
    if psi.modulus != N:
        psi = _lift_mod(psi, N)
    return chi1, chi2, psi


def _crt_component(chi: DirichletCharacter, m: int, other: int) -> DirichletCharacter:
    """Component of chi mod m: n -> chi(CRT(n mod m, 1 mod other))."""
    N = chi.modulus
    exps: list[Fraction | None] = []
    for n in range(m):
        if gcd(n, m) != 1:
            exps.append(None)
            continue
        if m == 1:
            exps.append(Fraction(0))
            continue
        inv = pow(other, -1, m)
        val = (1 + other * ((n - 1) * inv % m)) % N
        exps.append(Fraction(chi.exps[val], chi.order))
    return _normalize_order(exps, m)


def _lift_mod(chi: DirichletCharacter, m: int) -> DirichletCharacter:
    """Lift chi to modulus m (a multiple of chi.modulus)."""
    exps: list[Fraction | None] = []
    for n in range(m):
        if gcd(n, m) != 1:
            exps.append(None)
        else:
            e = chi.exps[n % chi.modulus]
            exps.append(None if e == -1 else Fraction(e, chi.order))
    return _normalize_order(exps, m)


@dataclass(frozen=True)
class LevelData:
    """Index nu(N) = [SL2(Z):Gamma_0(N)] and sigma_{-1}(N) = sum_{d|N} 1/d, exact."""

    N: int
    factors: tuple[tuple[int, int], ...]
    nu: int
    sigma_minus_one: Fraction


def level_data(N: int) -> LevelData:
    if N < 1:
        raise EisenlabError("level must be a positive integer")
    fac = tuple(factorize(N))
    nu = N
    for p, _ in fac:
        nu = nu * (p + 1) // p
    sig = sum((Fraction(1, d) for d in _divisors(N)), Fraction(0))
    return LevelData(N, fac, nu, sig)


def admissible_level(N: int, delta: float) -> bool:
    """sigma_{-1}(N) - 1 <= N^{-delta}, with the O-constant pinned to 1."""
    if delta <= 0:
        raise EisenlabError("delta must be positive")
    excess = level_data(N).sigma_minus_one - 1
    return float(excess) <= N ** (-delta) + 1e-15


def quadratic_character(q: int) -> DirichletCharacter:
    """The unique primitive real non-principal character mod q, if one exists."""
    cands = [
        c for c in enumerate_characters(q) if c.is_real and c.primitive and not c.is_principal
    ]
    if len(cands) != 1:
        raise ConfigError(f"mod {q}: {len(cands)} primitive quadratic characters, need exactly 1")
    return cands[0]


def character_by_address(addr: str) -> DirichletCharacter:
    """Resolve a 'q:index' or 'q:quad' address into a character."""
    try:
        qs, key = addr.split(":")
        q = int(qs)
    except ValueError as exc:
        raise ConfigError(f"bad character address {addr!r}, want 'q:index' or 'q:quad'") from exc
    if key == "quad":
        return quadratic_character(q)
    try:
        idx = int(key)
    except ValueError as exc:
        raise ConfigError(f"bad character index in {addr!r}") from exc
    chars = enumerate_characters(q)
    if not 0 <= idx < len(chars):
        raise ConfigError(f"character index {idx} out of range for modulus {q} (phi={len(chars)})")
    return chars[idx]

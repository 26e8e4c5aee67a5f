"""Hurwitz zeta, Dirichlet L-functions, completed Lambda, log-derivatives,
and Laurent expansions by contour integration.

The Hurwitz kernel is Euler-Maclaurin with defaults M=50 terms and Bernoulli
depth 20, cut adaptively by |Im s|; everything else is assembled from it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma

from .characters import DirichletCharacter, factorize
from .errors import PoleError, ZeroOfLError
from .special import log_gamma

__all__ = [
    "LaurentExpansion",
    "hurwitz_zeta",
    "zeta",
    "dirichlet_l",
    "principal_l",
    "completed_lambda",
    "log_derivative",
    "log_derivative_with_error",
    "laurent_at",
]

# B_2, B_4, ..., B_40
_BERNOULLI = [
    1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510,
    43867 / 798, -174611 / 330, 854513 / 138, -236364091 / 2730, 8553103 / 6,
    -23749461029 / 870, 8615841276005 / 14322, -7709321041217 / 510,
    2577687858367 / 6, -26315271553053477373 / 1919190, 2929993913841559 / 6,
    -261082718496449122051 / 13530,
]

_EM_TERMS = 50
_EM_DEPTH = 20


def hurwitz_zeta(s: complex, a: float) -> complex:
    """zeta(s, a) for complex s != 1 and 0 < a <= 1, Euler-Maclaurin."""
    s = complex(s)
    if not 0 < a <= 1:
        raise ValueError("hurwitz_zeta requires 0 < a <= 1")
    if abs(s - 1) < 1e-12:
        raise PoleError("hurwitz_zeta: pole at s = 1")
    M = max(_EM_TERMS, int(1.3 * abs(s.imag)) + 10)
    k = np.arange(M, dtype=float)
    tot = complex(np.sum((k + a) ** (-s)))
    am = M + a
    tot += am ** (1 - s) / (s - 1) + 0.5 * am ** (-s)
    poch = s
    fact = 2.0
    prev = math.inf
    for j, B in enumerate(_BERNOULLI[:_EM_DEPTH], start=1):
        term = (B / fact) * poch * am ** (-s - 2 * j + 1)
        if abs(term) > prev:  # asymptotic series turned; stop at the floor
            break
        tot += term
        prev = abs(term)
        poch *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return tot


def zeta(s: complex) -> complex:
    return hurwitz_zeta(s, 1.0)


def dirichlet_l(s: complex, chi: DirichletCharacter) -> complex:
    """L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q); digamma form at s = 1."""
    s = complex(s)
    q = chi.modulus
    if q == 1:
        return zeta(s)
    if chi.is_principal and abs(s - 1) < 1e-12:
        raise PoleError("dirichlet_l: principal character has a pole at s = 1")
    vals = chi.values
    if abs(s - 1) < 1e-9 and not chi.is_principal:
        # zeta(s, a) ~ 1/(s-1) - psi0(a): the poles cancel against sum chi(a) = 0
        a = np.arange(1, q)
        keep = vals[1:] != 0
        return complex(-np.sum(vals[1:][keep] * digamma(a[keep] / q)) / q)
    tot = 0j
    for a in range(1, q + 1):
        c = vals[a % q]
        if c != 0:
            tot += c * hurwitz_zeta(s, a / q)
    return q ** (-s) * tot


def principal_l(s: complex, N: int) -> complex:
    """zeta(s) * prod_{p | N} (1 - p^{-s})."""
    s = complex(s)
    if abs(s - 1) < 1e-12:
        raise PoleError("principal_l: pole at s = 1")
    val = zeta(s)
    for p, _ in factorize(N):
        val *= 1 - p ** (-s)
    return val


def completed_lambda(s: complex, chi: DirichletCharacter) -> complex:
    """Lambda(s, chi) = (q/pi)^{(s+a)/2} Gamma((s+a)/2) L(s, chi), a = (1-parity)/2."""
    if not chi.primitive:
        raise PoleError("completed_lambda requires a primitive character")
    s = complex(s)
    a = 0 if chi.parity == 1 else 1
    q = chi.modulus
    if chi.is_principal and q > 1:
        raise PoleError("completed_lambda: principal character mod q > 1 is not primitive")
    lg = log_gamma((s + a) / 2)
    return cmath.exp(((s + a) / 2) * math.log(q / math.pi) + lg) * dirichlet_l(s, chi)


def _cauchy_derivatives(f, s0: complex, kmax: int, radius: float, nodes: int = 64) -> list[complex]:
    """f(s0), f'(s0), ..., f^{(kmax)}(s0) by trapezoid contour integrals."""
    th = 2 * np.pi * np.arange(nodes) / nodes
    zs = radius * np.exp(1j * th)
    fv = np.array([f(s0 + z) for z in zs])
    out = []
    for k in range(kmax + 1):
        ck = np.sum(fv * np.exp(-1j * k * th)) / nodes / radius**k
        out.append(complex(ck) * math.factorial(k))
    return out


def log_derivative(s: complex, chi: DirichletCharacter, k: int, radius: float = 0.1) -> complex:
    """L^{(k)}/L (s, chi) for k in {1, 2}, via Cauchy-circle derivatives of L."""
    if k not in (1, 2):
        raise ValueError("log_derivative supports k in {1, 2}")
    f = lambda w: dirichlet_l(w, chi)
    derivs = _cauchy_derivatives(f, complex(s), k, radius)
    L = derivs[0]
    if abs(L) < 1e-8:
        raise ZeroOfLError(f"|L(s)| = {abs(L):.2e} too small at s = {s}")
    return derivs[k] / L


def log_derivative_with_error(s: complex, chi: DirichletCharacter, k: int,
                              radius: float = 0.1) -> tuple[complex, float]:
    """Value plus a two-radius consistency error bar."""
    v1 = log_derivative(s, chi, k, radius)
    v2 = log_derivative(s, chi, k, radius / 2)
    return v2, abs(v1 - v2)


@dataclass
class LaurentExpansion:
    """Coefficients of f around `center`, starting at order -order_of_pole."""

    center: complex
    order_of_pole: int
    coefficients: np.ndarray  # c_{-p}, c_{-p+1}, ...
    radius_hint: float
    remainder_bound: float = 0.0

    def coefficient(self, j: int) -> complex:
        """c_j, the coefficient of (s - center)^j."""
        idx = j + self.order_of_pole
        if not 0 <= idx < len(self.coefficients):
            raise IndexError(f"coefficient {j} outside computed window")
        return complex(self.coefficients[idx])

    @property
    def residue(self) -> complex:
        return self.coefficient(-1) if self.order_of_pole >= 1 else 0j

    def evaluate(self, offset: complex) -> complex:
        """Truncated expansion at center + offset."""
        p = self.order_of_pole
        return complex(sum(c * offset ** (j - p) for j, c in enumerate(self.coefficients)))


def laurent_at(f, s0: complex, pole_order: int, n_coeffs: int,
               radius: float = 0.5, nodes: int = 128) -> LaurentExpansion:
    """Laurent coefficients c_{-p} .. c_{-p+n_coeffs-1} by circle quadrature.

    Trapezoid on a circle is spectrally accurate for the analytic part; the
    remainder bound is the max change when halving the node count.
    """
    s0 = complex(s0)
    th = 2 * np.pi * np.arange(nodes) / nodes
    zs = radius * np.exp(1j * th)
    fv = np.array([f(s0 + z) for z in zs], dtype=complex)
    mag = np.abs(fv)
    med = float(np.median(mag))
    if med > 0 and float(np.max(mag)) > 1e12 * med:
        raise PoleError("laurent_at: contour passes too close to a singularity")
    coeffs = []
    for j in range(-pole_order, -pole_order + n_coeffs):
        coeffs.append(np.sum(fv * np.exp(-1j * j * th)) / nodes / radius**j)
    half = fv[::2]
    th_half = th[::2]
    rem = 0.0
    for j in range(-pole_order, -pole_order + n_coeffs):
        c_half = np.sum(half * np.exp(-1j * j * th_half)) / len(half) / radius**j
        rem = max(rem, abs(c_half - coeffs[j + pole_order]))
    return LaurentExpansion(s0, pole_order, np.array(coeffs), radius, rem)

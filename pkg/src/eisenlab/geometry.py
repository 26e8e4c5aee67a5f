"""Gamma_0(N) coset enumeration, fundamental-domain quadrature, point reduction,
and cuspidal-zone membership (prime level: the Atkin-Lehner pair infinity / 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np
from numpy.polynomial.legendre import leggauss

from .characters import level_data
from .errors import EvaluationFloorError, UnsupportedLevelError

__all__ = [
    "CosetList",
    "QuadratureGrid",
    "CuspData",
    "coset_reps",
    "volume",
    "build_grid",
    "integrate",
    "integrate_with_error",
    "sl2z_reduce",
    "gamma0_reduce",
    "cuspidal_zone_membership",
    "cusps_for_level",
    "apply_moebius",
]


def apply_moebius(mat, z):
    """(az + b)/(cz + d) for mat = ((a, b), (c, d)); works on arrays."""
    (a, b), (c, d) = mat
    return (a * z + b) / (c * z + d)


@dataclass(frozen=True)
class CosetList:
    """Right-coset representatives of Gamma_0(N) \\ SL_2(Z), one per P^1(Z/N) class."""

    N: int
    reps: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    def __len__(self) -> int:
        return len(self.reps)


def _p1_canonical(c: int, d: int, N: int) -> tuple[int, int]:
    """Lexicographically smallest unit multiple of (c : d) in P^1(Z/N)."""
    best = None
    for u in range(1, N):
        if gcd(u, N) != 1:
            continue
        cand = ((u * c) % N, (u * d) % N)
        if best is None or cand < best:
            best = cand
    return best


@lru_cache(maxsize=None)
def coset_reps(N: int) -> CosetList:
    """Canonical representatives via P^1(Z/N); length equals nu(N)."""
    if N == 1:
        return CosetList(1, ((((1, 0), (0, 1))),))
    classes = set()
    for c in range(N):
        for d in range(N):
            if gcd(gcd(c, d), N) == 1:
                classes.add(_p1_canonical(c, d, N))
    reps = []
    for c, d in sorted(classes):
        c0, d0 = c, d
        if c0 == 0:
            c0, d0 = 0, 1
        else:
            # adjust d until the integer pair is coprime (then lift by Bezout)
            while gcd(c0, d0) != 1:
                d0 += N
        g, a, b = _ext_gcd(d0, -c0)
        # a*d0 - b*c0 = 1 with (c0, d0) the bottom row
        reps.append(((a, b), (c0, d0)))
    cl = CosetList(N, tuple(reps))
    assert len(cl) == level_data(N).nu, "coset count must equal the index nu(N)"
    return cl


def _ext_gcd(x: int, y: int) -> tuple[int, int, int]:
    """g, u, v with u*x + v*y = g."""
    if y == 0:
        return (x, 1, 0) if x > 0 else (-x, -1, 0)
    g, u, v = _ext_gcd(y, x % y)
    return g, v, u - (x // y) * v


def volume(N: int) -> float:
    """Vol(Gamma_0(N) \\ H) = (pi/3) nu(N)."""
    return math.pi / 3 * level_data(N).nu


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor nodes on the standard SL_2(Z) domain for the measure dx dy / y^2.

    x: Gauss-Legendre on [-1/2, 1/2]; y = y_min(x) e^u with Gauss-Legendre in u
    up to the cap, plus an analytic tail row of exact measure 1/y_cap per unit
    x-mass (evaluated at the cap height).
    """

    nodes: np.ndarray  # complex points in the base domain
    weights: np.ndarray
    tail_nodes: np.ndarray
    tail_weights: np.ndarray
    y_cap: float
    nx: int
    ny: int


def build_grid(nx: int = 24, ny: int = 32, y_cap: float = 50.0) -> QuadratureGrid:
    xg, wx = leggauss(nx)
    x = 0.5 * xg
    wx = 0.5 * wx
    nodes, weights = [], []
    tail_nodes, tail_weights = [], []
    ug, wu = leggauss(ny)
    for xi, wxi in zip(x, wx):
        ymin = math.sqrt(max(1.0 - xi * xi, 1e-300))
        U = math.log(y_cap / ymin)
        u = 0.5 * U * (ug + 1.0)
        wu_i = 0.5 * U * wu
        y = ymin * np.exp(u)
        # dx dy / y^2 = dx * e^{-u}/ymin du
        w = wxi * wu_i * np.exp(-u) / ymin
        nodes.append(xi + 1j * y)
        weights.append(w)
        tail_nodes.append(xi + 1j * y_cap)
        tail_weights.append(wxi / y_cap)
    return QuadratureGrid(
        np.concatenate(nodes),
        np.concatenate(weights),
        np.array(tail_nodes),
        np.array(tail_weights),
        y_cap,
        nx,
        ny,
    )


def integrate(f, N: int, grid: QuadratureGrid | None = None) -> complex:
    """int_{F_N} f dmu over the assembled domain (coset translates of the base grid).

    `f` must accept a complex ndarray. Summation order is fixed (coset-major)
    so reductions are reproducible.
    """
    grid = grid or build_grid()
    total = 0j
    for rep in coset_reps(N).reps:
        z = apply_moebius(rep, grid.nodes)
        total += complex(np.sum(np.asarray(f(z)) * grid.weights))
        zt = apply_moebius(rep, grid.tail_nodes)
        total += complex(np.sum(np.asarray(f(zt)) * grid.tail_weights))
    return total


def integrate_with_error(f, N: int, grid: QuadratureGrid | None = None) -> tuple[complex, float]:
    """Integral plus a refinement estimate from a half-resolution grid."""
    grid = grid or build_grid()
    full = integrate(f, N, grid)
    half = integrate(f, N, build_grid(max(6, grid.nx // 2), max(6, grid.ny // 2), grid.y_cap))
    return full, abs(full - half)


# -- reduction ------------------------------------------------------------------


def sl2z_reduce(z: complex) -> tuple[complex, tuple[tuple[int, int], tuple[int, int]]]:
    """Reduce to the standard domain; returns (w, g) with w = g(z), g in SL_2(Z)."""
    a, b, c, d = 1, 0, 0, 1
    w = complex(z)
    for _ in range(200):
        n = math.floor(w.real + 0.5)
        if n != 0:
            w -= n
            a, b = a - n * c, b - n * d
        if abs(w) < 1 - 1e-15:
            w = -1 / w
            a, b, c, d = -c, -d, a, b
        else:
            break
    return w, ((a, b), (c, d))


def gamma0_reduce(z: complex, N: int) -> tuple[complex, tuple[tuple[int, int], tuple[int, int]]]:
    """Height-maximizing reduction within Gamma_0(N): returns (w, g), w = g(z).

    Finds the row (c, d), N | c, gcd(c, d) = 1 minimizing |cz + d|, iterating
    with x-translations until no improvement remains.
    """
    a, b, c0, d0 = 1, 0, 0, 1
    w = complex(z)
    for _ in range(100):
        n = math.floor(w.real + 0.5)
        if n != 0:
            w -= n
            a, b = a - n * c0, b - n * d0
        best = (1.0, 0, 1)  # |0*w + 1|^2 = 1: the identity row
        cmax = int(math.ceil(1.0 / (math.sqrt(best[0]) * max(w.imag, 1e-12)))) + 1
        improved = False
        for c in range(N, N * cmax + 1, N):
            if c * w.imag >= 1.0:
                break
            d_center = -c * w.real
            for d in range(math.floor(d_center) - 1, math.floor(d_center) + 3):
                if gcd(c, d) != 1:
                    continue
                m = abs(c * w + d) ** 2
                if m < best[0] - 1e-15:
                    best = (m, c, d)
        m, c, d = best
        if c == 0:
            break
        g, u, v = _ext_gcd(d, -c)
        w = (u * w + v) / (c * w + d)
        a, b, c0, d0 = u * a + v * c0, u * b + v * d0, c * a + d * c0, c * b + d * d0
        improved = True
        if not improved:
            break
    return w, ((a, b), (c0, d0))


# -- cusps and zones ---------------------------------------------------------------


@dataclass(frozen=True)
class CuspData:
    """One of the Atkin-Lehner pair at prime level, with its scaling map."""

    label: str  # "infinity" | "zero"
    width: float
    scaling: tuple[tuple[float, float], tuple[float, float]]  # sigma_a as a real matrix

    def slash_height(self, z: complex, N: int) -> float:
        """Im(sigma_a^{-1} z); for 'zero' this is Im(-1/(N z))."""
        if self.label == "infinity":
            return z.imag
        return z.imag / (N * abs(z) ** 2)


def cusps_for_level(N: int) -> tuple[CuspData, CuspData]:
    if N < 2 or len(level_data(N).factors) != 1 or level_data(N).factors[0][1] != 1:
        raise UnsupportedLevelError("cusp pair machinery supports prime level only")
    rN = math.sqrt(N)
    inf = CuspData("infinity", 1.0, ((1.0, 0.0), (0.0, 1.0)))
    zero = CuspData("zero", float(N), ((0.0, -1.0 / rN), (rN, 0.0)))
    return inf, zero


def cuspidal_zone_membership(z: complex, N: int, Y: float) -> str | None:
    """The unique cusp whose zone of height Y contains z, or None (Y > 1)."""
    if Y <= 1:
        raise ValueError("zone height must satisfy Y > 1")
    h_inf = invariant_height_infinity(z, N)
    if h_inf > Y:
        return "infinity"
    if N > 1:
        h0 = invariant_height_infinity(-1 / (N * z), N)
        if h0 > Y:
            return "zero"
    return None


def invariant_height_infinity(z: complex, N: int) -> float:
    """max over Gamma_0(N) of Im(gamma z) (the invariant height at the cusp infinity)."""
    w, _ = gamma0_reduce(z, N)
    return w.imag

"""Complex log-Gamma, Beta, imaginary-order K-Bessel, Stieltjes constants,
the functional-equation factor, and the de Branges-Wilson Beta-product integral.

All kernels are binary64; the one place that genuinely exceeds binary64
(K_{it}(x) deep in the oscillatory small-x regime) is delegated to mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import BudgetExceededError, PoleError

__all__ = [
    "PrecisionBudget",
    "GammaFactorSpec",
    "log_gamma",
    "gamma",
    "beta",
    "bessel_k",
    "bessel_k_nu",
    "dbw_integral",
    "gamma_factor_f",
    "stieltjes",
    "set_kernel_perturbation",
]

# Lanczos g=7, n=9 (Godfrey coefficients; regenerate with scripts/regen_lanczos.py)
_LANCZOS_G = 7.0
_LANCZOS_C = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)

# global multiplicative fault injection for suite-sensitivity self tests
_KERNEL_PERTURBATION = 0.0


def set_kernel_perturbation(delta: float) -> None:
    """Scale bessel_k outputs by (1 + delta); used by `verify --perturb`."""
    global _KERNEL_PERTURBATION
    _KERNEL_PERTURBATION = float(delta)


@dataclass(frozen=True)
class PrecisionBudget:
    target_abs_err: float = 1e-10
    max_terms: int = 200_000
    accumulator_mode: str = "standard"  # standard | compensated | double-word

    def __post_init__(self):
        if self.accumulator_mode not in ("standard", "compensated", "double-word"):
            raise ValueError(f"unknown accumulator mode {self.accumulator_mode!r}")
        if self.accumulator_mode == "standard" and self.target_abs_err < 1e-14:
            raise ValueError("binary64 kernels are specified down to 1e-14 in standard mode")


@dataclass(frozen=True)
class GammaFactorSpec:
    """Arguments of the functional-equation factor: point s, spectral t, conductor Q."""

    s: complex
    spectral_t: float
    conductor_Q: float


def _near_nonpositive_int(z: np.ndarray | complex, tol: float = 1e-12) -> bool:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    re, im = z.real, z.imag
    near = (np.abs(im) < tol) & (re < 0.5) & (np.abs(re - np.round(re)) < tol)
    return bool(np.any(near))


def log_gamma(z):
    """log Gamma(z) for complex z (standard branch up to exp-irrelevant 2*pi*i wraps).

    Lanczos on Re z >= 0.5, reflection below; poles at non-positive integers raise.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if _near_nonpositive_int(z):
        raise PoleError("log_gamma: argument at a non-positive integer")
    out = np.empty_like(z)
    mask = z.real >= 0.5
    if np.any(mask):
        out[mask] = _lanczos_lgamma(z[mask])
    if np.any(~mask):
        w = z[~mask]
        # log Gamma(w) = log pi - log sin(pi w) - log Gamma(1 - w), sin unwound half-plane-wise
        out[~mask] = math.log(math.pi) - _log_sin_pi(w) - _lanczos_lgamma(1 - w)
    return out[0] if scalar else out


def _lanczos_lgamma(z: np.ndarray) -> np.ndarray:
    zm1 = z - 1.0
    x = np.full(z.shape, _LANCZOS_C[0], dtype=complex)
    for i in range(1, len(_LANCZOS_C)):
        x = x + _LANCZOS_C[i] / (zm1 + i)
    t = zm1 + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (zm1 + 0.5) * np.log(t) - t + np.log(x)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log sin(pi z) up to 2*pi*i integer wraps (all consumers exponentiate)."""
    out = np.empty_like(z)
    up = z.imag >= 0
    if np.any(up):
        w = z[up]
        out[up] = -1j * math.pi * w + np.log1p(-np.exp(2j * math.pi * w)) - np.log(2j) + 1j * math.pi
    if np.any(~up):
        w = z[~up]
        out[~up] = 1j * math.pi * w + np.log1p(-np.exp(-2j * math.pi * w)) - np.log(2j)
    return out


def gamma(z):
    return np.exp(log_gamma(z))


def beta(x, y):
    """B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)."""
    for name, v in (("x", x), ("y", y), ("x+y", np.asarray(x) + np.asarray(y))):
        if _near_nonpositive_int(v):
            raise PoleError(f"beta: Gamma pole in argument {name}")
    return np.exp(log_gamma(x) + log_gamma(y) - log_gamma(np.asarray(x) + np.asarray(y)))


# -- K-Bessel -----------------------------------------------------------------

_K_UNDERFLOW_X = 740.0  # sqrt(pi/2x) e^{-x} underflows binary64 past here


@lru_cache(maxsize=64)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return leggauss(n)


def _k_integral_complex(nu: complex, x: float, deg: int = 24) -> complex:
    """exp(x) * K_nu(x) via int_0^inf e^{-x(cosh u - 1)} cosh(nu u) du, composite GL."""
    umax = math.acosh(1.0 + 52.0 / x)
    osc = abs(nu.imag)
    width = min(0.5, 3.0 / max(1.0, osc))
    n_pan = max(2, int(math.ceil(umax / width)))
    xs, ws = _gl_nodes(deg)
    edges = np.linspace(0.0, umax, n_pan + 1)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    u = 0.5 * (hi - lo) * xs[None, :] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * ws[None, :]
    vals = np.exp(-x * (np.cosh(u) - 1.0)) * np.cosh(nu * u)
    return complex(np.sum(vals * w))


def bessel_k(order_t: float, x: float, budget: PrecisionBudget | None = None,
             with_flag: bool = False):
    """K_{it}(x) for real t and x > 0 (real-valued; includes the t=0 case K_0).

    Underflow (x beyond the decay threshold) returns exact 0.0; pass
    ``with_flag=True`` to receive an (value, underflowed) pair.
    """
    if x <= 0:
        raise ValueError("bessel_k requires x > 0")
    t = float(order_t)
    if x > _K_UNDERFLOW_X:
        return (0.0, True) if with_flag else 0.0
    if abs(t) >= 6.0 and x < 2.0 * abs(t):
        # oscillatory cancellation region: |K_{it}| ~ e^{-pi|t|/2} while the
        # integrand is O(1); binary64 quadrature cannot reach 1e-10 relative
        import mpmath as mp

        with mp.workdps(30):
            val = float(mp.re(mp.besselk(1j * t, mp.mpf(x))))
    else:
        val = math.exp(-x) * _k_integral_complex(1j * t, x).real
    if _KERNEL_PERTURBATION:
        val *= 1.0 + _KERNEL_PERTURBATION
    return (val, False) if with_flag else val


def bessel_k_array(nu: complex, x: np.ndarray) -> np.ndarray:
    """Vectorized K_nu on positive arrays; scipy fast paths for real order.

    All Eisenstein Fourier tails route through here, so the fault-injection
    multiplier reaches every consumer.
    """
    x = np.asarray(x, dtype=float)
    nu = complex(nu)
    if abs(nu.imag) >= 1e-14:
        # scalar path already carries the fault-injection multiplier
        return np.array([bessel_k_nu(nu, float(xi)) for xi in x])
    from scipy.special import k0, kv

    vals = np.asarray(k0(x) if abs(nu.real) < 1e-14 else kv(nu.real, x), dtype=float)
    if _KERNEL_PERTURBATION:
        vals = vals * (1.0 + _KERNEL_PERTURBATION)
    return vals


def bessel_k_nu(nu: complex, x: float) -> complex:
    """K_nu(x) for complex order; real orders route through scipy's kv."""
    if x <= 0:
        raise ValueError("bessel_k_nu requires x > 0")
    nu = complex(nu)
    if x > _K_UNDERFLOW_X:
        return 0.0 + 0j
    if abs(nu.imag) < 1e-14:
        from scipy.special import kv

        val = complex(kv(nu.real, x))
    elif abs(nu.real) < 1e-14:
        val = complex(bessel_k(nu.imag, x))
    else:
        val = math.exp(-x) * _k_integral_complex(nu, x)
    if _KERNEL_PERTURBATION:
        val *= 1.0 + _KERNEL_PERTURBATION
    return val


# -- de Branges-Wilson integral ------------------------------------------------


def _beta_product_log(t: np.ndarray, T: float, alpha=None, eps=None) -> np.ndarray:
    """log of prod_{e1,e2} B(1/4 + e1 i t/2 + e2 i T, 1/4 - e1 i t/2), plus the
    Gamma-ratio weight for the sign/shift data when (eps, alpha) is given."""
    logs = np.zeros_like(t, dtype=complex)
    for e1 in (1, -1):
        for e2 in (1, -1):
            a = 0.25 + e1 * 0.5j * t + e2 * 1j * T
            b = 0.25 - e1 * 0.5j * t
            logs += log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    if eps is not None:
        for j in range(4):
            if eps[j] == -1:
                aj = alpha[j]
                logs += (
                    log_gamma(0.25 - aj / 2 + 0.5j * t)
                    + log_gamma(0.25 - aj / 2 - 0.5j * t)
                    - log_gamma(0.25 + aj / 2 + 0.5j * t)
                    - log_gamma(0.25 + aj / 2 - 0.5j * t)
                )
    return logs


def _sinh_weighted_integral(T: float, budget: PrecisionBudget, alpha=None, eps=None) -> complex:
    """2 * int_0^{tmax} t sinh(pi t) [Beta product](t) dt with certified tail bound."""
    deg = 24
    xs, ws = _gl_nodes(deg)
    t_max = 12.0 + 4.0 * abs(T)
    while True:
        # tail bound: |integrand| <= C t e^{-pi t} beyond t_max (Stirling decay
        # of the eight Gamma factors beats the sinh growth); C fitted at t_max
        # with a safety factor and validated by the doubling test.
        probe = np.array([t_max, t_max * 1.1])
        mag = np.exp(
            np.log(probe) + math.pi * probe + np.log1p(-np.exp(-2 * math.pi * probe)) - math.log(2.0)
            + _beta_product_log(probe, T, alpha, eps).real
        )
        C = 10.0 * float(np.max(mag * np.exp(math.pi * probe) / probe))
        tail = C * math.exp(-math.pi * t_max) * (t_max / math.pi + 1 / math.pi**2)
        if tail <= 0.5 * budget.target_abs_err:
            break
        t_max *= 1.5
        if t_max > 400:
            raise BudgetExceededError("dbw tail bound cannot meet the accuracy target")
    n_pan = int(math.ceil(t_max / 1.0))
    if n_pan * deg > budget.max_terms:
        raise BudgetExceededError(f"dbw needs {n_pan * deg} nodes > max_terms")
    edges = np.linspace(0.0, t_max, n_pan + 1)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    t = 0.5 * (hi - lo) * xs[None, :] + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * ws[None, :]
    logpref = np.log(t) + math.pi * t + np.log1p(-np.exp(-2 * math.pi * t)) - math.log(2.0)
    vals = np.exp(logpref + _beta_product_log(t, T, alpha, eps))
    terms = (vals * w).ravel()
    if budget.accumulator_mode == "standard":
        total = complex(np.sum(terms))
    else:
        total = complex(math.fsum(terms.real), math.fsum(terms.imag))
    return 2.0 * total


def dbw_integral(T: float, budget: PrecisionBudget | None = None) -> float:
    """int_R t sinh(pi t) prod_{e1,e2} B(1/4+e1 it/2+e2 iT, 1/4-e1 it/2) dt.

    Equals 8 pi^3 for every real T (de Branges-Wilson); |T| <= 5 supported.
    """
    if abs(T) > 5:
        raise ValueError("dbw_integral is documented for |T| <= 5")
    budget = budget or PrecisionBudget(target_abs_err=1e-9)
    return _sinh_weighted_integral(T, budget).real


def gamma_factor_f(spec: GammaFactorSpec):
    """Q^{1/2-s} pi^{2s-1} Gamma((1-s+it)/2) Gamma((1-s-it)/2) / (Gamma((s+it)/2) Gamma((s-it)/2))."""
    s = np.asarray(spec.s, dtype=complex)
    it = 1j * spec.spectral_t
    num = log_gamma((1 - s + it) / 2) + log_gamma((1 - s - it) / 2)
    den = log_gamma((s + it) / 2) + log_gamma((s - it) / 2)
    Q = spec.conductor_Q
    return np.exp((0.5 - s) * math.log(Q) + (2 * s - 1) * math.log(math.pi) + num - den)


# -- Stieltjes constants --------------------------------------------------------


def _richardson_limit(seq: list[float]) -> float:
    """Richardson ladder for S(h) = L + c1 h + c2 h^2 + ... with h halving."""
    T = list(seq)
    k = 1
    while len(T) > 1:
        T = [(2**k * T[i + 1] - T[i]) / (2**k - 1) for i in range(len(T) - 1)]
        k += 1
    return T[0]


@lru_cache(maxsize=None)
def stieltjes(n: int) -> float:
    """gamma_0 (Euler) and gamma_1, from the accelerated defining limits.

    gamma_0 = lim (sum_{k<=M} 1/k - log M); gamma_1 = lim (sum log k / k - log^2 M / 2).
    Leading Euler-Maclaurin corrections are subtracted before the order-8
    Richardson ladder, leaving a remainder that extrapolates cleanly.
    """
    if n not in (0, 1):
        raise ValueError("stieltjes supports n in {0, 1}")
    Ms = [256 * 2**j for j in range(9)]
    seq = []
    for M in Ms:
        k = np.arange(1, M + 1, dtype=float)
        lm = math.log(M)
        if n == 0:
            s = float(np.sum(1.0 / k)) - lm - 1.0 / (2 * M) + 1.0 / (12 * M**2)
        else:
            s = (
                float(np.sum(np.log(k) / k))
                - lm**2 / 2
                - lm / (2 * M)
                - (1.0 - lm) / (12 * M**2)
            )
        seq.append(s)
    return _richardson_limit(seq)

"""Shifted-moment pipeline in closed form: the Gamma-ratio weights, the
Kuznetsov-diagonal weight integral, the Ramanujan divisor-sum identity, the
assembled shifted term, the two-step limit path with Laurent extraction, the
threshold scan in T, and the leading-term predictors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .characters import DirichletCharacter, gauss_sum, level_data
from .errors import CancellationFailureError, PoleError
from .lfunctions import LaurentExpansion, dirichlet_l, laurent_at, log_derivative, principal_l, zeta
from .reporting import MomentReport, make_report
from .special import PrecisionBudget, _sinh_weighted_integral, gamma_factor_f

__all__ = [
    "ShiftState",
    "RecipeTerm",
    "gamma_ratio_weight",
    "kuznetsov_diagonal_weight",
    "brute_diagonal_sum",
    "ramanujan_ratio",
    "shifted_term",
    "evaluate_limit_path",
    "main_prediction",
    "partner_term_estimate",
    "threshold_scan",
    "gaussian_ratio_check",
    "case_label",
    "leading_case_coefficient_sum",
]

EIGHT_PI = 8 * math.pi


@dataclass(frozen=True)
class ShiftState:
    """Sign vector, complex shift vector, spectral displacement T, level, kind."""

    epsilon: tuple[int, int, int, int]
    alpha: tuple[complex, complex, complex, complex]
    T: float
    N: int
    chi_kind: str = "quadratic"  # or "complex"

    def __post_init__(self):
        if any(e not in (1, -1) for e in self.epsilon):
            raise ValueError("epsilon entries must be +-1")
        if self.chi_kind not in ("quadratic", "complex"):
            raise ValueError("chi_kind must be 'quadratic' or 'complex'")


@dataclass
class RecipeTerm:
    state: ShiftState
    value: complex
    case_label: int
    leading_coefficients: LaurentExpansion | None = None
    pole_residual: float = 0.0


def case_label(eps3: int, eps4: int, chi_kind: str, T: float) -> int:
    """1: off-diagonal complex; 2: off-diagonal quadratic T != 0;
    3: off-diagonal quadratic T = 0; 4: diagonal eps3 = eps4."""
    if eps3 == eps4:
        return 4
    if chi_kind == "complex":
        return 1
    return 3 if T == 0 else 2


def gamma_ratio_weight(state: ShiftState, t) -> complex:
    """The weight h(eps, alpha, t): product of functional-equation factors over
    the reflected signs, divided by the (pi^2/N)- and (pi^2/N^2)-power normalizer.

    The conductor proxies are Q = N for the untwisted pair (level-N newforms)
    and Q = N^2 for the twisted pair.
    """
    from .special import GammaFactorSpec

    eps, alpha, N = state.epsilon, state.alpha, state.N
    t_arr = np.asarray(t, dtype=float)
    out = np.ones_like(t_arr, dtype=complex)
    log_norm = 0j
    for j in range(4):
        Q = N if j < 2 else N * N
        if eps[j] == -1:
            out = out * gamma_factor_f(GammaFactorSpec(0.5 + complex(alpha[j]), t_arr, Q))
            log_norm += complex(alpha[j]) * math.log(math.pi**2 / Q)
    return out * np.exp(-log_norm)


@lru_cache(maxsize=4096)
def _F_cached(eps: tuple, alpha_key: tuple, T: float) -> complex:
    alpha = tuple(complex(re, im) for re, im in alpha_key)
    budget = PrecisionBudget(target_abs_err=1e-10)
    return _sinh_weighted_integral(T, budget, alpha=alpha, eps=eps) / math.pi**2


def kuznetsov_diagonal_weight(state: ShiftState, budget: PrecisionBudget | None = None) -> complex:
    """F(eps, alpha; T) = (1/pi^2) int t sinh(pi t) [Beta product] h(t) dt.

    Equals 8 pi whenever the Gamma-ratio weight collapses to 1 (in particular
    for eps3 = eps4 at the base shift point), and tends to 8 pi as T -> 0 in
    the off-diagonal configurations.
    """
    key = tuple((complex(a).real, complex(a).imag) for a in state.alpha)
    if budget is None:
        return _F_cached(state.epsilon, key, state.T)
    return _sinh_weighted_integral(state.T, budget, alpha=state.alpha, eps=state.epsilon) / math.pi**2


# -- diagonal divisor sums ----------------------------------------------------------


@lru_cache(maxsize=4)
def _divisor_sieve(X: int) -> tuple[np.ndarray, np.ndarray]:
    """(m_index, divisor) pairs for all d | m, m <= X, flattened."""
    counts = np.zeros(X + 1, dtype=np.int64)
    for d in range(1, X + 1):
        counts[d::d] += 1
    total = int(np.sum(counts))
    m_idx = np.empty(total, dtype=np.int64)
    div = np.empty(total, dtype=np.int64)
    pos = np.zeros(X + 2, dtype=np.int64)
    pos[1:] = np.cumsum(counts)[:]
    cursor = pos[:-1].copy()
    for d in range(1, X + 1):
        ms = np.arange(d, X + 1, d)
        idx = cursor[ms]
        m_idx[idx] = ms
        div[idx] = d
        cursor[ms] += 1
    return m_idx, div


def brute_diagonal_sum(state: ShiftState, chi: DirichletCharacter, X: int = 100_000
                       ) -> tuple[complex, float]:
    """sum over n1 n2 = n3 n4 <= X of chi^{e3}(n3) conj(chi)^{e4}(n4) / prod n_j^{1/2+e_j a_j}.

    Factorizes as sum_m A(m) B(m) with A, B divisor sums; returns the value and
    a conservative positive-term tail estimate.
    """
    eps, alpha = state.epsilon, state.alpha
    s = [0.5 + eps[j] * complex(alpha[j]) for j in range(4)]
    margins = [x.real - 0.5 for x in s]
    if min(margins) < 0.05:
        raise PoleError("shift exponents need real part >= 0.05 + 1/2 for the brute sum")
    if X < 1000:
        raise ValueError("X >= 10^3 required")
    m_idx, div = _divisor_sieve(X)
    co = div.astype(float)
    comp = (m_idx / div).astype(float)
    A = np.zeros(X + 1, dtype=complex)
    np.add.at(A, m_idx, co ** (-s[0]) * comp ** (-s[1]))
    chi3 = chi.power(state.epsilon[2])
    chi4 = chi.conj().power(state.epsilon[3])
    w3 = chi3.values[np.mod(div, chi.modulus)] if chi.modulus > 1 else np.ones_like(co)
    w4 = chi4.values[np.mod(m_idx // div, chi.modulus)] if chi.modulus > 1 else np.ones_like(co)
    B = np.zeros(X + 1, dtype=complex)
    np.add.at(B, m_idx, w3 * w4 * co ** (-s[2]) * comp ** (-s[3]))
    val = complex(np.sum(A * B))
    # tail: |A(m) B(m)| <= d(m)^2 m^{-1 - (min(a1,a2)+min(a3,a4))}; average
    # d(m)^2 ~ log^3 m / pi^2 with a x3 safety factor
    expo = min(margins[0], margins[1]) + min(margins[2], margins[3])
    u0 = expo * math.log(X)
    # int_X^inf log^3 t * t^{-1-expo} dt = Gamma(4, expo log X)/expo^4
    g4 = math.exp(-u0) * (u0**3 + 3 * u0**2 + 6 * u0 + 6)
    tail = 3.0 * g4 / (expo**4) / math.pi**2 / math.log(X) ** 0 if expo > 0 else math.inf
    return val, float(tail)


def ramanujan_ratio(state: ShiftState, chi: DirichletCharacter) -> complex:
    """Closed form of the diagonal sum: four shifted L-values over one at 2 + sum."""
    eps, alpha = state.epsilon, state.alpha
    a = [complex(x) for x in alpha]
    chi3 = chi.power(eps[2])
    chi4 = chi.conj().power(eps[3])
    prod_char = chi3 * chi4
    N = chi.modulus

    def L(sv: complex, c: DirichletCharacter) -> complex:
        if c.is_principal:
            if abs(sv - 1) < 1e-12:
                raise PoleError(f"principal L pole at argument {sv}")
            return principal_l(sv, c.modulus)
        return dirichlet_l(sv, c)

    num = (
        L(1 + eps[0] * a[0] + eps[2] * a[2], chi3)
        * L(1 + eps[1] * a[1] + eps[2] * a[2], chi3)
        * L(1 + eps[0] * a[0] + eps[3] * a[3], chi4)
        * L(1 + eps[1] * a[1] + eps[3] * a[3], chi4)
    )
    den = L(2 + sum(eps[j] * a[j] for j in range(4)), prod_char)
    return num / den


# -- the assembled shifted term ------------------------------------------------------


def _zeta_free_rest(state: ShiftState, chi: DirichletCharacter) -> complex:
    """The shifted term with the zeta(1 + e1 a1 + e2 a2) factor removed."""
    eps, alpha, T, N = state.epsilon, state.alpha, state.T, state.N
    a = [complex(x) for x in alpha]
    F = kuznetsov_diagonal_weight(state)
    L_at_edge = dirichlet_l(1 + 2j * T, chi)
    pref = F / (8 * N * abs(L_at_edge) ** 4)
    pref *= (gauss_sum(chi) / math.sqrt(N)) ** (eps[2] - eps[3])
    logpow = sum((1 - eps[j]) * a[j] for j in range(4)) * math.log(math.pi)
    logpow += (
        (eps[0] - 1) / 2 * a[0]
        + (eps[1] - 1) / 2 * a[1]
        + (eps[2] - 1) * a[2]
        + (eps[3] - 1) * a[3]
    ) * math.log(N)
    chi3 = chi.power(eps[2])
    chi4 = chi.conj().power(eps[3])
    mid_char = chi3 * chi4
    arg_mid = 1 + eps[2] * a[2] + eps[3] * a[3]
    if mid_char.is_principal:
        if abs(arg_mid - 1) < 1e-13:
            raise PoleError("middle principal L-factor sits on its pole")
        Lmid = principal_l(arg_mid, N)
    else:
        Lmid = dirichlet_l(arg_mid, mid_char)
    return pref * np.exp(logpow) * Lmid * ramanujan_ratio(state, chi)


def shifted_term(state: ShiftState, chi: DirichletCharacter) -> complex:
    """The closed-form shifted moment term S(eps, alpha) for the character chi."""
    eps, a = state.epsilon, state.alpha
    arg_z = 1 + eps[0] * complex(a[0]) + eps[1] * complex(a[1])
    if abs(arg_z - 1) < 1e-13:
        raise PoleError("zeta factor sits on its pole (degenerate alpha_1, alpha_2)")
    return zeta(arg_z) * _zeta_free_rest(state, chi)


# -- limit path -----------------------------------------------------------------------


def _sum_eps12(eps34: tuple[int, int], etap: float, eta: complex, T: float,
               chi: DirichletCharacter, kind: str) -> complex:
    N = chi.modulus
    tot = 0j
    for e1 in (1, -1):
        for e2 in (1, -1):
            st = ShiftState((e1, e2, eps34[0], eps34[1]),
                            (0.0, etap, 2j * T, -2j * T + eta), T, N, kind)
            tot += shifted_term(st, chi)
    return tot


def evaluate_limit_path(N: int, T: float, chi: DirichletCharacter,
                        eta: float = 1e-2, etap: float = 1e-3,
                        contour_nodes: int = 24, residual_tol: float = 1e-6,
                        ) -> dict[tuple[int, int], RecipeTerm]:
    """For each (eps3, eps4): extrapolate the eta'-limit (Richardson pair), check
    the eta'-pole cancellation, and Laurent-expand the result in eta.

    The pole-cancellation residual compares the two eps2-branches of the
    zeta-free rest at eta' = 0; a mismatch signals an implementation fault.
    """
    kind = "quadratic" if chi.is_real else "complex"
    out: dict[tuple[int, int], RecipeTerm] = {}
    for eps34 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        # pole-cancellation check at eta' = 0, reference eta
        rests = []
        for e2 in (1, -1):
            acc = 0j
            for e1 in (1, -1):
                st = ShiftState((e1, e2, eps34[0], eps34[1]),
                                (0.0, 0.0, 2j * T, -2j * T + eta), T, N, kind)
                acc += _zeta_free_rest(st, chi)
            rests.append(acc)
        scale = max(abs(rests[0]), 1e-30)
        residual = abs(rests[0] - rests[1]) / scale
        if residual > residual_tol:
            raise CancellationFailureError(
                f"eta'-pole residue mismatch {residual:.2e} at (e3,e4)={eps34}"
            )

        def R(e: complex, eps34=eps34) -> complex:
            v1 = _sum_eps12(eps34, etap, e, T, chi, kind)
            v2 = _sum_eps12(eps34, etap / 2, e, T, chi, kind)
            return 2 * v2 - v1  # Richardson in eta'

        label = case_label(eps34[0], eps34[1], kind, T)
        pole_order = 1 if label in (3, 4) else 0
        exp = laurent_at(R, 0.0, pole_order, pole_order + 3,
                         radius=eta, nodes=contour_nodes)
        st = ShiftState((1, 1, eps34[0], eps34[1]), (0.0, 0.0, 2j * T, -2j * T + eta),
                        T, N, kind)
        out[eps34] = RecipeTerm(st, R(eta), label, exp, residual)
    return out


def limit_path_total(terms: dict[tuple[int, int], RecipeTerm]) -> tuple[complex, complex]:
    """(sum of finite parts, sum of eta-pole coefficients) over the four sign pairs."""
    tot = sum(t.leading_coefficients.coefficient(0) for t in terms.values())
    pole = sum(
        t.leading_coefficients.coefficient(-1) if t.leading_coefficients.order_of_pole else 0j
        for t in terms.values()
    )
    return complex(tot), complex(pole)


# -- predictors and scans ------------------------------------------------------------


def main_prediction(N: int, T: float, chi_kind: str) -> float:
    """(24/pi) log^2 N / nu(N) * (1 + [quadratic and T = 0])."""
    if N < 2:
        raise ValueError("N >= 2 required")
    doubling = 2.0 if (chi_kind == "quadratic" and T == 0) else 1.0
    return 24 / math.pi * math.log(N) ** 2 / level_data(N).nu * doubling


def partner_term_estimate(N: int, T: float, psi: DirichletCharacter) -> tuple[float, float]:
    """Unconditional partner term: main (24/pi) log^2 N / nu plus an L-derivative band."""
    s = 1 + 2j * T
    l1 = log_derivative(s, psi, 1)
    l2 = log_derivative(s, psi, 2)
    nu = level_data(N).nu
    main = 24 / math.pi * math.log(N) ** 2 / nu
    band = (abs(l2) + math.log(N) * math.log(math.log(N)) * abs(l1)) / nu
    return main, band


def threshold_scan(N: int, T_schedule) -> list[dict]:
    """Rows of the threshold bracket sin(4 T log N)/(2T) against its two regimes.

    The T -> 0 limit is taken analytically (2 log N); the large-x envelope is
    1/(2|T|), visibly below 2 log N once 4 T log N >~ 10.
    """
    logN = math.log(N)
    rows = []
    for T in T_schedule:
        x = 4 * T * logN
        if T == 0:
            bracket = 2 * logN
        else:
            bracket = math.sin(x) / (2 * T)
        rows.append(
            {
                "T": T,
                "x": x,
                "bracket": bracket,
                "small_T_reference": 2 * logN,
                "envelope": math.inf if T == 0 else 1 / (2 * abs(T)),
                "regime": "small" if abs(x) < 1 else ("transition" if abs(x) < 10 else "large"),
            }
        )
    return rows


def auto_schedule(N: int) -> list[float]:
    """A T-schedule spanning the threshold T ~ 1/log N."""
    logN = math.log(N)
    return [0.0] + [c / logN for c in (0.05, 0.25, 1.0, 2.5, 4.0, 10.0, 25.0)]


def gaussian_ratio_check(N: int, T: float, chi_kind: str) -> MomentReport:
    """(main + partner) / (vol^{-1} (sqrt(2 log N))^4) against 2*(2+delta) = 6 or 4."""
    if N < 3:
        raise ValueError("N >= 3 required")
    from .geometry import volume

    main = main_prediction(N, T, chi_kind)
    partner = 24 / math.pi * math.log(N) ** 2 / level_data(N).nu
    # the normalizer (sqrt(2 log N))^4 = 4 log^2 N
    lhs = (main + partner) / ((1 / volume(N)) * 4 * math.log(N) ** 2)
    rhs = 6.0 if (chi_kind == "quadratic" and T == 0) else 4.0
    return make_report("gaussian-moment-ratio", lhs, rhs, 1e-12,
                       metadata={"N": N, "T": T, "kind": chi_kind})


def leading_case_coefficient_sum(N: int) -> float:
    """Formula-level sum of the leading Laurent coefficients over the eps4 = -1
    sign pairs (quadratic, T = 0): each contributes (24/(nu pi)) log^2 N."""
    nu = level_data(N).nu
    per_case = 24 / (nu * math.pi) * math.log(N) ** 2
    return 2 * per_case  # cases 3 and 4 each contribute one eps4 = -1 pair

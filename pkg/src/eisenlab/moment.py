"""Truncated-moment pipeline: cusp-zone integrals of the central-point
Eisenstein square, the K_0^2-tail Mellin pair, the Rankin-Selberg series, the
triple-pole residue, the shifted contour integral, the Cauchy cross term, and
the N-sweep trend report.

The residue and left-line integral are O(1) individually but cancel to the
exponentially small cusp-zone value (about 1e-11 at Y = 2), far beyond
binary64; the contour route therefore runs in mpmath working precision.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import k0 as _k0

from . import eisenstein, geometry
from .characters import DirichletCharacter, enumerate_characters, factorize, level_data
from .errors import PoleError, UnsupportedLevelError, ZeroOfLError
from .lfunctions import completed_lambda, dirichlet_l, laurent_at, log_derivative, zeta
from .reporting import MomentReport, make_report
from .special import PrecisionBudget, stieltjes

__all__ = [
    "PipelineContext",
    "k0_squared_tail",
    "mellin_G",
    "rankin_selberg_series",
    "integrand_H",
    "residue_at_zero",
    "kprime_itemized_ratio",
    "shifted_contour_integral",
    "cuspzone_integral",
    "cross_term",
    "truncation_gap_report",
]

MP_DPS = 30


@dataclass
class PipelineContext:
    """Prime level N with its real primitive even character, zone height Y,
    and the left-contour abscissa c."""

    N: int
    psi: DirichletCharacter
    Y: float
    c: float = 0.05

    def __post_init__(self):
        fac = factorize(self.N)
        if len(fac) != 1 or fac[0][1] != 1:
            raise UnsupportedLevelError("pipeline supports prime level")
        if not (self.psi.is_real and self.psi.primitive and self.psi.parity == 1):
            raise UnsupportedLevelError("pipeline needs a primitive even quadratic character")
        if not self.Y > 1:
            raise ValueError("zone height must satisfy Y > 1")
        if not 0 < self.c < 3:
            raise ValueError("contour abscissa must satisfy 0 < c < 3")
        self._model = None

    @property
    def model(self) -> eisenstein.EisensteinModel:
        if self._model is None:
            triv = enumerate_characters(1)[0]
            self._model = eisenstein.EisensteinModel(triv, self.psi, 0.5)
        return self._model

    @property
    def L1(self) -> float:
        return dirichlet_l(1.0, self.psi).real

    @property
    def Lambda1(self) -> float:
        return completed_lambda(1.0, self.psi).real


# -- g and its Mellin transform ---------------------------------------------------


def k0_squared_tail(x: float, budget: PrecisionBudget | None = None) -> float:
    """g(x) = int_x^infty K_0(y)^2 dy, with g(0) = pi^2/4."""
    if x < 0:
        raise ValueError("x >= 0 required")
    from numpy.polynomial.legendre import leggauss

    xs, ws = leggauss(48)
    total = 0.0
    # near the origin K_0 has a log singularity; take it on a log-mapped panel
    if x < 1.0:
        lo = max(x, 1e-300)
        if x == 0.0:
            # map y = e^u on (-inf, 0]: int_0^1 K0^2 dy = int_{-inf}^0 K0(e^u)^2 e^u du
            u_lo = -46.0  # e^{-46} ~ 1e-20; K0^2 e^u ~ u^2 e^u negligible below
            u = 0.5 * (0.0 - u_lo) * (xs + 1) + u_lo
            w = 0.5 * (0.0 - u_lo) * ws
            y = np.exp(u)
            total += float(np.sum(_k0(y) ** 2 * y * w))
        else:
            u_lo, u_hi = math.log(lo), 0.0
            u = 0.5 * (u_hi - u_lo) * (xs + 1) + u_lo
            w = 0.5 * (u_hi - u_lo) * ws
            y = np.exp(u)
            total += float(np.sum(_k0(y) ** 2 * y * w))
        start = 1.0
    else:
        start = x
    # exponential panels out to the underflow point of K_0^2
    edges = [start]
    while edges[-1] < start + 360.0:
        edges.append(edges[-1] + max(2.0, 0.15 * edges[-1]))
    for lo, hi in zip(edges[:-1], edges[1:]):
        y = 0.5 * (hi - lo) * (xs + 1) + lo
        w = 0.5 * (hi - lo) * ws
        total += float(np.sum(_k0(y) ** 2 * w))
    return total


def mellin_G(s: complex) -> complex:
    """G(s) = 2^{s-2} Gamma^4((1+s)/2) / (s Gamma(1+s)); G(1) = 1/2, s G(s) -> pi^2/4."""
    s = complex(s)
    if abs(s) < 1e-12:
        raise PoleError("mellin_G: simple pole at s = 0")
    if s.real <= 0:
        raise ValueError("mellin_G requires Re s > 0")
    from .special import log_gamma

    lg = 4 * log_gamma((1 + s) / 2) - log_gamma(1 + s)
    return 2.0 ** (s - 2) * np.exp(lg) / s


# -- coefficients and the Rankin-Selberg series --------------------------------------


@lru_cache(maxsize=16)
def _lambda_table(q: int, X: int) -> np.ndarray:
    """lambda(n) = sum_{d | n} psi(d) for the quadratic character mod q, n <= X."""
    from .characters import quadratic_character

    psi = quadratic_character(q) if q > 1 else enumerate_characters(1)[0]
    vals = psi.values.real if q > 1 else np.ones(1)
    lam = np.zeros(X + 1)
    for d in range(1, X + 1):
        w = vals[d % q] if q > 1 else 1.0
        if w:
            lam[d::d] += w
    return lam


def rankin_selberg_series(s: complex, psi: DirichletCharacter, X: int = 100_000
                          ) -> tuple[complex, complex, float]:
    """(brute, closed, tail_bound) for sum_n lambda^2(n) / n^{1+s}.

    brute truncates at X; closed is zeta^2(1+s) L^2(1+s, psi) / zeta(2+2s)
    times prod_{p | N}(1 + p^{-1-s})^{-1}.
    """
    s = complex(s)
    if s.real < 0.2:
        raise ValueError("brute sum needs Re s >= 0.2")
    if abs(s) < 1e-12:
        raise PoleError("closed form has a pole at s = 0")
    q = psi.modulus
    lam = _lambda_table(q, X)
    n = np.arange(1, X + 1, dtype=float)
    brute = complex(np.sum(lam[1:] ** 2 * n ** (-(1 + s))))
    closed = zeta(1 + s) ** 2 * (dirichlet_l(1 + s, psi) if q > 1 else zeta(1 + s)) ** 2
    if q > 1:
        closed = zeta(1 + s) ** 2 * dirichlet_l(1 + s, psi) ** 2
    closed /= zeta(2 + 2 * s)
    for p, _ in factorize(q):
        closed /= 1 + p ** (-(1 + s))
    # tail: d(n)^2 average ~ log^3 n / pi^2, x3 safety
    u0 = s.real * math.log(X)
    g4 = math.exp(-u0) * (u0**3 + 3 * u0**2 + 6 * u0 + 6)
    tail = 3.0 * g4 / (s.real**4) / math.pi**2
    return brute, closed, float(tail)


# -- the contour integrand -----------------------------------------------------------


def integrand_H(s: complex, ctx: PipelineContext) -> complex:
    """Gamma^4((1+s)/2)/(s Gamma(1+s)) (pi Y)^{-s} zeta^2 L^2 / zeta(2+2s) / (1+N^{-1-s})."""
    s = complex(s)
    if abs(s) < 1e-12:
        raise PoleError("integrand has a triple pole at s = 0")
    from .special import log_gamma

    lg = 4 * log_gamma((1 + s) / 2) - log_gamma(1 + s)
    val = np.exp(lg) / s * (math.pi * ctx.Y) ** (-s)
    val *= zeta(1 + s) ** 2 * dirichlet_l(1 + s, ctx.psi) ** 2 / zeta(2 + 2 * s)
    val /= 1 + ctx.N ** (-(1 + s))
    return complex(val)


def _K_display(s: complex, ctx: PipelineContext) -> complex:
    """K(s) = Gamma^4((1+s)/2)/Gamma(1+s) (pi Y)^{-s} L^2(1+s,psi)/zeta(2+2s)/(1+N^{-1-s})."""
    s = complex(s)
    from .special import log_gamma

    lg = 4 * log_gamma((1 + s) / 2) - log_gamma(1 + s)
    val = np.exp(lg) * (math.pi * ctx.Y) ** (-s)
    val *= dirichlet_l(1 + s, ctx.psi) ** 2 / zeta(2 + 2 * s)
    val /= 1 + ctx.N ** (-(1 + s))
    return complex(val)


def residue_at_zero(ctx: PipelineContext, prec: str = "float") -> complex:
    """Res_{s=0} H from the display factor K: (gamma_0^2 + 2 c1) K(0) + 2 gamma_0 K'(0) + K''(0)/2.

    Here c1 = -stieltjes(1) is the linear zeta(1+s) coefficient. K derivatives
    come from contour differentiation of the K display (exact, no dropped O(1)).
    """
    if abs(dirichlet_l(1.0, ctx.psi)) < 1e-10:
        raise ZeroOfLError("L(1, psi) vanishes")
    g0 = stieltjes(0)
    c1 = -stieltjes(1)
    if prec == "float":
        from .lfunctions import _cauchy_derivatives

        K0, K1, K2 = _cauchy_derivatives(lambda w: _K_display(w, ctx), 0.0, 2, 0.4)
        return (g0**2 + 2 * c1) * K0 + 2 * g0 * K1 + K2 / 2
    return complex(_mp_residue(ctx))


def kprime_itemized_ratio(ctx: PipelineContext) -> tuple[float, float]:
    """(contour K'(0)/K(0), itemized form with its O(1) constant computed)."""
    from .lfunctions import _cauchy_derivatives

    K0, K1 = _cauchy_derivatives(lambda w: _K_display(w, ctx), 0.0, 1, 0.4)
    g0 = stieltjes(0)
    zp2 = _zeta_prime_over_zeta_2()
    const = -g0 - 4 * math.log(2) - math.log(math.pi) - 2 * zp2
    item = (
        -math.log(ctx.Y)
        + 2 * log_derivative(1.0, ctx.psi, 1).real
        + sum(p ** (-1.0) * math.log(p) / (1 + 1 / p) for p, _ in factorize(ctx.N))
        + const
    )
    return (K1 / K0).real, item


@lru_cache(maxsize=1)
def _zeta_prime_over_zeta_2() -> float:
    from .lfunctions import _cauchy_derivatives

    z0, z1 = _cauchy_derivatives(lambda w: zeta(w), 2.0, 1, 0.25)
    return (z1 / z0).real


# -- mpmath twins -------------------------------------------------------------------


def _mp_setup(ctx: PipelineContext):
    import mpmath as mp

    q = ctx.psi.modulus
    vals = [int(round(ctx.psi(a).real)) for a in range(q)]

    def L(s):
        s = mp.mpmathify(s)
        if abs(s - 1) < mp.mpf(10) ** (-20):
            return -sum(vals[a % q] * mp.digamma(mp.mpf(a) / q) for a in range(1, q) if vals[a % q]) / q
        return q ** (-s) * sum(vals[a % q] * mp.zeta(s, mp.mpf(a) / q) for a in range(1, q) if vals[a % q])

    def H(s):
        s = mp.mpmathify(s)
        return (
            mp.gamma((1 + s) / 2) ** 4
            / (s * mp.gamma(1 + s))
            * (mp.pi * ctx.Y) ** (-s)
            * mp.zeta(1 + s) ** 2
            * L(1 + s) ** 2
            / mp.zeta(2 + 2 * s)
            / (1 + mp.mpf(ctx.N) ** (-(1 + s)))
        )

    return mp, L, H


def _mp_residue(ctx: PipelineContext, nodes: int = 96, radius: float = 0.35):
    # nearest off-center singularity is the Gamma pole at s = -1, so the
    # trapezoid aliasing error is ~ radius^nodes; 96 nodes leave it ~ 1e-42
    import mpmath as mp

    with mp.workdps(MP_DPS):
        _, _, H = _mp_setup(ctx)
        acc = mp.mpc(0)
        r = mp.mpf(radius)
        for k in range(nodes):
            th = 2 * mp.pi * k / nodes
            sk = r * mp.exp(1j * th)
            acc += H(sk) * sk
        return acc / nodes


def _mp_line(ctx: PipelineContext, t_cut: float = 36.0):
    """The left-line integral as an mp number (do not round before combining
    with the residue: the two are O(1) and cancel to ~1e-11)."""
    c = ctx.c
    # pole-free verification of the segment (zeta/L zeros would blow up here)
    for t in (0.3, 1.0, 3.0, 9.0):
        v = integrand_H(complex(-c, t), ctx)
        if not np.isfinite(v.real) or abs(v) > 1e12:
            raise PoleError(f"H blows up on the segment at t = {t}")
    import mpmath as mp

    with mp.workdps(MP_DPS):
        _, _, H = _mp_setup(ctx)
        f = lambda t: H(mp.mpc(-c, t))
        # the integrand peaks on the scale of c near t = 0; panel it explicitly
        panels = [0, c / 2, c, 2 * c, 5 * c, 0.3, 1, 3, 8, 20, t_cut]
        val = mp.quad(f, panels, method="gauss-legendre", maxdegree=6)
        return (2 * val.real) / (2 * mp.pi)


def shifted_contour_integral(ctx: PipelineContext, t_cut: float = 36.0,
                             prec: str = "mp") -> complex:
    """(1/2 pi i) int_{Re s = -c} H(s) ds, computed in mpmath working precision.

    The integrand decays like e^{-pi |t|} (fourth Gamma power); conjugate
    symmetry folds the line onto t >= 0.
    """
    if prec != "mp":
        raise ValueError("the left-line integral requires the mp backend")
    return complex(_mp_line(ctx, t_cut))


# -- the cusp-zone integral, three routes ---------------------------------------------


def _strip_integral_quadrature(ctx: PipelineContext, n_modes: int | None = None,
                               ny: int = 60, nx: int = 96) -> float:
    """int_Y^inf int_0^1 y |E*tail|^2 dmu by tensor quadrature through evaluate()."""
    from numpy.polynomial.legendre import leggauss

    Y = ctx.Y
    model = ctx.model
    if n_modes is None:
        n_modes = max(4, int(math.ceil(40.0 / (2 * math.pi * Y))) + 2)
    xs, ws = leggauss(ny)
    V = 40.0 / (4 * math.pi)  # e^{-4 pi V} ~ 4e-18 relative
    v = 0.5 * V * (xs + 1)
    wv = 0.5 * V * ws
    x = (np.arange(nx) + 0.5) / nx
    total = 0.0
    for vi, wi in zip(v, wv):
        y = Y + vi
        row = eisenstein.evaluate(model, x + 1j * y, include_constant=False, n_max=n_modes)
        total += wi * float(np.mean(np.abs(row) ** 2)) / y
    return total


def _strip_integral_coefficients(ctx: PipelineContext) -> float:
    """Same integral as 8/(2 pi) sum_n lambda^2(n)/n g(2 pi n Y)."""
    Y = ctx.Y
    n_cut = max(3, int(math.ceil(70.0 / (4 * math.pi * Y))) + 2)
    lam = _lambda_table(ctx.N, n_cut)
    tot = 0.0
    for n in range(1, n_cut + 1):
        if lam[n]:
            tot += lam[n] ** 2 / n * k0_squared_tail(2 * math.pi * n * Y)
    return 8 / (2 * math.pi) * tot


def cuspzone_integral(ctx: PipelineContext, route: str = "coefficient_sum") -> complex:
    """The height-Y cusp-zone integral of the central-point square:
    12/Lambda^2(1,psi) int_Y^inf int_0^1 y |E*_{1,psi}|^2-truncated dmu.

    route = quadrature | coefficient_sum | contour; the three agree (the
    central consistency check of the pipeline).
    """
    pref = 12.0 / ctx.Lambda1**2
    if route == "quadrature":
        return pref * _strip_integral_quadrature(ctx)
    if route == "coefficient_sum":
        return pref * _strip_integral_coefficients(ctx)
    if route == "contour":
        # the residue/line cancellation must happen at working precision
        total_mp = _mp_residue(ctx) + _mp_line(ctx)
        return 12.0 / (ctx.N * math.pi * ctx.L1**2) * complex(total_mp)
    raise ValueError(f"unknown route {route!r}")


def cuspzone_routes(ctx: PipelineContext) -> dict[str, complex]:
    return {r: cuspzone_integral(ctx, r) for r in ("quadrature", "coefficient_sum", "contour")}


# -- Cauchy cross term ---------------------------------------------------------------


def cross_term(ctx: PipelineContext, grid: geometry.QuadratureGrid | None = None) -> MomentReport:
    """Both sides of |int (E^Y)^3 e dmu| <= sqrt(int (E^Y)^2 e^2) sqrt(int (E^Y)^4).

    Zone integrals run in the central-point normalization (e-slash is
    Lambda(1,psi) sqrt(y)); the quartic integral runs over the assembled
    fundamental domain through the routed evaluator. The inequality is
    normalization-free, so the report also carries the ratio.
    """
    from numpy.polynomial.legendre import leggauss

    model = ctx.model
    N, Y = ctx.N, ctx.Y
    lam1 = ctx.Lambda1
    n_modes = max(4, int(math.ceil(40.0 / (2 * math.pi * Y))) + 2)
    xs, ws = leggauss(48)
    V = 40.0 / (4 * math.pi)
    v = 0.5 * V * (xs + 1)
    wv = 0.5 * V * ws
    x = (np.arange(96) + 0.5) / 96
    quad_sq = 0.0
    cube = 0.0
    for vi, wi in zip(v, wv):
        y = Y + vi
        row = eisenstein.evaluate(model, x + 1j * y, include_constant=False, n_max=n_modes)
        if np.max(np.abs(row.imag)) > 1e-8 * max(np.max(np.abs(row)), 1e-30):
            raise PoleError("real-valuedness check failed for the truncated series")
        rr = row.real
        quad_sq += wi * float(np.mean(rr**2)) * lam1**2 * y / y**2
        cube += wi * float(np.mean(rr**3)) * lam1 * math.sqrt(y) / y**2
    # both Atkin-Lehner zones contribute identically
    lhs = abs(2 * cube)
    A = 2 * quad_sq
    grid = grid or geometry.build_grid(14, 18)
    def f4(zarr):
        out = np.empty(zarr.shape, dtype=float)
        for i, z in enumerate(zarr):
            out[i] = eisenstein.truncated_value(model, complex(z), Y).real ** 4
        return out
    B = geometry.integrate(f4, N, grid).real
    rhs = math.sqrt(A) * math.sqrt(B)
    rep = make_report(
        "cauchy-cross-term", lhs, rhs, tolerance=0.0, policy="abs_or_rel",
        metadata={"N": N, "Y": Y, "A": A, "B": B, "ratio": lhs / rhs if rhs else math.inf},
    )
    rep.passed = lhs <= rhs * (1 + 1e-12)
    return rep


# -- trend report ---------------------------------------------------------------------


def truncation_gap_report(N_list: list[int], Y: float) -> dict:
    """Assemble the computable cusp-zone pieces over an N-sweep, normalized by
    log^2 N / nu(N); fit the N-independent offset by least squares and report
    the monotone-decay check of the normalized zone piece."""
    from .characters import quadratic_character

    rows = []
    for N in N_list:
        psi = quadratic_character(N)
        ctx = PipelineContext(N, psi, Y)
        t0 = time.time()
        cleaned = cuspzone_integral(ctx, "coefficient_sum").real
        cross = cross_term(ctx)
        norm = math.log(N) ** 2 / level_data(N).nu
        rows.append(
            {
                "N": N,
                "Y": Y,
                "cleaned": cleaned,
                "cleaned_normalized": cleaned / norm,
                "cross_lhs": cross.lhs.real,
                "cross_rhs": cross.rhs.real,
                "cross_pass": cross.passed,
                "runtime_ms": 1000 * (time.time() - t0),
            }
        )
    xs = np.array([math.log(r["N"]) ** 2 / level_data(r["N"]).nu for r in rows])
    ys = np.array([r["cleaned"] for r in rows])
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, res, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    stderr = float(np.sqrt(np.mean(resid**2)))
    seq = [r["cleaned_normalized"] for r in rows]
    monotone = all(seq[i] > seq[i + 1] for i in range(len(seq) - 1))
    return {
        "rows": rows,
        "offset_fit": float(coef[1]),
        "slope_fit": float(coef[0]),
        "fit_stderr": stderr,
        "offset_stable": bool(np.all(np.abs(resid) <= 4 * stderr + 1e-30)),
        "monotone_decay": monotone,
    }

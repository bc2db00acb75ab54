"""Landau-level basis, projection kernels and Toeplitz spectra.

Basis convention (symmetric gauge, field along x3): the eigenfunction of
level ``j`` with angular momentum ``ell >= -j`` is

    psi(rho, theta) = R(rho) * exp(i ell theta) / sqrt(2 pi),
    R(rho) = sqrt(b n! / (n+|ell|)!) t^(|ell|/2) L_n^{|ell|}(t) exp(-t/2),

with ``t = b rho^2 / 2`` and radial index ``n = j - max(0, -ell)``, so that
``int_0^inf R^2 rho drho = 1``.  Radial overlaps are therefore plain
``int R_j U R_j' rho drho`` with no extra 2 pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import eval_genlaguerre, eval_laguerre, gammaln

from .model import CompactStep, Gaussian, PotentialProfile, PowerLaw, RadialProfile


def radial_index(j: int, ell: int) -> int:
    return j - max(0, -ell)


def participates(j: int, ell: int) -> bool:
    return j >= max(0, -ell)


def _radial_t(j: int, ell: int, b: float, t):
    """R_{j,ell} expressed in t = b rho^2 / 2 (vectorised in t)."""
    m = abs(ell)
    n = radial_index(j, ell)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        logt = np.log(t)
    log_env = 0.5 * (math.log(b) + gammaln(n + 1) - gammaln(n + m + 1)) - 0.5 * t
    if m:
        log_env = log_env + 0.5 * m * logt
    return np.exp(log_env) * eval_genlaguerre(n, m, t)


def landau_eigenfunction(q: int, ell: int, b: float, rho):
    """Radial factor of the level-``q`` eigenfunction in sector ``ell``."""
    if q < 0:
        raise ValueError("level must be nonnegative")
    if ell < -q:
        raise ValueError(f"sector ell={ell} does not meet level q={q} (need ell >= -q)")
    rho = np.asarray(rho, dtype=float)
    return _radial_t(q, ell, b, 0.5 * b * rho * rho)


def projection_kernel(q: int, b: float, X, Xp):
    """Integral kernel of the projection onto the q-th Landau level."""
    X = np.asarray(X, dtype=float)
    Xp = np.asarray(Xp, dtype=float)
    d2 = np.sum((X - Xp) ** 2, axis=-1)
    cross = X[..., 0] * Xp[..., 1] - Xp[..., 0] * X[..., 1]
    return (b / (2 * math.pi)) * eval_laguerre(q, 0.5 * b * d2) * np.exp(-0.25 * b * (d2 + 2j * cross))


def reconstruct_kernel(q: int, b: float, X, Xp, ell_max: int = 80):
    """Partial sum over sectors of the basis dyad psi(X) conj(psi(X'))."""
    X = np.asarray(X, dtype=float)
    Xp = np.asarray(Xp, dtype=float)
    r, th = np.hypot(X[..., 0], X[..., 1]), np.arctan2(X[..., 1], X[..., 0])
    rp, thp = np.hypot(Xp[..., 0], Xp[..., 1]), np.arctan2(Xp[..., 1], Xp[..., 0])
    total = np.zeros(np.broadcast(r, rp).shape, dtype=complex)
    for ell in range(-q, ell_max + 1):
        total = total + (landau_eigenfunction(q, ell, b, r) * landau_eigenfunction(q, ell, b, rp)
                         * np.exp(1j * ell * (th - thp)))
    return total / (2 * math.pi)


# ------------------------------------------------------------------ overlaps


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


def _gl(n: int):
    return _gl_cached(n)


@lru_cache(maxsize=32)
def _gl_cached(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _pieces(radial: RadialProfile, b: float, t_hi: float, breaks=()):
    """Subintervals in t split at every discontinuity radius below t_hi."""
    radii = [r for r in (radial.jump_radius(), *breaks) if r is not None]
    cuts = sorted({0.5 * b * r * r for r in radii if 0 < 0.5 * b * r * r < t_hi})
    edges = [0.0, *cuts, t_hi]
    return list(zip(edges[:-1], edges[1:]))


def _t_upper(ell: int, levels: Sequence[int]) -> float:
    deg = abs(ell) + 2 * max(radial_index(j, ell) for j in levels)
    return deg + 45.0 + 12.0 * math.sqrt(deg + 1.0)


def overlap_matrix(levels: Sequence[int], ell: int, radial: RadialProfile, b: float,
                   weight=None, tol: float = 1e-12, n_start: int = 64, n_max: int = 4096,
                   breaks=()):
    """Matrix of int R_j U R_j' rho drho over ``levels`` in sector ``ell``.

    ``weight`` optionally multiplies U (used for sign-changing profiles);
    ``breaks`` lists radii where it jumps.
    Gauss-Legendre in sqrt(t) on the truncated half-line with node doubling until
    successive estimates agree to ``tol`` (relative to sup U).
    """
    levels = tuple(levels)
    for j in levels:
        if not participates(j, ell):
            raise ValueError(f"level {j} does not participate in sector {ell}")
    t_hi = _t_upper(ell, levels)
    pieces = _pieces(radial, b, t_hi, breaks)
    scale = radial.sup()

    def estimate(n):
        out = np.zeros((len(levels), len(levels)))
        for lo, hi in pieces:
            # nodes in u = sqrt(t): rho is linear in u, so profiles like
            # exp(-mu rho) stay smooth at the origin
            x, w = _gl(n)
            u0, u1 = math.sqrt(lo), math.sqrt(hi)
            u = 0.5 * (u1 - u0) * x + 0.5 * (u1 + u0)
            t = u * u
            wt = (u1 - u0) * w * u
            rho = np.sqrt(2.0 * t / b)
            u = radial(rho)
            if weight is not None:
                u = u * weight(rho)
            R = np.array([_radial_t(j, ell, b, t) for j in levels])
            out += (R * (wt * u / b)) @ R.T
        return out

    n = n_start
    prev = estimate(n)
    while True:
        n *= 2
        cur = estimate(n)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol * scale:
            return 0.5 * (cur + cur.T)
        if n >= n_max:
            raise QuadratureError("radial overlap did not stabilise", err)
        prev = cur


def toeplitz_overlap(j: int, jp: int, ell: int, radial: RadialProfile, b: float = 1.0) -> float:
    if j == jp:
        return float(overlap_matrix((j,), ell, radial, b)[0, 0])
    return float(overlap_matrix((j, jp), ell, radial, b)[0, 1])


def gaussian_overlap_closed_form(ell: int, mu: float, b: float) -> float:
    """Lowest-level diagonal overlap for U = exp(-mu rho^2)."""
    return (b / (b + 2.0 * mu)) ** (ell + 1)


# ------------------------------------------------------------------- spectra


@dataclass(frozen=True)
class ToeplitzSpectrum:
    q: int
    pairs: tuple  # ((ell, lam), ...) sorted by decreasing lam
    profile_hash: str
    floor_reached: bool = True

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([lam for _, lam in self.pairs])

    def scaled(self, factor: float) -> "ToeplitzSpectrum":
        return ToeplitzSpectrum(self.q, tuple((l, factor * v) for l, v in self.pairs),
                                self.profile_hash, self.floor_reached)


@lru_cache(maxsize=256)
def _diag_overlap(q, ell, radial, b):
    return float(overlap_matrix((q,), ell, radial, b)[0, 0])


def toeplitz_spectrum(q: int, radial: RadialProfile, b: float = 1.0, L_max: int = 48,
                      floor: float = 1e-14) -> ToeplitzSpectrum:
    """Eigenvalues of the compressed multiplier U on level q, one per sector.

    Stops once an eigenvalue falls below ``floor`` times the running maximum
    (for ell >= 0) or at ``ell = L_max``.
    """
    pairs = []
    lam_max = 0.0
    reached = False
    for ell in range(-q, L_max + 1):
        lam = _diag_overlap(q, ell, radial, b)
        lam_max = max(lam_max, lam)
        pairs.append((ell, lam))
        if ell >= 0 and floor > 0 and lam < floor * lam_max:
            reached = True
            break
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return ToeplitzSpectrum(q, tuple(pairs), repr(radial), reached or floor <= 0)


def weight_spectrum(cfg, L_max: int | None = None, floor: float = 1e-14) -> ToeplitzSpectrum:
    """Spectrum of the compressed transverse weight W = eps * U * int g."""
    pot: PotentialProfile = cfg.potential
    base = toeplitz_spectrum(cfg.q, pot.radial, cfg.b,
                             cfg.truncation.L_max if L_max is None else L_max, floor)
    return base.scaled(pot.coupling * pot.axis_mass())


# ---------------------------------------------------------- counting functions


@dataclass
class CountingReport:
    s: np.ndarray
    n_plus: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    ntilde1: np.ndarray
    ntilde2: np.ndarray
    law_predicted: np.ndarray | None = None
    fit: dict = field(default_factory=dict)

    def rows(self):
        law = self.law_predicted if self.law_predicted is not None else np.full_like(self.s, np.nan)
        return list(zip(self.s, self.n_plus, self.sigma1, self.sigma2, self.ntilde1, self.ntilde2, law))


def n_plus(eigs, s):
    eigs = np.asarray(eigs, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return (eigs[None, :] > s[:, None]).sum(axis=1)


def counting_functions(eigs, s_grid, law=None) -> CountingReport:
    """n_+, sigma_p and ntilde_p (p = 1, 2) of a nonnegative spectrum."""
    eigs = np.asarray(eigs, dtype=float).ravel()
    s = np.asarray(s_grid, dtype=float).ravel()
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    x = eigs[None, :] / s[:, None]
    below = eigs[None, :] <= s[:, None]
    damp = 1.0 / np.sqrt(1.0 + x * x)
    rep = CountingReport(
        s=s,
        n_plus=(~below).sum(axis=1),
        sigma1=(x * damp).sum(axis=1),
        sigma2=(x * x * damp * damp).sum(axis=1),
        ntilde1=np.where(below, x, 0.0).sum(axis=1),
        ntilde2=np.where(below, x * x, 0.0).sum(axis=1),
    )
    for p, sig, nt in ((1, rep.sigma1, rep.ntilde1), (2, rep.sigma2, rep.ntilde2)):
        lo = 2.0 ** (-p / 2) * nt
        hi = nt + rep.n_plus
        if np.any(lo > sig * (1 + 1e-12) + 1e-300) or np.any(sig > hi * (1 + 1e-12) + 1e-300):
            raise AssertionError(f"counting sandwich violated for p={p}")
    if law is not None:
        rep.law_predicted = np.array([law(v) for v in s])
    return rep


# ------------------------------------------------------------- asymptotic laws


def asymptotic_law(radial: RadialProfile, s: float, b: float = 1.0) -> float:
    """Leading small-s behaviour of n_+(s) for the compressed multiplier U."""
    if s <= 0:
        raise ValueError("s must be positive")
    if isinstance(radial, PowerLaw):
        a = radial.alpha
        return 0.5 * b * radial.u0 ** (2.0 / a) * s ** (-2.0 / a)
    if s >= math.exp(-1.0):
        raise ValueError("logarithmic laws need s < 1/e")
    L = abs(math.log(s))
    if isinstance(radial, Gaussian):
        beta, mu = radial.beta, radial.mu
        if beta < 1:
            return 0.5 * b * mu ** (-1.0 / beta) * L ** (1.0 / beta)
        if beta == 1:
            return L / math.log(1.0 + 2.0 * mu / b)
        return beta / (beta - 1.0) * L / math.log(L)
    if isinstance(radial, CompactStep):
        return L / math.log(L)
    raise TypeError(f"no law for {type(radial).__name__}")


def law_family(radial: RadialProfile) -> str:
    if isinstance(radial, PowerLaw):
        return "power"
    if isinstance(radial, Gaussian):
        if radial.beta < 1:
            return "loglog"
        return "log" if radial.beta == 1 else "compact"
    return "compact"


@dataclass(frozen=True)
class FitResult:
    slope: float
    prefactor: float
    residual: float
    family: str


def fit_counting_exponent(s, n, family: str = "power") -> FitResult:
    """Least-squares fit of n_+(s) against the family's natural variables.

    power:   ln n = slope * ln s + ln prefactor
    log:     n = prefactor * |ln s| + c          (slope reported = prefactor)
    loglog:  ln n = slope * ln|ln s| + ln prefactor
    compact: n = prefactor * |ln s|/ln|ln s| + c
    """
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    if s.size < 8:
        raise ValueError("need at least 8 samples")
    if np.log10(s.max() / s.min()) < 2.0 - 1e-9:
        raise ValueError("samples must span at least two decades of s")
    if family in ("power", "loglog"):
        keep = n > 0
        if keep.sum() < 2:
            raise ValueError("too few nonzero counts")
        xs = np.log(s[keep]) if family == "power" else np.log(np.abs(np.log(s[keep])))
        A = np.vstack([xs, np.ones_like(xs)]).T
        coef, *_ = np.linalg.lstsq(A, np.log(n[keep]), rcond=None)
        res = np.log(n[keep]) - A @ coef
        return FitResult(float(coef[0]), float(np.exp(coef[1])), float(np.sqrt(np.mean(res**2))), family)
    L = np.abs(np.log(s))
    if family == "log":
        xs = L
    elif family == "compact":
        xs = L / np.log(L)
    else:
        raise ValueError(f"unknown family {family!r}")
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, n, rcond=None)
    res = n - A @ coef
    return FitResult(float(coef[0]), float(coef[0]), float(np.sqrt(np.mean(res**2))), family)

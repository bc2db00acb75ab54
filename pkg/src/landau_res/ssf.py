"""Spectral shift function on the real axis and its resonance decomposition.

xi2 is (1/pi) times the continuous argument of det2(I + T(lam + i0)), reached
from an anchor far below the spectrum through the upper half plane.  Since
det(I + T) = det2(I + T) exp(tr T), the full shift is

    xi = xi2 + (1/pi) Im tr T(lam + i0),

and its derivative picks up (1/pi) Im tr dT/dz as the correction density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .landau import counting_functions, weight_spectrum
from .model import CompactStep, Config, Gaussian, PowerLaw
from .operator import _dense_matrix, get_model, log_det2_levels, trace_T, trace_dz_T
from .axis import THRESHOLD_GUARD, ThresholdError, physical_wavenumbers, resolvent_matrix
from .resonances import ContourError, arg_increment, line

ANCHOR_NORM = 0.5


class UnwrapError(RuntimeError):
    def __init__(self, message: str, interval):
        super().__init__(message)
        self.interval = interval


class UnlocatedResonance(RuntimeError):
    """Residual spike with a resonance shape: search a larger region."""


# ------------------------------------------------------------------ anchor


def operator_norm_below(lam: float, cfg: Config) -> float:
    """Largest |eigenvalue| of T(lam) for real lam below the spectrum.

    There T is self-adjoint, so this is its norm; the sectors are scanned
    until their contribution drops below 1e-3 of the running maximum.
    """
    if lam >= 0:
        raise ValueError("lam must be negative")
    if cfg.eps == 0:
        return 0.0
    m = get_model(cfg)
    kjs = physical_wavenumbers(m.levels, lam, cfg.b)
    Gs = np.array([resolvent_matrix(kj, m.grid) for kj in kjs])
    best, quiet = 0.0, 0
    for ell in range(-(len(m.levels) - 1), cfg.truncation.L_max + 1):
        j0 = m.first_level(ell)
        M = _dense_matrix(m.signed_overlaps(ell), Gs[j0:])
        val = float(np.max(np.abs(np.linalg.eigvals(M))))
        best = max(best, val)
        if ell >= 0:
            quiet = quiet + 1 if val < 1e-3 * best else 0
            if quiet >= 2:
                break
    return best


def choose_anchor(cfg: Config, start: float | None = None) -> tuple[float, float]:
    lam = -2.0 * cfg.b if start is None else float(start)
    for _ in range(60):
        nrm = operator_norm_below(lam, cfg)
        if nrm < ANCHOR_NORM:
            return lam, nrm
        lam *= 2.0
    raise RuntimeError("no anchor with |T| < 0.5 found")


# ------------------------------------------------------------ arg tracking


class _PhysicalLog:
    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.levels = get_model(cfg).levels
        self.store = {}

    def __call__(self, z) -> complex:
        z = complex(z)
        v = self.store.get(z)
        if v is None:
            kjs = physical_wavenumbers(self.levels, z, self.cfg.b)
            v = complex(log_det2_levels(kjs, self.cfg, strict=False).log)
            self.store[z] = v
        return v


def _step(lf, a: float, b: float, max_darg: float) -> float:
    """Arg increment of det2 between two real points, boundary values from above.

    A zero on the real segment (embedded eigenvalue) is passed through a
    small detour into the upper half plane, which is what the boundary
    values see.
    """
    try:
        return arg_increment(lf, line(a, b), n0=1, max_darg=max_darg)
    except ContourError:
        pass
    d = 0.5j * (b - a)
    try:
        return sum(arg_increment(lf, line(p, q), n0=4, max_darg=max_darg)
                   for p, q in ((a, a + d), (a + d, b + d), (b + d, b)))
    except ContourError as exc:
        raise UnwrapError(f"unwrap failed on [{a!r}, {b!r}]: {exc}", (a, b)) from exc


def _components(lam: np.ndarray, b: float) -> list:
    """Index ranges of grid points sharing the same gap between levels."""
    idx = np.floor(lam / (2 * b)).astype(int)
    gaps = np.abs(lam - 2 * b * np.round(lam / (2 * b)))
    near = (gaps < THRESHOLD_GUARD) & (lam >= -THRESHOLD_GUARD)
    if np.any(near):
        raise ThresholdError(f"grid point {float(lam[near][0])!r} sits on a Landau level")
    cuts = np.flatnonzero(np.diff(idx)) + 1
    bounds = [0, *cuts.tolist(), lam.size]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


# ------------------------------------------------------------------ traces


@dataclass
class SSFTrace:
    lam: np.ndarray
    xi2: np.ndarray
    anchor: float
    correction: np.ndarray | None = None
    xi: np.ndarray | None = None
    density: np.ndarray | None = None  # (1/pi) Im tr dT/dz
    components: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        n = self.lam.size
        corr = self.correction if self.correction is not None else np.full(n, np.nan)
        xi = self.xi if self.xi is not None else np.full(n, np.nan)
        return list(zip(self.lam, self.xi2, corr, xi))


class _Tracker:
    """Continuous arg of det2 at real points, grown by insertion."""

    def __init__(self, cfg: Config, anchor: float, height: float, max_darg: float):
        self.cfg = cfg
        self.lf = _PhysicalLog(cfg)
        self.anchor = anchor
        self.height = height
        self.max_darg = max_darg
        a0 = self.lf(anchor).imag
        if abs(math.remainder(a0, 2 * math.pi)) >= math.pi / 2:
            raise UnwrapError("anchor argument not near 0", (anchor, anchor))
        # walk up once; the top line is shared by every component
        self.top_x = anchor
        self.top_arg = arg_increment(self.lf, line(anchor, anchor + 1j * height), max_darg=max_darg)
        self.lam = np.zeros(0)
        self.arg = np.zeros(0)
        self.steps = 0

    def _descend(self, x: float) -> float:
        H = 1j * self.height
        if x < self.top_x:
            raise ValueError("components must be visited left to right")
        self.top_arg += arg_increment(self.lf, line(self.top_x + H, x + H), max_darg=self.max_darg)
        self.top_x = x
        return self.top_arg + arg_increment(self.lf, line(x + H, x), max_darg=self.max_darg)

    def seed(self, lam: np.ndarray):
        lam = np.asarray(lam, dtype=float)
        if lam.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("grid must be strictly increasing")
        if lam[0] <= self.anchor:
            raise ValueError("grid must lie above the anchor")
        comps = _components(lam, self.cfg.b)
        arg = np.empty(lam.size)
        for i0, i1 in comps:
            arg[i0] = self._descend(lam[i0])
            for i in range(i0 + 1, i1):
                arg[i] = arg[i - 1] + _step(self.lf, lam[i - 1], lam[i], self.max_darg)
                self.steps += 1
        self.lam, self.arg, self.comps = lam, arg, comps

    def insert(self, new: np.ndarray):
        """Add points strictly inside existing grid intervals."""
        new = np.unique(np.asarray(new, dtype=float))
        pos = np.searchsorted(self.lam, new)
        if np.any(pos == 0) or np.any(pos == self.lam.size):
            raise ValueError("inserted points must lie inside the grid")
        vals = np.empty(new.size)
        for t, (x, p) in enumerate(zip(new, pos)):
            a = self.lam[p - 1]
            if math.floor(a / (2 * self.cfg.b)) != math.floor(x / (2 * self.cfg.b)):
                raise ThresholdError("inserted point crosses a Landau level")
            vals[t] = self.arg[p - 1] + _step(self.lf, a, x, self.max_darg)
            self.steps += 1
        lam = np.concatenate([self.lam, new])
        order = np.argsort(lam, kind="stable")
        self.lam = lam[order]
        self.arg = np.concatenate([self.arg, vals])[order]
        self.comps = _components(self.lam, self.cfg.b)


def xi2_trace(lam_grid: Sequence[float], cfg: Config, *, anchor: float | None = None,
              height: float | None = None, max_darg: float = math.pi / 4) -> SSFTrace:
    """(1/pi) x continuous arg det2(I + T(lam + i0)), zero at the anchor."""
    lam = np.asarray(lam_grid, dtype=float)
    if cfg.eps == 0:
        return SSFTrace(lam, np.zeros(lam.size), -2.0 * cfg.b if anchor is None else anchor,
                        components=_components(lam, cfg.b))
    if anchor is None:
        anchor, nrm = choose_anchor(cfg, start=min(-2.0 * cfg.b, lam[0] - cfg.b))
    else:
        nrm = operator_norm_below(anchor, cfg)
        if nrm >= ANCHOR_NORM:
            raise ValueError(f"|T(anchor)| = {nrm:.3g} is not below {ANCHOR_NORM}")
    tr = _Tracker(cfg, anchor, cfg.b if height is None else height, max_darg)
    a0 = math.remainder(tr.lf(anchor).imag, 2 * math.pi)
    tr.seed(lam)
    return SSFTrace(lam, (tr.arg - a0) / math.pi, anchor, components=tr.comps,
                    diagnostics={"anchor_norm": nrm, "steps": tr.steps, "evaluations": len(tr.lf.store)})


def correction_term(lam: np.ndarray, cfg: Config) -> np.ndarray:
    """(1/pi) Im tr T(lam + i0): the exact antiderivative of the density."""
    return np.array([trace_T(complex(x), cfg).imag / math.pi for x in lam])


def correction_density(lam: np.ndarray, cfg: Config) -> np.ndarray:
    return np.array([trace_dz_T(float(x), cfg).imag / math.pi for x in lam])


def xi_from_xi2(trace: SSFTrace, cfg: Config) -> SSFTrace:
    """Add the trace correction; anchoring is inherited (tr T is real there)."""
    if cfg.eps == 0:
        z = np.zeros(trace.lam.size)
        return SSFTrace(trace.lam, trace.xi2, trace.anchor, z, z.copy(), z.copy(),
                        trace.components, dict(trace.diagnostics))
    c0 = trace_T(complex(trace.anchor), cfg).imag / math.pi
    corr = correction_term(trace.lam, cfg) - c0
    return SSFTrace(trace.lam, trace.xi2, trace.anchor, corr, trace.xi2 + corr,
                    correction_density(trace.lam, cfg), trace.components, dict(trace.diagnostics))


def ssf_trace(lam_grid, cfg: Config, **kw) -> SSFTrace:
    return xi_from_xi2(xi2_trace(lam_grid, cfg, **kw), cfg)


def adaptive_xi(lo: float, hi: float, cfg: Config, *, n0: int = 65, dxi_max: float = 0.02,
                h_min: float | None = None, max_points: int = 40000, anchor: float | None = None) -> SSFTrace:
    """xi on [lo, hi], bisecting intervals where xi moves by more than dxi_max."""
    lam0 = np.linspace(lo, hi, n0)
    if cfg.eps == 0:
        return xi_from_xi2(xi2_trace(lam0, cfg, anchor=anchor), cfg)
    if anchor is None:
        anchor, _ = choose_anchor(cfg, start=min(-2.0 * cfg.b, lo - cfg.b))
    if h_min is None:
        h_min = 1e-10 * max(abs(lo), abs(hi), hi - lo)
    tr = _Tracker(cfg, anchor, cfg.b, math.pi / 4)
    a0 = math.remainder(tr.lf(anchor).imag, 2 * math.pi)
    tr.seed(lam0)
    c0 = trace_T(complex(anchor), cfg).imag / math.pi
    corr = correction_term(tr.lam, cfg) - c0
    rounds = 0
    while True:
        xi = (tr.arg - a0) / math.pi + corr
        h = np.diff(tr.lam)
        bad = (np.abs(np.diff(xi)) > dxi_max) & (h > 2 * h_min)
        if not bad.any():
            break
        if tr.lam.size + bad.sum() > max_points:
            raise UnwrapError("adaptive grid exceeded max_points", (lo, hi))
        mids = 0.5 * (tr.lam[:-1][bad] + tr.lam[1:][bad])
        tr.insert(mids)
        corr = correction_term(tr.lam, cfg) - c0
        rounds += 1
    xi2 = (tr.arg - a0) / math.pi
    return SSFTrace(tr.lam, xi2, anchor, corr, xi2 + corr, correction_density(tr.lam, cfg), tr.comps,
                    {"rounds": rounds, "steps": tr.steps, "evaluations": len(tr.lf.store)})


def xi2_derivative(trace: SSFTrace, cfg: Config, rel_step: float = 1e-3) -> np.ndarray:
    """Central differences of xi2 at each grid point, step tied to the local spacing."""
    lam = trace.lam
    if cfg.eps == 0:
        return np.zeros(lam.size)
    lf = _PhysicalLog(cfg)
    h = np.diff(lam)
    local = np.minimum(np.r_[h[:1], h], np.r_[h, h[-1:]])
    out = np.empty(lam.size)
    for i, (x, s) in enumerate(zip(lam, local)):
        e = rel_step * s
        d = lf(x + e) - lf(x - e)
        out[i] = math.remainder(d.imag, 2 * math.pi) / (2 * e * math.pi)
    return out


def xi_derivative(trace: SSFTrace, cfg: Config) -> np.ndarray:
    """xi' = xi2' + (1/pi) Im tr dT/dz."""
    dens = trace.density if trace.density is not None else correction_density(trace.lam, cfg)
    return xi2_derivative(trace, cfg) + dens


# -------------------------------------------------------------- threshold law


def phi_lambda(lam: float, cfg: Config, with_bound: bool = False):
    """sum_ell arctan(w_ell / (2 sqrt(lam))) over the compressed weight spectrum."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if cfg.eps == 0:
        return (0.0, 0.0) if with_bound else 0.0
    w = weight_spectrum(cfg).eigenvalues
    return phi_from_spectrum(lam, w, with_bound)


def phi_from_spectrum(lam: float, w, with_bound: bool = False):
    w = np.sort(np.asarray(w, dtype=float))[::-1]
    if lam <= 0:
        raise ValueError("lam must be positive")
    val = float(np.sum(np.arctan(w / (2 * math.sqrt(lam)))))
    if not with_bound:
        return val
    if w.size >= 2 and 0 < w[-1] < w[-2]:
        rho = w[-1] / w[-2]
        tail = w[-1] * rho / (1 - rho) / (2 * math.sqrt(lam))
    else:
        tail = 0.0 if w.size == 0 else math.inf
    return val, tail


@dataclass
class SingularityRow:
    lam: float
    xi: float
    law: float  # (J/pi) Phi
    deviation: float  # |xi - law| / (Phi^1/2 + ln^2 lam)

    @property
    def ratio(self) -> float:
        return self.xi / self.law if self.law != 0 else math.nan


def singularity_check(q: int, lam_list: Sequence[float], cfg: Config) -> list:
    """Compare xi(2bq + lam) with (J/pi) Phi(lam) for small lam > 0."""
    if q != cfg.q:
        raise ValueError("q must match the configuration")
    pot = cfg.potential
    if not pot.sign_definite:
        raise ValueError("singularity check needs a sign-definite profile")
    lam_list = np.asarray(lam_list, dtype=float)
    if np.any(lam_list <= 0) or np.any(lam_list >= 0.8 * 2 * cfg.b):
        raise ValueError("lam must lie in (0, 1.6 b)")
    order = np.argsort(lam_list)
    tr = ssf_trace(2 * cfg.b * q + lam_list[order], cfg)
    xi = np.empty(lam_list.size)
    xi[order] = tr.xi
    rows = []
    for lam, x in zip(lam_list, xi):
        phi = phi_lambda(lam, cfg)
        law = pot.sign * phi / math.pi
        dev = abs(x - law) / (math.sqrt(phi) + math.log(lam) ** 2)
        rows.append(SingularityRow(float(lam), float(x), float(law), float(dev)))
    return rows


# ------------------------------------------------------------- Breit-Wigner


def lorentzian_sum(mu: np.ndarray, poles: Sequence[complex]) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    out = np.zeros(mu.size)
    for w in poles:
        out += w.imag / (math.pi * np.abs(mu - w) ** 2)
    return out


def transverse_decay(cfg: Config) -> float:
    """Decay exponent of W at infinity (inf for faster than any power)."""
    rad = cfg.potential.radial
    if isinstance(rad, PowerLaw):
        return rad.alpha
    if isinstance(rad, (Gaussian, CompactStep)):
        return math.inf
    raise TypeError(type(rad).__name__)


@dataclass
class BWDecomposition:
    window: tuple
    r: float
    poles: list  # complex resonances used in the Lorentzian sum
    real_resonances: list  # delta terms; kept out of the window
    mu: np.ndarray
    xi_prime: np.ndarray
    lorentzian: np.ndarray
    residual: np.ndarray
    bound_scale: float  # |ln r| r^{-1/m} / r
    smoothness: float
    trace: SSFTrace | None = None

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def oscillation(self) -> float:
        return float(np.max(self.residual) - np.min(self.residual))

    def rows(self):
        return list(zip(self.mu, self.xi_prime, self.lorentzian, self.residual))


def _uniform(x: np.ndarray, y: np.ndarray, n: int):
    u = np.linspace(x[0], x[-1], n)
    return u, np.interp(u, x, y)


def _smoothness(x: np.ndarray, y: np.ndarray, n: int) -> float:
    """max |second difference| / h^2 on a uniform resampling with n points."""
    if x.size < 3:
        return 0.0
    u, v = _uniform(x, y, n)
    return float(np.max(np.abs(np.diff(v, 2)))) / (u[1] - u[0]) ** 2


def _spike(mu: np.ndarray, res: np.ndarray, ratio: float = 50.0, width: float = 0.05) -> bool:
    a = np.abs(res)
    i = int(np.argmax(a))
    # typical level from a uniform resampling; the adaptive grid crowds peaks
    level = float(np.median(_uniform(mu, a, 1001)[1]))
    if a[i] <= ratio * max(level, 1e-300):
        return False
    above = mu[a > 0.5 * a[i]]
    return (above.max() - above.min()) < width * (mu[-1] - mu[0])


def breit_wigner_residual(window: tuple, cfg: Config, resonances, *, dxi_max: float = 0.01,
                          n0: int = 129, real_tol: float = 1e-12, margin: float = 0.0,
                          strict: bool = True, trace: SSFTrace | None = None) -> BWDecomposition:
    """xi' on ``window`` minus the Lorentzians of the given resonances.

    ``resonances`` holds objects with a ``z`` attribute or plain complex z.
    Real ones are delta terms and must lie outside the window by ``margin``.
    With ``strict`` a narrow isolated spike in the residual raises
    :class:`UnlocatedResonance`.
    """
    lo, hi = map(float, window)
    if not lo < hi:
        raise ValueError("window must be increasing")
    r = max(abs(lo - 2 * cfg.b * cfg.q), abs(hi - 2 * cfg.b * cfg.q))
    zs = [complex(getattr(w, "z", w)) for w in resonances]
    poles = [z for z in zs if abs(z.imag) > real_tol * r]
    reals = [z for z in zs if abs(z.imag) <= real_tol * r]
    for z in reals:
        if lo - margin <= z.real <= hi + margin:
            raise ValueError(f"real resonance {z.real!r} inside the window")
    if trace is None:
        trace = adaptive_xi(lo, hi, cfg, n0=n0, dxi_max=dxi_max)
    mu = trace.lam
    xp = xi_derivative(trace, cfg) if cfg.eps else np.zeros(mu.size)
    lor = lorentzian_sum(mu, poles)
    res = xp - lor
    m = transverse_decay(cfg)
    bound = abs(math.log(r)) * (r ** (-1.0 / m) if math.isfinite(m) else 1.0) / r
    out = BWDecomposition((lo, hi), r, poles, reals, mu, xp, lor, res, bound,
                          _smoothness(mu, res, n0), trace)
    if strict and cfg.eps and _spike(mu, res):
        i = int(np.argmax(np.abs(res)))
        raise UnlocatedResonance(f"residual spike at mu={float(mu[i])!r} looks like an unlocated resonance; "
                                 "enlarge the search region")
    return out


# ------------------------------------------------------------ trace formula


@dataclass(frozen=True)
class GaussianTest:
    """f(x) = P(x) exp(-((x - center)/width)^2), P with ascending coefficients."""

    coeffs: tuple = (1.0,)
    center: float = 0.0
    width: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        u = (x - self.center) / self.width
        return np.polynomial.polynomial.polyval(x, self.coeffs) * np.exp(-u * u)

    def derivative(self, x):
        x = np.asarray(x, dtype=complex)
        u = (x - self.center) / self.width
        p = np.polynomial.polynomial.polyval(x, self.coeffs)
        dp = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))
        return (dp - 2 * u / self.width * p) * np.exp(-u * u)


def _smoothstep(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    a = np.exp(-1.0 / t[inner])
    c = np.exp(-1.0 / (1.0 - t[inner]))
    out[inner] = a / (a + c)
    out[t >= 1] = 1.0
    return out


def _smoothstep_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    s = t[inner]
    a = np.exp(-1.0 / s)
    c = np.exp(-1.0 / (1.0 - s))
    da = a / s**2
    dc = -c / (1.0 - s) ** 2
    out[inner] = (da * (a + c) - a * (da + dc)) / (a + c) ** 2
    return out


@dataclass(frozen=True)
class Cutoff:
    """Smooth bump: 1 on [a, b], 0 outside (a - ramp_lo, b + ramp_hi)."""

    a: float
    b: float
    ramp_lo: float
    ramp_hi: float

    @property
    def support(self) -> tuple:
        return self.a - self.ramp_lo, self.b + self.ramp_hi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _smoothstep((x - self.a + self.ramp_lo) / self.ramp_lo) * \
            _smoothstep((self.b + self.ramp_hi - x) / self.ramp_hi)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        up = (x - self.a + self.ramp_lo) / self.ramp_lo
        dn = (self.b + self.ramp_hi - x) / self.ramp_hi
        return (_smoothstep_prime(up) / self.ramp_lo * _smoothstep(dn)
                - _smoothstep(up) * _smoothstep_prime(dn) / self.ramp_hi)

    def sup_derivative(self) -> float:
        t = np.linspace(0, 1, 4001)
        return float(np.max(_smoothstep_prime(t))) / min(self.ramp_lo, self.ramp_hi)


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, z: complex) -> bool:
        return self.x0 <= z.real <= self.x1 and self.y0 <= z.imag <= self.y1

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass
class TraceFormulaResult:
    lhs: complex
    rhs: complex
    error_bound: float
    counted: list
    cutoff_constant: float
    sup_f: float
    resonance_scale: float  # N_q(r)

    @property
    def error(self) -> float:
        return abs(self.lhs - self.rhs)


def cutoff_constant(psi: Cutoff, outer: Rect, inner: Rect) -> float:
    """(1/pi) (sup|psi'| + 1/h) 2 sqrt(2 pi |outer|), h the inner-to-outer margin."""
    h = min(inner.x0 - outer.x0, outer.x1 - inner.x1, inner.y0 - outer.y0, outer.y1 - inner.y1)
    if h <= 0:
        raise ValueError("inner rectangle must sit strictly inside the outer one")
    return (psi.sup_derivative() + 1.0 / h) * 2 * math.sqrt(2 * math.pi * outer.area) / math.pi


def resonance_scale(r: float, outer: Rect, cfg: Config) -> float:
    """n_+(s1 sqrt r) |ln r| + ntilde_1 + ntilde_2 at s1 sqrt(r)/2 (B_q spectrum),
    with s1 half the square root of the distance from the outer rectangle to 0."""
    xs = [outer.x0, outer.x1] if not outer.x0 <= 0 <= outer.x1 else [0.0]
    ys = [outer.y0, outer.y1] if not outer.y0 <= 0 <= outer.y1 else [0.0]
    dist = min(abs(complex(x, y)) for x in xs for y in ys)
    if dist <= 0:
        raise ValueError("outer region must stay away from the threshold")
    s1 = 0.5 * math.sqrt(dist)
    w = weight_spectrum(cfg).eigenvalues if cfg.eps else np.zeros(0)
    rep_w = counting_functions(w, [s1 * math.sqrt(r)])
    rep_b = counting_functions(0.5 * w, [0.5 * s1 * math.sqrt(r)])
    return float(rep_w.n_plus[0] * abs(math.log(r)) + rep_b.ntilde1[0] + rep_b.ntilde2[0])


def trace_formula_check(f: GaussianTest, psi: Cutoff, r: float, cfg: Config, resonances, *,
                        outer: Rect, inner: Rect, dxi_max: float = 0.01, n0: int = 257,
                        min_ramp_points: int = 16) -> TraceFormulaResult:
    """Both sides of the resonance trace formula in scaled coordinates x = (lam - 2bq)/r.

    lhs = int (psi f)'(x) xi(2bq + r x) dx, the integrated-by-parts pairing
    -<xi', (psi f)((lam - 2bq)/r)>.  rhs sums f over resonances in ``inner``.
    """
    if not (outer.x0 < psi.support[0] and psi.support[1] < outer.x1):
        raise ValueError("cutoff support must lie inside the outer rectangle")
    if not (inner.x0 >= psi.a and inner.x1 <= psi.b):
        raise ValueError("cutoff must equal 1 on the inner rectangle")
    base = 2 * cfg.b * cfg.q
    zs = [complex(getattr(w, "z", w)) for w in resonances]
    mult = [int(getattr(w, "multiplicity", 1)) for w in resonances]
    counted = [(z, m) for z, m in zip(zs, mult) if inner.contains((z - base) / r)]
    rhs = complex(sum(m * f((z - base) / r) for z, m in counted))
    # sup |f| over outer minus inner, lower half
    X, Y = np.meshgrid(np.linspace(outer.x0, outer.x1, 401), np.linspace(outer.y0, min(outer.y1, 0.0), 201))
    Z = X + 1j * Y
    keep = ~((X >= inner.x0) & (X <= inner.x1) & (Y >= inner.y0) & (Y <= inner.y1))
    sup_f = float(np.max(np.abs(f(Z[keep]))))
    M = cutoff_constant(psi, outer, inner)
    N = resonance_scale(r, outer, cfg)
    if cfg.eps == 0:
        return TraceFormulaResult(0j, rhs, M * sup_f * N, counted, M, sup_f, N)
    lo, hi = psi.support
    tr = adaptive_xi(base + r * lo, base + r * hi, cfg, n0=n0, dxi_max=dxi_max)
    x = (tr.lam - base) / r
    for a, b in ((lo, psi.a), (psi.b, hi)):
        if np.count_nonzero((x > a) & (x < b)) < min_ramp_points:
            raise ValueError("xi grid too coarse on the cutoff ramps; raise n0")
    gprime = psi.derivative(x) * f(x) + psi(x) * f.derivative(x)
    lhs = np.trapezoid(gprime * tr.xi, x)
    return TraceFormulaResult(complex(lhs), rhs, M * sup_f * N, counted, M, sup_f, N)

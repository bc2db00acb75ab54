"""Zero search for the chart determinant: winding numbers, quadrisection, Newton."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .landau import n_plus, weight_spectrum
from .model import Config
from .operator import log_det2_total, trace_T_chart

MARGIN = 1e-3


class ContourError(RuntimeError):
    """Contour passes too close to a zero; enlarge or shift the region."""


Segment = Callable[[float], complex]


def line(a: complex, b: complex) -> Segment:
    return lambda t: a + (b - a) * t


def arc(r: float, t0: float, t1: float) -> Segment:
    return lambda t: r * np.exp(1j * (t0 + (t1 - t0) * t))


# -------------------------------------------------------------- cells


@dataclass(frozen=True)
class Cell:
    """Polar ``(r0, r1, t0, t1)`` or cartesian ``(x0, x1, y0, y1)`` cell."""

    polar: bool
    a0: float
    a1: float
    b0: float
    b1: float

    def boundary(self) -> list:
        if self.polar:
            r0, r1, t0, t1 = self.a0, self.a1, self.b0, self.b1
            e0, e1 = np.exp(1j * t0), np.exp(1j * t1)
            return [line(r0 * e0, r1 * e0), arc(r1, t0, t1), line(r1 * e1, r0 * e1), arc(r0, t1, t0)]
        x0, x1, y0, y1 = self.a0, self.a1, self.b0, self.b1
        c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
        return [line(c[i], c[(i + 1) % 4]) for i in range(4)]

    def center(self) -> complex:
        if self.polar:
            return 0.5 * (self.a0 + self.a1) * np.exp(0.5j * (self.b0 + self.b1))
        return complex(0.5 * (self.a0 + self.a1), 0.5 * (self.b0 + self.b1))

    def diameter(self) -> float:
        if self.polar:
            return math.hypot(self.a1 - self.a0, self.a1 * (self.b1 - self.b0))
        return math.hypot(self.a1 - self.a0, self.b1 - self.b0)

    def contains(self, k: complex, slack: float = 0.0) -> bool:
        if self.polar:
            r, t = abs(k), math.atan2(k.imag, k.real)
            # bring t into [b0, b0 + 2pi)
            t = self.b0 + (t - self.b0) % (2 * math.pi)
            st = slack / max(self.a0, 1e-300)
            return (self.a0 - slack <= r <= self.a1 + slack) and (t <= self.b1 + st or
                                                                  t - 2 * math.pi >= self.b0 - st)
        return (self.a0 - slack <= k.real <= self.a1 + slack) and (self.b0 - slack <= k.imag <= self.b1 + slack)

    def split(self, fa: float = 0.5, fb: float = 0.5) -> list:
        if self.polar:
            am = self.a0 * (self.a1 / self.a0) ** fa  # geometric in r
        else:
            am = self.a0 + fa * (self.a1 - self.a0)
        bm = self.b0 + fb * (self.b1 - self.b0)
        P = self.polar
        return [Cell(P, self.a0, am, self.b0, bm), Cell(P, am, self.a1, self.b0, bm),
                Cell(P, self.a0, am, bm, self.b1), Cell(P, am, self.a1, bm, self.b1)]


@dataclass(frozen=True)
class Region:
    kind: str
    params: tuple

    @classmethod
    def annulus(cls, r_lo: float, r_hi: float | None = None) -> "Region":
        return cls("annulus", (float(r_lo), float(2 * r_lo if r_hi is None else r_hi)))

    @classmethod
    def sector(cls, theta_lo: float, theta_hi: float, r_lo: float, r_hi: float) -> "Region":
        return cls("sector", (float(theta_lo), float(theta_hi), float(r_lo), float(r_hi)))

    @classmethod
    def box(cls, re_lo: float, re_hi: float, im_lo: float, im_hi: float) -> "Region":
        return cls("box", (float(re_lo), float(re_hi), float(im_lo), float(im_hi)))

    def radial_bounds(self):
        if self.kind == "annulus":
            return self.params
        if self.kind == "sector":
            return self.params[2:]
        x0, x1, y0, y1 = self.params
        xs = [x0, x1] if not x0 <= 0 <= x1 else [x0, 0.0, x1]
        ys = [y0, y1] if not y0 <= 0 <= y1 else [y0, 0.0, y1]
        rmin = min(abs(complex(x, y)) for x in xs for y in ys)
        rmax = max(abs(complex(x, y)) for x in (x0, x1) for y in (y0, y1))
        return rmin, rmax

    def validate(self, b: float):
        root = math.sqrt(2 * b)
        lo, hi = self.radial_bounds()
        if self.kind in ("annulus", "sector") and not 0 < lo < hi:
            raise ValueError("need 0 < r_lo < r_hi")
        if self.kind == "sector" and not self.params[0] < self.params[1] <= self.params[0] + 2 * math.pi:
            raise ValueError("need theta_lo < theta_hi <= theta_lo + 2 pi")
        if self.kind == "box" and not (self.params[0] < self.params[1] and self.params[2] < self.params[3]):
            raise ValueError("box bounds must be increasing")
        if lo < MARGIN * root:
            raise ValueError(f"region reaches within {MARGIN:g}*sqrt(2b) of k=0")
        if hi > (1 - MARGIN) * root:
            raise ValueError(f"region reaches within {MARGIN:g}*sqrt(2b) of the next threshold")

    def cells(self) -> list:
        if self.kind == "box":
            return [Cell(False, *self.params)]
        if self.kind == "annulus":
            # cells centred on the axes, so cell edges avoid the imaginary axis
            r0, r1 = self.params
            t0, t1 = -0.75 * math.pi, 1.25 * math.pi
        else:
            t0, t1, r0, r1 = self.params
        m = max(1, math.ceil((t1 - t0) / (math.pi / 2) - 1e-9))
        edges = np.linspace(t0, t1, m + 1)
        if self.kind == "sector":
            # interior edges nudged off the symmetric directions
            edges[1:-1] += 0.0371 * (t1 - t0) / m
        return [Cell(True, r0, r1, edges[i], edges[i + 1]) for i in range(m)]

    def boundary(self) -> list:
        if self.kind == "annulus":
            r0, r1 = self.params
            return [arc(r1, -math.pi, math.pi), arc(r0, math.pi, -math.pi)]
        if self.kind == "sector":
            t0, t1, r0, r1 = self.params
            return Cell(True, r0, r1, t0, t1).boundary()
        return Cell(False, *self.params).boundary()

    def contains(self, k: complex) -> bool:
        return any(c.contains(k) for c in self.cells())


# ------------------------------------------------------------ argument walk


class _Cached:
    def __init__(self, log_f):
        self.log_f = log_f
        self.store = {}

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        v = self.store.get(z)
        if v is None:
            v = complex(self.log_f(z))
            self.store[z] = v
        return v


def _walk(log_f, seg: Segment, n0: int, max_darg: float, max_dlog: float, min_dt: float,
          log_floor: float, trace=None) -> float:
    t, dt_max = 0.0, 1.0 / n0
    dt = dt_max
    z0 = seg(0.0)
    l0 = log_f(z0)
    if l0.real < log_floor:
        raise ContourError(f"|D| below floor on the contour at k={z0:.6g}")
    if trace is not None:
        trace.append((z0, l0))
    total = 0.0
    while t < 1.0:
        t1 = 1.0 if t + dt >= 1.0 - 1e-14 else t + dt
        z1 = seg(t1)
        l1 = log_f(z1)
        d = l1 - l0
        darg = math.remainder(d.imag, 2 * math.pi)
        bad = not np.isfinite(l1.real) or abs(darg) > max_darg or abs(d.real) > max_dlog
        if not bad:
            # midpoint check: a step can alias a full turn and still look small
            lm = log_f(seg(0.5 * (t + t1)))
            a1 = math.remainder((lm - l0).imag, 2 * math.pi)
            a2 = math.remainder((l1 - lm).imag, 2 * math.pi)
            bad = (not np.isfinite(lm.real) or max(abs(a1), abs(a2)) > max_darg
                   or abs(a1 + a2 - darg) > 1e-6)
        if bad:
            if t1 - t <= min_dt:
                raise ContourError(f"argument step unresolved near k={z1:.6g}; a zero sits on or next to the contour")
            dt = 0.5 * (t1 - t)
            continue
        if l1.real < log_floor:
            raise ContourError(f"|D| below floor on the contour at k={z1:.6g}")
        total += darg
        t, l0 = t1, l1
        if trace is not None:
            trace.append((z1, l1))
        if abs(darg) < 0.25 * max_darg and abs(d.real) < 0.25 * max_dlog:
            dt = min(2 * dt, dt_max)
    return total


def arg_increment(log_f, seg: Segment, n0: int = 16, max_darg: float = math.pi / 4,
                  max_dlog: float = 1.0, min_dt: float = 1e-8, log_floor: float = -math.inf) -> float:
    """Continuous change of arg f along one path piece."""
    return _walk(log_f, seg, n0, max_darg, max_dlog, min_dt, log_floor)


def winding(log_f, segments: Sequence[Segment], n0: int = 16, max_darg: float = math.pi / 4,
            max_dlog: float = 1.0, min_dt: float = 1e-8, log_floor: float = math.log(1e-12),
            trace=None) -> float:
    """Total argument increment / 2 pi along closed ``segments``."""
    tot = 0.0
    for seg in segments:
        tot += _walk(log_f, seg, n0, max_darg, max_dlog, min_dt, log_floor, trace)
    return tot / (2 * math.pi)


def count_zeros_contour(log_f, segments: Sequence[Segment], **kw) -> int:
    """Number of zeros (with multiplicity) enclosed by the positively
    oriented closed path; ``log_f`` returns any branch of log f."""
    w = winding(log_f, segments, **kw)
    n = round(w)
    if abs(w - n) >= 0.1:
        kw = dict(kw)
        kw["max_darg"] = kw.get("max_darg", math.pi / 4) / 4
        w = winding(log_f, segments, **kw)
        n = round(w)
        if abs(w - n) >= 0.1:
            raise ContourError(f"winding number {w:.3f} not near an integer")
    return int(n)


# ------------------------------------------------------------ resonances


@dataclass
class Resonance:
    k: complex
    z: complex
    multiplicity: int
    residual: float
    iterations: int
    cluster: bool = False

    def as_dict(self) -> dict:
        return {"re_k": self.k.real, "im_k": self.k.imag, "re_z": self.z.real, "im_z": self.z.imag,
                "multiplicity": self.multiplicity, "residual": self.residual}


def chart_log_det(cfg: Config) -> Callable[[complex], complex]:
    """log det2(I + T(z_q(k))) as a function of the chart coordinate."""
    def f(k):
        return log_det2_total(k, cfg, strict=False).log
    return f


def chart_log_fredholm(cfg: Config) -> Callable[[complex], complex]:
    """log det2 + tr T, i.e. log det(I+T) on the chart.

    Same zeros and windings as det2 (exp of an analytic function is zero
    free). det2 carries exp(-tr T), whose modulus swamps the floor and whose
    phase spins through hundreds of radians near k = 0.
    """
    def f(k):
        return log_det2_total(k, cfg, strict=False).log + trace_T_chart(k, cfg)
    return f


def _newton(log_f, k: complex, cell: Cell, tol: float, max_iter: int):
    """Newton on f = exp(log_f); f' by central differences of f/f(k)."""
    diam = cell.diameter()
    small = 0
    for it in range(1, max_iter + 1):
        if not cell.contains(k, slack=0.5 * diam):
            return k, it, False
        h = 1e-6 * max(abs(k), diam)
        try:
            l0 = log_f(k)
            rp = np.exp(log_f(k + h) - l0)
            rm = np.exp(log_f(k - h) - l0)
        except ValueError:  # stepped off the chart or onto a threshold
            return k, it, False
        if not (np.isfinite(rp) and np.isfinite(rm)) or rp == rm:
            return k, it, abs(rp - rm) == 0 and l0.real < -20
        step = -2 * h / (rp - rm)
        if abs(step) > 0.5 * diam:
            step *= 0.5 * diam / abs(step)
        k = k + step
        if abs(step) < tol * abs(k):
            return k, it, True
        small = small + 1 if abs(step) < 1e3 * tol * abs(k) else 0
        if small >= 3:
            return k, it, True
    return k, max_iter, False


# off-centre angular split first: symmetric data put zeros on the cell axis
_SPLITS = ((0.5, 0.5371), (0.4629, 0.5), (0.53, 0.47), (0.44, 0.59), (0.57, 0.41))


def locate_resonances(region: Region, cfg: Config, *, min_cell: float | None = None,
                      newton_tol: float = 1e-12, max_newton: int = 50, log_f=None) -> list:
    """Zeros of det2 inside ``region`` (chart coordinate k around level q)."""
    region.validate(cfg.b)
    if cfg.eps == 0:
        return []
    resid = None
    if log_f is None:
        log_f = chart_log_fredholm(cfg)
        resid = _Cached(chart_log_det(cfg))
    lf = _Cached(log_f)
    resid = resid or lf
    lo, hi = region.radial_bounds()
    if min_cell is None:
        min_cell = 1e-6 * lo
    found = []
    queue = [(c, None) for c in region.cells()]
    while queue:
        cell, count = queue.pop()
        if count is None:
            count = count_zeros_contour(lf, cell.boundary())
        if count == 0:
            continue
        if count == 1:
            k, its, ok = _newton(resid, cell.center(), cell, newton_tol, max_newton)
            if ok and cell.contains(k, slack=1e-9 * max(abs(k), 1e-300)):
                found.append(_make(cfg, resid, k, 1, its, False))
                continue
        if cell.diameter() < min_cell:
            k = cell.center()
            found.append(_make(cfg, resid, k, count, max_newton, True))
            continue
        children = None
        for fa, fb in _SPLITS:
            try:
                kids = cell.split(fa, fb)
                counts = [count_zeros_contour(lf, c.boundary()) for c in kids]
            except ContourError:
                continue
            if sum(counts) == count:
                children = list(zip(kids, counts))
                break
        if children is None:
            if count > 1 and cell.diameter() < 1e-4 * abs(cell.center()):
                # a tight multiple zero: every split edge passes too close
                found.append(_make(cfg, resid, cell.center(), count, max_newton, True))
                continue
            raise ContourError(f"could not split cell {cell} consistently; shift or inflate the region")
        queue.extend(children)
    found.sort(key=lambda r: (abs(r.k), math.atan2(r.k.imag, r.k.real)))
    return found


def _make(cfg, lf, k, mult, its, cluster) -> Resonance:
    return Resonance(k=complex(k), z=2 * cfg.b * cfg.q + complex(k) ** 2, multiplicity=mult,
                     residual=float(np.exp(lf(k).real)), iterations=its, cluster=cluster)


def census(region: Region, cfg: Config, log_f=None) -> int:
    """Zero count of det2 inside ``region`` by the argument principle."""
    region.validate(cfg.b)
    if cfg.eps == 0:
        return 0
    return count_zeros_contour(_Cached(log_f or chart_log_fredholm(cfg)), region.boundary())


# ---------------------------------------------------------------- censuses


@dataclass
class AnnulusRow:
    r: float
    count: int
    n_plus: int
    bound: float

    @property
    def ratio(self) -> float:
        return self.count / self.bound if self.bound > 0 else math.nan


def annulus_census(r_list, cfg: Config, log_f=None) -> list:
    """Counts in r < |k| < 2r paired with n_+(r; p_q W p_q) |ln r|."""
    spec = weight_spectrum(cfg).eigenvalues if cfg.eps > 0 else np.zeros(0)
    rows = []
    f = _Cached(log_f or chart_log_fredholm(cfg))
    for r in r_list:
        if 2 * r >= 0.9 * math.sqrt(2 * cfg.b):
            raise ValueError(f"annulus ({r}, {2 * r}) reaches past 0.9*sqrt(2b)")
        reg = Region.annulus(r)
        reg.validate(cfg.b)
        cnt = 0 if cfg.eps == 0 else count_zeros_contour(f, reg.boundary())
        npl = int(n_plus(spec, r)[0])
        rows.append(AnnulusRow(float(r), cnt, npl, npl * abs(math.log(r))))
    return rows


@dataclass
class SectorCensus:
    inside: int  # resonances with -J Im k <= |Re k| / delta
    outside: int
    resonances: list = field(default_factory=list)


def free_sector(delta: float, sign: int, r_lo: float, r_hi: float) -> Region:
    """The polar region {-J Im k <= |Re k|/delta} between two radii."""
    phi = math.atan(delta)
    axis = -math.pi / 2 if sign > 0 else math.pi / 2
    return Region.sector(axis + phi, axis + 2 * math.pi - phi, r_lo, r_hi)


def sector_census(delta: float, sign: int, r_lo: float, r_hi: float, cfg: Config,
                  resonances=None) -> SectorCensus:
    """Split resonances in r_lo < |k| < r_hi by the sector test."""
    if not cfg.potential.sign_definite:
        raise ValueError("sector census needs a sign-definite profile")
    if cfg.eps == 0:
        return SectorCensus(0, 0, [])
    if resonances is None:
        resonances = locate_resonances(Region.annulus(r_lo, r_hi), cfg)
    inside = out = 0
    for r in resonances:
        if -sign * r.k.imag <= abs(r.k.real) / delta:
            inside += r.multiplicity
        else:
            out += r.multiplicity
    return SectorCensus(inside, out, list(resonances))


@dataclass
class BandRow:
    r_lo: float
    r_hi: float
    located: int  # resonances in the band, outside the free sector
    rank: int  # eigenvalues of eps p_q W p_q in [2 r_lo, 2 r_hi]

    @property
    def matches(self) -> bool:
        return self.located == self.rank


def band_radii(cfg: Config, r_lo: float, r_hi: float) -> list:
    """Decreasing radii r_0 > r_1 > ... in [r_lo, r_hi], placed at the
    geometric midpoints between consecutive values w/2 of the weight
    spectrum, so every band edge sits in a spectral gap."""
    w = np.sort(weight_spectrum(cfg).eigenvalues)[::-1]
    half = 0.5 * w[w > 0]
    cuts = np.sqrt(half[:-1] * half[1:])
    return [float(c) for c in cuts if r_lo <= c <= r_hi]


def band_counts(resonances, cfg: Config, radii: Sequence[float], delta: float = 1.0) -> list:
    """Per band r_{l+1} < |k| < r_l: located resonances with
    -J Im k > |Re k|/delta against the rank of eps p_q W p_q on
    [2 r_{l+1}, 2 r_l]."""
    if not cfg.potential.sign_definite:
        raise ValueError("band counts need a sign-definite profile")
    sign = cfg.potential.sign
    w = weight_spectrum(cfg).eigenvalues
    radii = sorted(radii, reverse=True)
    rows = []
    for hi, lo in zip(radii[:-1], radii[1:]):
        located = sum(r.multiplicity for r in resonances
                      if lo < abs(r.k) < hi and -sign * r.k.imag > abs(r.k.real) / delta)
        rank = int(np.count_nonzero((w >= 2 * lo) & (w <= 2 * hi)))
        rows.append(BandRow(lo, hi, located, rank))
    return rows

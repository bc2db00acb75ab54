"""Sector matrices of the sandwiched resolvent and their regularised determinants.

In angular sector ``ell`` the operator reduces (cyclically) to the block matrix

    M[(j, a), (j', b)] = O~_{j j'} * G_{j'}[a, b],

with O~ the signed, coupling-scaled radial overlaps and G_j the Nystrom
resolvent of channel j.  ``det2(I + M) = det(I + M) exp(-tr M)``.

Two routes evaluate det(I + M):

* dense LU of the (levels * n_axis)^2 matrix, and
* the banded route: with K_j = c_j E_j (c_j = i/2k_j, E_j the exponential
  Green matrix) one has det(I + M) = prod_j det K_j * det(K^-1 + O~ (x) D^2).
  E_j^-1 is tridiagonal, so in node-major ordering the second factor is a
  band matrix of half-bandwidth = number of levels.

Both give the same number up to roundoff; the dense route is kept as the
reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack, lu_factor

from .axis import (
    AxisGrid,
    ThresholdError,
    chart_wavenumbers,
    check_threshold,
    green_inverse,
    make_axis_grid,
    physical_wavenumbers,
    resolvent_matrix,
    resolvent_matrix_dk,
    split_rank_one,
)
from .landau import overlap_matrix, toeplitz_spectrum
from .model import Config


class TailNotConverged(RuntimeError):
    def __init__(self, partial: complex, last: float, ell: int):
        super().__init__(f"sector tail not below tolerance by ell={ell} (last |contribution|={last:.3e})")
        self.partial = partial
        self.last = last
        self.ell = ell


_BAND_COND_FLOOR = 1e-8


# ---------------------------------------------------------------- model cache


class Model:
    """Per-configuration cache of grid, overlaps and level traces."""

    def __init__(self, cfg: Config):
        self.cfg = cfg
        tr = cfg.truncation
        pot = cfg.potential
        self.b = cfg.b
        self.q = cfg.q
        self.levels = np.arange(tr.J_max + 1)
        self.grid: AxisGrid = make_axis_grid(pot.axis, tr.n_axis, tr.axis_halfwidth)
        self._signed = {}
        self._plain = {}
        self._traces = None
        self._band_index = {}
        self.evaluations = 0

    def first_level(self, ell: int) -> int:
        return max(0, -ell)

    def overlaps(self, ell: int) -> np.ndarray:
        """Unsigned radial overlaps O^{(ell)} over levels j0..J_max."""
        if ell not in self._plain:
            lv = range(self.first_level(ell), len(self.levels))
            self._plain[ell] = overlap_matrix(lv, ell, self.cfg.potential.radial, self.b)
        return self._plain[ell]

    def signed_overlaps(self, ell: int) -> np.ndarray:
        """J * eps * O^{(ell)} (sign function folded in for mixed profiles)."""
        if ell not in self._signed:
            pot = self.cfg.potential
            if pot.sign_definite:
                self._signed[ell] = pot.sign * pot.coupling * self.overlaps(ell)
            else:
                lv = range(self.first_level(ell), len(self.levels))
                self._signed[ell] = pot.coupling * overlap_matrix(
                    lv, ell, pot.radial, self.b, weight=pot.sign_function, breaks=(pot.flip_radius,))
        return self._signed[ell]

    def level_traces(self) -> np.ndarray:
        """sum_ell O~^{(ell)}_{jj} per level j (signed, coupling included)."""
        if self._traces is None:
            pot = self.cfg.potential
            J = len(self.levels)
            out = np.zeros(J)
            cap = max(4 * self.cfg.truncation.L_max, 400)
            converged = np.zeros(J, dtype=bool)
            ell = -(J - 1)
            small_run = np.zeros(J, dtype=int)
            while not converged.all() and ell <= cap:
                j0 = self.first_level(ell)
                if ell > self.cfg.truncation.L_max + 1:
                    diag = _diag_overlaps(tuple(range(j0, J)), ell, pot, self.b)
                else:
                    diag = np.diag(self.signed_overlaps(ell)).copy()
                for i, j in enumerate(range(j0, J)):
                    if converged[j]:
                        continue
                    out[j] += diag[i]
                    if ell >= 0 and abs(diag[i]) < 1e-16 * max(abs(out[j]), 1e-300):
                        small_run[j] += 1
                        converged[j] = small_run[j] >= 2
                    else:
                        small_run[j] = 0
                ell += 1
            if not converged.all():
                # slowly decaying profile: add the exact remainder of the
                # diagonal sum, (b/2pi) * int U over the plane
                exact = self.b / (2 * math.pi) * _signed_plane_mass(pot)
                out[~converged] = exact
            self._traces = out
        return self._traces

    def band_index(self, L: int):
        if L not in self._band_index:
            n = self.grid.n
            a = np.arange(n)[:, None, None]
            j = np.arange(L)[None, :, None]
            jp = np.arange(L)[None, None, :]
            rows = (2 * L + j - jp) * np.ones_like(a)
            cols = a * L + jp * np.ones_like(j)
            a2 = np.arange(n - 1)[:, None]
            j2 = np.arange(L)[None, :]
            up_cols = ((a2 + 1) * L + j2).ravel()
            lo_cols = (a2 * L + j2).ravel()
            self._band_index[L] = (rows.ravel(), cols.ravel(), up_cols, lo_cols)
        return self._band_index[L]


def _diag_overlaps(levels, ell, pot, b):
    w = None if pot.sign_definite else pot.sign_function
    sgn = pot.sign if pot.sign_definite else 1.0
    out = []
    for j in levels:
        out.append(overlap_matrix((j,), ell, pot.radial, b, weight=w,
                                  breaks=() if w is None else (pot.flip_radius,))[0, 0])
    return sgn * pot.coupling * np.array(out)


def _signed_plane_mass(pot) -> float:
    if pot.sign_definite:
        return pot.sign * pot.coupling * pot.radial.mass()
    from scipy import integrate

    f = lambda r: 2 * math.pi * r * pot.radial(r) * pot.sign_function(r)
    inner, _ = integrate.quad(f, 0, pot.flip_radius, limit=200)
    outer, _ = integrate.quad(f, pot.flip_radius, np.inf, limit=200)
    return pot.coupling * (inner + outer)


@lru_cache(maxsize=16)
def get_model(cfg: Config) -> Model:
    return Model(cfg)


# ------------------------------------------------------------ sector operator


@dataclass
class SectorOperator:
    ell: int
    k: complex
    levels: tuple
    matrix: np.ndarray
    bq_eigenvalue: float | None
    rank_one_vector: np.ndarray | None
    remainder: np.ndarray | None


def assemble_sector(ell: int, k: complex, cfg: Config) -> SectorOperator:
    """Dense sector matrix at chart coordinate k around level q."""
    m = get_model(cfg)
    j0 = m.first_level(ell)
    levels = tuple(range(j0, len(m.levels)))
    if not levels:
        return SectorOperator(ell, k, (), np.zeros((0, 0), complex), None, None, None)
    kjs = chart_wavenumbers(levels, cfg.q, k, cfg.b)
    check_threshold(kjs)
    Os = m.signed_overlaps(ell)
    Gs = np.array([resolvent_matrix(kj, m.grid) for kj in kjs])
    mat = _dense_matrix(Os, Gs)
    bq = v = rem = None
    if cfg.q in levels:
        iq = levels.index(cfg.q)
        v, _, rem_q = split_rank_one(k, m.grid)
        bq = 0.5 * cfg.eps * m.overlaps(ell)[iq, iq] * m.grid.mass
        # remove the singular column part (i/2k) O~[:, q] (x) v v^T
        n = m.grid.n
        rem = mat.copy()
        for i in range(len(levels)):
            rem[i * n:(i + 1) * n, iq * n:(iq + 1) * n] = Os[i, iq] * rem_q
    return SectorOperator(ell, k, levels, mat, bq, v, rem)


def _dense_matrix(Os: np.ndarray, Gs: np.ndarray) -> np.ndarray:
    L, n = Gs.shape[0], Gs.shape[1]
    return np.einsum("jk,kab->jakb", Os, Gs).reshape(L * n, L * n)


# ---------------------------------------------------------------- det2


def det2(A: np.ndarray):
    """(log|det2(I+A)|, arg det2(I+A)) via LU of I + A."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 0.0, 0.0
    lu, piv = lu_factor(np.eye(n) + A, check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        return -np.inf, 0.0
    swaps = int(np.sum(piv != np.arange(n)))
    logdet = np.sum(np.log(d)) + (1j * math.pi if swaps % 2 else 0.0)
    val = logdet - np.trace(A)
    return float(val.real), float(np.angle(np.exp(1j * val.imag)))


def _log_det2_dense(Os, kjs, grid):
    Gs = np.array([resolvent_matrix(kj, grid) for kj in kjs])
    M = _dense_matrix(Os, Gs)
    lm, ar = det2(M)
    return complex(lm, ar)


def _band_logdet(m: Model, Os: np.ndarray, inv_diag, inv_off, logdetK) -> complex:
    """log det(K^-1 + O~ (x) D^2) + sum log det K_j, as a complex log."""
    L = Os.shape[0]
    n = m.grid.n
    s2 = m.grid.sqrt_wg**2
    rows, cols, up_cols, lo_cols = m.band_index(L)
    blocks = (s2[:, None, None] * Os[None, :, :]).astype(complex)
    idx = np.arange(L)
    blocks[:, idx, idx] += inv_diag.T
    ab = np.zeros((3 * L + 1, n * L), dtype=complex)
    ab[rows, cols] = blocks.ravel()
    off = inv_off.T.ravel()  # (n-1, L) node-major
    ab[L, up_cols] = off
    ab[3 * L, lo_cols] = off
    lu, piv, info = lapack.zgbtrf(ab, L, L, overwrite_ab=1)
    if info > 0:
        return complex(-np.inf, 0.0)
    d = lu[2 * L]
    swaps = int(np.sum(piv != np.arange(n * L)))
    val = np.sum(np.log(d)) + np.sum(logdetK)
    if swaps % 2:
        val += 1j * math.pi
    return complex(val)


@dataclass
class DetValue:
    """log det2 of the full operator, summed over sectors."""

    log_modulus: float
    argument: float  # principal value in (-pi, pi]
    sectors: list = field(default_factory=list)  # (ell, complex log det2)
    tail_bound: float = 0.0
    ell_stop: int = 0

    @property
    def log(self) -> complex:
        return complex(self.log_modulus, self.argument)

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log))


def log_det2_levels(kjs: np.ndarray, cfg: Config, method: str = "auto",
                    strict: bool = True, keep_sectors: bool = False) -> DetValue:
    """Sum of sector log det2 given the wavenumbers of all retained levels."""
    m = get_model(cfg)
    m.evaluations += 1
    kjs = np.asarray(kjs, dtype=complex)
    check_threshold(kjs)
    tr = cfg.truncation
    if cfg.eps == 0:
        return DetValue(0.0, 0.0)
    J = len(m.levels)
    mass = m.grid.mass
    c = 1j / (2 * kjs)
    use_band = method == "band"
    if method == "auto" or use_band:
        invs = [green_inverse(kj, m.grid.nodes) for kj in kjs]
        ok = min(g.cond for g in invs) > _BAND_COND_FLOOR
        if method == "auto":
            use_band = ok
        elif not ok:
            raise FloatingPointError("banded route ill-conditioned at this point")
        if use_band:
            inv_diag = np.array([g.diag for g in invs])
            inv_off = np.array([g.off for g in invs])
            logK = np.array([g.logdet for g in invs])
    total = 0j
    sectors = []
    quiet = 0
    last = 0.0
    ell = -(J - 1)
    while True:
        if ell > tr.L_max:
            if strict:
                raise TailNotConverged(total, last, ell - 1)
            break
        j0 = m.first_level(ell)
        Os = m.signed_overlaps(ell)
        if use_band:
            ld = _band_logdet(m, Os, inv_diag[j0:], inv_off[j0:], logK[j0:])
        else:
            ld = _log_det2_dense(Os, kjs[j0:], m.grid)
        if use_band:
            ld = ld - np.sum(np.diag(Os) * c[j0:]) * mass
            ld = complex(ld.real, math.remainder(ld.imag, 2 * math.pi))
        total += ld
        if keep_sectors:
            sectors.append((ell, ld))
        last = abs(ld) if np.isfinite(ld.real) else np.inf
        if ell >= 0:
            quiet = quiet + 1 if last < tr.det_tail_tol else 0
            if quiet >= 2:
                break
        ell += 1
    arg = float(np.angle(np.exp(1j * total.imag))) if np.isfinite(total.real) else 0.0
    return DetValue(float(total.real), arg, sectors, 2.0 * last, ell)


def log_det2_total(k: complex, cfg: Config, **kw) -> DetValue:
    """det2 at chart coordinate k near level q (z = 2bq + k^2)."""
    m = get_model(cfg)
    kjs = chart_wavenumbers(m.levels, cfg.q, k, cfg.b)
    return log_det2_levels(kjs, cfg, **kw)


def log_det2_physical(z: complex, cfg: Config, **kw) -> DetValue:
    """det2 at a physical-sheet point z (Im z >= 0, boundary values from above)."""
    m = get_model(cfg)
    return log_det2_levels(physical_wavenumbers(m.levels, z, cfg.b), cfg, **kw)


# ----------------------------------------------------------------- B_q


def bq_spectrum(cfg: Config):
    """Pairs (ell, eigenvalue of the singular part) sorted descending.

    Each value is the nonzero eigenvalue of the assembled rank-one block
    (1/2) eps O_qq v v^T, with |v|^2 the quadrature mass of g.
    """
    if cfg.eps == 0:
        return []
    m = get_model(cfg)
    spec = toeplitz_spectrum(cfg.q, cfg.potential.radial, cfg.b, cfg.truncation.L_max)
    v = m.grid.sqrt_wg
    out = []
    for ell, lam in spec.pairs:
        block = 0.5 * cfg.eps * lam * np.outer(v, v)
        out.append((ell, float(np.linalg.eigvalsh(block)[-1])))
    out.sort(key=lambda p: (-p[1], p[0]))
    return out


# -------------------------------------------------------------- traces


@dataclass
class TraceDkA:
    k: complex
    numeric: dict  # level -> complex
    closed_form: dict  # level -> complex

    @property
    def total(self) -> complex:
        return sum(self.numeric.values())

    def relative_errors(self) -> dict:
        return {j: abs(self.numeric[j] - self.closed_form[j]) / abs(self.closed_form[j])
                for j in self.numeric if self.closed_form[j] != 0}


def trace_dk_A(k: complex, cfg: Config, tol: float = 1e-13) -> TraceDkA:
    """Trace of the k-derivative of the regular part, level by level."""
    pot = cfg.potential
    if not pot.sign_definite:
        raise ValueError("trace_dk_A needs a sign-definite profile")
    m = get_model(cfg)
    q, b = cfg.q, cfg.b
    kjs = chart_wavenumbers(m.levels, q, k, b)
    check_threshold(kjs)
    # diagonal of the derivative of each channel block (chain rule dk_j/dk = k/k_j)
    dk_diag = {}
    for j, kj in zip(m.levels, kjs):
        if j == q:
            # the remainder kernel vanishes on the diagonal for every k
            dk_diag[j] = 0j
        else:
            dk_diag[j] = np.sum(np.diag(resolvent_matrix_dk(kj, m.grid))) * (k / kj)
    numeric = {int(j): 0j for j in m.levels}
    ell = -(len(m.levels) - 1)
    quiet = 0
    cap = max(4 * cfg.truncation.L_max, 400)
    while ell <= cap:
        j0 = m.first_level(ell)
        Os = m.signed_overlaps(ell) if ell <= cfg.truncation.L_max + 1 else None
        if Os is None:
            diag = _diag_overlaps(tuple(range(j0, len(m.levels))), ell, pot, b)
        else:
            diag = np.diag(Os)
        contrib = 0.0
        for i, j in enumerate(range(j0, len(m.levels))):
            term = diag[i] * dk_diag[j]
            numeric[j] += term
            contrib = max(contrib, abs(term))
        scale = max(abs(v) for v in numeric.values()) or 1.0
        if ell >= 0:
            quiet = quiet + 1 if contrib < tol * scale else 0
            if quiet >= 2:
                break
        ell += 1
    iv = pot.integral_V()
    pref = 2 * k * b / (8 * math.pi) * iv
    closed = {}
    for j in m.levels:
        j = int(j)
        if j > q:
            closed[j] = pref * (2 * b * (j - q) - k * k) ** -1.5
        elif j < q:
            closed[j] = -1j * pref * (k * k + 2 * b * (q - j)) ** -1.5
        else:
            closed[j] = 0j
    return TraceDkA(k, numeric, closed)


def trace_T(z: complex, cfg: Config) -> complex:
    """tr T_V at a physical point (boundary value from above on the real axis)."""
    if cfg.eps == 0:
        return 0j
    m = get_model(cfg)
    kjs = physical_wavenumbers(m.levels, z, cfg.b)
    check_threshold(kjs)
    return complex(np.sum(m.level_traces() * (1j / (2 * kjs))) * m.grid.mass)


def trace_T_chart(k: complex, cfg: Config) -> complex:
    """tr T_V at chart coordinate k (analytic continuation of :func:`trace_T`)."""
    if cfg.eps == 0:
        return 0j
    m = get_model(cfg)
    kjs = chart_wavenumbers(m.levels, cfg.q, k, cfg.b)
    check_threshold(kjs)
    return complex(np.sum(m.level_traces() * (1j / (2 * kjs))) * m.grid.mass)


def trace_dz_T(lam: complex, cfg: Config) -> complex:
    """tr dT_V/dz at lam + i0."""
    if cfg.eps == 0:
        return 0j
    m = get_model(cfg)
    lam = complex(lam)
    if lam.imag == 0:
        gaps = np.abs(lam.real - 2 * cfg.b * m.levels)
        if np.min(gaps) < 1e-6:
            raise ThresholdError(f"lambda={lam.real} too close to a Landau level")
    kjs = physical_wavenumbers(m.levels, lam, cfg.b)
    check_threshold(kjs)
    return complex(np.sum(m.level_traces() * (-1j / (4 * kjs**3))) * m.grid.mass)

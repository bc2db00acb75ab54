"""Axis direction: quadrature grid, channel wavenumbers, Nystrom resolvents.

The 1D outgoing resolvent of D^2 - kappa^2 has kernel i e^{i kappa |x-x'|}/(2 kappa).
Sandwiched between sqrt(g) and discretised on a Gauss-Legendre grid it gives the
complex symmetric matrices used for every Landau channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AxisProfile

THRESHOLD_GUARD = 1e-6
SERIES_CUTOFF = 1e-4


class ThresholdError(ValueError):
    """Evaluation too close to a Landau threshold (k_j = 0)."""


@dataclass(frozen=True)
class AxisGrid:
    nodes: np.ndarray
    weights: np.ndarray
    halfwidth: float
    sqrt_wg: np.ndarray  # sqrt(w_a g(x_a))

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def mass(self) -> float:
        """Quadrature value of int g."""
        return float(np.sum(self.sqrt_wg**2))

    def distances(self) -> np.ndarray:
        return np.abs(self.nodes[:, None] - self.nodes[None, :])


def make_axis_grid(axis: AxisProfile, n: int, halfwidth: float | None = None) -> AxisGrid:
    L = axis.support_halfwidth() if halfwidth is None else float(halfwidth)
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = L * x, L * w
    g = axis(x)
    return AxisGrid(nodes=x, weights=w, halfwidth=L, sqrt_wg=np.sqrt(w * g))


# ------------------------------------------------------------- wavenumbers


def upper_sqrt(w):
    """Square root with Im >= 0; on the real axis the nonnegative root
    for w > 0 and i sqrt|w| for w < 0 (outgoing boundary values)."""
    r = np.sqrt(np.asarray(w, dtype=complex))
    flip = (r.imag < 0) | ((r.imag == 0) & (r.real < 0))
    return np.where(flip, -r, r)


def channel_wavenumber(j: int, q: int, k: complex, b: float) -> complex:
    """k_j on the local chart around level q (z = 2bq + k^2)."""
    k = complex(k)
    if not 0 < abs(k) < math.sqrt(2 * b):
        raise ValueError(f"|k|={abs(k):.6g} outside the punctured chart (0, {math.sqrt(2 * b):.6g})")
    if j == q:
        return k
    if j > q:
        return 1j * complex(np.sqrt(complex(2 * b * (j - q) - k * k)))
    return complex(np.sqrt(complex(k * k + 2 * b * (q - j))))


def chart_wavenumbers(levels, q: int, k: complex, b: float) -> np.ndarray:
    return np.array([channel_wavenumber(j, q, k, b) for j in levels])


def physical_wavenumbers(levels, z: complex, b: float) -> np.ndarray:
    """Boundary-value wavenumbers sqrt(z - 2bj) on the physical sheet."""
    levels = np.asarray(levels)
    return upper_sqrt(complex(z) - 2.0 * b * levels)


def check_threshold(kj, guard: float = THRESHOLD_GUARD):
    kj = np.atleast_1d(kj)
    bad = np.abs(kj) ** 2 < guard
    if np.any(bad):
        raise ThresholdError(f"channel wavenumber {kj[bad][0]:.3e} within {guard:g} of a threshold")


# --------------------------------------------------------------- matrices


def resolvent_matrix(kj: complex, grid: AxisGrid) -> np.ndarray:
    """sqrt(g)(D^2 - kj^2)^{-1} sqrt(g) on the grid (outgoing kernel)."""
    check_threshold(kj)
    d = grid.distances()
    s = grid.sqrt_wg
    return (s[:, None] * s[None, :]) * (1j * np.exp(1j * kj * d) / (2 * kj))


def resolvent_matrix_dk(kj: complex, grid: AxisGrid) -> np.ndarray:
    """Entrywise derivative of :func:`resolvent_matrix` with respect to kj."""
    check_threshold(kj)
    d = grid.distances()
    s = grid.sqrt_wg
    e = np.exp(1j * kj * d)
    return (s[:, None] * s[None, :]) * (1j * e * (1j * d * kj - 1.0) / (2 * kj * kj))


def _remainder_kernel(k: complex, d: np.ndarray) -> np.ndarray:
    """i (e^{ikd} - 1)/(2k), analytic at k = 0."""
    out = np.empty(d.shape, dtype=complex)
    small = np.abs(k) * d < SERIES_CUTOFF
    kd = k * d[small]
    dd = d[small]
    # i/(2k) * sum_{m>=1} (ikd)^m/m!
    out[small] = dd * (-0.5 - 0.25j * kd + kd**2 / 12 + 1j * kd**3 / 48 - kd**4 / 240)
    big = ~small
    out[big] = 1j * (np.exp(1j * k * d[big]) - 1.0) / (2 * k)
    return out


def split_rank_one(k: complex, grid: AxisGrid):
    """Split G_q(k) into (i/2k) v v^T plus a remainder analytic at k = 0.

    Returns ``(v, rank_one, remainder)``.
    """
    v = grid.sqrt_wg.astype(complex)
    rank_one = (1j / (2 * k)) * np.outer(v, v)
    rem = (grid.sqrt_wg[:, None] * grid.sqrt_wg[None, :]) * _remainder_kernel(complex(k), grid.distances())
    return v, rank_one, rem


# -------------------------------------------------- tridiagonal inverse data


def expm1c(z):
    """exp(z) - 1 for complex z, accurate near 0."""
    z = np.asarray(z, dtype=complex)
    return 2.0 * np.exp(0.5 * z) * np.sinh(0.5 * z)


@dataclass(frozen=True)
class GreenInverse:
    """Tridiagonal inverse of the exponential Green matrix E = [e^{ik|x_a-x_b|}].

    ``diag``/``off`` hold the inverse scaled by 1/c with c = i/(2k), i.e. the
    entries of (c E)^{-1}; ``logdet`` is log det(c E) (complex, any branch).
    ``cond`` is min |1 - theta^2| over the steps, the singularity indicator.
    """

    diag: np.ndarray
    off: np.ndarray
    logdet: complex
    cond: float


def green_inverse(kj: complex, nodes: np.ndarray) -> GreenInverse:
    h = np.diff(nodes)
    theta = np.exp(1j * kj * h)
    one_m = -expm1c(2j * kj * h)  # 1 - theta^2
    inv = 1.0 / one_m
    n = nodes.size
    diag = np.empty(n, dtype=complex)
    diag[0] = inv[0]
    diag[-1] = inv[-1]
    diag[1:-1] = inv[:-1] + theta[1:] ** 2 * inv[1:]
    off = -theta * inv
    c = 1j / (2 * kj)
    logdet = n * np.log(c) + np.sum(np.log(one_m))
    return GreenInverse(diag=diag / c, off=off / c, logdet=complex(logdet),
                        cond=float(np.min(np.abs(one_m))) if n > 1 else 1.0)

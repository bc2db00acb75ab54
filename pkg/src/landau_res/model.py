"""Configuration objects for the magnetic resonance computations.

A configuration bundles the field (strength ``b`` and the reference Landau
level ``q``), a separable radial potential ``V = J * eps * U(rho) * g(x3)``
and the truncation parameters of the discretisation.  Everything is frozen
after validation so configs can be hashed and used as cache keys.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Mapping, Union

import numpy as np
from scipy import integrate


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


# ---------------------------------------------------------------- radial parts


@dataclass(frozen=True)
class PowerLaw:
    """U(rho) = u0 * (1 + rho^2)^(-alpha/2)."""

    alpha: float
    u0: float = 1.0
    kind: str = field(default="power_law", init=False)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.u0 * (1.0 + rho * rho) ** (-0.5 * self.alpha)

    def sup(self) -> float:
        return self.u0

    def mass(self) -> float:
        """Integral of U over the plane."""
        return 2.0 * math.pi * self.u0 / (self.alpha - 2.0)

    def jump_radius(self):
        return None


@dataclass(frozen=True)
class Gaussian:
    """U(rho) = exp(-mu * rho^(2 beta))."""

    mu: float = 1.0
    beta: float = 1.0
    kind: str = field(default="gaussian", init=False)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.exp(-self.mu * rho ** (2.0 * self.beta))

    def sup(self) -> float:
        return 1.0

    def mass(self) -> float:
        return math.pi * math.gamma(1.0 + 1.0 / self.beta) / self.mu ** (1.0 / self.beta)

    def jump_radius(self):
        return None


@dataclass(frozen=True)
class CompactStep:
    """U(rho) = height for rho <= R, zero outside."""

    R: float = 1.0
    height: float = 1.0
    kind: str = field(default="compact_step", init=False)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.where(rho <= self.R, self.height, 0.0)

    def sup(self) -> float:
        return self.height

    def mass(self) -> float:
        return math.pi * self.R**2 * self.height

    def jump_radius(self):
        return self.R


RadialProfile = Union[PowerLaw, Gaussian, CompactStep]


# ------------------------------------------------------------------ axis parts

_AXIS_FLOOR = 1e-16


@dataclass(frozen=True)
class AxisGaussian:
    """g(x) = exp(-nu x^2)."""

    nu: float = 1.0
    kind: str = field(default="gaussian", init=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.nu * x * x)

    def mass(self) -> float:
        return math.sqrt(math.pi / self.nu)

    def support_halfwidth(self) -> float:
        # smallest L with g(L) < 1e-16
        return math.sqrt(-math.log(_AXIS_FLOOR) / self.nu) * (1.0 + 1e-9)


_BUMP_UNIT_MASS = None


def _bump_unit_mass() -> float:
    global _BUMP_UNIT_MASS
    if _BUMP_UNIT_MASS is None:
        val, _ = integrate.quad(lambda t: math.exp(1.0 - 1.0 / (1.0 - t * t)), -1.0, 1.0,
                                epsabs=1e-14, epsrel=1e-12, limit=200)
        _BUMP_UNIT_MASS = val
    return _BUMP_UNIT_MASS


@dataclass(frozen=True)
class CompactBump:
    """g(x) = exp(1 - 1/(1 - (x/L)^2)) on |x| < L; g(0) = 1."""

    L: float = 1.0
    kind: str = field(default="compact_bump", init=False)

    def __call__(self, x):
        t = np.asarray(x, dtype=float) / self.L
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
        return out

    def mass(self) -> float:
        return self.L * _bump_unit_mass()

    def support_halfwidth(self) -> float:
        return self.L


AxisProfile = Union[AxisGaussian, CompactBump]


# --------------------------------------------------------------- config types


@dataclass(frozen=True)
class FieldConfig:
    b: float = 1.0
    q: int = 0

    def level(self, j: int) -> float:
        return 2.0 * self.b * j


@dataclass(frozen=True)
class PotentialProfile:
    """V(x) = J * eps * U(rho) * g(x3).

    ``sign`` is +1, -1 or "mixed".  A mixed profile is +U inside
    ``flip_radius`` and -U outside it.
    """

    radial: RadialProfile = Gaussian()
    axis: AxisProfile = AxisGaussian()
    sign: Union[int, str] = 1
    coupling: float = 1.0
    flip_radius: float | None = None

    @property
    def sign_definite(self) -> bool:
        return self.sign in (1, -1)

    def sign_function(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.sign_definite:
            return np.full_like(rho, float(self.sign))
        return np.where(rho <= self.flip_radius, 1.0, -1.0)

    def U(self, rho):
        return self.radial(rho)

    def g(self, x3):
        return self.axis(x3)

    def axis_mass(self) -> float:
        return self.axis.mass()

    def W(self, rho):
        """eps * U(rho) * int g, the transverse weight."""
        return self.coupling * self.radial(rho) * self.axis.mass()

    def integral_V(self) -> float:
        """Integral of V over R^3 (sign-definite profiles)."""
        if not self.sign_definite:
            raise ValueError("integral_V needs a sign-definite profile")
        return self.sign * self.coupling * self.radial.mass() * self.axis.mass()


def eval_potential(profile: PotentialProfile, rho, x3):
    """J * eps * U(rho) * g(x3), broadcasting over ``rho`` and ``x3``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    return profile.coupling * profile.sign_function(rho) * profile.radial(rho) * profile.axis(x3)


@dataclass(frozen=True)
class Truncation:
    J_max: int
    L_max: int = 48
    n_axis: int = 48
    axis_halfwidth: float | None = None
    det_tail_tol: float = 1e-10


@dataclass(frozen=True)
class Config:
    field: FieldConfig
    potential: PotentialProfile
    truncation: Truncation

    @property
    def b(self) -> float:
        return self.field.b

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def eps(self) -> float:
        return self.potential.coupling

    def with_coupling(self, eps: float) -> "Config":
        return replace(self, potential=replace(self.potential, coupling=float(eps)))

    def to_dict(self) -> dict:
        return serialize(self)

    def hash(self) -> str:
        text = json.dumps(serialize(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# -------------------------------------------------------------- validation


def _number(raw: Mapping, key: str, path: str, default=None, positive=False, integer=False):
    if key not in raw:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    val = raw[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if integer:
        if float(val) != int(val):
            raise ConfigError(f"{path}.{key}", "must be an integer")
        val = int(val)
    if positive and val <= 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    return val


def _radial(raw: Mapping) -> RadialProfile:
    if not isinstance(raw, Mapping):
        raise ConfigError("potential.radial", "expected an object")
    kind = raw.get("kind")
    p = "potential.radial"
    if kind == "power_law":
        alpha = _number(raw, "alpha", p)
        if alpha <= 2:
            raise ConfigError(f"{p}.alpha", "α must exceed 2")
        return PowerLaw(alpha=float(alpha), u0=float(_number(raw, "u0", p, 1.0, positive=True)))
    if kind == "gaussian":
        return Gaussian(mu=float(_number(raw, "mu", p, 1.0, positive=True)),
                        beta=float(_number(raw, "beta", p, 1.0, positive=True)))
    if kind == "compact_step":
        return CompactStep(R=float(_number(raw, "R", p, positive=True)),
                           height=float(_number(raw, "height", p, 1.0, positive=True)))
    raise ConfigError(f"{p}.kind", f"unknown radial profile {kind!r}")


def _axis(raw: Mapping) -> AxisProfile:
    if not isinstance(raw, Mapping):
        raise ConfigError("potential.axis", "expected an object")
    kind = raw.get("kind")
    p = "potential.axis"
    if kind == "gaussian":
        return AxisGaussian(nu=float(_number(raw, "nu", p, 1.0, positive=True)))
    if kind == "compact_bump":
        return CompactBump(L=float(_number(raw, "L", p, positive=True)))
    raise ConfigError(f"{p}.kind", f"unknown axis profile {kind!r}")


def validate_config(raw: Mapping[str, Any]) -> Config:
    """Build a frozen :class:`Config` from a parsed JSON document."""
    if not isinstance(raw, Mapping):
        raise ConfigError("<root>", "expected a JSON object")
    known = {"field", "potential", "truncation"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown top-level key")

    fr = raw.get("field", {})
    if not isinstance(fr, Mapping):
        raise ConfigError("field", "expected an object")
    b = float(_number(fr, "b", "field", 1.0))
    if b <= 0:
        raise ConfigError("field.b", "magnetic field b must be positive")
    q = _number(fr, "q", "field", 0, integer=True)
    if q < 0:
        raise ConfigError("field.q", "Landau level index must be nonnegative")

    pr = raw.get("potential")
    if not isinstance(pr, Mapping):
        raise ConfigError("potential", "missing or not an object")
    radial = _radial(pr.get("radial", {"kind": "gaussian"}))
    axis = _axis(pr.get("axis", {"kind": "gaussian"}))
    sign = pr.get("sign", 1)
    flip = None
    if sign == "mixed":
        flip = float(_number(pr, "flip_radius", "potential", positive=True))
    elif sign not in (1, -1) or isinstance(sign, bool):
        raise ConfigError("potential.sign", "must be 1, -1 or \"mixed\"")
    eps = float(_number(pr, "coupling", "potential", 1.0))
    if eps < 0:
        raise ConfigError("potential.coupling", "coupling must be nonnegative")

    tr = raw.get("truncation", {})
    if not isinstance(tr, Mapping):
        raise ConfigError("truncation", "expected an object")
    J_max = _number(tr, "J_max", "truncation", q + 6, integer=True)
    if J_max <= q:
        raise ConfigError("truncation.J_max", "J_max must exceed q")
    if J_max < q + 2:
        raise ConfigError("truncation.J_max", "J_max must be at least q+2")
    L_max = _number(tr, "L_max", "truncation", 48, integer=True, positive=True)
    n_axis = _number(tr, "n_axis", "truncation", 48, integer=True, positive=True)
    half = tr.get("axis_halfwidth")
    if half is not None:
        half = float(_number(tr, "axis_halfwidth", "truncation", positive=True))
    tol = float(_number(tr, "det_tail_tol", "truncation", 1e-10, positive=True))

    return Config(
        field=FieldConfig(b=b, q=int(q)),
        potential=PotentialProfile(radial=radial, axis=axis, sign=sign, coupling=eps, flip_radius=flip),
        truncation=Truncation(J_max=int(J_max), L_max=int(L_max), n_axis=int(n_axis),
                              axis_halfwidth=half, det_tail_tol=tol),
    )


def serialize(cfg: Config) -> dict:
    """Inverse of :func:`validate_config` (defaults written out)."""
    pot = cfg.potential
    out_pot = {
        "radial": asdict(pot.radial),
        "axis": asdict(pot.axis),
        "sign": pot.sign,
        "coupling": pot.coupling,
    }
    if pot.flip_radius is not None:
        out_pot["flip_radius"] = pot.flip_radius
    tr = asdict(cfg.truncation)
    if tr["axis_halfwidth"] is None:
        del tr["axis_halfwidth"]
    return {"field": asdict(cfg.field), "potential": out_pot, "truncation": tr}


def load_config(path) -> Config:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"malformed JSON: {exc}") from None
    return validate_config(raw)


def make_config(*, b=1.0, q=0, radial: RadialProfile | None = None, axis: AxisProfile | None = None,
                sign=1, coupling=1.0, flip_radius=None, **trunc) -> Config:
    """Programmatic constructor going through the same validation path."""
    doc = {
        "field": {"b": b, "q": q},
        "potential": {
            "radial": asdict(radial if radial is not None else Gaussian()),
            "axis": asdict(axis if axis is not None else AxisGaussian()),
            "sign": sign,
            "coupling": coupling,
        },
        "truncation": {k: v for k, v in trunc.items() if v is not None},
    }
    if flip_radius is not None:
        doc["potential"]["flip_radius"] = flip_radius
    return validate_config(doc)

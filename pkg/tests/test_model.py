import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from landau_res.model import (AxisGaussian, CompactBump, CompactStep, ConfigError, Gaussian,
                              PowerLaw, eval_potential, load_config, make_config, serialize,
                              validate_config)


def doc(**over):
    d = {"field": {"b": 1, "q": 0},
         "potential": {"radial": {"kind": "power_law", "alpha": 4}, "axis": {"kind": "gaussian", "nu": 1}}}
    for path, val in over.items():
        node = d
        keys = path.split("__")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = val
    return d


def test_accepts_power_law_profile():
    cfg = validate_config(doc())
    assert cfg.b == 1 and cfg.q == 0
    assert cfg.potential.radial == PowerLaw(4.0)
    assert cfg.truncation.J_max == 6 and cfg.truncation.L_max == 48 and cfg.truncation.n_axis == 48
    assert cfg.truncation.det_tail_tol == 1e-10


@pytest.mark.parametrize("over, field", [
    ({"potential__radial__alpha": 1.5}, "alpha"),
    ({"potential__radial__alpha": 2}, "alpha"),
    ({"field__b": -1}, "field.b"),
    ({"field__b": 0}, "field.b"),
    ({"truncation__J_max": 0}, "J_max"),
    ({"truncation__J_max": 1}, "J_max"),
    ({"truncation__n_axis": 0}, "n_axis"),
    ({"truncation__L_max": -3}, "L_max"),
    ({"truncation__det_tail_tol": 0}, "det_tail_tol"),
    ({"potential__sign": 2}, "sign"),
    ({"potential__coupling": -0.1}, "coupling"),
])
def test_rejections_name_the_field(over, field):
    with pytest.raises(ConfigError) as err:
        validate_config(doc(**over))
    assert field in str(err.value)


def test_alpha_message():
    with pytest.raises(ConfigError, match="exceed 2"):
        validate_config(doc(potential__radial__alpha=1.5))


def test_mixed_sign_needs_flip_radius():
    with pytest.raises(ConfigError):
        validate_config(doc(potential__sign="mixed"))
    cfg = validate_config(doc(potential__sign="mixed", potential__flip_radius=0.8))
    assert not cfg.potential.sign_definite


def test_malformed_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_potential_values():
    assert Gaussian(1.0)(0.0) == 1.0
    step = CompactStep(R=1.5, height=2.0)
    assert step(1.5) == 2.0 and step(1.5 + 1e-9) == 0.0
    cfg = make_config(radial=Gaussian(1.0), axis=AxisGaussian(2.0), sign=-1, coupling=0.3)
    v = eval_potential(cfg.potential, 0.7, 0.4)
    assert v == pytest.approx(-0.3 * math.exp(-0.49) * math.exp(-2 * 0.16), rel=1e-14)


@pytest.mark.parametrize("axis", [AxisGaussian(1.0), AxisGaussian(0.3), CompactBump(1.0), CompactBump(2.5)])
def test_axis_mass_closed_form_vs_quadrature(axis):
    half = axis.support_halfwidth()
    val, _ = integrate.quad(axis, -half, half, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert axis.mass() == pytest.approx(val, rel=1e-10)


def test_gaussian_axis_mass():
    assert AxisGaussian(1.0).mass() == pytest.approx(math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("radial", [Gaussian(0.7), Gaussian(0.5, 2.0), PowerLaw(3.0, 2.0), CompactStep(1.2, 0.5)])
def test_plane_mass(radial):
    hi = radial.R if isinstance(radial, CompactStep) else np.inf
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * radial(r), 0, hi, limit=400)
    assert radial.mass() == pytest.approx(val, rel=1e-7)


profiles = st.one_of(
    st.builds(Gaussian, st.floats(0.05, 3.0), st.sampled_from([0.5, 1.0, 2.0])),
    st.builds(PowerLaw, st.floats(2.1, 8.0), st.floats(0.1, 3.0)),
    st.builds(CompactStep, st.floats(0.2, 3.0), st.floats(0.1, 3.0)),
)
axes = st.one_of(st.builds(AxisGaussian, st.floats(0.1, 4.0)), st.builds(CompactBump, st.floats(0.2, 4.0)))


@given(profiles, axes, st.floats(0.0, 2.0), st.sampled_from([1, -1]), st.integers(0, 3))
def test_round_trip_is_idempotent(radial, axis, eps, sign, q):
    cfg = make_config(q=q, radial=radial, axis=axis, coupling=eps, sign=sign)
    once = serialize(cfg)
    again = serialize(validate_config(json.loads(json.dumps(once))))
    assert once == again
    assert validate_config(once).hash() == cfg.hash()


@given(profiles, axes, st.floats(0.0, 2.0), st.lists(st.floats(0.0, 50.0), min_size=1, max_size=20))
def test_weight_nonnegative(radial, axis, eps, rho):
    cfg = make_config(radial=radial, axis=axis, coupling=eps)
    w = cfg.potential.W(np.array(rho))
    assert np.all(w >= 0)
    assert np.all(w <= eps * radial.sup() * axis.mass() * (1 + 1e-12))


@given(st.floats(2.1, 8.0), st.floats(0.1, 3.0), st.floats(0.01, 2.0))
def test_power_law_tail(alpha, u0, eps):
    cfg = make_config(radial=PowerLaw(alpha, u0), coupling=eps)
    rho = 1e4
    target = eps * u0 * cfg.potential.axis_mass()
    assert cfg.potential.W(rho) * rho**alpha == pytest.approx(target, rel=1e-6)


def test_levels_increase():
    cfg = make_config(b=0.7, q=2)
    lv = [cfg.field.level(j) for j in range(6)]
    assert np.all(np.diff(lv) > 0) and lv[0] == 0

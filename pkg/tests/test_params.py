import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backaction.params import (
    PAPER_PARAMS,
    DerivedParams,
    ExperimentParams,
    PhysicalConstants,
    derive_params,
    dipole_field,
    linearized_field,
    load_params,
    params_from_dict,
    visibility_ratio,
)

C = PhysicalConstants()


def test_paper_values(paper):
    assert paper.A_sa == pytest.approx(9e-21, rel=0.02)
    assert paper.kappa == pytest.approx(0.22, abs=0.01)
    assert paper.nbar == pytest.approx(8.3e4, rel=0.01)
    assert paper.A == pytest.approx(1e5 * paper.A_sa)


def test_zero_point_length(paper):
    assert paper.x_zp == pytest.approx(math.sqrt(C.hbar / (2 * 5e-13 * 2 * math.pi * 1e6)))
    # "amplitude on the order of 6e-15 m"
    assert 3e-15 < paper.x_zp < 1e-14


def test_delta_is_quarter_kappa_squared(paper):
    assert paper.delta == pytest.approx(paper.kappa**2 / 4, rel=1e-12)


def test_tanh_coth_consistent_with_nbar(paper):
    assert paper.coth_eta == pytest.approx(2 * paper.nbar + 1, rel=1e-9)
    assert paper.tanh_eta * paper.coth_eta == pytest.approx(1.0)


def test_zero_temperature():
    d = derive_params(C, ExperimentParams(**{**PAPER_PARAMS.__dict__, "temperature": 0.0}))
    assert d.zero_temperature and d.nbar == 0
    assert d.tanh_eta == 1.0 and d.coth_eta == 1.0


def test_with_nbar_round_trip(paper):
    d = paper.with_nbar(paper.nbar)
    assert d.eta == pytest.approx(paper.eta, rel=1e-9)


def test_visibility_ratio_paper(paper):
    # fringes visible when kappa >~ sqrt(tanh eta)
    assert visibility_ratio(paper) == pytest.approx(paper.kappa * math.sqrt(2 * paper.nbar + 1), rel=1e-6)
    assert visibility_ratio(paper) > 50


def test_field_slope_matches_finite_difference():
    e = PAPER_PARAMS
    B_c, B_vp = linearized_field(C, e)
    h = 1e-12
    bz = lambda x: dipole_field(C, e, (x, 0.0, 0.0))[2] + e.B0
    # the atom sits at x = x0 + x_m in the dipole frame
    slope = (bz(e.x0 + h) - bz(e.x0 - h)) / (2 * h)
    assert slope == pytest.approx(B_vp, rel=1e-6)
    assert bz(e.x0) == pytest.approx(B_c, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-3e-6, 3e-6).filter(lambda v: abs(v) > 1e-7),
    st.floats(-3e-6, 3e-6),
    st.floats(1e-6, 8e-6),
)
def test_dipole_field_is_divergence_free(x, y, z):
    h = 1e-10
    div = 0.0
    for axis in range(3):
        p, m = [x, y, z], [x, y, z]
        p[axis] += h
        m[axis] -= h
        div += (dipole_field(C, PAPER_PARAMS, p)[axis] - dipole_field(C, PAPER_PARAMS, m)[axis]) / (2 * h)
    scale = np.linalg.norm(dipole_field(C, PAPER_PARAMS, (x, y, z))) / math.sqrt(x * x + y * y + z * z)
    assert abs(div) < 1e-5 * scale


def test_dipole_rejects_origin():
    with pytest.raises(ValueError):
        dipole_field(C, PAPER_PARAMS, (0, 0, 0))


@pytest.mark.parametrize("field,value", [("mass", -1.0), ("omega_m", 0.0), ("temperature", -1.0), ("x0", float("nan"))])
def test_invalid_inputs_rejected(field, value):
    with pytest.raises(ValueError):
        ExperimentParams(**{**PAPER_PARAMS.__dict__, field: value})


def test_params_from_dict_checks_fields():
    good = dict(PAPER_PARAMS.__dict__)
    assert params_from_dict(good) == PAPER_PARAMS
    with pytest.raises(ValueError):
        params_from_dict({**good, "colour": 1})
    bad = dict(good)
    del bad["mass"]
    with pytest.raises(ValueError):
        params_from_dict(bad)


def test_load_params(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps(PAPER_PARAMS.__dict__))
    assert load_params(p) == PAPER_PARAMS


def test_derived_dict_round_trip(paper):
    again = DerivedParams.from_dict(json.loads(json.dumps(paper.to_dict())))
    assert again == paper
    cold = paper.with_nbar(0)
    assert DerivedParams.from_dict(json.loads(json.dumps(cold.to_dict()))) == cold


def test_with_kappa(paper):
    d = paper.with_kappa(1.3)
    assert d.kappa == pytest.approx(1.3)
    assert d.delta == pytest.approx(1.3**2 / 4)

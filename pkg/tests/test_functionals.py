import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from backaction.functionals import (
    MeasurementSchedule,
    PathFunctionals,
    SingularStep,
    build_path_table,
    dump_functionals_csv,
    enumerate_paths,
    functionals_array,
    iterate_recurrence,
    path_functionals,
    recurrence_step,
    t_accum,
)
from backaction.spin1 import fy_projector

spins = st.sampled_from([1, 0, -1])


@st.composite
def schedules(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    angles = draw(st.lists(st.floats(0.05, 2 * math.pi - 0.05), min_size=n, max_size=n))
    path = draw(st.lists(spins, min_size=n, max_size=n))
    return angles, path


def test_t_accum():
    sch = MeasurementSchedule.from_angles([0.1, 0.2, 0.3], [1, 1, 1])
    assert t_accum(sch, 1, 3) == pytest.approx(0.6)
    assert t_accum(sch, 2, 2) == pytest.approx(0.2)
    assert t_accum(sch, 3, 2) == 0.0
    with pytest.raises(IndexError):
        t_accum(sch, 0, 2)


def test_schedule_validation():
    with pytest.raises(ValueError):
        MeasurementSchedule((1.0, -1.0), (1, 1), 1.0)
    with pytest.raises(ValueError):
        MeasurementSchedule((1.0,), (1, 0), 1.0)
    with pytest.raises(ValueError):
        MeasurementSchedule((), (), 1.0)
    sch = MeasurementSchedule.in_half_periods([0.5, 1.0], [0, 1], omega_m=2.0)
    np.testing.assert_allclose(sch.angles, [math.pi / 2, math.pi])


def test_enumerate_paths_order():
    p = enumerate_paths(2)
    assert p.shape == (9, 2)
    assert tuple(p[0]) == (1, 1) and tuple(p[1]) == (1, 0) and tuple(p[-1]) == (-1, -1)


def test_single_interval_values():
    f = path_functionals([math.pi], [1])
    assert (f.X, f.P) == pytest.approx((2.0, 0.0), abs=1e-14)
    f = path_functionals([math.pi / 2], [-1])
    assert (f.X, f.P) == pytest.approx((-1.0, -1.0), abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(schedules())
def test_recurrence_matches_closed_form(sched):
    angles, path = sched
    assume(all(abs(math.sin(a)) > 1e-3 for a in angles))
    closed = path_functionals(angles, path)
    rec = iterate_recurrence(angles, path)
    scale = 1 + abs(closed.phi)
    assert rec.X == pytest.approx(closed.X, abs=1e-10)
    assert rec.P == pytest.approx(closed.P, abs=1e-10)
    assert abs(rec.phi - closed.phi) < 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(st.lists(spins, min_size=1, max_size=6))
def test_full_periods_null_everything(path):
    f = path_functionals([2 * math.pi] * len(path), path)
    assert abs(f.X) < 1e-12 and abs(f.P) < 1e-12 and abs(f.phi) < 1e-12


@settings(max_examples=100, deadline=None)
@given(spins, st.lists(st.floats(0.05, 3.0), min_size=1, max_size=5))
def test_constant_path_is_a_single_displaced_rotation(s, angles):
    f = path_functionals(angles, [s] * len(angles))
    T = sum(angles)
    assert f.X == pytest.approx(s * (1 - math.cos(T)), abs=1e-12)
    assert f.P == pytest.approx(s * math.sin(T), abs=1e-12)


def test_singular_step():
    with pytest.raises(SingularStep):
        recurrence_step(PathFunctionals(0.0, 0.0, 0.0), 1, 0.0)


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(3)
    angles = rng.uniform(0.1, 3, 3)
    paths = enumerate_paths(3)
    X, P, phi = functionals_array(angles, paths)
    for i in (0, 5, 17, 26):
        f = path_functionals(angles, paths[i])
        assert (X[i], P[i], phi[i]) == pytest.approx((f.X, f.P, f.phi), abs=1e-13)


def test_path_table_chain_reproduces_kraus_product():
    angles = [0.4, 1.1]
    kraus = [fy_projector(1), fy_projector(0)]
    tab = build_path_table(angles, kraus, larmor=0.0, delta=0.0)
    for p, path in enumerate(tab.paths):
        s1, s2 = (1 - int(v) for v in path)
        expected = kraus[1][:, s2] * kraus[0][s2, s1]
        np.testing.assert_allclose(tab.chain[:, p], expected, atol=1e-15)


def test_dump_csv(tmp_path):
    out = dump_functionals_csv([0.3, 0.9], tmp_path / "f.csv")
    lines = out.read_text().splitlines()
    assert lines[0] == "path,X,P,phi"
    assert len(lines) == 10

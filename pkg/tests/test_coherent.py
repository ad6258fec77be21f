import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from backaction import coherent as coh
from backaction import thermal as th
from backaction.functionals import MeasurementSchedule, functionals_array
from backaction.spin1 import initial_bec_density

from conftest import half_periods

spins = st.sampled_from([1, 0, -1])
amps = st.floats(-3, 3)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0.01, 7.0), min_size=1, max_size=5),
    st.lists(spins, min_size=5, max_size=5),
    amps,
    amps,
    st.floats(0, 1.5),
)
def test_closed_form_matches_recurrence(angles, path, a0, b0, kappa):
    path = path[: len(angles)]
    init = coh.CoherentInit(a0, b0)
    closed = coh.coherent_functionals(angles, path, init, kappa)
    rec = coh.coherent_recurrence(angles, path, init, kappa)
    np.testing.assert_allclose(closed, rec, atol=1e-12 * (1 + abs(a0) + abs(b0)))


def test_full_rotation_restores_amplitude():
    a, b, _ = coh.coherent_functionals([2 * math.pi], [1], coh.CoherentInit(0.7, -0.3), 1.0)
    assert (a, b) == pytest.approx((0.7, -0.3), abs=1e-14)


def test_zero_coupling_is_pure_rotation():
    angles = [0.4, 1.3, 0.2]
    init = coh.CoherentInit(1.1, 0.4)
    T = sum(angles)
    a, b, Th = coh.coherent_functionals(angles, [1, -1, 0], init, 0.0)
    assert a == pytest.approx(1.1 * math.cos(T) + 0.4 * math.sin(T))
    assert b == pytest.approx(0.4 * math.cos(T) - 1.1 * math.sin(T))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 6.0), min_size=1, max_size=4), amps, amps, st.floats(0.01, 1.5))
def test_branch_centres_follow_path_functionals(angles, a0, b0, kappa):
    from backaction.functionals import enumerate_paths

    paths = enumerate_paths(len(angles))
    a, b, _ = coh.coherent_functionals_array(angles, paths, coh.CoherentInit(a0, b0), kappa)
    X, P, _ = functionals_array(angles, paths)
    T = sum(angles)
    np.testing.assert_allclose(a, a0 * math.cos(T) + b0 * math.sin(T) - 0.5 * kappa * X, atol=1e-12)
    np.testing.assert_allclose(b, b0 * math.cos(T) - a0 * math.sin(T) - 0.5 * kappa * P, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_total_probability_is_one(paper, n):
    rng = np.random.default_rng(10 + n)
    intervals = tuple(rng.uniform(0.1, 2.0, n) * math.pi / paper.omega_m)
    table = coh.outcome_table(paper, intervals, coh.CoherentInit(1.0, -0.5))
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-10)
    assert min(table.values()) >= -1e-14


def test_branch_count_bound(paper):
    sch = MeasurementSchedule(half_periods(paper, 1, 1, 1), (0, 1, -1), paper.omega_m)
    state = coh.evolve_coherent(paper, sch, coh.CoherentInit(1, 1))
    paths = {br.path for br in state.branches(1e-15)}
    assert len(paths) <= 27


def test_zero_coupling_leaves_membrane_unentangled(paper):
    d = paper.with_A(0.0)
    sch = MeasurementSchedule(half_periods(d, 0.3, 0.9), (1, 0), d.omega_m)
    state = coh.evolve_coherent(d, sch, coh.CoherentInit(0.5, 0.2))
    np.testing.assert_allclose(state.u, state.u[0], atol=1e-15)
    W = coh.wigner_coherent(d, sch, coh.CoherentInit(0.5, 0.2))
    assert W.min() > -1e-12


def test_probability_matches_thermal_engine_at_zero_temperature(paper):
    d = paper.with_kappa(0.9).with_nbar(0)
    d = d.with_larmor(0.6 * d.omega_m)
    for labels in [(1,), (0,), (-1,)]:
        sch = MeasurementSchedule(half_periods(d, 0.7), labels, d.omega_m)
        p_coh = coh.evolve_coherent(d, sch, coh.CoherentInit(0, 0)).probability
        p_th = th.outcome_probability(d, sch, rho0=initial_bec_density())
        assert p_coh == pytest.approx(p_th, abs=1e-8)


def test_no_measurement_grid():
    from backaction.params import PAPER_PARAMS, PhysicalConstants, derive_params

    d = derive_params(PhysicalConstants(), PAPER_PARAMS)
    W = coh.wigner_coherent(d, None, coh.CoherentInit(1.0, -2.0))
    assert W.min() >= 0
    m = W.moments()
    assert (m["mean_q"], m["mean_k"]) == pytest.approx((2.0, -4.0), abs=1e-8)
    assert W.norm_estimate == pytest.approx(1.0, abs=1e-6)


def test_fig4_single_measurement_negative(paper):
    sch = MeasurementSchedule(half_periods(paper, 1), (0,), paper.omega_m)
    W = coh.wigner_coherent(paper, sch, coh.CoherentInit(1, 1))
    assert W.min() < coh.NEGATIVITY_THRESHOLD
    assert W.norm_estimate == pytest.approx(1.0, abs=1e-6)
    assert W.purity() == pytest.approx(1.0, abs=1e-6)


def test_fig4_sequence_stays_pure_and_non_positive(paper):
    labels = (0, 1, -1, 1)
    mins = []
    for m in range(1, 5):
        sch = MeasurementSchedule(half_periods(paper, *([1] * m)), labels[:m], paper.omega_m)
        W = coh.wigner_coherent(paper, sch, coh.CoherentInit(1, 1))
        assert W.purity() == pytest.approx(1.0, abs=1e-6)
        assert W.norm_estimate == pytest.approx(1.0, abs=1e-6)
        mins.append(W.min())
    assert max(mins) < 0


def test_negativity_scan_zero_coupling(paper):
    d = paper.with_A(0.0)
    ts = np.arange(1, 11) * 0.2 * math.pi / d.omega_m
    assert all(m >= -1e-12 for _, m in coh.negativity_scan(d, coh.CoherentInit(1, 1), 0, ts))


def test_negative_windows():
    scan = [(1, 0.0), (2, -1.0), (3, -1.0), (4, 0.0), (5, -1.0)]
    assert coh.negative_windows(scan) == [(2, 3), (5, 5)]


def test_cap(paper):
    sch = MeasurementSchedule(half_periods(paper, *([1] * 9)), (0,) * 9, paper.omega_m)
    with pytest.raises(th.CapExceeded):
        coh.evolve_coherent(paper, sch, coh.CoherentInit(0, 0))


def test_branch_table(paper, tmp_path):
    sch = MeasurementSchedule(half_periods(paper, 1, 1), (0, 1), paper.omega_m)
    state = coh.evolve_coherent(paper, sch, coh.CoherentInit(1, 1))
    out = coh.write_branch_table(state, tmp_path / "b.csv", tol=1e-15)
    rows = out.read_text().splitlines()
    assert rows[0] == "path,final_spin,amp_re,amp_im,a,b,Theta"
    assert len(rows) - 1 == len(state.branches(1e-15))


def test_invalid_init():
    with pytest.raises(ValueError):
        coh.CoherentInit(float("inf"), 0)
